#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "rpglab/dynamics.hpp"
#include "rpglab/envs.hpp"
#include "rpglab/policy.hpp"
#include "rpglab/rng.hpp"
#include "rpglab/types.hpp"

namespace rpglab {

/// One sampled episode with everything the estimators need cached at sample
/// time. Step t holds the reward and surrogate gradient evaluated at the
/// state being entered, x_{t+1}.
struct Trajectory {
    std::vector<Vector> states;           // x_0 .. x_L
    std::vector<int> actions;             // a_0 .. a_{L-1}
    std::vector<double> rewards;          // true reward entering x_{t+1}
    std::vector<double> surrogates;       // smooth reward entering x_{t+1}
    std::vector<Vector> surrogate_grads;  // d r~ / dx at x_{t+1}
    std::vector<Vector> logp_param_grads; // d log pi(a_t|x_t) / d phi
    std::vector<Vector> logp_state_grads; // d log pi(a_t|x_t) / d x_t
    bool truncated = false;               // horizon cut, no terminal reached

    int length() const { return static_cast<int>(actions.size()); }
    double total_reward() const;
    double total_surrogate() const;
};

/// Shape consistency: |states| = |actions| + 1 and every cache aligned.
void validate_trajectory(const Trajectory& traj);

/// Run one episode under the policy, caching log-prob gradients.
Trajectory sample_trajectory(Env& env, const RelaxedPolicy& policy, RngStream& rng);

/// Monte Carlo gradient estimate averaged over m trajectories.
struct GradEstimate {
    Vector grad;
    Vector variance; // per-coordinate sample variance of the per-episode terms
    int m = 0;
    double mean_return = 0.0;
    double mean_surrogate = 0.0;
    double grad_norm = 0.0;
};

/// Relaxed policy gradient: per episode, propagate the parameter Jacobian of
/// the state through the fitted linear dynamics,
///   G_{t+1} = A_t G_t + fhat_t (d_phi log pi)^T + fhat_t (d_x log pi G_t),
///   fhat_t = x_{t+1} - x_t,  G_0 = 0,
/// and accumulate g = sum_t (d r~/dx at x_{t+1})^T G_{t+1}.
GradEstimate rpg_gradient(const std::vector<Trajectory>& trajectories,
                          const TvLinearModel& model);

/// Linear value head over the policy trunk's last hidden layer, refit by
/// ridge least squares on observed reward-to-go.
struct ValueBaseline {
    MlpParams trunk;
    Vector head; // weights over features plus a bias term

    static ValueBaseline init(const MlpParams& policy_net);
    void sync_trunk(const MlpParams& policy_net);
    double predict(const Vector& state) const;
    void refit(const std::vector<Trajectory>& trajectories, double ridge = 1e-3);
};

/// Score-function gradient with reward-to-go weights; pass a baseline for the
/// advantage (actor-critic) variant. Uses true rewards.
GradEstimate reinforce_gradient(const std::vector<Trajectory>& trajectories,
                                const ValueBaseline* baseline = nullptr);

/// Deterministic continuous-control system with analytic Jacobians, for the
/// exact pathwise recursion.
struct ContinuousSystem {
    int state_dim = 0;
    int action_dim = 0;
    int horizon = 0;
    std::function<Vector(const Vector& x, const Vector& a)> f;
    std::function<Matrix(const Vector& x, const Vector& a)> dfdx;
    std::function<Matrix(const Vector& x, const Vector& a)> dfda;
    std::function<double(const Vector& x, int t, bool is_final)> reward;
    std::function<Vector(const Vector& x, int t, bool is_final)> reward_grad;
};

/// Exact model-based gradient d/dtheta sum_t r(x_t) along the deterministic
/// rollout from x0.
GradEstimate pathwise_gradient(const DeterministicContinuousPolicy& policy,
                               const ContinuousSystem& system, const Vector& x0);

/// Discrete action spaces have no pathwise derivative; this always errors.
GradEstimate pathwise_gradient(const DeterministicContinuousPolicy& policy, const Env& env);

/// Diagonal-Gaussian search distribution over flat parameters.
struct CemDistribution {
    Vector mean;
    Vector stddev;
};

struct CemOptions {
    int population = 20;
    int elites = 1;
    double stddev_floor = 1e-3;
    double widen_factor = 1.1; // applied when all returns tie
};

struct CemStats {
    double best_return = 0.0;
    double mean_return = 0.0;
    bool widened = false;
};

/// One cross-entropy-method iteration against an arbitrary objective
/// (greater is better).
CemDistribution cem_iteration(const CemDistribution& dist,
                              const std::function<double(const Vector&)>& objective,
                              const CemOptions& opts, RngStream& rng,
                              CemStats* stats = nullptr);

const std::vector<std::string>& estimator_ids();

} // namespace rpglab
