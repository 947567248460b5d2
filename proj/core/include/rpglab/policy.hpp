#pragma once

#include <functional>

#include "rpglab/envs.hpp"
#include "rpglab/mlp.hpp"
#include "rpglab/rng.hpp"
#include "rpglab/types.hpp"

namespace rpglab {

/// How the stochastic relaxation of the argmax policy is parameterized.
///   merged: pi = softmax(g(x) / lambda), the form used for training runs.
///   prior:  pi propto exp(g(x)_a + 1{a = argmax g(x)} / lambda), the softmax
///           with a deterministic-prior bonus.
/// Both collapse to the argmax policy as lambda -> 0.
enum class RelaxedForm { merged, prior };

/// Discrete stochastic policy built around an action-logit network.
struct RelaxedPolicy {
    MlpParams net; // state -> num_actions logits
    double lambda = 1.0;
    int num_actions = 0;
    RelaxedForm form = RelaxedForm::merged;

    /// Training keeps lambda at or above this when annealing; the exact
    /// lambda = 0 endpoint is served by round_to_deterministic.
    static constexpr double lambda_floor = 1e-3;
};

/// Continuous policy: N(mean_net(x), lambda^2 I).
struct GaussianPolicy {
    MlpParams mean_net;
    double lambda = 1.0;
};

struct DeterministicDiscretePolicy {
    MlpParams net;
    int act(const Vector& state) const; // argmax logit, lowest index on ties
};

struct DeterministicContinuousPolicy {
    MlpParams net;
    Vector act(const Vector& state) const; // the mean network
};

struct LogProbGrads {
    double logp = 0.0;
    Vector grad_params; // d logp / d flat network params
    Vector grad_state;  // d logp / d state
};

RelaxedPolicy make_relaxed_policy(int state_dim, int num_actions, RngStream& rng,
                                  double lambda = 1.0, RelaxedForm form = RelaxedForm::merged,
                                  int hidden = 64);
GaussianPolicy make_gaussian_policy(int state_dim, int action_dim, RngStream& rng,
                                    double lambda = 1.0, int hidden = 64);

/// Exact action distribution at a state; entries sum to 1. lambda = 0 gives
/// the point mass of the rounded policy.
Vector action_probs(const RelaxedPolicy& policy, const Vector& state);

/// Draw an action; at lambda = 0 this is the deterministic rounding.
int sample_action(const RelaxedPolicy& policy, const Vector& state, RngStream& rng);
Vector sample_action(const GaussianPolicy& policy, const Vector& state, RngStream& rng);

/// log pi(a|x) with exact gradients in the network parameters and the state.
LogProbGrads log_prob_grads(const RelaxedPolicy& policy, const Vector& state, int action);
LogProbGrads log_prob_grads(const GaussianPolicy& policy, const Vector& state,
                            const Vector& action);

DeterministicDiscretePolicy round_to_deterministic(const RelaxedPolicy& policy);
DeterministicContinuousPolicy round_to_deterministic(const GaussianPolicy& policy);

/// E_{a ~ pi(.|x)}[f(x, a)] by exact enumeration over the discrete actions.
Vector expected_next_state(const RelaxedPolicy& policy, const Env& env, const Vector& state);

using ContinuousDynamics = std::function<Vector(const Vector& state, const Vector& action)>;

/// Gauss-Hermite estimate of E_{a ~ N(mu(x), lambda^2 I)}[f(x, a)], tensor
/// grid over the action dimensions (supported up to dimension 3). lambda = 0
/// returns f(x, mu(x)) exactly.
Vector expected_next_state(const GaussianPolicy& policy, const ContinuousDynamics& f,
                           const Vector& state, int quad_order);

/// Nodes and weights for integrating exp(-t^2) weighted integrals of the
/// given order (Golub-Welsch on the Hermite recurrence).
void gauss_hermite(int order, Vector* nodes, Vector* weights);

double entropy(const Vector& probs);

} // namespace rpglab
