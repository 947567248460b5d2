#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rpglab/rng.hpp"
#include "rpglab/types.hpp"

namespace rpglab {

struct ActionSpace {
    bool discrete = true;
    int count = 0; // number of discrete actions
    int dim = 0;   // continuous action dimension
};

struct EnvSpec {
    std::string id;
    int state_dim = 0;
    ActionSpace actions;
    int horizon = 0;
    std::optional<double> solve_threshold;
    double dt = 0.0;
};

/// One environment step. Rewards are functions of the state being entered;
/// surrogate_grad is the gradient of the smooth training reward at next_state.
struct Transition {
    Vector state;
    int action = 0;
    Vector next_state;
    double reward = 0.0;
    double surrogate = 0.0;
    Vector surrogate_grad;
    bool done = false;
    bool reached_terminal = false;
};

struct EnvOptions {
    double surrogate_sharpness = 10.0;
    double surrogate_scale = 1.0;
    std::optional<int> horizon;
};

/// Deterministic-dynamics environment. The pure pieces (dynamics, rewards,
/// termination) are exposed separately from the episode state machine so
/// estimators and diagnostics can evaluate them off-trajectory.
class Env {
public:
    virtual ~Env() = default;
    virtual const EnvSpec& spec() const = 0;
    virtual std::unique_ptr<Env> clone() const = 0;

    /// f(x, a): deterministic next state. Pure.
    virtual Vector dynamics(const Vector& x, int action) const = 0;
    /// Early-termination predicate (goal reached / pole dropped).
    virtual bool terminal(const Vector& x) const { (void)x; return false; }
    virtual double true_reward(const Vector& next_state, int next_t, bool is_final) const = 0;
    /// Smooth training reward and its state gradient at next_state.
    virtual double surrogate_reward(const Vector& next_state, int next_t, bool is_final,
                                    Vector* grad) const = 0;
    virtual Vector sample_initial(RngStream& rng) const = 0;

    const Vector& state() const { return state_; }
    int time() const { return t_; }
    bool done() const { return done_; }
    Vector reset(RngStream& rng);
    Transition step(int action);

protected:
    void check_state(const Vector& x) const;
    Vector state_;
    int t_ = 0;
    bool done_ = true;
};

/// Factory keyed by id: cartpole | acrobot | mountaincar | handmass.
std::unique_ptr<Env> make_env(const std::string& id, const EnvOptions& opts = {});
std::vector<std::string> env_ids();

/// All physical constants of an environment as pretty-printed JSON, for audit.
std::string env_constants_json(const std::string& id);

} // namespace rpglab
