#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rpglab/rng.hpp"
#include "rpglab/types.hpp"

namespace rpglab {

/// Small MDP with affine dynamics x' = M_t x + shift_t(a) and linear
/// per-step rewards c_t . x_{t+1}. Everything about it is exact, so the
/// estimator's expectation can be computed by enumerating action sequences.
struct ToyMdp {
    int state_dim = 1;   // <= 2
    int num_actions = 2; // <= 3
    int horizon = 2;     // <= 4
    std::vector<Matrix> transition;          // per t, n x n
    std::vector<std::vector<Vector>> shift;  // per t, per action, n
    std::vector<Vector> reward_coeff;        // per t, n
    Vector x0;

    // full enumeration is capped at 100 action sequences
    bool enumerable() const;
    long sequence_count() const;
};

/// Open-loop softmax policy over the toy: one logit row per timestep,
/// action probabilities softmax(logits_t / lambda). The parameter vector is
/// the row-major flattening of the logit matrix.
struct ToyPolicy {
    Matrix logits; // horizon x num_actions
    double lambda = 1.0;
};

ToyMdp make_random_toy(RngStream& rng);
ToyPolicy make_random_toy_policy(const ToyMdp& toy, RngStream& rng);

/// Action probabilities at step t; lambda = 0 collapses to the argmax.
Vector toy_action_probs(const ToyPolicy& policy, int t);

/// Expected-dynamics rollout value: sum_t c_t . x_t+1 with
/// x_t+1 = M_t x_t + sum_a pi_t(a) shift_t(a).
double toy_relaxed_objective(const ToyMdp& toy, const ToyPolicy& policy);

struct UnbiasednessReport {
    Vector enumerated; // E[ghat] over all action sequences
    Vector reference;  // central finite differences of the relaxed objective
    double max_abs_error = 0.0;
    double rel_error = 0.0;
    long sequences = 0;
};

/// Exact expectation of the relaxed-gradient estimator (every action
/// sequence weighted by its probability, true Jacobians supplied) against
/// the finite-difference gradient of the relaxed objective.
UnbiasednessReport check_unbiasedness(const ToyMdp& toy, const ToyPolicy& policy,
                                      double fd_step = 1e-6);

/// Contractive test system for the rollout-deviation bound:
///   f(x, a) = rho tanh(x) + rho tanh(a) componentwise,
///   deterministic policy pi(x) = rho_prime tanh(x),
///   stochastic actions a ~ N(pi(x), lambda^2 I).
/// With alpha = rho (rho_prime + 1) < 1 and M = n lambda^2, the expected
/// gap between a sampled rollout and the expected-dynamics rollout is at
/// most sqrt(M) / (1 - alpha).
struct BoundExperiment {
    int state_dim = 1;
    double rho = 0.5;
    double rho_prime = 0.5;
    double lambda = 0.1;
    int horizon = 25;
    int rollouts = 1000;
    int quad_order = 8;

    double alpha() const { return rho * (rho_prime + 1.0); }
    double variance_cap() const { return state_dim * lambda * lambda; }
    double bound() const;
};

struct BoundReport {
    double mean_deviation = 0.0;
    double se_deviation = 0.0;
    double max_deviation = 0.0;
    double bound = 0.0;
    double alpha = 0.0;
    bool within = false; // mean <= bound + 3 se
};

/// Monte Carlo estimate of E||x_T - x_tilde_T||. Rollout i draws its noise
/// from rng.child("rollout", i), so two calls with identically seeded
/// streams share noise (common random numbers across lambda values).
BoundReport check_bound(const BoundExperiment& exp, RngStream& rng);

struct NoiseMagnitudeReport {
    double mean_norm = 0.0;
    double se = 0.0;
    double cap = 0.0; // sqrt(tr Sigma)
    bool within = false;
};

/// E||X - EX|| <= sqrt(tr Sigma) for X Gaussian with diagonal stddev.
NoiseMagnitudeReport check_noise_magnitude(const Vector& stddev, int samples,
                                           RngStream& rng);

struct GradientCheckEntry {
    std::string module;
    int cases = 0;
    double worst_rel_error = 0.0;
};

struct GradientCheckReport {
    std::vector<GradientCheckEntry> entries;
    double worst() const;
    bool pass(double tol = 1e-4) const;
};

/// Central finite-difference validation of every analytic derivative:
/// selector is one of "mlp", "policy", "surrogate", "pathwise", "all".
GradientCheckReport check_gradients(const std::string& selector, std::uint64_t seed,
                                    int cases_per_module = 100, double step = 1e-6);

} // namespace rpglab
