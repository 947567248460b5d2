#pragma once

#include <string>
#include <vector>

#include "rpglab/rng.hpp"
#include "rpglab/types.hpp"

namespace rpglab {

/// Time-varying linear-Gaussian dynamics model:
/// X_{t+1} ~ N(A_t x_t + B_t a_t + c_t, F_t) for t = 0..T-1.
struct TvLinearModel {
    std::vector<Matrix> A;
    std::vector<Matrix> B;
    std::vector<Vector> c;
    std::vector<Matrix> F;

    int horizon() const { return static_cast<int>(A.size()); }
};

struct GmmComponent {
    double weight = 0.0;
    Vector mean;
    Matrix cov;
};

/// Mixture prior over concatenated transition tuples z = (x, a, x').
struct GmmPrior {
    std::vector<GmmComponent> comps;

    bool empty() const { return comps.empty(); }
    int dim() const { return comps.empty() ? 0 : static_cast<int>(comps.front().mean.size()); }
};

/// One transition with the action already encoded as a vector (one-hot for
/// discrete actions).
struct DynamicsTuple {
    Vector x;
    Vector a;
    Vector xn;
};

struct GmmOptions {
    int num_components = 8;
    int max_iterations = 50;
    double rel_tol = 1e-6; // relative log-likelihood stopping
    double cov_reg = 1e-6;
};

struct GmmFitInfo {
    int iterations = 0;
    int reinit_events = 0;          // degenerate components reseeded
    std::vector<double> loglik;     // total data log-likelihood per iteration
};

struct DynamicsFitOptions {
    double prior_strength = 1.0; // m0 pseudo-samples; 0 disables the prior
    double ridge = 1e-6;         // bump applied only when the regressor
                                 // covariance is singular
    double cov_reg = 1e-6;       // added to fitted noise covariances
};

struct DynamicsFitInfo {
    int ridge_events = 0; // timesteps that needed the ridge bump
};

Vector encode_action(int action, int count);

/// EM refit of the mixture with fixed K, warm-started from `prior` when its
/// shape matches, otherwise seeded from random data points. Deterministic
/// given (data, prior, rng).
GmmPrior update_gmm_prior(const GmmPrior& prior, const std::vector<Vector>& data,
                          const GmmOptions& opts, RngStream& rng, GmmFitInfo* info = nullptr);

/// Posterior responsibilities of z under the mixture; entries sum to 1.
Vector gmm_responsibilities(const GmmPrior& prior, const Vector& z);

/// Total log-likelihood of the data under the mixture.
double gmm_log_likelihood(const GmmPrior& prior, const std::vector<Vector>& data);

/// Per-timestep conditional linear-Gaussian fit. Empirical moments of the
/// tuples are blended with the prior through a normal-inverse-Wishart style
/// update with prior_strength pseudo-samples, then the conditional of x'
/// given (x, a) is read off the joint. Pass prior = nullptr (or strength 0)
/// for the plain least-squares fit.
TvLinearModel fit_dynamics(const GmmPrior* prior,
                           const std::vector<std::vector<DynamicsTuple>>& per_t,
                           const DynamicsFitOptions& opts, DynamicsFitInfo* info = nullptr);

/// A_t, the state Jacobian estimate consumed by the gradient recursion.
const Matrix& state_jacobian(const TvLinearModel& model, int t);

/// Per-timestep matrices as pretty JSON for the dump-dynamics command.
std::string dynamics_to_json(const TvLinearModel& model);

} // namespace rpglab
