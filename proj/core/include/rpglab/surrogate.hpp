#pragma once

#include <functional>

#include "rpglab/types.hpp"

namespace rpglab {

/// Numerically safe logistic sigmoid.
double sigmoid(double z);
/// Derivative of the sigmoid, sigma(z) * (1 - sigma(z)).
double sigmoid_deriv(double z);

/// Smooth stand-in for the indicator reward 1_{h(s) >= 0}: the reward
/// scale * sigmoid(sharpness * h(s)) together with its state gradient.
struct SurrogateRewardSpec {
    std::function<double(const Vector&)> event;        // h : X -> R, smooth
    std::function<Vector(const Vector&)> event_grad;   // analytic grad of h
    double scale = 1.0;                                // lambda_r
    double sharpness = 10.0;                           // alpha
};

struct SurrogateValue {
    double value;
    Vector gradient;
};

/// value = scale * sigmoid(sharpness * h(s)),
/// gradient = scale * sharpness * sigmoid'(sharpness * h(s)) * grad h(s).
SurrogateValue surrogate_reward(const SurrogateRewardSpec& spec, const Vector& state);

/// Smooth function psi with 1_K <= psi <= 1_Omega for a closed interval K
/// strictly inside the open interval Omega. Exactly 1 on K, exactly 0
/// outside Omega, infinitely differentiable everywhere.
std::function<double(double)> mollified_indicator_1d(double k_lo, double k_hi,
                                                     double omega_lo, double omega_hi);

} // namespace rpglab
