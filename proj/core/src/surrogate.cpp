#include "rpglab/surrogate.hpp"

#include <cmath>

namespace rpglab {

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double sigmoid_deriv(double z) {
    const double s = sigmoid(z);
    return s * (1.0 - s);
}

SurrogateValue surrogate_reward(const SurrogateRewardSpec& spec, const Vector& state) {
    require(static_cast<bool>(spec.event), "surrogate_reward: event function not set");
    require(static_cast<bool>(spec.event_grad), "surrogate_reward: event gradient not set");
    const double h = spec.event(state);
    SurrogateValue out;
    out.value = spec.scale * sigmoid(spec.sharpness * h);
    out.gradient = spec.scale * spec.sharpness * sigmoid_deriv(spec.sharpness * h) *
                   spec.event_grad(state);
    return out;
}

namespace {

// C-infinity ramp: 0 for t <= 0, 1 for t >= 1, strictly increasing between.
double smooth_step(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / t);
    const double b = std::exp(-1.0 / (1.0 - t));
    return a / (a + b);
}

} // namespace

std::function<double(double)> mollified_indicator_1d(double k_lo, double k_hi,
                                                     double omega_lo, double omega_hi) {
    require(k_lo <= k_hi, "mollified_indicator_1d: K must be a nonempty interval");
    require(omega_lo < k_lo && k_hi < omega_hi,
            "mollified_indicator_1d: K must lie strictly inside Omega");
    const double rise = k_lo - omega_lo;
    const double fall = omega_hi - k_hi;
    return [=](double x) {
        return smooth_step((x - omega_lo) / rise) * smooth_step((omega_hi - x) / fall);
    };
}

} // namespace rpglab
