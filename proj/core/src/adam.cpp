#include "rpglab/adam.hpp"

#include <cmath>

namespace rpglab {

AdamState AdamState::init(int dim, double alpha) {
    AdamState s;
    s.m = Vector::Zero(dim);
    s.v = Vector::Zero(dim);
    s.alpha = alpha;
    return s;
}

void adam_step(AdamState& state, Vector& params, const Vector& grad) {
    require(grad.size() == params.size(), "adam_step: gradient length mismatch");
    require(grad.size() == state.m.size(), "adam_step: state length mismatch");
    require(all_finite(grad), "adam_step: non-finite gradient entries");

    state.step += 1;
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseAbs2();
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    const Vector mhat = state.m / bc1;
    const Vector vhat = state.v / bc2;
    params.array() -= state.alpha * mhat.array() / (vhat.array().sqrt() + state.eps);
}

void adam_step(AdamState& state, MlpParams& params, const Vector& grad) {
    Vector flat = params.flatten();
    adam_step(state, flat, grad);
    params.unflatten(flat);
}

} // namespace rpglab
