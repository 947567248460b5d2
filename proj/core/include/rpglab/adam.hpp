#pragma once

#include "rpglab/mlp.hpp"
#include "rpglab/types.hpp"

namespace rpglab {

/// Adam optimizer state for one flat parameter vector. Descent convention:
/// callers minimizing pass the loss gradient, callers maximizing pass its
/// negation.
struct AdamState {
    Vector m; // first moment
    Vector v; // second moment
    long long step = 0;
    double alpha = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState init(int dim, double alpha = 1e-2);
};

/// One bias-corrected Adam update on a flat parameter vector.
void adam_step(AdamState& state, Vector& params, const Vector& grad);

/// Convenience overload updating network parameters in place.
void adam_step(AdamState& state, MlpParams& params, const Vector& grad);

} // namespace rpglab
