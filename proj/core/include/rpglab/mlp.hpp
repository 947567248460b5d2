#pragma once

#include <vector>

#include "rpglab/rng.hpp"
#include "rpglab/types.hpp"

namespace rpglab {

/// Fully connected network with tanh hidden layers and an identity output
/// layer. Parameters live in per-layer matrices; the flat view used by the
/// optimizer and by gradient vectors is layer-major, weights before biases,
/// matrices serialized row-major.
struct MlpParams {
    std::vector<Matrix> weights; // weights[l] is (sizes[l+1] x sizes[l])
    std::vector<Vector> biases;

    int input_dim() const { return static_cast<int>(weights.front().cols()); }
    int output_dim() const { return static_cast<int>(weights.back().rows()); }
    int num_layers() const { return static_cast<int>(weights.size()); }
    std::vector<int> layer_sizes() const;

    /// Total number of scalar parameters.
    int flat_size() const;
    Vector flatten() const;
    void unflatten(const Vector& flat);
};

/// Zero-initialized network with the given layer sizes, e.g. {4, 64, 64, 2}.
MlpParams make_mlp(const std::vector<int>& sizes);

/// Network with uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights per layer.
MlpParams make_mlp(const std::vector<int>& sizes, RngStream& rng);

/// Standard policy/value trunk: input -> 64 -> 64 -> output, tanh hidden.
MlpParams make_policy_net(int input_dim, int output_dim, RngStream& rng, int hidden = 64);

/// Activation record from a forward pass; owns everything the two backward
/// passes need.
struct MlpTape {
    Vector input;
    std::vector<Vector> hidden; // post-tanh activations, one per hidden layer
    std::vector<int> sizes;     // layer sizes at forward time, for staleness checks
};

struct MlpBackwardResult {
    Vector param_grad; // d(cotangent . output) / d(flat params)
    Vector input_grad; // d(cotangent . output) / d(input)
};

/// Forward pass; pure function of (params, input).
Vector mlp_forward(const MlpParams& params, const Vector& input, MlpTape* tape = nullptr);

/// Reverse pass for both parameter and input gradients of cotangent . output.
MlpBackwardResult mlp_backward(const MlpParams& params, const MlpTape& tape,
                               const Vector& output_cotangent);

} // namespace rpglab
