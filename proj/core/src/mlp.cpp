#include "rpglab/mlp.hpp"

#include <cmath>

namespace rpglab {

std::vector<int> MlpParams::layer_sizes() const {
    std::vector<int> sizes;
    sizes.push_back(input_dim());
    for (const auto& w : weights) sizes.push_back(static_cast<int>(w.rows()));
    return sizes;
}

int MlpParams::flat_size() const {
    int n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l)
        n += static_cast<int>(weights[l].size() + biases[l].size());
    return n;
}

Vector MlpParams::flatten() const {
    Vector flat(flat_size());
    int k = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        const Matrix& w = weights[l];
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) flat[k++] = w(r, c);
        for (Eigen::Index i = 0; i < biases[l].size(); ++i) flat[k++] = biases[l][i];
    }
    return flat;
}

void MlpParams::unflatten(const Vector& flat) {
    require(flat.size() == flat_size(), "unflatten: flat vector length mismatch");
    int k = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        Matrix& w = weights[l];
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = flat[k++];
        for (Eigen::Index i = 0; i < biases[l].size(); ++i) biases[l][i] = flat[k++];
    }
}

MlpParams make_mlp(const std::vector<int>& sizes) {
    require(sizes.size() >= 2, "make_mlp: need at least input and output sizes");
    for (int s : sizes) require(s >= 1, "make_mlp: layer sizes must be positive");
    MlpParams p;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        p.weights.push_back(Matrix::Zero(sizes[l + 1], sizes[l]));
        p.biases.push_back(Vector::Zero(sizes[l + 1]));
    }
    return p;
}

MlpParams make_mlp(const std::vector<int>& sizes, RngStream& rng) {
    MlpParams p = make_mlp(sizes);
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(p.weights[l].cols()));
        Matrix& w = p.weights[l];
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-bound, bound);
        for (Eigen::Index i = 0; i < p.biases[l].size(); ++i)
            p.biases[l][i] = rng.uniform(-bound, bound);
    }
    return p;
}

MlpParams make_policy_net(int input_dim, int output_dim, RngStream& rng, int hidden) {
    return make_mlp({input_dim, hidden, hidden, output_dim}, rng);
}

Vector mlp_forward(const MlpParams& params, const Vector& input, MlpTape* tape) {
    require(input.size() == params.input_dim(), "mlp_forward: input dimension mismatch");
    if (tape) {
        tape->input = input;
        tape->hidden.clear();
        tape->sizes = params.layer_sizes();
    }
    Vector h = input;
    const int L = params.num_layers();
    for (int l = 0; l < L; ++l) {
        Vector z = params.weights[l] * h + params.biases[l];
        if (l + 1 < L) {
            h = z.array().tanh();
            if (tape) tape->hidden.push_back(h);
        } else {
            h = std::move(z);
        }
    }
    return h;
}

MlpBackwardResult mlp_backward(const MlpParams& params, const MlpTape& tape,
                               const Vector& output_cotangent) {
    require(tape.sizes == params.layer_sizes(), "mlp_backward: tape does not match params");
    require(output_cotangent.size() == params.output_dim(),
            "mlp_backward: cotangent dimension mismatch");
    require(static_cast<int>(tape.hidden.size()) == params.num_layers() - 1,
            "mlp_backward: incomplete tape");

    const int L = params.num_layers();
    MlpBackwardResult out;
    out.param_grad = Vector(params.flat_size());

    // Walk layers top-down, writing each layer's gradient block in place.
    std::vector<int> offsets(L);
    int off = 0;
    for (int l = 0; l < L; ++l) {
        offsets[l] = off;
        off += static_cast<int>(params.weights[l].size() + params.biases[l].size());
    }

    Vector delta = output_cotangent; // d(cot . y)/d(pre-activation of layer l)
    for (int l = L - 1; l >= 0; --l) {
        const Vector& below = (l == 0) ? tape.input : tape.hidden[l - 1];
        const Matrix& w = params.weights[l];
        int k = offsets[l];
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c)
                out.param_grad[k++] = delta[r] * below[c];
        for (Eigen::Index i = 0; i < delta.size(); ++i) out.param_grad[k++] = delta[i];

        Vector dh = w.transpose() * delta;
        if (l == 0) {
            out.input_grad = std::move(dh);
        } else {
            // chain through tanh of the layer below
            delta = dh.cwiseProduct(Vector::Ones(dh.size()) - tape.hidden[l - 1].cwiseAbs2());
        }
    }
    return out;
}

} // namespace rpglab
