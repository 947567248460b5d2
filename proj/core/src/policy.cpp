#include "rpglab/policy.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace rpglab {

namespace {

int argmax_index(const Vector& v) {
    int best = 0;
    for (int i = 1; i < v.size(); ++i)
        if (v(i) > v(best)) best = i;
    return best;
}

Vector one_hot(int n, int i) {
    Vector v = Vector::Zero(n);
    v(i) = 1.0;
    return v;
}

Vector stable_softmax(const Vector& z) {
    const double m = z.maxCoeff();
    Vector p = (z.array() - m).exp();
    p /= p.sum();
    return p;
}

double log_sum_exp(const Vector& z) {
    const double m = z.maxCoeff();
    return m + std::log((z.array() - m).exp().sum());
}

/// Logits of the relaxed distribution at a state; fills the tape for the
/// gradient path. The prior bonus lands on the argmax of the raw logits.
Vector relaxed_logits(const RelaxedPolicy& policy, const Vector& state, MlpTape* tape) {
    Vector g = mlp_forward(policy.net, state, tape);
    require(g.size() == policy.num_actions, "policy: network output size != num_actions");
    if (policy.form == RelaxedForm::merged) return g / policy.lambda;
    return g + one_hot(policy.num_actions, argmax_index(g)) / policy.lambda;
}

void check_policy(const RelaxedPolicy& policy) {
    require(policy.num_actions >= 1, "policy: num_actions must be positive");
    require(policy.lambda >= 0.0, "policy: lambda must be nonnegative");
}

} // namespace

int DeterministicDiscretePolicy::act(const Vector& state) const {
    return argmax_index(mlp_forward(net, state));
}

Vector DeterministicContinuousPolicy::act(const Vector& state) const {
    return mlp_forward(net, state);
}

RelaxedPolicy make_relaxed_policy(int state_dim, int num_actions, RngStream& rng, double lambda,
                                  RelaxedForm form, int hidden) {
    RelaxedPolicy p;
    p.net = make_policy_net(state_dim, num_actions, rng, hidden);
    p.lambda = lambda;
    p.num_actions = num_actions;
    p.form = form;
    check_policy(p);
    return p;
}

GaussianPolicy make_gaussian_policy(int state_dim, int action_dim, RngStream& rng, double lambda,
                                    int hidden) {
    require(lambda >= 0.0, "policy: lambda must be nonnegative");
    GaussianPolicy p;
    p.mean_net = make_policy_net(state_dim, action_dim, rng, hidden);
    p.lambda = lambda;
    return p;
}

Vector action_probs(const RelaxedPolicy& policy, const Vector& state) {
    check_policy(policy);
    if (policy.lambda == 0.0) {
        Vector g = mlp_forward(policy.net, state);
        return one_hot(policy.num_actions, argmax_index(g));
    }
    return stable_softmax(relaxed_logits(policy, state, nullptr));
}

int sample_action(const RelaxedPolicy& policy, const Vector& state, RngStream& rng) {
    check_policy(policy);
    if (policy.lambda == 0.0) return round_to_deterministic(policy).act(state);
    return rng.categorical(action_probs(policy, state));
}

Vector sample_action(const GaussianPolicy& policy, const Vector& state, RngStream& rng) {
    Vector mu = mlp_forward(policy.mean_net, state);
    if (policy.lambda == 0.0) return mu;
    return mu + policy.lambda * rng.normal_vector(static_cast<int>(mu.size()));
}

LogProbGrads log_prob_grads(const RelaxedPolicy& policy, const Vector& state, int action) {
    check_policy(policy);
    require(action >= 0 && action < policy.num_actions, "log_prob_grads: action out of range");
    require(policy.lambda > 0.0,
            "log_prob_grads: lambda = 0 policy has a degenerate log-density, round instead");

    MlpTape tape;
    Vector z = relaxed_logits(policy, state, &tape);
    Vector probs = stable_softmax(z);

    LogProbGrads out;
    out.logp = z(action) - log_sum_exp(z);

    // d logp / d logits z is (e_a - pi); the prior bonus is locally constant
    // in both the parameters and the state (argmax is piecewise constant), so
    // for either form the network cotangent is (e_a - pi) scaled by dz/dg.
    Vector cot = one_hot(policy.num_actions, action) - probs;
    if (policy.form == RelaxedForm::merged) cot /= policy.lambda;
    auto back = mlp_backward(policy.net, tape, cot);
    out.grad_params = std::move(back.param_grad);
    out.grad_state = std::move(back.input_grad);
    return out;
}

LogProbGrads log_prob_grads(const GaussianPolicy& policy, const Vector& state,
                            const Vector& action) {
    require(policy.lambda > 0.0,
            "log_prob_grads: lambda = 0 policy has a degenerate log-density, round instead");
    MlpTape tape;
    Vector mu = mlp_forward(policy.mean_net, state, &tape);
    require(action.size() == mu.size(), "log_prob_grads: action dimension mismatch");

    const double var = policy.lambda * policy.lambda;
    const Vector diff = action - mu;
    LogProbGrads out;
    out.logp = -0.5 * static_cast<double>(mu.size()) * std::log(2.0 * std::numbers::pi * var) -
               0.5 * diff.squaredNorm() / var;
    auto back = mlp_backward(policy.mean_net, tape, diff / var);
    out.grad_params = std::move(back.param_grad);
    out.grad_state = std::move(back.input_grad);
    return out;
}

DeterministicDiscretePolicy round_to_deterministic(const RelaxedPolicy& policy) {
    return DeterministicDiscretePolicy{policy.net};
}

DeterministicContinuousPolicy round_to_deterministic(const GaussianPolicy& policy) {
    return DeterministicContinuousPolicy{policy.mean_net};
}

Vector expected_next_state(const RelaxedPolicy& policy, const Env& env, const Vector& state) {
    require(env.spec().actions.discrete, "expected_next_state: env must be discrete");
    require(policy.num_actions == env.spec().actions.count,
            "expected_next_state: policy/env action count mismatch");
    Vector probs = action_probs(policy, state);
    Vector acc = Vector::Zero(state.size());
    for (int a = 0; a < policy.num_actions; ++a) {
        if (probs(a) == 0.0) continue;
        acc += probs(a) * env.dynamics(state, a);
    }
    return acc;
}

void gauss_hermite(int order, Vector* nodes, Vector* weights) {
    require(order >= 1, "gauss_hermite: order must be positive");
    require(nodes && weights, "gauss_hermite: output pointers required");
    // Golub-Welsch: eigen-decompose the symmetric tridiagonal Jacobi matrix
    // with off-diagonals sqrt(k/2) for the physicists' Hermite polynomials.
    Matrix jacobi = Matrix::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        const double off = std::sqrt(k / 2.0);
        jacobi(k, k - 1) = off;
        jacobi(k - 1, k) = off;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(jacobi);
    *nodes = es.eigenvalues();
    weights->resize(order);
    const double sqrt_pi = std::sqrt(std::numbers::pi);
    for (int i = 0; i < order; ++i) {
        const double v0 = es.eigenvectors()(0, i);
        (*weights)(i) = sqrt_pi * v0 * v0;
    }
}

Vector expected_next_state(const GaussianPolicy& policy, const ContinuousDynamics& f,
                           const Vector& state, int quad_order) {
    require(static_cast<bool>(f), "expected_next_state: dynamics function not set");
    require(quad_order >= 1,
            "expected_next_state: continuous policies need a quadrature order >= 1");
    Vector mu = mlp_forward(policy.mean_net, state);
    if (policy.lambda == 0.0) return f(state, mu);

    const int dim = static_cast<int>(mu.size());
    require(dim <= 3, "expected_next_state: tensor quadrature supported up to 3 action dims");

    Vector nodes, weights;
    gauss_hermite(quad_order, &nodes, &weights);
    const double scale = std::numbers::sqrt2 * policy.lambda;
    const double norm = std::pow(std::numbers::pi, -0.5 * dim);

    Vector acc = Vector::Zero(state.size());
    std::vector<int> idx(dim, 0);
    while (true) {
        double w = norm;
        Vector a = mu;
        for (int d = 0; d < dim; ++d) {
            w *= weights(idx[d]);
            a(d) += scale * nodes(idx[d]);
        }
        acc += w * f(state, a);
        int d = 0;
        while (d < dim && ++idx[d] == quad_order) idx[d++] = 0;
        if (d == dim) break;
    }
    return acc;
}

double entropy(const Vector& probs) {
    double h = 0.0;
    for (int i = 0; i < probs.size(); ++i)
        if (probs(i) > 0.0) h -= probs(i) * std::log(probs(i));
    return h;
}

} // namespace rpglab
