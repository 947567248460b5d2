#include <doctest.h>

#include <cmath>

#include "rpglab/policy.hpp"

using namespace rpglab;

namespace {

// 1-D integrator x' = x + a with forces {-1, +1}, for enumeration tests.
class IntegratorEnv : public Env {
public:
    IntegratorEnv() {
        spec_.id = "integrator";
        spec_.state_dim = 1;
        spec_.actions = {true, 2, 0};
        spec_.horizon = 10;
    }
    const EnvSpec& spec() const override { return spec_; }
    std::unique_ptr<Env> clone() const override { return std::make_unique<IntegratorEnv>(*this); }
    Vector dynamics(const Vector& x, int action) const override {
        Vector n(1);
        n << x(0) + (action == 0 ? -1.0 : 1.0);
        return n;
    }
    double true_reward(const Vector&, int, bool) const override { return 0.0; }
    double surrogate_reward(const Vector&, int, bool, Vector* g) const override {
        if (g) g->setZero(1);
        return 0.0;
    }
    Vector sample_initial(RngStream&) const override { return Vector::Zero(1); }

private:
    EnvSpec spec_;
};

// Policy whose logits are the given constants, independent of the state.
RelaxedPolicy constant_logit_policy(const Vector& logits, double lambda, RelaxedForm form) {
    RelaxedPolicy p;
    p.net = make_mlp({1, static_cast<int>(logits.size())});
    p.net.biases[0] = logits;
    p.lambda = lambda;
    p.num_actions = static_cast<int>(logits.size());
    p.form = form;
    return p;
}

} // namespace

TEST_SUITE_BEGIN("policy");

TEST_CASE("probabilities are normalized and nonnegative") {
    auto rng = rng_fork(1, "pol");
    for (auto form : {RelaxedForm::merged, RelaxedForm::prior}) {
        auto p = make_relaxed_policy(4, 3, rng, 0.7, form);
        for (int i = 0; i < 50; ++i) {
            Vector probs = action_probs(p, rng.normal_vector(4));
            CHECK(probs.minCoeff() >= 0.0);
            CHECK(std::abs(probs.sum() - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("flat logits at large lambda sample uniformly") {
    auto p = constant_logit_policy(Vector::Zero(2), 1e6, RelaxedForm::merged);
    auto rng = rng_fork(2, "uniform");
    int count0 = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i)
        if (sample_action(p, Vector::Zero(1), rng) == 0) ++count0;
    CHECK(std::abs(count0 / double(n) - 0.5) < 0.01);
}

TEST_CASE("prior bonus ln 3 puts 3/4 mass on the prior action") {
    auto p = constant_logit_policy(Vector::Zero(2), 1.0 / std::log(3.0), RelaxedForm::prior);
    Vector probs = action_probs(p, Vector::Zero(1));
    CHECK(probs(0) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(probs(1) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("lambda zero rounds instead of sampling") {
    Vector logits(3);
    logits << 0.5, 2.0, -1.0;
    auto p = constant_logit_policy(logits, 0.0, RelaxedForm::merged);
    auto rng = rng_fork(3, "round");
    for (int i = 0; i < 10; ++i) CHECK(sample_action(p, Vector::Zero(1), rng) == 1);
    Vector probs = action_probs(p, Vector::Zero(1));
    CHECK(probs(1) == 1.0);
    CHECK(probs.sum() == 1.0);

    auto g = make_gaussian_policy(2, 2, rng, 0.0);
    Vector x(2);
    x << 0.3, -0.4;
    Vector a = sample_action(g, x, rng);
    CHECK((a - mlp_forward(g.mean_net, x)).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("rounding takes the argmax with lowest-index tie-break") {
    Vector logits(2);
    logits << 2.0, 1.0;
    auto p = constant_logit_policy(logits, 0.5, RelaxedForm::merged);
    CHECK(round_to_deterministic(p).act(Vector::Zero(1)) == 0);
    auto tie = constant_logit_policy(Vector::Zero(2), 0.5, RelaxedForm::merged);
    CHECK(round_to_deterministic(tie).act(Vector::Zero(1)) == 0);
}

TEST_CASE("discrete log-prob gradients match finite differences") {
    auto rng = rng_fork(4, "fd");
    for (auto form : {RelaxedForm::merged, RelaxedForm::prior}) {
        auto p = make_relaxed_policy(3, 4, rng, 0.6, form);
        for (int trial = 0; trial < 50; ++trial) {
            Vector x = rng.normal_vector(3);
            int a = static_cast<int>(rng.uniform_index(4));
            auto lg = log_prob_grads(p, x, a);
            CHECK(std::isfinite(lg.logp));

            Vector flat = p.net.flatten();
            for (int i = 0; i < 6; ++i) {
                int k = static_cast<int>(rng.uniform_index(flat.size()));
                RelaxedPolicy pp = p, pm = p;
                Vector fp = flat, fm = flat;
                fp(k) += 1e-6;
                fm(k) -= 1e-6;
                pp.net.unflatten(fp);
                pm.net.unflatten(fm);
                double fd = (log_prob_grads(pp, x, a).logp - log_prob_grads(pm, x, a).logp) / 2e-6;
                CHECK(lg.grad_params(k) == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
            }
            for (int i = 0; i < 3; ++i) {
                Vector xp = x, xm = x;
                xp(i) += 1e-6;
                xm(i) -= 1e-6;
                double fd = (log_prob_grads(p, xp, a).logp - log_prob_grads(p, xm, a).logp) / 2e-6;
                CHECK(lg.grad_state(i) == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
            }
        }
    }
}

TEST_CASE("score identity: expected log-prob gradients vanish") {
    auto rng = rng_fork(5, "score");
    for (auto form : {RelaxedForm::merged, RelaxedForm::prior}) {
        auto p = make_relaxed_policy(2, 3, rng, 0.8, form);
        for (int trial = 0; trial < 10; ++trial) {
            Vector x = rng.normal_vector(2);
            Vector probs = action_probs(p, x);
            Vector acc_params = Vector::Zero(p.net.flat_size());
            Vector acc_state = Vector::Zero(2);
            for (int a = 0; a < 3; ++a) {
                auto lg = log_prob_grads(p, x, a);
                acc_params += probs(a) * lg.grad_params;
                acc_state += probs(a) * lg.grad_state;
            }
            CHECK(acc_params.lpNorm<Eigen::Infinity>() < 1e-10);
            CHECK(acc_state.lpNorm<Eigen::Infinity>() < 1e-10);
        }
    }
}

TEST_CASE("gaussian log-prob has the closed-form mean gradient") {
    // identity mean network: mu(x) = x
    GaussianPolicy g;
    g.mean_net = make_mlp({1, 1});
    g.mean_net.weights[0] << 1.0;
    g.lambda = 0.5;
    Vector x(1), a(1);
    x << 0.3;
    a << 0.8;
    auto lg = log_prob_grads(g, x, a);
    const double pull = (0.8 - 0.3) / 0.25; // (a - mu)/lambda^2
    CHECK(lg.grad_params(0) == doctest::Approx(pull * 0.3).epsilon(1e-12)); // d mu/d w = x
    CHECK(lg.grad_params(1) == doctest::Approx(pull).epsilon(1e-12));       // d mu/d b = 1
    // raising x raises mu towards a, so d logp/dx = +pull here
    CHECK(lg.grad_state(0) == doctest::Approx(pull).epsilon(1e-12));
    const double expect_logp =
        -0.5 * std::log(2.0 * 3.14159265358979323846 * 0.25) - 0.5 * 0.25 / 0.25;
    CHECK(lg.logp == doctest::Approx(expect_logp).epsilon(1e-12));
}

TEST_CASE("gaussian density integrates to one") {
    auto rng = rng_fork(6, "gauss-net");
    auto g = make_gaussian_policy(2, 1, rng, 0.7);
    Vector x = rng.normal_vector(2);
    const double mu = mlp_forward(g.mean_net, x)(0);
    double integral = 0.0;
    const int n = 20000;
    const double lo = mu - 8.0 * g.lambda, hi = mu + 8.0 * g.lambda;
    const double h = (hi - lo) / n;
    for (int i = 0; i <= n; ++i) {
        Vector a(1);
        a << lo + i * h;
        double w = (i == 0 || i == n) ? 0.5 : 1.0;
        integral += w * h * std::exp(log_prob_grads(g, x, a).logp);
    }
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("zero-probability actions under lambda zero are an error") {
    auto p = constant_logit_policy(Vector::Zero(2), 0.0, RelaxedForm::merged);
    CHECK_THROWS_AS(log_prob_grads(p, Vector::Zero(1), 1), ContractViolation);
    auto rng = rng_fork(7, "err");
    auto g = make_gaussian_policy(1, 1, rng, 0.0);
    CHECK_THROWS_AS(log_prob_grads(g, Vector::Zero(1), Vector::Zero(1)), ContractViolation);
}

TEST_CASE("entropy shrinks as lambda anneals towards zero") {
    auto rng = rng_fork(8, "entropy");
    for (auto form : {RelaxedForm::merged, RelaxedForm::prior}) {
        auto p = make_relaxed_policy(3, 4, rng, 1.0, form);
        for (int trial = 0; trial < 20; ++trial) {
            Vector x = rng.normal_vector(3);
            double prev = std::log(4.0) + 1e-12;
            for (double lam : {1.0, 0.5, 0.1, 0.01}) {
                RelaxedPolicy q = p;
                q.lambda = lam;
                double h = entropy(action_probs(q, x));
                CHECK(h <= prev + 1e-12);
                prev = h;
            }
        }
    }
}

TEST_CASE("small lambda concentrates on the rounded action") {
    auto rng = rng_fork(9, "concentrate");
    for (auto form : {RelaxedForm::merged, RelaxedForm::prior}) {
        auto p = make_relaxed_policy(2, 3, rng, RelaxedPolicy::lambda_floor, form);
        p.net.weights.back() *= 5.0; // spread the logits so clear winners exist
        p.net.biases.back() *= 5.0;
        int checked = 0;
        for (int trial = 0; trial < 200 && checked < 20; ++trial) {
            Vector x = 2.0 * rng.normal_vector(2);
            Vector logits = mlp_forward(p.net, x);
            // want a clear winner: gap of at least 1
            double best = logits.maxCoeff();
            int runner_up_count = 0;
            for (int i = 0; i < 3; ++i)
                if (best - logits(i) < 1.0) ++runner_up_count;
            if (runner_up_count != 1) continue;
            ++checked;
            int det = round_to_deterministic(p).act(x);
            CHECK(action_probs(p, x)(det) >= 1.0 - 1e-6);
        }
        CHECK(checked > 0);
    }
}

TEST_CASE("expected next state enumerates the discrete actions exactly") {
    IntegratorEnv env;
    auto uniform = constant_logit_policy(Vector::Zero(2), 1.0, RelaxedForm::merged);
    Vector x(1);
    x << 0.37;
    // symmetric forces cancel
    CHECK(expected_next_state(uniform, env, x)(0) == doctest::Approx(0.37).epsilon(1e-15));

    Vector logits(2);
    logits << 5.0, -5.0;
    auto point = constant_logit_policy(logits, 0.0, RelaxedForm::merged);
    CHECK(expected_next_state(point, env, x)(0) == x(0) - 1.0);
}

TEST_CASE("expected next state matches the weighted sum on mountain car") {
    auto env = make_env("mountaincar");
    auto rng = rng_fork(10, "mc");
    auto p = make_relaxed_policy(2, 3, rng, 0.5);
    Vector x(2);
    x << -0.4, 0.02;
    Vector probs = action_probs(p, x);
    Vector brute = Vector::Zero(2);
    for (int a = 0; a < 3; ++a) brute += probs(a) * env->dynamics(x, a);
    CHECK((expected_next_state(p, *env, x) - brute).lpNorm<Eigen::Infinity>() < 1e-15);
}

TEST_CASE("gauss-hermite integrates normal moments exactly") {
    Vector nodes, weights;
    gauss_hermite(6, &nodes, &weights);
    const double inv_sqrt_pi = 1.0 / std::sqrt(3.14159265358979323846);
    double m2 = 0.0, m4 = 0.0, m0 = 0.0;
    for (int i = 0; i < 6; ++i) {
        const double z = std::sqrt(2.0) * nodes(i); // standard normal node
        m0 += inv_sqrt_pi * weights(i);
        m2 += inv_sqrt_pi * weights(i) * z * z;
        m4 += inv_sqrt_pi * weights(i) * z * z * z * z;
    }
    CHECK(m0 == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(m2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m4 == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("continuous expected next state: quadrature and the exact linear case") {
    auto rng = rng_fork(11, "cquad");
    auto g = make_gaussian_policy(1, 1, rng, 0.3);
    // linear dynamics: quadrature must be exact for any order
    ContinuousDynamics lin = [](const Vector& x, const Vector& a) {
        Vector n(1);
        n << 0.9 * x(0) + 2.0 * a(0);
        return n;
    };
    Vector x(1);
    x << 0.5;
    const double mu = mlp_forward(g.mean_net, x)(0);
    Vector expect(1);
    expect << 0.9 * 0.5 + 2.0 * mu;
    CHECK((expected_next_state(g, lin, x, 8) - expect).lpNorm<Eigen::Infinity>() < 1e-12);

    // quadratic in the action: E[a^2] = mu^2 + lambda^2
    ContinuousDynamics quad = [](const Vector&, const Vector& a) {
        Vector n(1);
        n << a(0) * a(0);
        return n;
    };
    CHECK(expected_next_state(g, quad, x, 8)(0) ==
          doctest::Approx(mu * mu + 0.09).epsilon(1e-12));

    CHECK_THROWS_AS(expected_next_state(g, lin, x, 0), ContractViolation);

    // lambda = 0 short-circuits to the deterministic step, bit for bit
    GaussianPolicy g0 = g;
    g0.lambda = 0.0;
    Vector direct = lin(x, mlp_forward(g0.mean_net, x));
    CHECK((expected_next_state(g0, lin, x, 8) - direct).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_SUITE_END();
