#include "rpglab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rpglab/estimators.hpp"
#include "rpglab/mlp.hpp"
#include "rpglab/policy.hpp"
#include "rpglab/surrogate.hpp"

namespace rpglab {

namespace {

Vector softmax_row(const Vector& z) {
    Vector e = (z.array() - z.maxCoeff()).exp().matrix();
    return e / e.sum();
}

int argmax_lowest(const Vector& v) {
    int best = 0;
    for (int i = 1; i < v.size(); ++i)
        if (v(i) > v(best)) best = i;
    return best;
}

void validate_toy(const ToyMdp& toy) {
    require(toy.state_dim >= 1 && toy.state_dim <= 2, "toy mdp: state dim must be 1 or 2");
    require(toy.num_actions >= 1 && toy.num_actions <= 3, "toy mdp: need 1 to 3 actions");
    require(toy.horizon >= 1 && toy.horizon <= 4, "toy mdp: horizon must be 1 to 4");
    const auto T = static_cast<std::size_t>(toy.horizon);
    require(toy.transition.size() == T && toy.shift.size() == T && toy.reward_coeff.size() == T,
            "toy mdp: per-step arrays must match the horizon");
    require(toy.x0.size() == toy.state_dim, "toy mdp: x0 dimension mismatch");
    for (std::size_t t = 0; t < T; ++t) {
        require(toy.transition[t].rows() == toy.state_dim &&
                    toy.transition[t].cols() == toy.state_dim,
                "toy mdp: transition matrix shape mismatch");
        require(toy.shift[t].size() == static_cast<std::size_t>(toy.num_actions),
                "toy mdp: one shift vector per action required");
        for (const auto& s : toy.shift[t])
            require(s.size() == toy.state_dim, "toy mdp: shift dimension mismatch");
        require(toy.reward_coeff[t].size() == toy.state_dim,
                "toy mdp: reward coefficient dimension mismatch");
    }
}

void validate_toy_policy(const ToyMdp& toy, const ToyPolicy& policy) {
    require(policy.logits.rows() == toy.horizon && policy.logits.cols() == toy.num_actions,
            "toy policy: logits must be horizon x num_actions");
    require(policy.lambda >= 0.0, "toy policy: lambda must be nonnegative");
}

} // namespace

long ToyMdp::sequence_count() const {
    long count = 1;
    for (int t = 0; t < horizon; ++t) count *= num_actions;
    return count;
}

bool ToyMdp::enumerable() const { return sequence_count() <= 100; }

ToyMdp make_random_toy(RngStream& rng) {
    ToyMdp toy;
    toy.state_dim = 1 + static_cast<int>(rng.uniform_index(2));
    toy.num_actions = 2 + static_cast<int>(rng.uniform_index(2));
    toy.horizon = 2 + static_cast<int>(rng.uniform_index(3));
    const int n = toy.state_dim;
    for (int t = 0; t < toy.horizon; ++t) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = rng.uniform(-0.9, 0.9);
        toy.transition.push_back(m);
        std::vector<Vector> shifts;
        for (int a = 0; a < toy.num_actions; ++a) {
            Vector s(n);
            for (int i = 0; i < n; ++i) s(i) = rng.uniform(-1.0, 1.0);
            shifts.push_back(s);
        }
        toy.shift.push_back(shifts);
        Vector c(n);
        for (int i = 0; i < n; ++i) c(i) = rng.uniform(-1.0, 1.0);
        toy.reward_coeff.push_back(c);
    }
    toy.x0 = Vector::Zero(n);
    for (int i = 0; i < n; ++i) toy.x0(i) = rng.uniform(-1.0, 1.0);
    return toy;
}

ToyPolicy make_random_toy_policy(const ToyMdp& toy, RngStream& rng) {
    ToyPolicy policy;
    policy.logits = Matrix(toy.horizon, toy.num_actions);
    for (int t = 0; t < toy.horizon; ++t)
        for (int a = 0; a < toy.num_actions; ++a) policy.logits(t, a) = rng.uniform(-1.0, 1.0);
    policy.lambda = rng.uniform(0.5, 1.5);
    return policy;
}

Vector toy_action_probs(const ToyPolicy& policy, int t) {
    require(t >= 0 && t < policy.logits.rows(), "toy policy: step out of range");
    Vector row = policy.logits.row(t).transpose();
    if (policy.lambda == 0.0) {
        Vector p = Vector::Zero(row.size());
        p(argmax_lowest(row)) = 1.0;
        return p;
    }
    return softmax_row(row / policy.lambda);
}

double toy_relaxed_objective(const ToyMdp& toy, const ToyPolicy& policy) {
    validate_toy(toy);
    validate_toy_policy(toy, policy);
    Vector x = toy.x0;
    double value = 0.0;
    for (int t = 0; t < toy.horizon; ++t) {
        Vector probs = toy_action_probs(policy, t);
        Vector drift = Vector::Zero(toy.state_dim);
        for (int a = 0; a < toy.num_actions; ++a) drift += probs(a) * toy.shift[t][a];
        x = toy.transition[t] * x + drift;
        value += toy.reward_coeff[t].dot(x);
    }
    return value;
}

UnbiasednessReport check_unbiasedness(const ToyMdp& toy, const ToyPolicy& policy,
                                      double fd_step) {
    validate_toy(toy);
    validate_toy_policy(toy, policy);
    require(toy.enumerable(), "unbiasedness check: toy has too many action sequences to enumerate");
    require(fd_step > 0.0, "unbiasedness check: finite-difference step must be positive");

    const int n = toy.state_dim;
    const int A = toy.num_actions;
    const int T = toy.horizon;
    const int P = T * A;

    TvLinearModel model;
    for (int t = 0; t < T; ++t) {
        model.A.push_back(toy.transition[t]);
        model.B.push_back(Matrix::Zero(n, A));
        model.c.push_back(Vector::Zero(n));
        model.F.push_back(Matrix::Identity(n, n));
    }

    std::vector<Vector> probs;
    for (int t = 0; t < T; ++t) probs.push_back(toy_action_probs(policy, t));

    UnbiasednessReport report;
    report.enumerated = Vector::Zero(P);
    report.sequences = toy.sequence_count();

    std::vector<int> seq(T, 0);
    for (long s = 0; s < report.sequences; ++s) {
        double prob = 1.0;
        for (int t = 0; t < T; ++t) prob *= probs[t](seq[t]);
        if (prob > 0.0) {
            Trajectory traj;
            traj.states.push_back(toy.x0);
            for (int t = 0; t < T; ++t) {
                const int a = seq[t];
                Vector next = toy.transition[t] * traj.states.back() + toy.shift[t][a];
                traj.states.push_back(next);
                traj.actions.push_back(a);
                const double r = toy.reward_coeff[t].dot(next);
                traj.rewards.push_back(r);
                traj.surrogates.push_back(r);
                traj.surrogate_grads.push_back(toy.reward_coeff[t]);
                Vector score = Vector::Zero(P);
                if (policy.lambda > 0.0) {
                    for (int b = 0; b < A; ++b)
                        score(t * A + b) = ((b == a ? 1.0 : 0.0) - probs[t](b)) / policy.lambda;
                }
                traj.logp_param_grads.push_back(score);
                traj.logp_state_grads.push_back(Vector::Zero(n));
            }
            report.enumerated += prob * rpg_gradient({traj}, model).grad;
        }
        // odometer over action sequences
        for (int t = 0; t < T; ++t) {
            if (++seq[t] < A) break;
            seq[t] = 0;
        }
    }

    report.reference = Vector::Zero(P);
    for (int k = 0; k < P; ++k) {
        ToyPolicy up = policy, down = policy;
        up.logits(k / A, k % A) += fd_step;
        down.logits(k / A, k % A) -= fd_step;
        report.reference(k) =
            (toy_relaxed_objective(toy, up) - toy_relaxed_objective(toy, down)) / (2.0 * fd_step);
    }

    report.max_abs_error = (report.enumerated - report.reference).lpNorm<Eigen::Infinity>();
    const double scale = std::max(report.reference.lpNorm<Eigen::Infinity>(), 1e-12);
    report.rel_error = report.max_abs_error / scale;
    return report;
}

double BoundExperiment::bound() const {
    return std::sqrt(variance_cap()) / (1.0 - alpha());
}

BoundReport check_bound(const BoundExperiment& exp, RngStream& rng) {
    require(exp.alpha() < 1.0, "deviation bound: rho (rho_prime + 1) must be below 1");
    require(exp.rho >= 0.0 && exp.rho_prime >= 0.0, "deviation bound: constants must be nonnegative");
    require(exp.lambda >= 0.0, "deviation bound: lambda must be nonnegative");
    require(exp.state_dim >= 1 && exp.horizon >= 1 && exp.rollouts >= 2,
            "deviation bound: need at least 2 rollouts and a positive horizon");
    require(exp.quad_order >= 1, "deviation bound: quadrature order must be positive");

    Vector nodes, weights;
    gauss_hermite(exp.quad_order, &nodes, &weights);
    const double norm = 1.0 / std::sqrt(std::numbers::pi);
    const double scale = std::numbers::sqrt2 * exp.lambda;

    auto policy_mean = [&](const Vector& x) -> Vector {
        return (exp.rho_prime * x.array().tanh()).matrix();
    };
    auto step = [&](const Vector& x, const Vector& a) -> Vector {
        return (exp.rho * x.array().tanh() + exp.rho * a.array().tanh()).matrix();
    };
    // componentwise E tanh(a_i) under a_i ~ N(mu_i, lambda^2)
    auto mean_tanh = [&](const Vector& mu) -> Vector {
        Vector out = Vector::Zero(mu.size());
        for (int i = 0; i < mu.size(); ++i) {
            double acc = 0.0;
            for (int k = 0; k < nodes.size(); ++k)
                acc += weights(k) * std::tanh(mu(i) + scale * nodes(k));
            out(i) = norm * acc;
        }
        return out;
    };

    std::vector<double> deviations;
    deviations.reserve(exp.rollouts);
    for (int i = 0; i < exp.rollouts; ++i) {
        auto stream = rng.child("rollout", static_cast<std::uint64_t>(i));
        Vector x0(exp.state_dim);
        for (int d = 0; d < exp.state_dim; ++d) x0(d) = stream.uniform(-1.0, 1.0);
        Vector x = x0, relaxed = x0;
        for (int t = 0; t < exp.horizon; ++t) {
            Vector mu = policy_mean(x);
            Vector eps = stream.normal_vector(exp.state_dim);
            Vector a = mu + exp.lambda * eps;
            x = step(x, a);
            Vector mu_r = policy_mean(relaxed);
            if (exp.lambda == 0.0) {
                // identical arithmetic to the sampled path, so the gap is
                // exactly zero in the deterministic limit
                relaxed = step(relaxed, mu_r);
            } else {
                relaxed = (exp.rho * relaxed.array().tanh() +
                           exp.rho * mean_tanh(mu_r).array())
                              .matrix();
            }
        }
        deviations.push_back((x - relaxed).norm());
    }

    BoundReport report;
    report.alpha = exp.alpha();
    report.bound = exp.bound();
    double sum = 0.0;
    for (double d : deviations) {
        sum += d;
        report.max_deviation = std::max(report.max_deviation, d);
    }
    report.mean_deviation = sum / exp.rollouts;
    double ss = 0.0;
    for (double d : deviations) ss += (d - report.mean_deviation) * (d - report.mean_deviation);
    report.se_deviation = std::sqrt(ss / (static_cast<double>(exp.rollouts) *
                                          (static_cast<double>(exp.rollouts) - 1.0)));
    report.within = report.mean_deviation <= report.bound + 3.0 * report.se_deviation;
    return report;
}

NoiseMagnitudeReport check_noise_magnitude(const Vector& stddev, int samples, RngStream& rng) {
    require(stddev.size() >= 1 && samples >= 2, "noise magnitude: need a stddev vector and 2+ samples");
    require((stddev.array() >= 0.0).all(), "noise magnitude: stddev entries must be nonnegative");
    NoiseMagnitudeReport report;
    report.cap = stddev.norm();
    std::vector<double> norms;
    norms.reserve(samples);
    for (int i = 0; i < samples; ++i) {
        Vector x = stddev.cwiseProduct(rng.normal_vector(stddev.size()));
        norms.push_back(x.norm());
    }
    double sum = 0.0;
    for (double v : norms) sum += v;
    report.mean_norm = sum / samples;
    double ss = 0.0;
    for (double v : norms) ss += (v - report.mean_norm) * (v - report.mean_norm);
    report.se = std::sqrt(ss / (static_cast<double>(samples) * (samples - 1.0)));
    report.within = report.mean_norm <= report.cap + 3.0 * report.se;
    return report;
}

namespace {

double relative_error(double analytic, double fd) {
    return std::abs(analytic - fd) /
           std::max({1.0, std::abs(analytic), std::abs(fd)});
}

double check_mlp_module(int cases, double h, RngStream& rng) {
    double worst = 0.0;
    for (int c = 0; c < cases; ++c) {
        auto stream = rng.child("case", static_cast<std::uint64_t>(c));
        const int in = 1 + static_cast<int>(stream.uniform_index(4));
        const int hid = 2 + static_cast<int>(stream.uniform_index(7));
        const int out = 1 + static_cast<int>(stream.uniform_index(3));
        MlpParams net = make_mlp({in, hid, out}, stream);
        Vector x = stream.normal_vector(in);
        Vector cot = stream.normal_vector(out);

        MlpTape tape;
        mlp_forward(net, x, &tape);
        auto grads = mlp_backward(net, tape, cot);

        auto value = [&](const MlpParams& p, const Vector& xx) {
            return cot.dot(mlp_forward(p, xx));
        };
        Vector flat = net.flatten();
        for (int pick = 0; pick < 6; ++pick) {
            const auto k = static_cast<Eigen::Index>(stream.uniform_index(flat.size()));
            Vector up = flat, down = flat;
            up(k) += h;
            down(k) -= h;
            MlpParams pu = net, pd = net;
            pu.unflatten(up);
            pd.unflatten(down);
            const double fd = (value(pu, x) - value(pd, x)) / (2.0 * h);
            worst = std::max(worst, relative_error(grads.param_grad(k), fd));
        }
        for (Eigen::Index k = 0; k < x.size(); ++k) {
            Vector xu = x, xd = x;
            xu(k) += h;
            xd(k) -= h;
            const double fd = (value(net, xu) - value(net, xd)) / (2.0 * h);
            worst = std::max(worst, relative_error(grads.input_grad(k), fd));
        }
    }
    return worst;
}

double check_policy_module(int cases, double h, RngStream& rng) {
    double worst = 0.0;
    for (int c = 0; c < cases; ++c) {
        auto stream = rng.child("case", static_cast<std::uint64_t>(c));
        const int sd = 1 + static_cast<int>(stream.uniform_index(3));
        const double lambda = stream.uniform(0.4, 1.5);
        Vector state = stream.normal_vector(sd);

        if (c % 3 != 2) {
            const int na = 2 + static_cast<int>(stream.uniform_index(3));
            const auto form = (c % 3 == 0) ? RelaxedForm::merged : RelaxedForm::prior;
            RelaxedPolicy policy = make_relaxed_policy(sd, na, stream, lambda, form, 16);
            const int action = sample_action(policy, state, stream);
            auto grads = log_prob_grads(policy, state, action);

            Vector flat = policy.net.flatten();
            for (int pick = 0; pick < 6; ++pick) {
                const auto k = static_cast<Eigen::Index>(stream.uniform_index(flat.size()));
                RelaxedPolicy up = policy, down = policy;
                Vector fu = flat, fd_ = flat;
                fu(k) += h;
                fd_(k) -= h;
                up.net.unflatten(fu);
                down.net.unflatten(fd_);
                const double fd = (log_prob_grads(up, state, action).logp -
                                   log_prob_grads(down, state, action).logp) /
                                  (2.0 * h);
                worst = std::max(worst, relative_error(grads.grad_params(k), fd));
            }
            for (Eigen::Index k = 0; k < state.size(); ++k) {
                Vector su = state, sd_ = state;
                su(k) += h;
                sd_(k) -= h;
                const double fd = (log_prob_grads(policy, su, action).logp -
                                   log_prob_grads(policy, sd_, action).logp) /
                                  (2.0 * h);
                worst = std::max(worst, relative_error(grads.grad_state(k), fd));
            }
        } else {
            const int ad = 1 + static_cast<int>(stream.uniform_index(2));
            GaussianPolicy policy = make_gaussian_policy(sd, ad, stream, lambda, 16);
            Vector action = sample_action(policy, state, stream);
            auto grads = log_prob_grads(policy, state, action);

            Vector flat = policy.mean_net.flatten();
            for (int pick = 0; pick < 6; ++pick) {
                const auto k = static_cast<Eigen::Index>(stream.uniform_index(flat.size()));
                GaussianPolicy up = policy, down = policy;
                Vector fu = flat, fd_ = flat;
                fu(k) += h;
                fd_(k) -= h;
                up.mean_net.unflatten(fu);
                down.mean_net.unflatten(fd_);
                const double fd = (log_prob_grads(up, state, action).logp -
                                   log_prob_grads(down, state, action).logp) /
                                  (2.0 * h);
                worst = std::max(worst, relative_error(grads.grad_params(k), fd));
            }
            for (Eigen::Index k = 0; k < state.size(); ++k) {
                Vector su = state, sd_ = state;
                su(k) += h;
                sd_(k) -= h;
                const double fd = (log_prob_grads(policy, su, action).logp -
                                   log_prob_grads(policy, sd_, action).logp) /
                                  (2.0 * h);
                worst = std::max(worst, relative_error(grads.grad_state(k), fd));
            }
        }
    }
    return worst;
}

double check_surrogate_module(int cases, double h, RngStream& rng) {
    double worst = 0.0;
    for (int c = 0; c < cases; ++c) {
        auto stream = rng.child("case", static_cast<std::uint64_t>(c));
        const int dim = 1 + static_cast<int>(stream.uniform_index(3));
        Vector q = stream.normal_vector(dim);
        Matrix r(dim, dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) r(i, j) = stream.uniform(-0.5, 0.5);
        Matrix quad = r + r.transpose();

        SurrogateRewardSpec spec;
        spec.scale = stream.uniform(0.5, 2.0);
        spec.sharpness = stream.uniform(1.0, 50.0);
        spec.event = [q, quad](const Vector& s) { return q.dot(s) + 0.5 * s.dot(quad * s); };
        spec.event_grad = [q, quad](const Vector& s) -> Vector { return q + quad * s; };

        Vector s = stream.normal_vector(dim);
        auto out = surrogate_reward(spec, s);
        for (Eigen::Index k = 0; k < dim; ++k) {
            Vector su = s, sd = s;
            su(k) += h;
            sd(k) -= h;
            const double fd =
                (surrogate_reward(spec, su).value - surrogate_reward(spec, sd).value) / (2.0 * h);
            worst = std::max(worst, relative_error(out.gradient(k), fd));
        }
    }
    return worst;
}

double check_pathwise_module(int cases, double h, RngStream& rng) {
    double worst = 0.0;
    for (int c = 0; c < cases; ++c) {
        auto stream = rng.child("case", static_cast<std::uint64_t>(c));
        const int n = 1 + static_cast<int>(stream.uniform_index(2));
        const int da = 1 + static_cast<int>(stream.uniform_index(2));
        Matrix drift(n, n), gain(n, da);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) drift(i, j) = stream.uniform(-0.6, 0.6);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < da; ++j) gain(i, j) = stream.uniform(-0.8, 0.8);

        ContinuousSystem sys;
        sys.state_dim = n;
        sys.action_dim = da;
        sys.horizon = 4;
        sys.f = [drift, gain](const Vector& x, const Vector& a) -> Vector {
            return drift * x + gain * a;
        };
        sys.dfdx = [drift](const Vector&, const Vector&) { return drift; };
        sys.dfda = [gain](const Vector&, const Vector&) { return gain; };
        sys.reward = [](const Vector& x, int, bool) { return -x.squaredNorm(); };
        sys.reward_grad = [](const Vector& x, int, bool) -> Vector { return -2.0 * x; };

        DeterministicContinuousPolicy policy;
        policy.net = make_mlp({n, 8, da}, stream);
        Vector x0 = stream.normal_vector(n);
        auto est = pathwise_gradient(policy, sys, x0);

        auto objective = [&](const MlpParams& net) {
            Vector x = x0;
            double j = 0.0;
            for (int t = 0; t < sys.horizon; ++t) {
                x = sys.f(x, mlp_forward(net, x));
                j += sys.reward(x, t + 1, t + 1 == sys.horizon);
            }
            return j;
        };
        Vector flat = policy.net.flatten();
        for (int pick = 0; pick < 6; ++pick) {
            const auto k = static_cast<Eigen::Index>(stream.uniform_index(flat.size()));
            MlpParams pu = policy.net, pd = policy.net;
            Vector fu = flat, fd_ = flat;
            fu(k) += h;
            fd_(k) -= h;
            pu.unflatten(fu);
            pd.unflatten(fd_);
            const double fd = (objective(pu) - objective(pd)) / (2.0 * h);
            worst = std::max(worst, relative_error(est.grad(k), fd));
        }
    }
    return worst;
}

} // namespace

double GradientCheckReport::worst() const {
    double w = 0.0;
    for (const auto& e : entries) w = std::max(w, e.worst_rel_error);
    return w;
}

bool GradientCheckReport::pass(double tol) const {
    if (entries.empty()) return false;
    for (const auto& e : entries)
        if (!(e.worst_rel_error <= tol)) return false;
    return true;
}

GradientCheckReport check_gradients(const std::string& selector, std::uint64_t seed,
                                    int cases_per_module, double step) {
    require(step > 0.0, "gradient check: finite-difference step must be positive");
    require(cases_per_module >= 1, "gradient check: need at least one case");
    const std::vector<std::string> known = {"mlp", "policy", "surrogate", "pathwise"};
    const bool all = selector == "all";
    if (!all)
        require(std::find(known.begin(), known.end(), selector) != known.end(),
                "gradient check: unknown selector '" + selector +
                    "' (expected mlp, policy, surrogate, pathwise, or all)");

    GradientCheckReport report;
    auto run = [&](const std::string& name, auto&& fn) {
        if (!all && selector != name) return;
        auto rng = rng_fork(seed, "gradient-check/" + name);
        report.entries.push_back({name, cases_per_module, fn(cases_per_module, step, rng)});
    };
    run("mlp", check_mlp_module);
    run("policy", check_policy_module);
    run("surrogate", check_surrogate_module);
    run("pathwise", check_pathwise_module);
    return report;
}

} // namespace rpglab
