#include "rpglab/estimators.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rpglab {

namespace {

// Mean and per-coordinate sample variance over per-episode gradient terms.
GradEstimate reduce_estimates(const std::vector<Vector>& per_traj) {
    const int m = static_cast<int>(per_traj.size());
    const auto dim = per_traj.front().size();
    GradEstimate est;
    est.m = m;
    est.grad = Vector::Zero(dim);
    for (const auto& g : per_traj) est.grad += g;
    est.grad /= m;
    est.variance = Vector::Zero(dim);
    if (m > 1) {
        for (const auto& g : per_traj) est.variance += (g - est.grad).cwiseAbs2();
        est.variance /= m - 1;
    }
    est.grad_norm = est.grad.norm();
    require(all_finite(est.grad), "estimator produced a non-finite gradient");
    return est;
}

void fill_returns(const std::vector<Trajectory>& trajectories, GradEstimate* est) {
    for (const auto& traj : trajectories) {
        est->mean_return += traj.total_reward();
        est->mean_surrogate += traj.total_surrogate();
    }
    est->mean_return /= static_cast<double>(trajectories.size());
    est->mean_surrogate /= static_cast<double>(trajectories.size());
}

} // namespace

double Trajectory::total_reward() const {
    return std::accumulate(rewards.begin(), rewards.end(), 0.0);
}

double Trajectory::total_surrogate() const {
    return std::accumulate(surrogates.begin(), surrogates.end(), 0.0);
}

void validate_trajectory(const Trajectory& traj) {
    const std::size_t L = traj.actions.size();
    require(traj.states.size() == L + 1, "trajectory: |states| must be |actions| + 1");
    require(traj.rewards.size() == L && traj.surrogates.size() == L &&
                traj.surrogate_grads.size() == L,
            "trajectory: reward caches misaligned");
    require(traj.logp_param_grads.size() == L && traj.logp_state_grads.size() == L,
            "trajectory: log-prob caches misaligned");
    for (std::size_t t = 0; t < L; ++t) {
        require(traj.surrogate_grads[t].size() == traj.states[t].size(),
                "trajectory: surrogate gradient dimension mismatch");
        require(traj.logp_state_grads[t].size() == traj.states[t].size(),
                "trajectory: state gradient dimension mismatch");
    }
}

Trajectory sample_trajectory(Env& env, const RelaxedPolicy& policy, RngStream& rng) {
    Trajectory traj;
    traj.states.push_back(env.reset(rng));
    while (!env.done()) {
        const Vector& x = traj.states.back();
        int a = sample_action(policy, x, rng);
        auto lg = log_prob_grads(policy, x, a);
        Transition tr = env.step(a);
        traj.actions.push_back(a);
        traj.rewards.push_back(tr.reward);
        traj.surrogates.push_back(tr.surrogate);
        traj.surrogate_grads.push_back(tr.surrogate_grad);
        traj.logp_param_grads.push_back(std::move(lg.grad_params));
        traj.logp_state_grads.push_back(std::move(lg.grad_state));
        traj.states.push_back(tr.next_state);
        if (tr.done) traj.truncated = !tr.reached_terminal;
    }
    validate_trajectory(traj);
    return traj;
}

GradEstimate rpg_gradient(const std::vector<Trajectory>& trajectories,
                          const TvLinearModel& model) {
    require(!trajectories.empty(), "rpg_gradient: no trajectories");
    Eigen::Index param_dim = 1; // placeholder if every episode is empty
    for (const auto& traj : trajectories)
        if (traj.length() > 0) param_dim = traj.logp_param_grads.front().size();
    std::vector<Vector> per_traj;
    per_traj.reserve(trajectories.size());

    for (const auto& traj : trajectories) {
        validate_trajectory(traj);
        const int L = traj.length();
        require(model.horizon() >= L, "rpg_gradient: model shorter than trajectory");
        if (L == 0) {
            per_traj.push_back(Vector::Zero(param_dim));
            continue;
        }
        const auto n = traj.states.front().size();
        const auto P = param_dim;
        Matrix carry = Matrix::Zero(n, P); // d x_t / d phi, zero at t = 0
        Vector g = Vector::Zero(P);
        for (int t = 0; t < L; ++t) {
            const Matrix& At = state_jacobian(model, t);
            require(At.rows() == n && At.cols() == n,
                    "rpg_gradient: model state dimension mismatch");
            const Vector fhat = traj.states[t + 1] - traj.states[t];
            const Eigen::RowVectorXd state_term =
                traj.logp_state_grads[t].transpose() * carry; // 1 x P
            carry = At * carry + fhat * traj.logp_param_grads[t].transpose() +
                    fhat * state_term;
            g.noalias() += carry.transpose() * traj.surrogate_grads[t];
        }
        per_traj.push_back(std::move(g));
    }

    GradEstimate est = reduce_estimates(per_traj);
    fill_returns(trajectories, &est);
    return est;
}

ValueBaseline ValueBaseline::init(const MlpParams& policy_net) {
    ValueBaseline vb;
    vb.trunk = policy_net;
    const int features = policy_net.layer_sizes()[policy_net.num_layers() - 1];
    vb.head = Vector::Zero(features + 1);
    return vb;
}

void ValueBaseline::sync_trunk(const MlpParams& policy_net) { trunk = policy_net; }

namespace {

Vector baseline_features(const MlpParams& trunk, const Vector& state) {
    MlpTape tape;
    mlp_forward(trunk, state, &tape);
    require(!tape.hidden.empty(), "value baseline: trunk has no hidden layer");
    Vector f(tape.hidden.back().size() + 1);
    f << tape.hidden.back(), 1.0;
    return f;
}

} // namespace

double ValueBaseline::predict(const Vector& state) const {
    return head.dot(baseline_features(trunk, state));
}

void ValueBaseline::refit(const std::vector<Trajectory>& trajectories, double ridge) {
    const auto dim = head.size();
    Matrix gram = ridge * Matrix::Identity(dim, dim);
    Vector rhs = Vector::Zero(dim);
    int count = 0;
    for (const auto& traj : trajectories) {
        double togo = 0.0;
        std::vector<double> rtg(traj.length());
        for (int t = traj.length() - 1; t >= 0; --t) {
            togo += traj.rewards[t];
            rtg[t] = togo;
        }
        for (int t = 0; t < traj.length(); ++t) {
            Vector f = baseline_features(trunk, traj.states[t]);
            gram.noalias() += f * f.transpose();
            rhs.noalias() += rtg[t] * f;
            ++count;
        }
    }
    if (count == 0) return;
    head = gram.ldlt().solve(rhs);
}

GradEstimate reinforce_gradient(const std::vector<Trajectory>& trajectories,
                                const ValueBaseline* baseline) {
    require(!trajectories.empty(), "reinforce_gradient: no trajectories");
    Eigen::Index param_dim = 1;
    for (const auto& traj : trajectories)
        if (traj.length() > 0) param_dim = traj.logp_param_grads.front().size();
    std::vector<Vector> per_traj;
    per_traj.reserve(trajectories.size());
    for (const auto& traj : trajectories) {
        validate_trajectory(traj);
        const int L = traj.length();
        if (L == 0) {
            per_traj.push_back(Vector::Zero(param_dim));
            continue;
        }
        Vector g = Vector::Zero(param_dim);
        double togo = 0.0;
        std::vector<double> rtg(L);
        for (int t = L - 1; t >= 0; --t) {
            togo += traj.rewards[t];
            rtg[t] = togo;
        }
        for (int t = 0; t < L; ++t) {
            double w = rtg[t];
            if (baseline) w -= baseline->predict(traj.states[t]);
            g.noalias() += w * traj.logp_param_grads[t];
        }
        per_traj.push_back(std::move(g));
    }
    GradEstimate est = reduce_estimates(per_traj);
    fill_returns(trajectories, &est);
    return est;
}

GradEstimate pathwise_gradient(const DeterministicContinuousPolicy& policy,
                               const ContinuousSystem& system, const Vector& x0) {
    require(system.f && system.dfdx && system.dfda && system.reward_grad,
            "pathwise_gradient: system callbacks not set");
    require(x0.size() == system.state_dim, "pathwise_gradient: x0 dimension mismatch");

    const int P = policy.net.flat_size();
    const int n = system.state_dim;
    const int da = system.action_dim;

    Matrix carry = Matrix::Zero(n, P); // d x_t / d theta
    Vector g = Vector::Zero(P);
    Vector x = x0;
    double ret = 0.0;
    for (int t = 0; t < system.horizon; ++t) {
        MlpTape tape;
        Vector u = mlp_forward(policy.net, x, &tape);
        require(u.size() == da, "pathwise_gradient: policy action dimension mismatch");

        // rows of d pi / d theta and d pi / d x via one backward per output
        Matrix dpi_dtheta(da, P);
        Matrix dpi_dx(da, n);
        for (int k = 0; k < da; ++k) {
            Vector cot = Vector::Zero(da);
            cot(k) = 1.0;
            auto back = mlp_backward(policy.net, tape, cot);
            dpi_dtheta.row(k) = back.param_grad.transpose();
            dpi_dx.row(k) = back.input_grad.transpose();
        }

        const Matrix fx = system.dfdx(x, u);
        const Matrix fa = system.dfda(x, u);
        require(fx.rows() == n && fx.cols() == n && fa.rows() == n && fa.cols() == da,
                "pathwise_gradient: Jacobian shape mismatch");
        carry = (fx + fa * dpi_dx) * carry + fa * dpi_dtheta;

        x = system.f(x, u);
        require(all_finite(x), "pathwise_gradient: non-finite rollout state");
        const bool is_final = t + 1 == system.horizon;
        if (system.reward) ret += system.reward(x, t + 1, is_final);
        g.noalias() += carry.transpose() * system.reward_grad(x, t + 1, is_final);
    }

    GradEstimate est;
    est.m = 1;
    est.grad = std::move(g);
    est.variance = Vector::Zero(P);
    est.mean_return = ret;
    est.mean_surrogate = ret;
    est.grad_norm = est.grad.norm();
    require(all_finite(est.grad), "pathwise_gradient: non-finite gradient");
    return est;
}

GradEstimate pathwise_gradient(const DeterministicContinuousPolicy&, const Env& env) {
    throw ContractViolation("pathwise_gradient: env '" + env.spec().id +
                            "' has a discrete action space; the pathwise derivative "
                            "needs continuous actions");
}

CemDistribution cem_iteration(const CemDistribution& dist,
                              const std::function<double(const Vector&)>& objective,
                              const CemOptions& opts, RngStream& rng, CemStats* stats) {
    require(static_cast<bool>(objective), "cem_iteration: objective not set");
    require(opts.population >= 2, "cem_iteration: population must be at least 2");
    require(opts.elites >= 1 && opts.elites <= opts.population,
            "cem_iteration: elite count out of range");
    require(dist.mean.size() == dist.stddev.size(), "cem_iteration: distribution shape");
    require(dist.stddev.minCoeff() > 0.0, "cem_iteration: stddev must be positive");

    const auto dim = dist.mean.size();
    std::vector<Vector> samples(opts.population);
    std::vector<double> returns(opts.population);
    for (int i = 0; i < opts.population; ++i) {
        samples[i] = dist.mean + dist.stddev.cwiseProduct(rng.normal_vector(static_cast<int>(dim)));
        returns[i] = objective(samples[i]);
        require(std::isfinite(returns[i]), "cem_iteration: non-finite return");
    }

    if (stats) {
        stats->best_return = *std::max_element(returns.begin(), returns.end());
        stats->mean_return =
            std::accumulate(returns.begin(), returns.end(), 0.0) / opts.population;
        stats->widened = false;
    }

    const bool all_equal =
        *std::max_element(returns.begin(), returns.end()) ==
        *std::min_element(returns.begin(), returns.end());
    if (all_equal) {
        // nothing to select on: keep the mean, search wider
        CemDistribution out = dist;
        out.stddev *= opts.widen_factor;
        if (stats) stats->widened = true;
        return out;
    }

    std::vector<int> order(opts.population);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return returns[a] > returns[b]; });

    CemDistribution out;
    out.mean = Vector::Zero(dim);
    for (int e = 0; e < opts.elites; ++e) out.mean += samples[order[e]];
    out.mean /= opts.elites;
    Vector var = Vector::Zero(dim);
    for (int e = 0; e < opts.elites; ++e)
        var += (samples[order[e]] - out.mean).cwiseAbs2();
    var /= opts.elites;
    out.stddev = var.cwiseSqrt().cwiseMax(opts.stddev_floor);
    return out;
}

const std::vector<std::string>& estimator_ids() {
    static const std::vector<std::string> ids = {"rpg", "reinforce", "a2c", "cem", "pathwise"};
    return ids;
}

} // namespace rpglab
