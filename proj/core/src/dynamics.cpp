#include "rpglab/dynamics.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <json.hpp>

namespace rpglab {

namespace {

/// log N(z; mean, cov) through a Cholesky factor; cov must be PD.
double log_normal(const Vector& z, const Vector& mean, const Eigen::LLT<Matrix>& llt) {
    const int d = static_cast<int>(z.size());
    double logdet = 0.0;
    for (int i = 0; i < d; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    const Vector diff = z - mean;
    const double quad = llt.matrixL().solve(diff).squaredNorm();
    return -0.5 * (d * std::log(2.0 * std::numbers::pi) + logdet + quad);
}

/// Cholesky with escalating diagonal bumps; counts a repair if any bump was
/// needed beyond the baseline regularization.
Eigen::LLT<Matrix> robust_llt(Matrix cov, double reg, bool* repaired) {
    cov.diagonal().array() += reg;
    Eigen::LLT<Matrix> llt(cov);
    double bump = reg;
    while (llt.info() != Eigen::Success && bump < 1.0) {
        bump *= 10.0;
        Matrix c = cov;
        c.diagonal().array() += bump;
        llt.compute(c);
        if (repaired) *repaired = true;
    }
    require(llt.info() == Eigen::Success, "dynamics: covariance could not be factorized");
    return llt;
}

Matrix sample_covariance(const std::vector<Vector>& data, const Vector& mean) {
    const int d = static_cast<int>(mean.size());
    Matrix cov = Matrix::Zero(d, d);
    for (const auto& z : data) {
        const Vector diff = z - mean;
        cov.noalias() += diff * diff.transpose();
    }
    return cov / static_cast<double>(data.size());
}

struct MixtureEval {
    std::vector<Eigen::LLT<Matrix>> llt; // one factor per component
};

MixtureEval factorize(const GmmPrior& prior, double reg) {
    MixtureEval ev;
    for (const auto& comp : prior.comps) {
        bool repaired = false;
        ev.llt.push_back(robust_llt(comp.cov, reg, &repaired));
    }
    return ev;
}

/// Per-datum responsibilities and log-density under the mixture.
std::pair<Vector, double> responsibilities_one(const GmmPrior& prior, const MixtureEval& ev,
                                               const Vector& z) {
    const int K = static_cast<int>(prior.comps.size());
    Vector logs(K);
    for (int k = 0; k < K; ++k) {
        const auto& comp = prior.comps[k];
        logs(k) = std::log(std::max(comp.weight, 1e-300)) + log_normal(z, comp.mean, ev.llt[k]);
    }
    const double m = logs.maxCoeff();
    Vector r = (logs.array() - m).exp();
    const double sum = r.sum();
    r /= sum;
    return {r, m + std::log(sum)};
}

} // namespace

Vector encode_action(int action, int count) {
    require(count >= 1, "encode_action: action count must be positive");
    require(action >= 0 && action < count, "encode_action: action out of range");
    Vector v = Vector::Zero(count);
    v(action) = 1.0;
    return v;
}

Vector gmm_responsibilities(const GmmPrior& prior, const Vector& z) {
    require(!prior.empty(), "gmm_responsibilities: empty prior");
    require(z.size() == prior.dim(), "gmm_responsibilities: dimension mismatch");
    MixtureEval ev = factorize(prior, 0.0);
    return responsibilities_one(prior, ev, z).first;
}

double gmm_log_likelihood(const GmmPrior& prior, const std::vector<Vector>& data) {
    require(!prior.empty(), "gmm_log_likelihood: empty prior");
    MixtureEval ev = factorize(prior, 0.0);
    double total = 0.0;
    for (const auto& z : data) total += responsibilities_one(prior, ev, z).second;
    return total;
}

GmmPrior update_gmm_prior(const GmmPrior& prior, const std::vector<Vector>& data,
                          const GmmOptions& opts, RngStream& rng, GmmFitInfo* info) {
    require(!data.empty(), "update_gmm_prior: empty batch");
    require(opts.num_components >= 1, "update_gmm_prior: need at least one component");
    const int N = static_cast<int>(data.size());
    const int D = static_cast<int>(data.front().size());
    for (const auto& z : data)
        require(z.size() == D && all_finite(z), "update_gmm_prior: inconsistent tuple");
    const int K = opts.num_components;

    Vector data_mean = Vector::Zero(D);
    for (const auto& z : data) data_mean += z;
    data_mean /= N;
    Matrix data_cov = sample_covariance(data, data_mean);
    data_cov.diagonal().array() += opts.cov_reg;

    GmmPrior cur;
    if (static_cast<int>(prior.comps.size()) == K && prior.dim() == D) {
        cur = prior; // warm start from the previous iteration's prior
    } else {
        // k-means++ style seeding: spread the initial means, shrink the
        // initial covariance so the E-step separates quickly
        std::vector<int> seeds;
        seeds.push_back(static_cast<int>(rng.uniform_index(N)));
        Vector d2 = Vector::Constant(N, std::numeric_limits<double>::infinity());
        while (static_cast<int>(seeds.size()) < K) {
            for (int i = 0; i < N; ++i)
                d2(i) = std::min(d2(i), (data[i] - data[seeds.back()]).squaredNorm());
            const double total = d2.sum();
            int pick;
            if (total <= 0.0) {
                pick = static_cast<int>(rng.uniform_index(N));
            } else {
                double u = rng.uniform01() * total;
                pick = N - 1;
                double acc = 0.0;
                for (int i = 0; i < N; ++i) {
                    acc += d2(i);
                    if (u < acc) {
                        pick = i;
                        break;
                    }
                }
            }
            seeds.push_back(pick);
        }
        Matrix init_cov = data_cov / K;
        init_cov.diagonal().array() += opts.cov_reg;
        cur.comps.resize(K);
        for (int k = 0; k < K; ++k) {
            cur.comps[k].weight = 1.0 / K;
            cur.comps[k].mean = data[seeds[k]];
            cur.comps[k].cov = init_cov;
        }
    }

    if (info) *info = {};
    double prev_ll = -std::numeric_limits<double>::infinity();
    Matrix resp(N, K);

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        MixtureEval ev = factorize(cur, 0.0);
        double ll = 0.0;
        for (int i = 0; i < N; ++i) {
            auto [r, logp] = responsibilities_one(cur, ev, data[i]);
            resp.row(i) = r.transpose();
            ll += logp;
        }
        if (info) {
            info->loglik.push_back(ll);
            info->iterations = iter + 1;
        }
        if (iter > 0 && std::abs(ll - prev_ll) <= opts.rel_tol * std::abs(prev_ll)) break;
        prev_ll = ll;

        for (int k = 0; k < K; ++k) {
            const double nk = resp.col(k).sum();
            bool degenerate = nk < 1e-8 * N;
            if (!degenerate) {
                Vector mu = Vector::Zero(D);
                for (int i = 0; i < N; ++i) mu += resp(i, k) * data[i];
                mu /= nk;
                Matrix cov = Matrix::Zero(D, D);
                for (int i = 0; i < N; ++i) {
                    const Vector diff = data[i] - mu;
                    cov.noalias() += resp(i, k) * (diff * diff.transpose());
                }
                cov /= nk;
                cov.diagonal().array() += opts.cov_reg;
                if (Eigen::LLT<Matrix>(cov).info() == Eigen::Success) {
                    cur.comps[k].weight = nk / N;
                    cur.comps[k].mean = mu;
                    cur.comps[k].cov = cov;
                } else {
                    degenerate = true;
                }
            }
            if (degenerate) {
                // collapsed component: reseed from a random datum
                cur.comps[k].weight = 1.0 / N;
                cur.comps[k].mean = data[rng.uniform_index(N)];
                cur.comps[k].cov = data_cov;
                if (info) ++info->reinit_events;
            }
        }
        double wsum = 0.0;
        for (const auto& comp : cur.comps) wsum += comp.weight;
        for (auto& comp : cur.comps) comp.weight /= wsum;
    }
    return cur;
}

TvLinearModel fit_dynamics(const GmmPrior* prior,
                           const std::vector<std::vector<DynamicsTuple>>& per_t,
                           const DynamicsFitOptions& opts, DynamicsFitInfo* info) {
    require(!per_t.empty(), "fit_dynamics: no timesteps");
    const int n = static_cast<int>(per_t.front().front().x.size());
    const int da = static_cast<int>(per_t.front().front().a.size());
    const int U = n + da;
    const int D = U + n;
    const bool use_prior = prior && !prior->empty() && opts.prior_strength > 0.0;
    if (use_prior)
        require(prior->dim() == D, "fit_dynamics: prior dimension does not match tuples");
    if (info) *info = {};

    MixtureEval ev;
    if (use_prior) ev = factorize(*prior, 0.0);

    TvLinearModel model;
    for (const auto& tuples : per_t) {
        require(!tuples.empty(), "fit_dynamics: a timestep has no tuples");
        const int N = static_cast<int>(tuples.size());
        std::vector<Vector> zs;
        zs.reserve(N);
        for (const auto& tup : tuples) {
            require(static_cast<int>(tup.x.size()) == n && static_cast<int>(tup.a.size()) == da &&
                        static_cast<int>(tup.xn.size()) == n,
                    "fit_dynamics: inconsistent tuple shapes");
            Vector z(D);
            z << tup.x, tup.a, tup.xn;
            require(all_finite(z), "fit_dynamics: non-finite tuple");
            zs.push_back(std::move(z));
        }

        Vector mu_hat = Vector::Zero(D);
        for (const auto& z : zs) mu_hat += z;
        mu_hat /= N;
        Matrix sigma_hat = sample_covariance(zs, mu_hat);

        Vector mu = mu_hat;
        Matrix sigma = sigma_hat;
        if (use_prior) {
            // average responsibilities select the mixture's local mean and
            // scatter, blended as m0 pseudo-samples
            Vector rbar = Vector::Zero(prior->comps.size());
            for (const auto& z : zs) rbar += responsibilities_one(*prior, ev, z).first;
            rbar /= N;
            Vector mu0 = Vector::Zero(D);
            for (std::size_t k = 0; k < prior->comps.size(); ++k)
                mu0 += rbar(k) * prior->comps[k].mean;
            Matrix phi0 = Matrix::Zero(D, D);
            for (std::size_t k = 0; k < prior->comps.size(); ++k) {
                const Vector dk = prior->comps[k].mean - mu0;
                phi0 += rbar(k) * (prior->comps[k].cov + dk * dk.transpose());
            }
            const double m0 = opts.prior_strength;
            mu = (m0 * mu0 + N * mu_hat) / (N + m0);
            const Vector dm = mu_hat - mu0;
            sigma = (N * sigma_hat + m0 * phi0 +
                     (N * m0 / (N + m0)) * (dm * dm.transpose())) /
                    (N + m0);
        }

        Matrix suu = sigma.topLeftCorner(U, U);
        const Matrix suv = sigma.topRightCorner(U, n);
        const Matrix svv = sigma.bottomRightCorner(n, n);

        // Regularize only when the regressor covariance is singular, so that
        // full-rank data reproduces plain least squares exactly.
        Eigen::SelfAdjointEigenSolver<Matrix> es(suu);
        const double max_eig = es.eigenvalues().maxCoeff();
        if (es.eigenvalues().minCoeff() <= 1e-12 * std::max(1.0, max_eig)) {
            suu.diagonal().array() += opts.ridge;
            if (info) ++info->ridge_events;
        }
        Eigen::LDLT<Matrix> ldlt(suu);
        const Matrix gain = ldlt.solve(suv).transpose(); // n x U, [A B]

        Matrix f = svv - gain * suv;
        f = 0.5 * (f + f.transpose());
        f.diagonal().array() += opts.cov_reg;

        model.A.push_back(gain.leftCols(n));
        model.B.push_back(gain.rightCols(da));
        model.c.push_back(mu.tail(n) - gain * mu.head(U));
        model.F.push_back(f);
    }
    return model;
}

const Matrix& state_jacobian(const TvLinearModel& model, int t) {
    require(t >= 0 && t < model.horizon(), "state_jacobian: timestep out of range");
    return model.A[static_cast<std::size_t>(t)];
}

std::string dynamics_to_json(const TvLinearModel& model) {
    nlohmann::json j;
    j["horizon"] = model.horizon();
    j["timesteps"] = nlohmann::json::array();
    for (int t = 0; t < model.horizon(); ++t) {
        nlohmann::json step;
        step["t"] = t;
        auto mat = [](const Matrix& m) {
            nlohmann::json rows = nlohmann::json::array();
            for (Eigen::Index r = 0; r < m.rows(); ++r) {
                nlohmann::json row = nlohmann::json::array();
                for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
                rows.push_back(row);
            }
            return rows;
        };
        step["A"] = mat(model.A[t]);
        step["B"] = mat(model.B[t]);
        nlohmann::json cvec = nlohmann::json::array();
        for (Eigen::Index i = 0; i < model.c[t].size(); ++i) cvec.push_back(model.c[t](i));
        step["c"] = cvec;
        step["F"] = mat(model.F[t]);
        j["timesteps"].push_back(step);
    }
    return j.dump(2) + "\n";
}

} // namespace rpglab
