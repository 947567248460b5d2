#include "rpglab/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <string_view>

#include <json.hpp>

#include "rpglab/adam.hpp"
#include "rpglab/checkpoint.hpp"
#include "rpglab/dynamics.hpp"
#include "rpglab/estimators.hpp"

namespace rpglab {

namespace {

constexpr const char* kCodeVersion = "0.1.0";

std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

struct BatchStats {
    double mean_return = 0.0;
    double se_return = 0.0;
    double mean_surrogate = 0.0;
    long steps = 0;
};

BatchStats batch_stats(const std::vector<Trajectory>& trajs) {
    BatchStats stats;
    const auto m = static_cast<double>(trajs.size());
    for (const auto& traj : trajs) {
        stats.mean_return += traj.total_reward();
        stats.mean_surrogate += traj.total_surrogate();
        stats.steps += static_cast<long>(traj.length());
    }
    stats.mean_return /= m;
    stats.mean_surrogate /= m;
    if (trajs.size() > 1) {
        double ss = 0.0;
        for (const auto& traj : trajs) {
            const double d = traj.total_reward() - stats.mean_return;
            ss += d * d;
        }
        stats.se_return = std::sqrt(ss / (m * (m - 1.0)));
    }
    return stats;
}

void validate_config(const TrainConfig& config) {
    const auto& ids = estimator_ids();
    require(std::find(ids.begin(), ids.end(), config.algo) != ids.end(),
            "unknown estimator '" + config.algo +
                "' (expected rpg, reinforce, a2c, cem, or pathwise)");
    require(config.episodes >= 0, "episode budget must be nonnegative");
    require(config.batch >= 1, "need at least one trajectory per iteration");
    require(config.learning_rate > 0.0, "learning rate must be positive");
    require(config.anneal > 0.0 && config.anneal <= 1.0, "anneal factor must be in (0, 1]");
    require(config.lambda_floor > 0.0, "lambda floor must be positive");
    if (config.algo != "cem")
        require(config.lambda0 >= config.lambda_floor,
                "initial lambda must be at least the floor");
    require(config.eval_every >= 1 && config.eval_episodes >= 1,
            "evaluation cadence and episode count must be positive");
    require(config.solve_window >= 1, "solve window must be positive");
    require(config.grad_clip > 0.0, "gradient clip must be positive");
    require(config.hidden >= 1, "hidden width must be positive");
    require(config.gmm_components >= 1 && config.gmm_window >= 1,
            "mixture size and pooling window must be positive");
    require(config.prior_strength >= 0.0, "prior strength must be nonnegative");
    require(config.cem_population >= 2, "population must hold at least two candidates");
    require(config.cem_elites >= 1 && config.cem_elites <= config.cem_population,
            "elite count must be between 1 and the population size");
    require(config.checkpoint_every >= 0, "checkpoint cadence must be nonnegative");
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    if (is_bitrepro()) return 0.0;
    const auto now = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(now - start).count();
}

// Threshold used for solve detection; config wins over the env default.
std::optional<double> effective_threshold(const TrainConfig& config, const EnvSpec& spec) {
    if (config.solve_threshold) return config.solve_threshold;
    return spec.solve_threshold;
}

void run_evaluation(const TrainConfig& config, Env& env, const RelaxedPolicy& policy,
                    RngStream& root, long episodes, long samples,
                    std::optional<double> threshold, RunRecord& rec) {
    auto eval_rng = root.child("eval", static_cast<std::uint64_t>(rec.evaluations.size()));
    EvalStats stats = evaluate(env, policy, config.eval_episodes, eval_rng);
    rec.evaluations.push_back({episodes, samples, stats.mean, stats.se});
    if (threshold && !rec.solved) {
        auto hit = solve_check(rec.evaluations, *threshold, config.solve_window);
        if (hit) {
            rec.solved = true;
            rec.samples_until_solve = *hit;
            rec.episodes_until_solve = episodes;
        }
    }
}

void maybe_checkpoint(const TrainConfig& config, const RelaxedPolicy& policy, int iter) {
    if (config.output_dir.empty() || config.checkpoint_every <= 0) return;
    if (iter % config.checkpoint_every != 0) return;
    char name[48];
    std::snprintf(name, sizeof(name), "checkpoint_%06d.json", iter);
    Checkpoint ckpt;
    ckpt.env_id = config.env_id;
    ckpt.algo = config.algo;
    ckpt.seed = config.seed;
    ckpt.iteration = iter;
    ckpt.lambda = policy.lambda;
    ckpt.layer_sizes = policy.net.layer_sizes();
    ckpt.params = policy.net.flatten();
    save_checkpoint((std::filesystem::path(config.output_dir) / name).string(), ckpt);
}

TrainResult train_gradient(const TrainConfig& config, Env& env, RngStream& root) {
    const EnvSpec& spec = env.spec();
    auto init_rng = root.child("init");
    RelaxedPolicy policy = make_relaxed_policy(spec.state_dim, spec.actions.count, init_rng,
                                               config.lambda0, config.form, config.hidden);
    AdamState adam = AdamState::init(policy.net.flat_size(), config.learning_rate);

    const bool is_rpg = config.algo == "rpg";
    const bool use_baseline = config.algo == "a2c";
    ValueBaseline baseline;
    if (use_baseline) baseline = ValueBaseline::init(policy.net);

    GmmPrior prior;
    std::deque<std::vector<Vector>> tuple_window;
    GmmOptions gmm_opts;
    gmm_opts.num_components = config.gmm_components;
    DynamicsFitOptions fit_opts;
    fit_opts.prior_strength = config.prior_strength;

    const auto threshold = effective_threshold(config, spec);
    RunRecord rec;
    long episodes = 0, samples = 0;
    int since_eval = 0, consecutive_skips = 0, iter = 0;

    while (episodes < config.episodes) {
        ++iter;
        const auto start = std::chrono::steady_clock::now();
        auto iter_rng = root.child("iter", static_cast<std::uint64_t>(iter));

        std::vector<Trajectory> trajs;
        trajs.reserve(config.batch);
        for (int j = 0; j < config.batch; ++j) {
            auto traj_rng = iter_rng.child("traj", static_cast<std::uint64_t>(j));
            trajs.push_back(sample_trajectory(env, policy, traj_rng));
        }
        const BatchStats stats = batch_stats(trajs);
        episodes += config.batch;
        samples += stats.steps;

        GradEstimate est;
        if (is_rpg) {
            int max_len = 0;
            for (const auto& traj : trajs) max_len = std::max(max_len, traj.length());
            std::vector<Vector> zs;
            std::vector<std::vector<DynamicsTuple>> per_t(max_len);
            for (const auto& traj : trajs) {
                for (int t = 0; t < traj.length(); ++t) {
                    DynamicsTuple tup;
                    tup.x = traj.states[t];
                    tup.a = encode_action(traj.actions[t], spec.actions.count);
                    tup.xn = traj.states[t + 1];
                    Vector z(tup.x.size() + tup.a.size() + tup.xn.size());
                    z << tup.x, tup.a, tup.xn;
                    zs.push_back(z);
                    per_t[t].push_back(std::move(tup));
                }
            }
            tuple_window.push_back(std::move(zs));
            if (static_cast<int>(tuple_window.size()) > config.gmm_window)
                tuple_window.pop_front();
            std::vector<Vector> pooled;
            for (const auto& batch : tuple_window)
                pooled.insert(pooled.end(), batch.begin(), batch.end());
            auto gmm_rng = iter_rng.child("gmm");
            prior = update_gmm_prior(prior, pooled, gmm_opts, gmm_rng);
            const TvLinearModel model = fit_dynamics(&prior, per_t, fit_opts);
            est = rpg_gradient(trajs, model);
        } else if (use_baseline) {
            baseline.sync_trunk(policy.net);
            baseline.refit(trajs);
            est = reinforce_gradient(trajs, &baseline);
        } else {
            est = reinforce_gradient(trajs);
        }

        IterationRow row;
        row.iter = iter;
        row.episodes = episodes;
        row.samples = samples;
        row.mean_return = stats.mean_return;
        row.se_return = stats.se_return;
        row.surrogate_return = stats.mean_surrogate;
        row.lambda = policy.lambda;
        row.grad_norm = est.grad_norm;

        if (all_finite(est.grad)) {
            consecutive_skips = 0;
            const Vector ascent = clip_gradient(est.grad, config.grad_clip);
            const Vector descent = -ascent;
            adam_step(adam, policy.net, descent);
            policy.lambda = std::max(config.anneal * policy.lambda, config.lambda_floor);
        } else {
            ++rec.skipped_iterations;
            ++consecutive_skips;
        }

        row.wall_ms = elapsed_ms(start);
        rec.rows.push_back(row);
        maybe_checkpoint(config, policy, iter);

        if (consecutive_skips >= 3) {
            rec.aborted = true;
            rec.abort_reason = "three consecutive non-finite gradient estimates (lambda=" +
                               format_number(policy.lambda) +
                               ", learning_rate=" + format_number(config.learning_rate) + ")";
            break;
        }

        since_eval += config.batch;
        if (since_eval >= config.eval_every) {
            since_eval = 0;
            run_evaluation(config, env, policy, root, episodes, samples, threshold, rec);
            if (rec.solved && config.stop_on_solve) break;
        }
    }

    rec.total_episodes = episodes;
    rec.total_samples = samples;
    RelaxedPolicy rounded = policy;
    rounded.lambda = 0.0;
    auto final_rng = root.child("final-eval");
    rec.final_eval = evaluate(env, rounded, config.eval_episodes, final_rng);
    return {std::move(rec), std::move(policy)};
}

TrainResult train_population(const TrainConfig& config, Env& env, RngStream& root) {
    const EnvSpec& spec = env.spec();
    auto init_rng = root.child("init");
    RelaxedPolicy policy = make_relaxed_policy(spec.state_dim, spec.actions.count, init_rng,
                                               config.lambda0, config.form, config.hidden);
    policy.lambda = 0.0; // candidates act deterministically

    CemDistribution dist;
    dist.mean = policy.net.flatten();
    dist.stddev = Vector::Constant(dist.mean.size(), 0.5);
    CemOptions opts;
    opts.population = config.cem_population;
    opts.elites = config.cem_elites;

    const auto threshold = effective_threshold(config, spec);
    RunRecord rec;
    long episodes = 0, samples = 0;
    int since_eval = 0, iter = 0;

    while (episodes < config.episodes) {
        ++iter;
        const auto start = std::chrono::steady_clock::now();
        auto iter_rng = root.child("iter", static_cast<std::uint64_t>(iter));

        std::vector<double> returns, surrogates;
        long batch_steps = 0;
        int candidate = 0;
        auto objective = [&](const Vector& flat) {
            auto ep_rng = iter_rng.child("candidate", static_cast<std::uint64_t>(candidate++));
            RelaxedPolicy cand = policy;
            cand.net.unflatten(flat);
            env.reset(ep_rng);
            double ret = 0.0, sur = 0.0;
            while (!env.done()) {
                const int a = sample_action(cand, env.state(), ep_rng);
                const Transition tr = env.step(a);
                ret += tr.reward;
                sur += tr.surrogate;
            }
            batch_steps += env.time();
            returns.push_back(ret);
            surrogates.push_back(sur);
            return ret;
        };
        auto cem_rng = iter_rng.child("cem");
        dist = cem_iteration(dist, objective, opts, cem_rng);

        episodes += opts.population;
        samples += batch_steps;

        IterationRow row;
        row.iter = iter;
        row.episodes = episodes;
        row.samples = samples;
        const auto m = static_cast<double>(returns.size());
        for (double r : returns) row.mean_return += r;
        for (double s : surrogates) row.surrogate_return += s;
        row.mean_return /= m;
        row.surrogate_return /= m;
        double ss = 0.0;
        for (double r : returns) ss += (r - row.mean_return) * (r - row.mean_return);
        row.se_return = std::sqrt(ss / (m * (m - 1.0)));
        row.lambda = 0.0;
        row.grad_norm = 0.0;
        row.wall_ms = elapsed_ms(start);
        rec.rows.push_back(row);

        policy.net.unflatten(dist.mean);
        maybe_checkpoint(config, policy, iter);

        since_eval += opts.population;
        if (since_eval >= config.eval_every) {
            since_eval = 0;
            run_evaluation(config, env, policy, root, episodes, samples, threshold, rec);
            if (rec.solved && config.stop_on_solve) break;
        }
    }

    rec.total_episodes = episodes;
    rec.total_samples = samples;
    policy.net.unflatten(dist.mean);
    auto final_rng = root.child("final-eval");
    rec.final_eval = evaluate(env, policy, config.eval_episodes, final_rng);
    return {std::move(rec), std::move(policy)};
}

void write_outputs(const TrainConfig& config, const TrainResult& result) {
    if (config.output_dir.empty()) return;
    namespace fs = std::filesystem;
    fs::create_directories(config.output_dir);
    const fs::path dir(config.output_dir);
    write_metrics_csv((dir / "metrics.csv").string(), result.record.rows);

    std::ofstream summary(dir / "summary.json", std::ios::binary);
    require(summary.good(), "cannot open summary.json for writing in '" + config.output_dir + "'");
    summary << run_summary_json(config, result.record);
    require(summary.good(), "write to summary.json failed");

    Checkpoint ckpt;
    ckpt.env_id = config.env_id;
    ckpt.algo = config.algo;
    ckpt.seed = config.seed;
    ckpt.iteration = result.record.rows.empty() ? 0 : result.record.rows.back().iter;
    ckpt.lambda = result.policy.lambda;
    ckpt.layer_sizes = result.policy.net.layer_sizes();
    ckpt.params = result.policy.net.flatten();
    save_checkpoint((dir / "checkpoint_final.json").string(), ckpt);
}

} // namespace

TrainConfig default_config(const std::string& env_id, const std::string& algo) {
    TrainConfig config;
    config.env_id = env_id;
    config.algo = algo;
    if (env_id == "cartpole") {
        config.batch = 5;
        config.episodes = 500;
    } else if (env_id == "acrobot") {
        config.batch = 5;
        config.episodes = 1500;
    } else if (env_id == "mountaincar") {
        config.batch = 10;
        config.episodes = 1000;
    } else if (env_id == "handmass") {
        config.batch = 2;
        config.episodes = 150;
    } else {
        throw ContractViolation("unknown environment id '" + env_id + "'");
    }
    return config;
}

EvalStats evaluate(Env& env, const RelaxedPolicy& policy, int episodes, RngStream& rng) {
    require(episodes >= 1, "evaluation needs at least one episode");
    EvalStats stats;
    stats.episodes = episodes;
    std::vector<double> returns;
    returns.reserve(episodes);
    for (int e = 0; e < episodes; ++e) {
        env.reset(rng);
        double total = 0.0;
        while (!env.done()) {
            const int a = sample_action(policy, env.state(), rng);
            total += env.step(a).reward;
        }
        returns.push_back(total);
    }
    stats.min = returns[0];
    stats.max = returns[0];
    for (double r : returns) {
        stats.mean += r;
        stats.min = std::min(stats.min, r);
        stats.max = std::max(stats.max, r);
    }
    stats.mean /= episodes;
    if (episodes > 1) {
        double ss = 0.0;
        for (double r : returns) ss += (r - stats.mean) * (r - stats.mean);
        stats.stddev = std::sqrt(ss / (episodes - 1.0));
        stats.se = stats.stddev / std::sqrt(static_cast<double>(episodes));
    }
    return stats;
}

std::optional<long> solve_check(const std::vector<EvalPoint>& evals, double threshold,
                                int window) {
    require(window >= 1, "solve window must be positive");
    for (std::size_t i = 0; i < evals.size(); ++i) {
        const std::size_t w = std::min<std::size_t>(window, i + 1);
        double mean = 0.0;
        for (std::size_t j = i + 1 - w; j <= i; ++j) mean += evals[j].mean;
        mean /= static_cast<double>(w);
        if (mean >= threshold) return evals[i].samples;
    }
    return std::nullopt;
}

Vector clip_gradient(const Vector& grad, double max_norm) {
    require(max_norm > 0.0, "gradient clip must be positive");
    const double norm = grad.norm();
    if (!(norm > max_norm)) return grad;
    return grad * (max_norm / norm);
}

bool is_bitrepro() {
    const char* v = std::getenv("RPG_LAB_BITREPRO");
    return v != nullptr && std::string_view(v) == "1";
}

TrainResult train(const TrainConfig& config) {
    validate_config(config);
    EnvOptions env_opts;
    env_opts.surrogate_sharpness = config.surrogate_sharpness;
    env_opts.surrogate_scale = config.surrogate_scale;
    auto env = make_env(config.env_id, env_opts);
    if (config.algo == "pathwise" && env->spec().actions.discrete)
        throw ContractViolation("estimator 'pathwise' needs a continuous action space; environment '" +
                                config.env_id + "' provides discrete actions");

    auto root = rng_fork(config.seed, "train/" + config.env_id + "/" + config.algo);
    TrainResult result = config.algo == "cem" ? train_population(config, *env, root)
                                              : train_gradient(config, *env, root);
    write_outputs(config, result);
    return result;
}

std::string metrics_csv_text(const std::vector<IterationRow>& rows) {
    std::string out = "iter,episodes,samples,mean_return,se_return,surrogate_return,lambda,"
                      "grad_norm,wall_ms\n";
    for (const auto& r : rows) {
        out += std::to_string(r.iter);
        out += ',';
        out += std::to_string(r.episodes);
        out += ',';
        out += std::to_string(r.samples);
        out += ',';
        out += format_number(r.mean_return);
        out += ',';
        out += format_number(r.se_return);
        out += ',';
        out += format_number(r.surrogate_return);
        out += ',';
        out += format_number(r.lambda);
        out += ',';
        out += format_number(r.grad_norm);
        out += ',';
        out += format_number(r.wall_ms);
        out += '\n';
    }
    return out;
}

void write_metrics_csv(const std::string& path, const std::vector<IterationRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot open '" + path + "' for writing");
    out << metrics_csv_text(rows);
    require(out.good(), "write to '" + path + "' failed");
}

std::string run_summary_json(const TrainConfig& config, const RunRecord& record) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["code_version"] = kCodeVersion;

    nlohmann::json c;
    c["env"] = config.env_id;
    c["algo"] = config.algo;
    c["episodes"] = config.episodes;
    c["batch"] = config.batch;
    c["learning_rate"] = config.learning_rate;
    c["lambda0"] = config.lambda0;
    c["anneal"] = config.anneal;
    c["lambda_floor"] = config.lambda_floor;
    c["seed"] = config.seed;
    c["eval_every"] = config.eval_every;
    c["eval_episodes"] = config.eval_episodes;
    if (config.solve_threshold)
        c["solve_threshold"] = *config.solve_threshold;
    else
        c["solve_threshold"] = nullptr;
    c["solve_window"] = config.solve_window;
    c["stop_on_solve"] = config.stop_on_solve;
    c["grad_clip"] = config.grad_clip;
    c["surrogate_sharpness"] = config.surrogate_sharpness;
    c["surrogate_scale"] = config.surrogate_scale;
    c["hidden"] = config.hidden;
    c["form"] = config.form == RelaxedForm::merged ? "merged" : "prior";
    c["gmm_components"] = config.gmm_components;
    c["gmm_window"] = config.gmm_window;
    c["prior_strength"] = config.prior_strength;
    c["cem_population"] = config.cem_population;
    c["cem_elites"] = config.cem_elites;
    c["checkpoint_every"] = config.checkpoint_every;
    c["output_dir"] = config.output_dir;
    j["config"] = c;

    j["solved"] = record.solved;
    if (record.solved) {
        j["samples_until_solve"] = record.samples_until_solve;
        j["episodes_until_solve"] = record.episodes_until_solve;
    } else {
        j["samples_until_solve"] = nullptr;
        j["episodes_until_solve"] = nullptr;
    }
    j["final_eval"] = {{"mean", record.final_eval.mean},
                       {"stddev", record.final_eval.stddev},
                       {"se", record.final_eval.se},
                       {"min", record.final_eval.min},
                       {"max", record.final_eval.max},
                       {"episodes", record.final_eval.episodes}};
    j["total_episodes"] = record.total_episodes;
    j["total_samples"] = record.total_samples;
    j["skipped_iterations"] = record.skipped_iterations;
    j["aborted"] = record.aborted;
    j["abort_reason"] = record.abort_reason;
    nlohmann::json evals = nlohmann::json::array();
    for (const auto& e : record.evaluations)
        evals.push_back({{"episodes", e.episodes},
                         {"samples", e.samples},
                         {"mean", e.mean},
                         {"se", e.se}});
    j["evaluations"] = evals;
    return j.dump(2) + "\n";
}

} // namespace rpglab
