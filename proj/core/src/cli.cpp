#include "rpglab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rpglab/checkpoint.hpp"
#include "rpglab/config.hpp"
#include "rpglab/diagnostics.hpp"
#include "rpglab/dynamics.hpp"
#include "rpglab/estimators.hpp"
#include "rpglab/report.hpp"
#include "rpglab/surrogate.hpp"
#include "rpglab/trainer.hpp"

namespace rpglab {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct TrainArgs {
    std::string config_path;
    std::vector<std::string> sets;
    std::string env;
    std::string algo;
    std::string out;
    std::int64_t seed = -1;
    int seeds = 1;
};

std::string describe(const RunRecord& rec) {
    std::ostringstream out;
    if (rec.aborted) {
        out << "aborted (" << rec.abort_reason << ")";
    } else if (rec.solved) {
        out << "solved at " << rec.samples_until_solve << " samples ("
            << rec.episodes_until_solve << " episodes)";
    } else {
        out << "unsolved, final mean " << rec.final_eval.mean << " over "
            << rec.final_eval.episodes << " episodes";
    }
    return out.str();
}

int run_train(const TrainArgs& args) {
    ConfigMap map;
    if (!args.config_path.empty()) map = load_config_file(args.config_path);
    if (!args.env.empty()) apply_override(map, "env.id=" + args.env);
    if (!args.algo.empty()) apply_override(map, "trainer.algo=" + args.algo);
    for (const auto& assignment : args.sets) apply_override(map, assignment);
    TrainConfig base = config_from_map(map);
    if (args.seed >= 0) base.seed = static_cast<std::uint64_t>(args.seed);
    if (!args.out.empty()) base.output_dir = args.out;
    require(args.seeds >= 1, "--seeds must be at least 1");
    require(args.seeds == 1 || !base.output_dir.empty(),
            "--seeds > 1 needs an output directory (--out or trainer.output_dir)");

    bool any_aborted = false;
    for (int k = 0; k < args.seeds; ++k) {
        TrainConfig config = base;
        config.seed = base.seed + static_cast<std::uint64_t>(k);
        if (args.seeds > 1)
            config.output_dir =
                (std::filesystem::path(base.output_dir) / ("seed_" + std::to_string(k)))
                    .string();
        const TrainResult result = train(config);
        std::cout << config.env_id << "/" << config.algo << " seed " << config.seed << ": "
                  << describe(result.record) << "\n";
        if (!config.output_dir.empty()) std::cout << "  wrote " << config.output_dir << "\n";
        any_aborted = any_aborted || result.record.aborted;
    }
    return any_aborted ? kExitRuntime : kExitOk;
}

struct EvalArgs {
    std::string checkpoint;
    std::string out;
    int episodes = 20;
    std::uint64_t seed = 0;
    bool deterministic = false;
};

int run_eval(const EvalArgs& args) {
    const Checkpoint ckpt = load_checkpoint(args.checkpoint);
    const auto env = make_env(ckpt.env_id);
    RelaxedPolicy policy;
    policy.net = make_mlp(ckpt.layer_sizes);
    policy.net.unflatten(ckpt.params);
    policy.num_actions = env->spec().actions.count;
    policy.lambda = args.deterministic ? 0.0 : ckpt.lambda;
    auto rng = rng_fork(args.seed, "eval");
    const EvalStats stats = evaluate(*env, policy, args.episodes, rng);

    nlohmann::json j;
    j["env"] = ckpt.env_id;
    j["algo"] = ckpt.algo;
    j["lambda"] = policy.lambda;
    j["episodes"] = stats.episodes;
    j["mean"] = stats.mean;
    j["stddev"] = stats.stddev;
    j["se"] = stats.se;
    j["min"] = stats.min;
    j["max"] = stats.max;
    const std::string text = j.dump(2) + "\n";
    if (args.out.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(args.out, std::ios::binary);
        require(out.good(), "cannot write '" + args.out + "'");
        out << text;
    }
    return kExitOk;
}

struct VerifyArgs {
    std::string out;
    std::uint64_t seed = 0;
    int toys = 20;
    int rollouts = 300;
};

struct VerifyCheck {
    std::string name;
    bool pass = false;
    std::string detail;
};

std::string format_sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

VerifyCheck verify_gradients(std::uint64_t seed) {
    const GradientCheckReport report = check_gradients("all", seed, 100);
    VerifyCheck check;
    check.name = "gradients";
    check.pass = report.pass(1e-4);
    check.detail = "worst rel error " + format_sci(report.worst()) + " over 4 modules";
    return check;
}

VerifyCheck verify_unbiasedness(std::uint64_t seed, int toys) {
    auto rng = rng_fork(seed, "verify-unbiasedness");
    double worst = 0.0;
    for (int i = 0; i < toys; ++i) {
        auto toy_rng = rng.child("toy", static_cast<std::uint64_t>(i));
        const ToyMdp toy = make_random_toy(toy_rng);
        const ToyPolicy policy = make_random_toy_policy(toy, toy_rng);
        worst = std::max(worst, check_unbiasedness(toy, policy).rel_error);
    }
    VerifyCheck check;
    check.name = "unbiasedness";
    check.pass = worst <= 1e-6;
    check.detail = "max rel error " + format_sci(worst) + " over " + std::to_string(toys) +
                   " enumerable toys";
    return check;
}

VerifyCheck verify_bound(std::uint64_t seed, int rollouts) {
    VerifyCheck check;
    check.name = "deviation-bound";
    int cells = 0;
    bool all_within = true;
    double worst_margin = 0.0; // largest mean/bound ratio seen
    for (double rho : {0.3, 0.6})
        for (double rho_prime : {0.2, 0.5})
            for (double lambda : {0.01, 0.1, 0.3}) {
                BoundExperiment exp;
                exp.rho = rho;
                exp.rho_prime = rho_prime;
                exp.lambda = lambda;
                exp.rollouts = rollouts;
                auto rng = rng_fork(seed, "verify-bound/" + std::to_string(cells));
                const BoundReport report = check_bound(exp, rng);
                all_within = all_within && report.within;
                worst_margin = std::max(worst_margin, report.mean_deviation / report.bound);
                ++cells;
            }
    // exact-zero endpoint
    BoundExperiment zero;
    zero.lambda = 0.0;
    auto rng = rng_fork(seed, "verify-bound/zero");
    const BoundReport report = check_bound(zero, rng);
    const bool zero_ok = report.mean_deviation == 0.0 && report.max_deviation == 0.0;
    check.pass = all_within && zero_ok;
    check.detail = std::to_string(cells) + " grid cells within bound, worst mean at " +
                   format_sci(100.0 * worst_margin) + "% of it; lambda=0 deviation exactly 0";
    return check;
}

VerifyCheck verify_noise(std::uint64_t seed) {
    auto rng = rng_fork(seed, "verify-noise");
    Vector stddev(3);
    stddev << 0.2, 0.5, 1.0;
    const NoiseMagnitudeReport report = check_noise_magnitude(stddev, 4000, rng);
    VerifyCheck check;
    check.name = "noise-magnitude";
    check.pass = report.within;
    check.detail = "E||xi|| = " + format_sci(report.mean_norm) + " vs cap " +
                   format_sci(report.cap);
    return check;
}

VerifyCheck verify_surrogate() {
    // psi must sandwich between the indicators of K = [-1,1] and Omega = (-2,2)
    const auto psi = mollified_indicator_1d(-1.0, 1.0, -2.0, 2.0);
    bool ok = true;
    for (int i = 0; i <= 10000; ++i) {
        const double x = -3.0 + 6.0 * i / 10000.0;
        const double v = psi(x);
        if (std::abs(x) <= 1.0) ok = ok && v == 1.0;
        else if (std::abs(x) >= 2.0) ok = ok && v == 0.0;
        else ok = ok && v >= 0.0 && v <= 1.0;
    }
    // strictly between the indicators mid-ramp
    ok = ok && psi(1.5) > 0.0 && psi(1.5) < 1.0 && psi(-1.5) > 0.0 && psi(-1.5) < 1.0;
    // sigmoid surrogate stays inside (0, scale)
    SurrogateRewardSpec spec;
    spec.event = [](const Vector& s) { return s[0]; };
    spec.event_grad = [](const Vector& s) { return Vector::Ones(s.size()).eval(); };
    spec.scale = 2.0;
    spec.sharpness = 25.0;
    for (int i = 0; i <= 100; ++i) {
        Vector s(1);
        s << -1.0 + 0.02 * i;
        const double v = surrogate_reward(spec, s).value;
        ok = ok && v > 0.0 && v < spec.scale;
    }
    VerifyCheck check;
    check.name = "surrogate-envelope";
    check.pass = ok;
    check.detail = "mollifier sandwich on 10001 points, sigmoid bounds on 101 points";
    return check;
}

int run_verify(const VerifyArgs& args) {
    std::vector<VerifyCheck> checks;
    checks.push_back(verify_gradients(args.seed));
    checks.push_back(verify_unbiasedness(args.seed, args.toys));
    checks.push_back(verify_bound(args.seed, args.rollouts));
    checks.push_back(verify_noise(args.seed));
    checks.push_back(verify_surrogate());

    bool all_pass = true;
    std::size_t width = 0;
    for (const auto& c : checks) width = std::max(width, c.name.size());
    for (const auto& c : checks) {
        all_pass = all_pass && c.pass;
        std::cout << c.name << std::string(width + 2 - c.name.size(), ' ')
                  << (c.pass ? "pass" : "FAIL") << "  " << c.detail << "\n";
    }
    std::cout << (all_pass ? "all checks passed" : "some checks FAILED") << "\n";

    if (!args.out.empty()) {
        nlohmann::json j;
        j["seed"] = args.seed;
        j["pass"] = all_pass;
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& c : checks)
            arr.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
        j["checks"] = arr;
        std::filesystem::create_directories(args.out);
        const std::string path = (std::filesystem::path(args.out) / "verify.json").string();
        std::ofstream out(path, std::ios::binary);
        require(out.good(), "cannot write '" + path + "'");
        out << j.dump(2) + "\n";
    }
    return all_pass ? kExitOk : kExitRuntime;
}

struct DumpArgs {
    std::string env;
    std::string out;
    int batch = 10;
    std::uint64_t seed = 0;
};

int run_dump_dynamics(const DumpArgs& args) {
    require(args.batch >= 1, "--batch must be at least 1");
    const auto env = make_env(args.env);
    const EnvSpec& spec = env->spec();
    auto root = rng_fork(args.seed, "dump-dynamics");
    auto policy_rng = root.child("policy");
    const RelaxedPolicy policy =
        make_relaxed_policy(spec.state_dim, spec.actions.count, policy_rng);

    int max_len = 0;
    std::vector<Trajectory> trajs;
    for (int j = 0; j < args.batch; ++j) {
        auto traj_rng = root.child("traj", static_cast<std::uint64_t>(j));
        trajs.push_back(sample_trajectory(*env, policy, traj_rng));
        max_len = std::max(max_len, trajs.back().length());
    }
    std::vector<std::vector<DynamicsTuple>> per_t(max_len);
    for (const auto& traj : trajs)
        for (int t = 0; t < traj.length(); ++t) {
            DynamicsTuple tup;
            tup.x = traj.states[t];
            tup.a = encode_action(traj.actions[t], spec.actions.count);
            tup.xn = traj.states[t + 1];
            per_t[t].push_back(std::move(tup));
        }
    DynamicsFitOptions opts;
    opts.prior_strength = 0.0;
    const TvLinearModel model = fit_dynamics(nullptr, per_t, opts);
    const std::string text = dynamics_to_json(model);
    if (args.out.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(args.out, std::ios::binary);
        require(out.good(), "cannot write '" + args.out + "'");
        out << text;
    }
    return kExitOk;
}

struct PlotArgs {
    std::vector<std::string> series;
    std::string out;
};

int run_plot(const PlotArgs& args) {
    std::vector<PlotSeries> series;
    for (const auto& spec : args.series) {
        const auto eq = spec.find('=');
        require(eq != std::string::npos && eq > 0,
                "--series wants label=file[,file...], got '" + spec + "'");
        PlotSeries s;
        s.label = spec.substr(0, eq);
        std::string rest = spec.substr(eq + 1);
        std::stringstream ss(rest);
        std::string path;
        while (std::getline(ss, path, ','))
            if (!path.empty()) s.curves.push_back(read_metrics_curve(path));
        require(!s.curves.empty(), "series '" + s.label + "' lists no files");
        series.push_back(std::move(s));
    }
    const std::string svg = render_learning_curves_svg(series);
    std::ofstream out(args.out, std::ios::binary);
    require(out.good(), "cannot write '" + args.out + "'");
    out << svg;
    std::cout << "wrote " << args.out << "\n";
    return kExitOk;
}

struct CompareArgs {
    std::vector<std::string> dirs;
    std::string out;
};

int run_compare(const CompareArgs& args) {
    const CompareTable table = compare_runs(args.dirs);
    std::cout << compare_table_pretty(table);
    if (!args.out.empty()) {
        std::ofstream out(args.out, std::ios::binary);
        require(out.good(), "cannot write '" + args.out + "'");
        out << compare_table_csv(table);
    }
    return kExitOk;
}

} // namespace

int cli_main(const std::vector<std::string>& args) {
    CLI::App app{"relaxed policy gradient lab"};
    app.set_version_flag("--version", "rpglab 0.1.0");
    app.require_subcommand(1);

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "train a policy and write run artifacts");
    train_cmd->add_option("--config", train_args.config_path, "TOML config file");
    train_cmd->add_option("--set", train_args.sets,
                          "dotted.key=value override, applied after the file");
    train_cmd->add_option("--env", train_args.env, "environment id (shortcut for env.id)");
    train_cmd->add_option("--algo", train_args.algo,
                          "rpg | reinforce | a2c | cem | pathwise (shortcut for trainer.algo)");
    train_cmd->add_option("--seed", train_args.seed, "base seed override");
    train_cmd->add_option("--seeds", train_args.seeds,
                          "fan out N runs into seed_<k> subdirectories");
    train_cmd->add_option("--out", train_args.out, "output directory");

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpointed policy");
    eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "checkpoint JSON")->required();
    eval_cmd->add_option("--episodes", eval_args.episodes, "evaluation episodes");
    eval_cmd->add_option("--seed", eval_args.seed, "evaluation seed");
    eval_cmd->add_flag("--deterministic", eval_args.deterministic,
                       "evaluate the rounded policy (lambda = 0)");
    eval_cmd->add_option("--out", eval_args.out, "write the stats JSON here instead of stdout");

    VerifyArgs verify_args;
    auto* verify_cmd =
        app.add_subcommand("verify", "run the estimator and bound self-checks");
    verify_cmd->add_option("--seed", verify_args.seed, "seed for the randomized checks");
    verify_cmd->add_option("--toys", verify_args.toys, "enumerable toy systems to test");
    verify_cmd->add_option("--rollouts", verify_args.rollouts, "rollouts per bound cell");
    verify_cmd->add_option("--out", verify_args.out, "directory for verify.json");

    DumpArgs dump_args;
    auto* dump_cmd =
        app.add_subcommand("dump-dynamics", "fit and print a linear-Gaussian model");
    dump_cmd->add_option("--env", dump_args.env, "environment id")->required();
    dump_cmd->add_option("--batch", dump_args.batch, "episodes to fit on");
    dump_cmd->add_option("--seed", dump_args.seed, "rollout seed");
    dump_cmd->add_option("--out", dump_args.out, "write the JSON here instead of stdout");

    PlotArgs plot_args;
    auto* plot_cmd = app.add_subcommand("plot", "render learning curves as SVG");
    plot_cmd->add_option("--series", plot_args.series, "label=metrics.csv[,metrics.csv...]")
        ->required();
    plot_cmd->add_option("--out", plot_args.out, "output SVG path")->required();

    CompareArgs compare_args;
    auto* compare_cmd = app.add_subcommand("compare", "aggregate finished runs by algorithm");
    compare_cmd->add_option("dirs", compare_args.dirs, "run directories with summary.json")
        ->required();
    compare_cmd->add_option("--out", compare_args.out, "also write the table as CSV");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        std::cout << app.version() << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (train_cmd->parsed()) return run_train(train_args);
        if (eval_cmd->parsed()) return run_eval(eval_args);
        if (verify_cmd->parsed()) return run_verify(verify_args);
        if (dump_cmd->parsed()) return run_dump_dynamics(dump_args);
        if (plot_cmd->parsed()) return run_plot(plot_args);
        if (compare_cmd->parsed()) return run_compare(compare_args);
        std::cerr << "error: no subcommand\n";
        return kExitUsage;
    } catch (const ContractViolation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const RuntimeAbort& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

} // namespace rpglab
