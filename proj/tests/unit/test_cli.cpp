#include <doctest.h>

#include "rpglab/cli.hpp"
#include "rpglab/report.hpp"
#include "rpglab/trainer.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

using namespace rpglab;

namespace {

int run_cli(const std::vector<std::string>& args, std::string* out = nullptr,
            std::string* err = nullptr) {
    std::ostringstream captured_out, captured_err;
    auto* old_out = std::cout.rdbuf(captured_out.rdbuf());
    auto* old_err = std::cerr.rdbuf(captured_err.rdbuf());
    int rc = -1;
    try {
        rc = cli_main(args);
    } catch (...) {
        std::cout.rdbuf(old_out);
        std::cerr.rdbuf(old_err);
        throw;
    }
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    if (out) *out = captured_out.str();
    if (err) *err = captured_err.str();
    return rc;
}

nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    return nlohmann::json::parse(in);
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

const std::vector<std::string> kTinyRun = {
    "--set", "trainer.episodes=4",   "--set", "trainer.batch=2",
    "--set", "policy.hidden=8",      "--set", "trainer.eval_episodes=2",
    "--set", "trainer.eval_every=100"};

std::vector<std::string> tiny_train(const std::string& algo, const std::string& out_dir) {
    std::vector<std::string> args = {"train", "--env", "handmass", "--algo", algo};
    args.insert(args.end(), kTinyRun.begin(), kTinyRun.end());
    args.push_back("--out");
    args.push_back(out_dir);
    return args;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("usage surface") {
    std::string out;
    CHECK(run_cli({"--version"}, &out) == 0);
    CHECK(out.find("0.1.0") != std::string::npos);
    CHECK(run_cli({"--help"}, &out) == 0);
    CHECK(out.find("train") != std::string::npos);
    CHECK(run_cli({}) == 2);               // a subcommand is required
    CHECK(run_cli({"frobnicate"}) == 2);   // unknown subcommand
    CHECK(run_cli({"train", "--bogus-flag"}) == 2);
    CHECK(run_cli({"eval"}) == 2); // missing required --checkpoint
}

TEST_CASE("train writes a run directory") {
    const std::filesystem::path dir = "cli_run";
    std::filesystem::remove_all(dir);
    std::string out;
    CHECK(run_cli(tiny_train("reinforce", dir.string()), &out) == 0);
    CHECK(out.find("seed 0") != std::string::npos);
    CHECK(std::filesystem::exists(dir / "metrics.csv"));
    CHECK(std::filesystem::exists(dir / "summary.json"));
    CHECK(std::filesystem::exists(dir / "checkpoint_final.json"));
    const auto summary = read_json(dir / "summary.json");
    CHECK(summary.at("config").at("env") == "handmass");
    CHECK(summary.at("config").at("algo") == "reinforce");
    CHECK(summary.at("total_episodes") == 4);
}

TEST_CASE("train fans out seed directories") {
    const std::filesystem::path dir = "cli_seeds";
    std::filesystem::remove_all(dir);
    std::vector<std::string> args = tiny_train("reinforce", dir.string());
    args.push_back("--seeds");
    args.push_back("2");
    std::string out;
    CHECK(run_cli(args, &out) == 0);
    CHECK(out.find("seed 0") != std::string::npos);
    CHECK(out.find("seed 1") != std::string::npos);
    CHECK(read_json(dir / "seed_0" / "summary.json").at("config").at("seed") == 0);
    CHECK(read_json(dir / "seed_1" / "summary.json").at("config").at("seed") == 1);
}

TEST_CASE("train usage errors exit 2") {
    std::string err;
    CHECK(run_cli({"train", "--config", "no_such_config.toml"}, nullptr, &err) == 2);
    CHECK(err.find("no_such_config.toml") != std::string::npos);
    CHECK(run_cli({"train", "--env", "handmass", "--set", "trainer.bogus=1"}, nullptr, &err) ==
          2);
    CHECK(err.find("trainer.bogus") != std::string::npos);
    CHECK(run_cli({"train", "--env", "cartpole", "--algo", "pathwise"}, nullptr, &err) == 2);
    CHECK(run_cli({"train", "--env", "handmass", "--seeds", "2"}, nullptr, &err) == 2);
    CHECK(err.find("output directory") != std::string::npos);
}

TEST_CASE("train with a zero budget still summarizes") {
    const std::filesystem::path dir = "cli_zero";
    std::filesystem::remove_all(dir);
    CHECK(run_cli({"train", "--env", "handmass", "--set", "trainer.episodes=0", "--set",
                   "trainer.eval_episodes=2", "--out", dir.string()}) == 0);
    const auto summary = read_json(dir / "summary.json");
    CHECK(summary.at("total_episodes") == 0);
    CHECK(summary.at("final_eval").at("episodes") == 2);
    CHECK(slurp(dir / "metrics.csv") ==
          "iter,episodes,samples,mean_return,se_return,surrogate_return,lambda,grad_norm,"
          "wall_ms\n");
    std::filesystem::remove_all(dir);
}

TEST_CASE("config file plus overrides") {
    const std::filesystem::path dir = "cli_cfg";
    std::filesystem::remove_all(dir);
    {
        std::ofstream cfg("cli_cfg.toml");
        cfg << "[env]\nid = \"handmass\"\n[trainer]\nalgo = \"reinforce\"\nepisodes = 4\n"
               "batch = 2\neval_episodes = 2\neval_every = 100\n[policy]\nhidden = 8\n";
    }
    CHECK(run_cli({"train", "--config", "cli_cfg.toml", "--set", "trainer.episodes=2", "--out",
                   dir.string()}) == 0);
    const auto summary = read_json(dir / "summary.json");
    CHECK(summary.at("config").at("episodes") == 2); // --set wins over the file
    CHECK(summary.at("config").at("env") == "handmass");
    std::filesystem::remove("cli_cfg.toml");
    std::filesystem::remove_all(dir);
}

TEST_CASE("eval reads a checkpoint") {
    const std::filesystem::path dir = "cli_run"; // reuse the directory from the train case
    REQUIRE(std::filesystem::exists(dir / "checkpoint_final.json"));
    std::string out;
    CHECK(run_cli({"eval", "--checkpoint", (dir / "checkpoint_final.json").string(),
                   "--episodes", "2", "--deterministic"},
                  &out) == 0);
    const auto stats = nlohmann::json::parse(out);
    CHECK(stats.at("env") == "handmass");
    CHECK(stats.at("lambda") == 0.0);
    CHECK(stats.at("episodes") == 2);
    CHECK(stats.at("mean").is_number());

    CHECK(run_cli({"eval", "--checkpoint", (dir / "checkpoint_final.json").string(), "--out",
                   "cli_eval.json", "--episodes", "2"}) == 0);
    CHECK(read_json("cli_eval.json").at("algo") == "reinforce");
    std::filesystem::remove("cli_eval.json");
    CHECK(run_cli({"eval", "--checkpoint", "missing_ckpt.json"}) == 2);
    std::filesystem::remove_all(dir);
}

TEST_CASE("dump-dynamics emits the fitted model") {
    std::string out;
    CHECK(run_cli({"dump-dynamics", "--env", "handmass", "--batch", "3", "--seed", "1"},
                  &out) == 0);
    const auto j = nlohmann::json::parse(out);
    REQUIRE(j.contains("timesteps"));
    CHECK(j.at("horizon") > 0);
    CHECK(j.at("timesteps").size() == j.at("horizon"));
    CHECK(j.at("timesteps").at(0).contains("A"));
    CHECK(j.at("timesteps").at(0).contains("B"));
    CHECK(j.at("timesteps").at(0).contains("c"));
    CHECK(j.at("timesteps").at(0).contains("F"));
    CHECK(run_cli({"dump-dynamics", "--env", "nonsense"}) == 2);
}

TEST_CASE("plot renders series files") {
    std::vector<IterationRow> rows(2);
    rows[0].iter = 1;
    rows[0].episodes = 2;
    rows[0].samples = 100;
    rows[0].mean_return = 1.0;
    rows[1].iter = 2;
    rows[1].episodes = 4;
    rows[1].samples = 200;
    rows[1].mean_return = 3.0;
    write_metrics_csv("cli_a.csv", rows);
    rows[1].mean_return = 5.0;
    write_metrics_csv("cli_b.csv", rows);
    CHECK(run_cli({"plot", "--series", "rpg=cli_a.csv,cli_b.csv", "--out", "cli_plot.svg"}) ==
          0);
    const std::string svg = slurp("cli_plot.svg");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find(">rpg</text>") != std::string::npos);

    CHECK(run_cli({"plot", "--series", "nofiles", "--out", "x.svg"}) == 2);
    CHECK(run_cli({"plot", "--series", "rpg=missing.csv", "--out", "x.svg"}) == 2);
    std::ofstream("cli_badschema.csv") << "iter,wrong\n";
    std::string err;
    CHECK(run_cli({"plot", "--series", "rpg=cli_badschema.csv", "--out", "x.svg"}, nullptr,
                  &err) == 2);
    CHECK(err.find("cli_badschema.csv") != std::string::npos);
    for (const char* f : {"cli_a.csv", "cli_b.csv", "cli_plot.svg", "cli_badschema.csv"})
        std::filesystem::remove(f);
}

TEST_CASE("compare groups finished runs") {
    const std::filesystem::path base = "cli_cmp";
    std::filesystem::remove_all(base);
    const auto write_summary = [&](const std::string& sub, const std::string& env,
                                   const std::string& algo) {
        TrainConfig config = default_config(env, algo);
        RunRecord record;
        record.final_eval.mean = 1.0;
        std::filesystem::create_directories(base / sub);
        std::ofstream(base / sub / "summary.json") << run_summary_json(config, record);
    };
    write_summary("a", "cartpole", "rpg");
    write_summary("b", "cartpole", "reinforce");
    std::string out;
    CHECK(run_cli({"compare", (base / "a").string(), (base / "b").string(), "--out",
                   (base / "table.csv").string()},
                  &out) == 0);
    CHECK(out.find("environment: cartpole") != std::string::npos);
    CHECK(slurp(base / "table.csv").find("rpg,1,0") != std::string::npos);

    write_summary("c", "acrobot", "rpg");
    std::string err;
    CHECK(run_cli({"compare", (base / "a").string(), (base / "c").string()}, nullptr, &err) ==
          2);
    CHECK(err.find("acrobot") != std::string::npos);
    std::filesystem::remove_all(base);
}

TEST_CASE("verify runs the self-checks") {
    const std::filesystem::path dir = "cli_verify";
    std::filesystem::remove_all(dir);
    std::string out;
    CHECK(run_cli({"verify", "--toys", "3", "--rollouts", "60", "--out", dir.string()}, &out) ==
          0);
    CHECK(out.find("gradients") != std::string::npos);
    CHECK(out.find("all checks passed") != std::string::npos);
    const auto j = read_json(dir / "verify.json");
    CHECK(j.at("pass") == true);
    CHECK(j.at("checks").size() == 5);
    std::filesystem::remove_all(dir);
}

} // TEST_SUITE
