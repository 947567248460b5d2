#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "rpglab/checkpoint.hpp"
#include "rpglab/trainer.hpp"

using namespace rpglab;

namespace {

std::vector<EvalPoint> eval_points(const std::vector<double>& means) {
    std::vector<EvalPoint> evals;
    for (std::size_t i = 0; i < means.size(); ++i)
        evals.push_back({static_cast<long>(10 * (i + 1)), static_cast<long>(100 * (i + 1)),
                         means[i], 1.0});
    return evals;
}

} // namespace

TEST_SUITE_BEGIN("trainer");

TEST_CASE("solve check finds the first windowed crossing") {
    auto evals = eval_points({10, 20, 490, 500, 500, 500, 500});
    // trailing-5 means: ..., at index 5: 402, at index 6: 498 >= 495
    auto hit = solve_check(evals, 495.0, 5);
    REQUIRE(hit.has_value());
    CHECK(*hit == 700);

    // always above: solved at the very first evaluation
    auto quick = solve_check(eval_points({500, 500}), 495.0, 5);
    REQUIRE(quick.has_value());
    CHECK(*quick == 100);

    CHECK(!solve_check(eval_points({10, 20, 30}), 495.0, 5).has_value());
    CHECK(!solve_check({}, 0.0, 5).has_value());

    // window 1 reacts to a single point
    auto point = solve_check(eval_points({10, 496, 10}), 495.0, 1);
    REQUIRE(point.has_value());
    CHECK(*point == 200);
    CHECK_THROWS_AS(solve_check(evals, 0.0, 0), ContractViolation);
}

TEST_CASE("gradient clipping only rescales above the threshold") {
    Vector small(3);
    small << 1.0, -2.0, 2.0; // norm 3
    Vector same = clip_gradient(small, 10.0);
    CHECK(same == small);

    Vector big = small * 100.0;
    Vector clipped = clip_gradient(big, 10.0);
    CHECK(clipped.norm() == doctest::Approx(10.0));
    CHECK(clipped(0) / clipped(1) == doctest::Approx(-0.5));

    Vector zero = Vector::Zero(4);
    CHECK(clip_gradient(zero, 1.0) == zero);
    CHECK_THROWS_AS(clip_gradient(small, 0.0), ContractViolation);
}

TEST_CASE("evaluate reports exact statistics on a fixed-length env") {
    auto env = make_env("mountaincar");
    auto rng = rng_fork(3, "eval");
    auto policy = make_relaxed_policy(2, 3, rng, 1.0);
    auto stats = evaluate(*env, policy, 20, rng);
    CHECK(stats.episodes == 20);
    CHECK(stats.mean == doctest::Approx(-200.0)); // random policy never escapes
    CHECK(stats.stddev == 0.0);
    CHECK(stats.se == 0.0);
    CHECK(stats.min == -200.0);
    CHECK(stats.max == -200.0);
    CHECK_THROWS_AS(evaluate(*env, policy, 0, rng), ContractViolation);
}

TEST_CASE("default configs carry the per-task budgets") {
    auto cp = default_config("cartpole", "rpg");
    CHECK(cp.batch == 5);
    CHECK(cp.episodes == 500);
    auto ac = default_config("acrobot", "reinforce");
    CHECK(ac.episodes == 1500);
    auto mc = default_config("mountaincar", "rpg");
    CHECK(mc.batch == 10);
    CHECK(mc.episodes == 1000);
    auto hm = default_config("handmass", "cem");
    CHECK(hm.batch == 2);
    CHECK(hm.episodes == 150);
    CHECK(hm.learning_rate == 1e-2);
    CHECK(hm.lambda0 == 1.0);
    CHECK(hm.anneal == 1.0);
    CHECK_THROWS_AS(default_config("pendulum", "rpg"), ContractViolation);
}

TEST_CASE("config validation rejects malformed settings") {
    TrainConfig config = default_config("handmass", "rpg");
    config.algo = "sarsa";
    CHECK_THROWS_AS(train(config), ContractViolation);
    config = default_config("handmass", "rpg");
    config.batch = 0;
    CHECK_THROWS_AS(train(config), ContractViolation);
    config = default_config("handmass", "rpg");
    config.anneal = 0.0;
    CHECK_THROWS_AS(train(config), ContractViolation);
    config = default_config("handmass", "rpg");
    config.lambda0 = 1e-6; // below the floor
    CHECK_THROWS_AS(train(config), ContractViolation);
    config = default_config("cartpole", "pathwise");
    CHECK_THROWS_AS(train(config), ContractViolation);
}

TEST_CASE("rpg loop accounting on the fixed-horizon task") {
    TrainConfig config = default_config("handmass", "rpg");
    config.episodes = 6;
    config.batch = 2;
    config.anneal = 0.5;
    config.seed = 11;
    auto result = train(config);
    const auto& rec = result.record;
    REQUIRE(rec.rows.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(rec.rows[i].iter == i + 1);
        CHECK(rec.rows[i].episodes == 2 * (i + 1));
        CHECK(rec.rows[i].samples == 100 * (i + 1)); // horizon 50, no early exit
        CHECK(std::isfinite(rec.rows[i].grad_norm));
        CHECK(rec.rows[i].grad_norm > 0.0);
        CHECK(std::isfinite(rec.rows[i].mean_return));
    }
    CHECK(rec.rows[0].lambda == 1.0);
    CHECK(rec.rows[1].lambda == 0.5);
    CHECK(rec.rows[2].lambda == 0.25);
    CHECK(result.policy.lambda == 0.125);
    CHECK(rec.total_episodes == 6);
    CHECK(rec.total_samples == 300);
    CHECK(rec.evaluations.empty()); // cadence 10 never reached
    CHECK(rec.final_eval.episodes == config.eval_episodes);
    CHECK(!rec.solved);
    CHECK(rec.skipped_iterations == 0);
}

TEST_CASE("zero-episode budget evaluates the initial policy only") {
    TrainConfig config = default_config("handmass", "reinforce");
    config.episodes = 0;
    auto result = train(config);
    CHECK(result.record.rows.empty());
    CHECK(result.record.evaluations.empty());
    CHECK(result.record.total_episodes == 0);
    CHECK(result.record.final_eval.episodes == config.eval_episodes);
    CHECK(!result.record.solved);
}

TEST_CASE("baseline and population loops run and account episodes") {
    TrainConfig config = default_config("handmass", "a2c");
    config.episodes = 4;
    config.batch = 2;
    config.seed = 5;
    auto a2c = train(config);
    REQUIRE(a2c.record.rows.size() == 2);
    CHECK(std::isfinite(a2c.record.rows[1].grad_norm));

    config = default_config("handmass", "cem");
    config.episodes = 40;
    config.eval_every = 20;
    config.seed = 5;
    auto cem = train(config);
    REQUIRE(cem.record.rows.size() == 2);
    CHECK(cem.record.rows[0].episodes == 20);
    CHECK(cem.record.rows[1].episodes == 40);
    CHECK(cem.record.rows[0].samples == 1000); // 20 candidates x 50 steps
    CHECK(cem.record.rows[1].samples == 2000);
    CHECK(cem.record.rows[0].lambda == 0.0);
    CHECK(cem.record.rows[0].grad_norm == 0.0);
    CHECK(cem.record.evaluations.size() == 2);
}

TEST_CASE("bit-repro mode makes repeated runs byte identical") {
    setenv("RPG_LAB_BITREPRO", "1", 1);
    TrainConfig config = default_config("handmass", "rpg");
    config.episodes = 4;
    config.batch = 2;
    config.seed = 21;
    auto a = train(config);
    auto b = train(config);
    CHECK(metrics_csv_text(a.record.rows) == metrics_csv_text(b.record.rows));
    CHECK(run_summary_json(config, a.record) == run_summary_json(config, b.record));
    for (const auto& row : a.record.rows) CHECK(row.wall_ms == 0.0);
    CHECK(a.policy.net.flatten() == b.policy.net.flatten());
    unsetenv("RPG_LAB_BITREPRO");
}

TEST_CASE("metrics csv formatting is stable") {
    IterationRow row;
    row.iter = 1;
    row.episodes = 5;
    row.samples = 250;
    row.mean_return = 12.5;
    row.se_return = 0.5;
    row.surrogate_return = 3.25;
    row.lambda = 1.0;
    row.grad_norm = 2.5;
    row.wall_ms = 0.0;
    const std::string text = metrics_csv_text({row});
    CHECK(text ==
          "iter,episodes,samples,mean_return,se_return,surrogate_return,lambda,grad_norm,"
          "wall_ms\n1,5,250,12.5,0.5,3.25,1,2.5,0\n");
}

TEST_CASE("output directory receives metrics, summary, and checkpoint") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "rpglab_trainer_out";
    fs::remove_all(dir);

    TrainConfig config = default_config("handmass", "rpg");
    config.episodes = 4;
    config.batch = 2;
    config.seed = 31;
    config.output_dir = dir.string();
    auto result = train(config);

    CHECK(fs::exists(dir / "metrics.csv"));
    CHECK(fs::exists(dir / "summary.json"));
    CHECK(fs::exists(dir / "checkpoint_final.json"));

    std::ifstream in(dir / "summary.json");
    nlohmann::json summary = nlohmann::json::parse(in);
    CHECK(summary["schema_version"] == 1);
    CHECK(summary["config"]["env"] == "handmass");
    CHECK(summary["config"]["algo"] == "rpg");
    CHECK(summary["config"]["seed"] == 31);
    CHECK(summary["solved"] == false);
    CHECK(summary["samples_until_solve"].is_null());
    CHECK(summary["total_episodes"] == 4);

    auto ckpt = load_checkpoint((dir / "checkpoint_final.json").string());
    CHECK(ckpt.env_id == "handmass");
    CHECK(ckpt.params == result.policy.net.flatten());
    CHECK(ckpt.layer_sizes == result.policy.net.layer_sizes());
    fs::remove_all(dir);
}

TEST_SUITE_END();
