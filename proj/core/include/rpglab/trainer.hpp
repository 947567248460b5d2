#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rpglab/envs.hpp"
#include "rpglab/policy.hpp"
#include "rpglab/types.hpp"

namespace rpglab {

struct TrainConfig {
    std::string env_id = "cartpole";
    std::string algo = "rpg"; // rpg | reinforce | a2c | cem | pathwise
    int episodes = 500;       // training budget N_ep
    int batch = 5;            // trajectories per iteration m
    double learning_rate = 1e-2;
    double lambda0 = 1.0;
    double anneal = 1.0;        // lambda <- anneal * lambda after each iteration
    double lambda_floor = 1e-3; // annealing never crosses this
    std::uint64_t seed = 0;
    int eval_every = 10;   // training episodes between evaluations
    int eval_episodes = 20;
    std::optional<double> solve_threshold; // unset: environment default
    int solve_window = 5;                  // evaluations averaged for solve detection
    bool stop_on_solve = true;
    double grad_clip = 10.0;
    double surrogate_sharpness = 10.0;
    double surrogate_scale = 1.0;
    int hidden = 64;
    RelaxedForm form = RelaxedForm::merged;
    int gmm_components = 8;
    int gmm_window = 2; // iterations of transition tuples pooled for the prior
    double prior_strength = 1.0;
    int cem_population = 20;
    int cem_elites = 1;
    std::string output_dir;   // empty: no files written
    int checkpoint_every = 0; // extra periodic checkpoints; 0 = final only
};

/// Per-environment batch sizes and budgets; everything else is shared.
TrainConfig default_config(const std::string& env_id, const std::string& algo);

struct IterationRow {
    int iter = 0;
    long episodes = 0; // cumulative training episodes
    long samples = 0;  // cumulative environment steps
    double mean_return = 0.0;
    double se_return = 0.0;
    double surrogate_return = 0.0;
    double lambda = 0.0;
    double grad_norm = 0.0;
    double wall_ms = 0.0;
};

struct EvalPoint {
    long episodes = 0;
    long samples = 0;
    double mean = 0.0;
    double se = 0.0;
};

struct EvalStats {
    double mean = 0.0;
    double stddev = 0.0;
    double se = 0.0;
    double min = 0.0;
    double max = 0.0;
    int episodes = 0;
};

struct RunRecord {
    std::vector<IterationRow> rows;
    std::vector<EvalPoint> evaluations;
    bool solved = false;
    long samples_until_solve = -1; // defined iff solved
    long episodes_until_solve = -1;
    EvalStats final_eval; // rounded policy
    int skipped_iterations = 0;
    bool aborted = false;
    std::string abort_reason;
    long total_episodes = 0;
    long total_samples = 0;
};

struct TrainResult {
    RunRecord record;
    RelaxedPolicy policy;
};

/// True-reward return statistics over fresh episodes.
EvalStats evaluate(Env& env, const RelaxedPolicy& policy, int episodes, RngStream& rng);

/// First cumulative sample count at which the mean of the trailing
/// min(window, seen) evaluation means reaches the threshold.
std::optional<long> solve_check(const std::vector<EvalPoint>& evals, double threshold,
                                int window);

/// Rescale to the clip norm when above it; below it the input is untouched.
Vector clip_gradient(const Vector& grad, double max_norm);

/// RPG_LAB_BITREPRO=1: zero wall-clock columns so repeated runs are
/// byte-identical.
bool is_bitrepro();

TrainResult train(const TrainConfig& config);

void write_metrics_csv(const std::string& path, const std::vector<IterationRow>& rows);
std::string metrics_csv_text(const std::vector<IterationRow>& rows);
std::string run_summary_json(const TrainConfig& config, const RunRecord& record);

} // namespace rpglab
