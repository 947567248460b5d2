#pragma once

#include <string>
#include <vector>

#include "rpglab/trainer.hpp"

namespace rpglab {

/// metrics.csv parsed back; the header must match the trainer's schema exactly.
struct MetricsCurve {
    std::string path;
    std::vector<IterationRow> rows;
};

MetricsCurve read_metrics_curve(const std::string& path);

/// One chart series: seed curves sharing an algorithm label.
struct PlotSeries {
    std::string label;
    std::vector<MetricsCurve> curves;
};

/// Learning-curve chart, 800x500: x = cumulative environment samples,
/// y = mean true return. Each series draws its across-seed mean line plus a
/// min-max band. Output is deterministic byte for byte.
std::string render_learning_curves_svg(const std::vector<PlotSeries>& series);

struct CompareRow {
    std::string algo;
    int seeds = 0;
    int solved = 0;
    double median_samples = 0.0; // over solved seeds; NaN when none solved
    double mean_samples = 0.0;   // over solved seeds; NaN when none solved
    double mean_final = 0.0;     // final evaluation mean, averaged over seeds
    double se_final = 0.0;       // NaN for a single seed
};

struct CompareTable {
    std::string env;
    std::vector<CompareRow> rows; // one per algorithm, first-seen order
};

/// Aggregate summary.json files from finished run directories. All runs must
/// share one environment.
CompareTable compare_runs(const std::vector<std::string>& run_dirs);

std::string compare_table_csv(const CompareTable& table);
std::string compare_table_pretty(const CompareTable& table);

} // namespace rpglab
