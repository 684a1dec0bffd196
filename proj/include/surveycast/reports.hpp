#pragma once

#include "surveycast/metrics.hpp"
#include "surveycast/orchestrate.hpp"

#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace surveycast {

// Single-suite per-state table: state,mae,nmae,n plus an "entire" row.
// An undefined nmae is an empty cell.
void write_error_report_csv(std::ostream& out, const ErrorReport& report);

// Two-suite comparison in the local-vs-global layout:
// state,mae_local,mae_global,nmae_local,nmae_global plus an "entire" row.
// Rows cover states present in both reports.
void write_compare_csv(std::ostream& out, const ErrorReport& local,
                       const ErrorReport& global);

struct CompareWins {
    int wins = 0;  // states where the first suite's MAE is lower
    int total = 0; // states present in both suites
};
CompareWins count_lower_mae(const ErrorReport& local, const ErrorReport& global);

// Per-seed metric rows: seed,mae,nmae.
void write_per_seed_csv(std::ostream& out, const std::vector<SeedResult>& per_seed);

// Run-level mean and 95% CI rows: metric,mean,ci_low,ci_high,n_runs.
// With a single run the CI columns are empty.
void write_ci_csv(std::ostream& out, const std::vector<SeedResult>& per_seed,
                  double level = 0.95);

// Per-state top-n importance lists: state,rank,feature,score.
void write_importance_csv(std::ostream& out, const ImportanceTable& table,
                          std::size_t top_n);

// Frequency table: feature,top<k1>_count,top<k2>_count.
void write_frequency_csv(std::ostream& out, const FrequencyReport& report);

// Sweep curve: k,mae.
void write_sweep_csv(std::ostream& out,
                     const std::vector<std::pair<std::size_t, double>>& curve);

// Self-contained SVG line chart of the sweep curve (one polyline).
void write_sweep_svg(std::ostream& out,
                     const std::vector<std::pair<std::size_t, double>>& curve);

// Training loss curve: epoch,loss.
void write_loss_curve_csv(std::ostream& out, const std::vector<double>& epoch_loss);

} // namespace surveycast
