#pragma once

#include "surveycast/dataset.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace surveycast {

struct PredRow {
    std::string state;
    Date date;
    double predicted = 0.0;
    double actual = 0.0;
};

// Aligned (state, date, predicted, actual) rows over a test split; the sole
// input to the error metrics.
struct PredictionSet {
    std::vector<PredRow> rows;
};

// Mean absolute error (1/n) * sum |p_i - t_i|. Throws DataError on empty input.
double mae(const PredictionSet& preds);

// Normalized MAE as a percent: 100 * sum |p_i - t_i| / sum t_i. Throws
// DataError on empty input or a zero target sum.
double nmae(const PredictionSet& preds);

struct StateErrors {
    double mae = 0.0;
    std::optional<double> nmae; // absent when the state's targets sum to zero
    std::size_t n = 0;
};

struct ErrorReport {
    double overall_mae = 0.0;
    std::optional<double> overall_nmae;
    std::map<std::string, StateErrors> per_state; // key order = state ascending
    std::size_t n = 0;
};

// Per-state and overall metrics. States whose test targets sum to zero get a
// flagged (absent) nmae; their rows still count toward the overall MAE.
ErrorReport per_state_report(const PredictionSet& preds);

// Model-agnostic importance: mean increase in MAE over seeded repeats when
// one feature column is permuted. Sorted descending, name-ascending ties.
using Predictor = std::function<std::vector<double>(const Matrix&)>;
std::vector<std::pair<std::string, double>> permutation_importance(
    const Predictor& predict_fn, const PanelDataset& ds, int n_repeats,
    std::uint64_t seed);

enum class ImportanceMethod { Gain, Permutation };

struct ImportanceTable {
    // per state, (feature, score) sorted descending by score then name.
    std::map<std::string, std::vector<std::pair<std::string, double>>> per_state;
    ImportanceMethod method = ImportanceMethod::Gain;
};

struct FrequencyReport {
    // feature -> (count of states with it in the top k_small, ... top k_large)
    std::map<std::string, std::pair<int, int>> counts;
    int k_small = 5;
    int k_large = 15;
};

// How often each feature lands in a state's top-k_small / top-k_large list.
FrequencyReport top_k_frequency(const ImportanceTable& tables, int k_small = 5,
                                int k_large = 15);

// Sorts an importance map into the canonical (score desc, name asc) order.
std::vector<std::pair<std::string, double>> sorted_importance(
    const std::map<std::string, double>& scores);

} // namespace surveycast
