#pragma once

#include "surveycast/dataset.hpp"
#include "surveycast/featsel.hpp"
#include "surveycast/metrics.hpp"
#include "surveycast/neural.hpp"
#include "surveycast/tabmodels.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace surveycast {

enum class ModelFamily { Lr, Dt, Gbdt, Xgb, Mlp, Cnn7, Resnet1d };
enum class Granularity { Global, Local };

std::string family_name(ModelFamily f);
ModelFamily family_from_name(const std::string& name); // throws ConfigError

struct NeuralHyperparams {
    TrainOptions options;
    std::vector<int> mlp_hidden{64, 32};
    std::vector<int> cnn_channels{16, 16, 32, 32, 64, 64, 64};
    std::vector<int> resnet_channels{32, 64, 128};
};

struct RunConfig {
    ModelFamily family = ModelFamily::Gbdt;
    Granularity granularity = Granularity::Global;
    std::size_t feature_k = 0; // 0 means all features
    double train_fraction = 0.8;
    std::vector<std::uint64_t> seeds{0};
    TreeHyperparams tree;
    NeuralHyperparams neural;
    std::size_t min_state_train_rows = 10;
    bool clamp_nonneg = false; // clamp predictions at 0 before metrics

    void validate() const; // throws ConfigError
};

// Tagged union over the model families; every alternative predicts and
// reports which importance method it supports.
struct AnyModel {
    std::variant<LinearModel, RegressionTree, BoostedEnsemble, TrainedNetwork> model;

    std::vector<double> predict(const Matrix& X) const;
    const std::vector<std::string>& feature_names() const;
    bool supports_gain() const;
    std::map<std::string, double> gain() const; // throws DataError if unsupported
};

struct FitResult {
    AnyModel model;
    std::vector<double> loss_curve; // per-epoch training loss, neural families only
};

FitResult fit_family(ModelFamily family, const PanelDataset& train, const RunConfig& cfg,
                     std::uint64_t seed);

struct SeedResult {
    std::uint64_t seed = 0;
    PredictionSet predictions;
    double mae = 0.0;
    std::optional<double> nmae;
};

struct SuiteResult {
    RunConfig config;
    Date boundary;
    // "global" for the pooled model, otherwise the state code.
    std::map<std::string, FeatureRanking> rankings;
    std::vector<SeedResult> per_seed;
    std::map<std::string, std::map<std::uint64_t, AnyModel>> models; // scope -> seed
    // scope -> seed -> per-epoch training loss (neural families)
    std::map<std::string, std::map<std::uint64_t, std::vector<double>>> loss_curves;
    std::vector<std::string> skipped_states; // too few training rows (local runs)
};

// Pooled protocol: split by date, rank features on the training split,
// project to the top k, train one model over all states, evaluate on the
// full test split. One entry per seed.
SuiteResult run_global(const PanelDataset& ds, const RunConfig& cfg);

// Per-state protocol with the same date boundary for every state: rank on
// the state's training rows, train and predict per state, and pool all
// states' test predictions into one set per seed. States with fewer than
// cfg.min_state_train_rows training rows are skipped with a warning entry.
SuiteResult run_local(const PanelDataset& ds, const RunConfig& cfg);

struct Interval {
    double low = 0.0;
    double high = 0.0;
    double mean = 0.0;
};

// Two-sided Student-t interval: mean +/- t*(n-1) * s / sqrt(n). Throws
// DataError with fewer than 2 values.
Interval confidence_interval(const std::vector<double>& values, double level = 0.95);

// One full (fixed-seed) run per k, re-using a single training-split ranking
// across all k. ks must be ascending and within [1, F].
std::vector<std::pair<std::size_t, double>> feature_sweep(
    const PanelDataset& ds, const RunConfig& cfg, const std::vector<std::size_t>& ks);

} // namespace surveycast
