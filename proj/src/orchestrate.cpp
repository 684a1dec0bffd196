#include "surveycast/orchestrate.hpp"

#include "surveycast/error.hpp"
#include "surveycast/ingest.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>

namespace surveycast {

std::string family_name(ModelFamily f) {
    switch (f) {
    case ModelFamily::Lr: return "lr";
    case ModelFamily::Dt: return "dt";
    case ModelFamily::Gbdt: return "gbdt";
    case ModelFamily::Xgb: return "xgb";
    case ModelFamily::Mlp: return "mlp";
    case ModelFamily::Cnn7: return "cnn7";
    case ModelFamily::Resnet1d: return "resnet1d";
    }
    return "?";
}

ModelFamily family_from_name(const std::string& name) {
    if (name == "lr") return ModelFamily::Lr;
    if (name == "dt") return ModelFamily::Dt;
    if (name == "gbdt") return ModelFamily::Gbdt;
    if (name == "xgb") return ModelFamily::Xgb;
    if (name == "mlp") return ModelFamily::Mlp;
    if (name == "cnn7") return ModelFamily::Cnn7;
    if (name == "resnet1d") return ModelFamily::Resnet1d;
    throw ConfigError("unknown model family '" + name + "'");
}

void RunConfig::validate() const {
    if (seeds.empty()) throw ConfigError("run: seeds must be non-empty");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("run: train_fraction must lie in (0, 1)");
    }
    tree.validate();
    neural.options.validate();
}

std::vector<double> AnyModel::predict(const Matrix& X) const {
    return std::visit(
        [&X](const auto& m) -> std::vector<double> {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, TrainedNetwork>) {
                return predict_network(m, X);
            } else {
                return surveycast::predict(m, X);
            }
        },
        model);
}

const std::vector<std::string>& AnyModel::feature_names() const {
    return std::visit(
        [](const auto& m) -> const std::vector<std::string>& {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, TrainedNetwork>) {
                static const std::vector<std::string> empty;
                return empty;
            } else {
                return m.feature_names;
            }
        },
        model);
}

bool AnyModel::supports_gain() const {
    return std::holds_alternative<RegressionTree>(model) ||
           std::holds_alternative<BoostedEnsemble>(model);
}

std::map<std::string, double> AnyModel::gain() const {
    if (const auto* tree = std::get_if<RegressionTree>(&model)) {
        return gain_importance(*tree);
    }
    if (const auto* ens = std::get_if<BoostedEnsemble>(&model)) {
        return gain_importance(*ens);
    }
    throw DataError("gain importance: model family has no recorded split gains");
}

FitResult fit_family(ModelFamily family, const PanelDataset& train, const RunConfig& cfg,
                     std::uint64_t seed) {
    const Matrix X = features_matrix(train);
    const std::vector<double> y = targets(train);
    TreeHyperparams hp = cfg.tree;
    hp.seed = seed;

    switch (family) {
    case ModelFamily::Lr:
        return {{fit_linear(X, y, train.feature_names)}, {}};
    case ModelFamily::Dt:
        return {{fit_tree(X, y, hp, train.feature_names)}, {}};
    case ModelFamily::Gbdt:
        return {{fit_gbdt(X, y, hp, train.feature_names)}, {}};
    case ModelFamily::Xgb:
        return {{fit_xgb_style(X, y, hp, train.feature_names)}, {}};
    case ModelFamily::Mlp:
    case ModelFamily::Cnn7:
    case ModelFamily::Resnet1d: {
        const int f = static_cast<int>(train.n_features());
        NetworkSpec spec;
        if (family == ModelFamily::Mlp) {
            spec = build_mlp(f, cfg.neural.mlp_hidden, seed);
        } else if (family == ModelFamily::Cnn7) {
            spec = build_cnn7(f, cfg.neural.cnn_channels, seed);
        } else {
            spec = build_resnet1d(f, cfg.neural.resnet_channels, seed);
        }
        TrainOptions opts = cfg.neural.options;
        opts.seed = seed;
        TrainResult result = train_network(spec, train, opts);
        return {{std::move(result.network)}, std::move(result.epoch_loss)};
    }
    }
    throw ConfigError("fit_family: unhandled family");
}

namespace {

PredictionSet make_prediction_set(const PanelDataset& test, const std::vector<double>& preds,
                                  bool clamp_nonneg) {
    PredictionSet out;
    out.rows.reserve(test.rows.size());
    for (std::size_t i = 0; i < test.rows.size(); ++i) {
        double p = preds[i];
        if (clamp_nonneg && p < 0.0) p = 0.0;
        out.rows.push_back({test.rows[i].state, test.rows[i].date, p, test.rows[i].target});
    }
    return out;
}

std::size_t effective_k(const RunConfig& cfg, std::size_t total_features) {
    if (cfg.feature_k == 0) return total_features;
    if (cfg.feature_k > total_features) {
        throw ConfigError("run: feature_k " + std::to_string(cfg.feature_k) +
                          " exceeds feature count " + std::to_string(total_features));
    }
    return cfg.feature_k;
}

void fill_seed_metrics(SeedResult& sr) {
    sr.mae = mae(sr.predictions);
    double target_sum = 0.0;
    for (const auto& r : sr.predictions.rows) target_sum += r.actual;
    if (target_sum > 0.0) sr.nmae = nmae(sr.predictions);
}

} // namespace

SuiteResult run_global(const PanelDataset& ds, const RunConfig& cfg) {
    cfg.validate();
    if (cfg.granularity != Granularity::Global) {
        throw ConfigError("run_global: config granularity is not global");
    }

    SuiteResult suite;
    suite.config = cfg;

    const DateSplit split = split_by_date(ds, cfg.train_fraction);
    suite.boundary = split.boundary;

    const FeatureRanking ranking = rank_features(split.train);
    suite.rankings["global"] = ranking;
    const std::size_t k = effective_k(cfg, ranking.entries.size());
    const PanelDataset train = select_top_k(split.train, ranking, k);
    const PanelDataset test = select_top_k(split.test, ranking, k);
    const Matrix x_test = features_matrix(test);

    for (const std::uint64_t seed : cfg.seeds) {
        FitResult fit = fit_family(cfg.family, train, cfg, seed);
        SeedResult sr;
        sr.seed = seed;
        sr.predictions =
            make_prediction_set(test, fit.model.predict(x_test), cfg.clamp_nonneg);
        fill_seed_metrics(sr);
        suite.per_seed.push_back(std::move(sr));
        if (!fit.loss_curve.empty()) {
            suite.loss_curves["global"].emplace(seed, std::move(fit.loss_curve));
        }
        suite.models["global"].emplace(seed, std::move(fit.model));
    }
    return suite;
}

SuiteResult run_local(const PanelDataset& ds, const RunConfig& cfg) {
    cfg.validate();
    if (cfg.granularity != Granularity::Local) {
        throw ConfigError("run_local: config granularity is not local");
    }

    SuiteResult suite;
    suite.config = cfg;

    // The chronological split precedes the per-state partition, so every
    // state shares the same boundary.
    const DateSplit split = split_by_date(ds, cfg.train_fraction);
    suite.boundary = split.boundary;

    struct StateData {
        PanelDataset train;
        PanelDataset test;
    };
    std::map<std::string, StateData> by_state;
    for (const auto& row : split.train.rows) {
        auto& sd = by_state[row.state];
        sd.train.feature_names = ds.feature_names;
        sd.train.rows.push_back(row);
    }
    for (const auto& row : split.test.rows) {
        auto& sd = by_state[row.state];
        if (sd.test.feature_names.empty()) sd.test.feature_names = ds.feature_names;
        sd.test.rows.push_back(row);
    }

    suite.per_seed.resize(cfg.seeds.size());
    for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
        suite.per_seed[si].seed = cfg.seeds[si];
    }

    for (auto& [state, sd] : by_state) {
        if (sd.train.rows.size() < cfg.min_state_train_rows) {
            suite.skipped_states.push_back(state);
            continue;
        }
        if (sd.test.rows.empty()) continue;

        const FeatureRanking ranking = rank_features(sd.train);
        suite.rankings[state] = ranking;
        const std::size_t k = effective_k(cfg, ranking.entries.size());
        const PanelDataset train = select_top_k(sd.train, ranking, k);
        const PanelDataset test = select_top_k(sd.test, ranking, k);
        const Matrix x_test = features_matrix(test);

        for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
            FitResult fit = fit_family(cfg.family, train, cfg, cfg.seeds[si]);
            const PredictionSet preds =
                make_prediction_set(test, fit.model.predict(x_test), cfg.clamp_nonneg);
            auto& rows = suite.per_seed[si].predictions.rows;
            rows.insert(rows.end(), preds.rows.begin(), preds.rows.end());
            if (!fit.loss_curve.empty()) {
                suite.loss_curves[state].emplace(cfg.seeds[si], std::move(fit.loss_curve));
            }
            suite.models[state].emplace(cfg.seeds[si], std::move(fit.model));
        }
    }

    for (auto& sr : suite.per_seed) {
        if (sr.predictions.rows.empty()) {
            throw DataError("run_local: no state had enough training rows");
        }
        // states were visited in sorted order, so rows are already canonical
        fill_seed_metrics(sr);
    }
    return suite;
}

Interval confidence_interval(const std::vector<double>& values, double level) {
    if (values.size() < 2) {
        throw DataError("confidence_interval: need at least 2 values");
    }
    if (!(level > 0.0 && level < 1.0)) {
        throw ConfigError("confidence_interval: level must lie in (0, 1)");
    }
    // exact degenerate case: identical inputs give a zero-width interval
    const bool all_equal =
        std::all_of(values.begin(), values.end(),
                    [&](double v) { return v == values.front(); });
    if (all_equal) {
        return {values.front(), values.front(), values.front()};
    }

    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (const double v : values) mean += v;
    mean /= n;
    double ss = 0.0;
    for (const double v : values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1.0));

    const boost::math::students_t dist(n - 1.0);
    const double t = boost::math::quantile(dist, 0.5 + level / 2.0);
    const double half = t * sd / std::sqrt(n);
    return {mean - half, mean + half, mean};
}

std::vector<std::pair<std::size_t, double>> feature_sweep(
    const PanelDataset& ds, const RunConfig& cfg, const std::vector<std::size_t>& ks) {
    cfg.validate();
    if (ks.empty()) throw ConfigError("sweep: empty k list");
    if (!std::is_sorted(ks.begin(), ks.end())) {
        throw ConfigError("sweep: ks must be ascending");
    }

    const DateSplit split = split_by_date(ds, cfg.train_fraction);
    const FeatureRanking ranking = rank_features(split.train);
    for (const std::size_t k : ks) {
        if (k < 1 || k > ranking.entries.size()) {
            throw ConfigError("sweep: k = " + std::to_string(k) + " out of [1, " +
                              std::to_string(ranking.entries.size()) + "]");
        }
    }

    // A single configured seed keeps the curve comparable across k; with
    // several seeds the per-k MAE is their mean.
    std::vector<std::pair<std::size_t, double>> curve;
    for (const std::size_t k : ks) {
        const PanelDataset train = select_top_k(split.train, ranking, k);
        const PanelDataset test = select_top_k(split.test, ranking, k);
        const Matrix x_test = features_matrix(test);
        double total = 0.0;
        for (const std::uint64_t seed : cfg.seeds) {
            const FitResult fit = fit_family(cfg.family, train, cfg, seed);
            const PredictionSet preds =
                make_prediction_set(test, fit.model.predict(x_test), cfg.clamp_nonneg);
            total += mae(preds);
        }
        curve.emplace_back(k, total / static_cast<double>(cfg.seeds.size()));
    }
    return curve;
}

} // namespace surveycast
