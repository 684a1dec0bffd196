#include "surveycast/metrics.hpp"

#include "surveycast/error.hpp"
#include "surveycast/rng.hpp"

#include <algorithm>
#include <cmath>

namespace surveycast {

double mae(const PredictionSet& preds) {
    if (preds.rows.empty()) throw DataError("mae: empty prediction set");
    double s = 0.0;
    for (const auto& r : preds.rows) s += std::abs(r.predicted - r.actual);
    return s / static_cast<double>(preds.rows.size());
}

double nmae(const PredictionSet& preds) {
    if (preds.rows.empty()) throw DataError("nmae: empty prediction set");
    double abs_err = 0.0, target_sum = 0.0;
    for (const auto& r : preds.rows) {
        abs_err += std::abs(r.predicted - r.actual);
        target_sum += r.actual;
    }
    if (target_sum <= 0.0) {
        throw DataError("nmae: target sum is zero, metric undefined");
    }
    return 100.0 * abs_err / target_sum;
}

ErrorReport per_state_report(const PredictionSet& preds) {
    if (preds.rows.empty()) throw DataError("per_state_report: empty prediction set");

    struct Acc {
        double abs_err = 0.0;
        double target_sum = 0.0;
        std::size_t n = 0;
    };
    std::map<std::string, Acc> acc;
    double total_err = 0.0, total_target = 0.0;
    for (const auto& r : preds.rows) {
        const double e = std::abs(r.predicted - r.actual);
        auto& a = acc[r.state];
        a.abs_err += e;
        a.target_sum += r.actual;
        ++a.n;
        total_err += e;
        total_target += r.actual;
    }

    ErrorReport report;
    report.n = preds.rows.size();
    report.overall_mae = total_err / static_cast<double>(report.n);
    if (total_target > 0.0) {
        report.overall_nmae = 100.0 * total_err / total_target;
    }
    for (const auto& [state, a] : acc) {
        StateErrors se;
        se.mae = a.abs_err / static_cast<double>(a.n);
        se.n = a.n;
        if (a.target_sum > 0.0) se.nmae = 100.0 * a.abs_err / a.target_sum;
        report.per_state[state] = se;
    }
    return report;
}

std::vector<std::pair<std::string, double>> sorted_importance(
    const std::map<std::string, double>& scores) {
    std::vector<std::pair<std::string, double>> out(scores.begin(), scores.end());
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return out;
}

std::vector<std::pair<std::string, double>> permutation_importance(
    const Predictor& predict_fn, const PanelDataset& ds, int n_repeats,
    std::uint64_t seed) {
    if (ds.rows.empty()) throw DataError("permutation_importance: empty dataset");
    if (n_repeats < 1) throw ConfigError("permutation_importance: n_repeats must be >= 1");

    const Matrix X = features_matrix(ds);
    const std::vector<double> y = targets(ds);
    const std::size_t n = X.rows;

    auto mae_of = [&](const std::vector<double>& preds) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += std::abs(preds[i] - y[i]);
        return s / static_cast<double>(n);
    };
    const double baseline = mae_of(predict_fn(X));

    std::map<std::string, double> scores;
    std::vector<std::size_t> perm(n);
    for (std::size_t j = 0; j < ds.n_features(); ++j) {
        double total = 0.0;
        for (int rep = 0; rep < n_repeats; ++rep) {
            Rng rng(Rng::mix(seed, (static_cast<std::uint64_t>(j) << 20) +
                                       static_cast<std::uint64_t>(rep)));
            for (std::size_t i = 0; i < n; ++i) perm[i] = i;
            rng.shuffle(perm);
            Matrix Xp = X;
            for (std::size_t i = 0; i < n; ++i) Xp.at(i, j) = X.at(perm[i], j);
            total += mae_of(predict_fn(Xp)) - baseline;
        }
        scores[ds.feature_names[j]] = total / n_repeats;
    }
    return sorted_importance(scores);
}

FrequencyReport top_k_frequency(const ImportanceTable& tables, int k_small, int k_large) {
    if (tables.per_state.empty()) {
        throw DataError("top_k_frequency: empty importance table");
    }
    if (k_small > k_large) std::swap(k_small, k_large);

    FrequencyReport report;
    report.k_small = k_small;
    report.k_large = k_large;
    for (const auto& [state, entries] : tables.per_state) {
        for (const auto& [feature, score] : entries) {
            (void)score;
            report.counts.emplace(feature, std::make_pair(0, 0));
        }
    }
    for (const auto& [state, entries] : tables.per_state) {
        for (std::size_t i = 0; i < entries.size(); ++i) {
            auto& c = report.counts[entries[i].first];
            if (i < static_cast<std::size_t>(k_small)) ++c.first;
            if (i < static_cast<std::size_t>(k_large)) ++c.second;
        }
    }
    return report;
}

} // namespace surveycast
