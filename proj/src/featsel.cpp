#include "surveycast/featsel.hpp"

#include "surveycast/csv.hpp"
#include "surveycast/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace surveycast {

FeatureScore f_regression_score(std::span<const double> x, std::span<const double> y,
                                std::string name) {
    if (x.size() != y.size()) {
        throw DataError("f_regression: column lengths differ");
    }
    const std::size_t n = x.size();
    if (n < 3) {
        throw DataError("f_regression: need at least 3 samples, have " + std::to_string(n));
    }

    double x_mean = 0.0, y_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        x_mean += x[i];
        y_mean += y[i];
    }
    x_mean /= static_cast<double>(n);
    y_mean /= static_cast<double>(n);

    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - x_mean;
        const double dy = y[i] - y_mean;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }

    FeatureScore score;
    score.name = std::move(name);
    if (sxx == 0.0 || syy == 0.0) {
        score.degenerate = true;
        return score;
    }

    // r^2 through sxy^2/(sxx*syy) so that x == y gives exactly 1.
    const double r2 = (sxy * sxy) / (sxx * syy);
    if (r2 >= 1.0) {
        score.correlation = sxy > 0.0 ? 1.0 : -1.0;
        score.f_stat = std::numeric_limits<double>::infinity();
        return score;
    }
    score.correlation = std::copysign(std::sqrt(r2), sxy);
    score.f_stat = r2 / (1.0 - r2) * static_cast<double>(n - 2);
    return score;
}

namespace {

bool ranks_before(const FeatureScore& a, const FeatureScore& b) {
    if (a.f_stat != b.f_stat) return a.f_stat > b.f_stat;
    if (a.degenerate != b.degenerate) return !a.degenerate; // degenerates last
    return a.name < b.name;
}

} // namespace

FeatureRanking rank_features(const PanelDataset& ds) {
    if (ds.rows.size() < 3) {
        throw DataError("rank_features: need at least 3 rows, have " +
                        std::to_string(ds.rows.size()));
    }
    const std::vector<double> y = targets(ds);
    const std::size_t n = ds.rows.size();

    FeatureRanking ranking;
    ranking.n_samples = n;
    std::vector<double> column(n);
    for (std::size_t j = 0; j < ds.n_features(); ++j) {
        for (std::size_t i = 0; i < n; ++i) column[i] = ds.rows[i].features[j];
        ranking.entries.push_back(f_regression_score(column, y, ds.feature_names[j]));
    }
    std::sort(ranking.entries.begin(), ranking.entries.end(), ranks_before);
    return ranking;
}

PanelDataset select_top_k(const PanelDataset& ds, const FeatureRanking& ranking,
                          std::size_t k) {
    if (k < 1 || k > ranking.entries.size()) {
        throw ConfigError("select_top_k: k = " + std::to_string(k) + " out of [1, " +
                          std::to_string(ranking.entries.size()) + "]");
    }

    std::vector<std::size_t> source_index;
    PanelDataset out;
    for (std::size_t r = 0; r < k; ++r) {
        const std::string& name = ranking.entries[r].name;
        const auto it = std::find(ds.feature_names.begin(), ds.feature_names.end(), name);
        if (it == ds.feature_names.end()) {
            throw DataError("select_top_k: ranked feature '" + name +
                            "' absent from dataset");
        }
        source_index.push_back(static_cast<std::size_t>(it - ds.feature_names.begin()));
        out.feature_names.push_back(name);
    }

    out.rows.reserve(ds.rows.size());
    for (const auto& row : ds.rows) {
        PanelRow projected;
        projected.state = row.state;
        projected.date = row.date;
        projected.target = row.target;
        projected.features.reserve(k);
        for (const std::size_t j : source_index) projected.features.push_back(row.features[j]);
        out.rows.push_back(std::move(projected));
    }
    return out;
}

void write_ranking_csv(std::ostream& out, const FeatureRanking& ranking) {
    out << "rank,feature,f_stat,correlation\n";
    for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
        const auto& e = ranking.entries[i];
        out << (i + 1) << ',' << csv_escape(e.name) << ',' << format_double(e.f_stat)
            << ',' << format_double(e.correlation) << '\n';
    }
}

FeatureRanking read_ranking_csv(std::istream& in) {
    const CsvTable table = read_csv(in);
    const auto feature = table.column("feature");
    const auto f_stat = table.column("f_stat");
    const auto correlation = table.column("correlation");
    if (!feature || !f_stat || !correlation) {
        throw DataError("ranking csv: required columns are rank, feature, f_stat, correlation");
    }
    FeatureRanking ranking;
    for (const auto& row : table.rows) {
        FeatureScore score;
        score.name = row[*feature];
        const auto f = parse_double(row[*f_stat]);
        const auto r = parse_double(row[*correlation]);
        if (!f || !r) throw DataError("ranking csv: bad numeric cell");
        score.f_stat = *f;
        score.correlation = *r;
        score.degenerate = (*f == 0.0 && *r == 0.0);
        ranking.entries.push_back(std::move(score));
    }
    return ranking;
}

} // namespace surveycast
