#pragma once

#include "surveycast/dataset.hpp"

#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace surveycast {

struct FeatureScore {
    std::string name;
    double f_stat = 0.0;      // +infinity when |correlation| = 1
    double correlation = 0.0; // Pearson r in [-1, 1]
    bool degenerate = false;  // constant column, scored 0
};

// Scores sorted by f_stat descending; ties broken by ascending name, with
// degenerate columns last among zero scores.
struct FeatureRanking {
    std::vector<FeatureScore> entries;
    std::size_t n_samples = 0;
};

// Univariate F statistic of one feature against the target:
//   r = sum((x-xbar)(y-ybar)) / sqrt(sum((x-xbar)^2) * sum((y-ybar)^2))
//   f = r^2 / (1 - r^2) * (n - 2)
// A constant x or y column yields a degenerate score (f = 0, flagged)
// rather than an error. Throws DataError when n < 3 or lengths differ.
FeatureScore f_regression_score(std::span<const double> x, std::span<const double> y,
                                std::string name = "");

// One score per feature of the dataset, computed on the supplied rows only
// (callers pass the training split) and sorted per the ranking invariant.
FeatureRanking rank_features(const PanelDataset& ds);

// Projects the dataset onto the k highest-ranked features, column order
// following the ranking. Throws ConfigError when k is out of [1, F].
PanelDataset select_top_k(const PanelDataset& ds, const FeatureRanking& ranking,
                          std::size_t k);

// CSV export: rank,feature,f_stat,correlation ("inf" token permitted).
void write_ranking_csv(std::ostream& out, const FeatureRanking& ranking);
FeatureRanking read_ranking_csv(std::istream& in);

} // namespace surveycast
