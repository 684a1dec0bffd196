#pragma once

#include "surveycast/dataset.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace surveycast {

struct TreeHyperparams {
    int max_depth = 4;
    int min_samples_leaf = 2;
    int n_rounds = 200;      // boosting rounds
    double shrinkage = 0.1;  // boosting learning rate
    double lambda = 1.0;     // L2 leaf regularizer (second-order mode)
    double gamma = 0.0;      // minimum split gain (second-order mode)
    std::uint64_t seed = 0;

    void validate() const; // throws ConfigError
};

struct LinearModel {
    std::vector<double> coefficients;
    double intercept = 0.0;
    std::vector<std::string> feature_names;
};

struct TreeNode {
    int feature = -1;        // -1 marks a leaf
    double threshold = 0.0;  // internal: x[feature] < threshold goes left
    double gain = 0.0;       // split gain recorded at fit time
    double value = 0.0;      // leaf prediction
    long long n_rows = 0;    // training rows routed through this node
    int left = -1;
    int right = -1;

    bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
    std::vector<TreeNode> nodes; // nodes[0] is the root
    std::vector<std::string> feature_names;

    double predict_row(std::span<const double> x) const;
    int depth() const; // edges on the longest root-to-leaf path
};

enum class BoostMode { FirstOrder, SecondOrder };

struct BoostedEnsemble {
    double base_prediction = 0.0; // mean of the training target
    std::vector<RegressionTree> trees;
    double shrinkage = 0.1;
    BoostMode mode = BoostMode::FirstOrder;
    double lambda = 0.0;
    double gamma = 0.0;
    std::vector<std::string> feature_names;
};

// Ordinary least squares through the normal equations with a ridge term
// eps = 1e-8 on the diagonal, so rank-deficient designs stay solvable.
LinearModel fit_linear(const Matrix& X, std::span<const double> y,
                       std::vector<std::string> feature_names = {});

// Greedy top-down CART: each node takes the (feature, midpoint-threshold)
// split maximizing the squared-error reduction, ties broken by lower
// feature index then lower threshold. Stops on max_depth, min_samples_leaf
// or zero best gain. Deterministic.
RegressionTree fit_tree(const Matrix& X, std::span<const double> y,
                        const TreeHyperparams& hp,
                        std::vector<std::string> feature_names = {});

// First-order gradient boosting: F_0 = mean(y); each round fits a CART tree
// to the residuals y - F_{m-1}(X).
BoostedEnsemble fit_gbdt(const Matrix& X, std::span<const double> y,
                         const TreeHyperparams& hp,
                         std::vector<std::string> feature_names = {});

// Regularized second-order boosting under squared loss: per-row gradient
// g = F(x) - y and hessian 1, leaf weight -G/(H+lambda), split gain
// 0.5*(GL^2/(HL+lambda) + GR^2/(HR+lambda) - G^2/(H+lambda)) - gamma with
// non-positive gains rejected. Construction otherwise identical to fit_tree.
BoostedEnsemble fit_xgb_style(const Matrix& X, std::span<const double> y,
                              const TreeHyperparams& hp,
                              std::vector<std::string> feature_names = {});

std::vector<double> predict(const LinearModel& model, const Matrix& X);
std::vector<double> predict(const RegressionTree& tree, const Matrix& X);
std::vector<double> predict(const BoostedEnsemble& ensemble, const Matrix& X);

// Per-feature sum of the split gains recorded at fit time. Features never
// split have importance 0.
std::map<std::string, double> gain_importance(const RegressionTree& tree);
std::map<std::string, double> gain_importance(const BoostedEnsemble& ensemble);

// "f0", "f1", ... placeholders when a caller fits raw matrices.
std::vector<std::string> default_feature_names(std::size_t count);

} // namespace surveycast
