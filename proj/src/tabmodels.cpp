#include "surveycast/tabmodels.hpp"

#include "surveycast/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace surveycast {

void TreeHyperparams::validate() const {
    if (max_depth < 1) throw ConfigError("tree: max_depth must be >= 1");
    if (min_samples_leaf < 1) throw ConfigError("tree: min_samples_leaf must be >= 1");
    if (n_rounds < 1) throw ConfigError("tree: n_rounds must be >= 1");
    if (!(shrinkage > 0.0 && shrinkage <= 1.0)) {
        throw ConfigError("tree: shrinkage must lie in (0, 1]");
    }
    if (lambda < 0.0) throw ConfigError("tree: lambda must be >= 0");
    if (gamma < 0.0) throw ConfigError("tree: gamma must be >= 0");
}

std::vector<std::string> default_feature_names(std::size_t count) {
    std::vector<std::string> names;
    names.reserve(count);
    for (std::size_t i = 0; i < count; ++i) names.push_back("f" + std::to_string(i));
    return names;
}

namespace {

std::vector<std::string> resolve_names(std::vector<std::string> names, std::size_t cols) {
    if (names.empty()) return default_feature_names(cols);
    if (names.size() != cols) {
        throw ShapeError("model: feature name count does not match column count");
    }
    return names;
}

void check_columns(std::size_t expected, const Matrix& X) {
    if (X.cols != expected) {
        throw ShapeError("predict: model trained on " + std::to_string(expected) +
                         " features, input has " + std::to_string(X.cols));
    }
}

// Split objective shared by CART and the second-order mode. CART fits the
// raw target (leaf = mean, gain = variance reduction in its G^2/H form);
// the second-order mode fits gradients with L2-regularized leaves.
struct SplitObjective {
    bool second_order = false;
    double lambda = 0.0;
    double gamma = 0.0;

    double leaf(double G, double H) const {
        return second_order ? -G / (H + lambda) : G / H;
    }

    double gain(double GL, double HL, double GR, double HR, double G, double H) const {
        if (second_order) {
            return 0.5 * (GL * GL / (HL + lambda) + GR * GR / (HR + lambda) -
                          G * G / (H + lambda)) -
                   gamma;
        }
        return GL * GL / HL + GR * GR / HR - G * G / H;
    }
};

using FeatureOrder = std::vector<std::vector<std::size_t>>;

// Per-feature row indices sorted by (value, row); boosting presorts once and
// re-uses the order across rounds.
FeatureOrder presort_features(const Matrix& X) {
    FeatureOrder order(X.cols);
    for (std::size_t f = 0; f < X.cols; ++f) {
        auto& idx = order[f];
        idx.resize(X.rows);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            const double va = X.at(a, f);
            const double vb = X.at(b, f);
            if (va != vb) return va < vb;
            return a < b;
        });
    }
    return order;
}

class TreeBuilder {
public:
    TreeBuilder(const Matrix& X, std::span<const double> g, const TreeHyperparams& hp,
                SplitObjective objective, const FeatureOrder& presorted)
        : X_(X), g_(g), hp_(hp), obj_(objective), order_(presorted) {
        scratch_.resize(X.rows);
        side_.assign(X.rows, 0);
    }

    std::vector<TreeNode> build() {
        nodes_.clear();
        build_node(0, X_.rows, 0);
        return std::move(nodes_);
    }

private:
    int build_node(std::size_t lo, std::size_t hi, int depth) {
        const std::size_t n = hi - lo;
        double G = 0.0;
        for (std::size_t i = lo; i < hi; ++i) G += g_[order_[0][i]];
        const double H = static_cast<double>(n);

        const int node_id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        nodes_[node_id].value = obj_.leaf(G, H);
        nodes_[node_id].n_rows = static_cast<long long>(n);

        if (depth >= hp_.max_depth ||
            n < 2 * static_cast<std::size_t>(hp_.min_samples_leaf)) {
            return node_id;
        }

        double best_gain = 0.0;
        int best_feature = -1;
        double best_threshold = 0.0;
        std::size_t best_left_count = 0;
        const std::size_t msl = static_cast<std::size_t>(hp_.min_samples_leaf);

        for (std::size_t f = 0; f < X_.cols; ++f) {
            const auto& idx = order_[f];
            double GL = 0.0;
            for (std::size_t i = lo; i + 1 < hi; ++i) {
                GL += g_[idx[i]];
                const double v = X_.at(idx[i], f);
                const double v_next = X_.at(idx[i + 1], f);
                if (v == v_next) continue;
                const std::size_t left_n = i - lo + 1;
                const std::size_t right_n = n - left_n;
                if (left_n < msl || right_n < msl) continue;
                const double gain = obj_.gain(GL, static_cast<double>(left_n), G - GL,
                                              static_cast<double>(right_n), G, H);
                // The margin keeps mathematically tied candidates (identical
                // row partitions reached through different features) on the
                // first-scanned side, so ties break to the lower feature
                // index and lower threshold regardless of summation order.
                if (gain > best_gain * (1.0 + 1e-12)) {
                    best_gain = gain;
                    best_feature = static_cast<int>(f);
                    best_threshold = (v + v_next) / 2.0;
                    best_left_count = left_n;
                }
            }
        }

        if (best_feature < 0) return node_id;

        nodes_[node_id].feature = best_feature;
        nodes_[node_id].threshold = best_threshold;
        nodes_[node_id].gain = best_gain;

        // Stable-partition every feature's segment by split side.
        const auto& split_idx = order_[static_cast<std::size_t>(best_feature)];
        for (std::size_t i = lo; i < hi; ++i) {
            side_[split_idx[i]] = (i - lo < best_left_count) ? 1 : 0;
        }
        for (std::size_t f = 0; f < X_.cols; ++f) {
            auto& idx = order_[f];
            std::size_t nl = 0, nr = 0;
            for (std::size_t i = lo; i < hi; ++i) {
                if (side_[idx[i]]) {
                    idx[lo + nl++] = idx[i];
                } else {
                    scratch_[nr++] = idx[i];
                }
            }
            std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(nr),
                      idx.begin() + static_cast<std::ptrdiff_t>(lo + nl));
        }

        const int left = build_node(lo, lo + best_left_count, depth + 1);
        const int right = build_node(lo + best_left_count, hi, depth + 1);
        nodes_[node_id].left = left;
        nodes_[node_id].right = right;
        return node_id;
    }

    const Matrix& X_;
    std::span<const double> g_;
    const TreeHyperparams& hp_;
    SplitObjective obj_;
    std::vector<TreeNode> nodes_;
    FeatureOrder order_; // per feature, sorted within node segments
    std::vector<std::size_t> scratch_;
    std::vector<char> side_;
};

double mean_of(std::span<const double> y) {
    double s = 0.0;
    for (const double v : y) s += v;
    return s / static_cast<double>(y.size());
}

} // namespace

double RegressionTree::predict_row(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        const TreeNode& node = nodes[i];
        i = static_cast<std::size_t>(
            x[static_cast<std::size_t>(node.feature)] < node.threshold ? node.left
                                                                       : node.right);
    }
    return nodes[i].value;
}

int RegressionTree::depth() const {
    // iterative DFS over (node, depth)
    int max_depth = 0;
    std::vector<std::pair<int, int>> stack{{0, 0}};
    while (!stack.empty()) {
        const auto [id, d] = stack.back();
        stack.pop_back();
        const TreeNode& node = nodes[static_cast<std::size_t>(id)];
        if (node.is_leaf()) {
            max_depth = std::max(max_depth, d);
        } else {
            stack.push_back({node.left, d + 1});
            stack.push_back({node.right, d + 1});
        }
    }
    return max_depth;
}

LinearModel fit_linear(const Matrix& X, std::span<const double> y,
                       std::vector<std::string> feature_names) {
    if (X.rows == 0 || X.cols == 0) throw DataError("fit_linear: empty design matrix");
    if (X.rows != y.size()) throw ShapeError("fit_linear: row count mismatch");

    const std::size_t F = X.cols;
    const std::size_t d = F + 1; // + intercept
    constexpr double ridge = 1e-8;

    // A = Z^T Z + ridge * I, b = Z^T y with Z = [X | 1].
    std::vector<double> A(d * d, 0.0);
    std::vector<double> b(d, 0.0);
    for (std::size_t r = 0; r < X.rows; ++r) {
        const auto row = X.row(r);
        for (std::size_t i = 0; i < F; ++i) {
            for (std::size_t j = i; j < F; ++j) A[i * d + j] += row[i] * row[j];
            A[i * d + F] += row[i];
            b[i] += row[i] * y[r];
        }
        A[F * d + F] += 1.0;
        b[F] += y[r];
    }
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < i; ++j) A[i * d + j] = A[j * d + i];
        A[i * d + i] += ridge;
    }

    // Cholesky A = L L^T, then forward/back substitution.
    std::vector<double> L(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = A[i * d + j];
            for (std::size_t k = 0; k < j; ++k) s -= L[i * d + k] * L[j * d + k];
            if (i == j) {
                if (s <= 0.0) throw DataError("fit_linear: normal equations not positive definite");
                L[i * d + i] = std::sqrt(s);
            } else {
                L[i * d + j] = s / L[j * d + j];
            }
        }
    }
    std::vector<double> z(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= L[i * d + k] * z[k];
        z[i] = s / L[i * d + i];
    }
    std::vector<double> beta(d, 0.0);
    for (std::size_t ii = d; ii-- > 0;) {
        double s = z[ii];
        for (std::size_t k = ii + 1; k < d; ++k) s -= L[k * d + ii] * beta[k];
        beta[ii] = s / L[ii * d + ii];
    }

    LinearModel model;
    model.coefficients.assign(beta.begin(), beta.begin() + static_cast<std::ptrdiff_t>(F));
    model.intercept = beta[F];
    model.feature_names = resolve_names(std::move(feature_names), F);
    return model;
}

RegressionTree fit_tree(const Matrix& X, std::span<const double> y,
                        const TreeHyperparams& hp, std::vector<std::string> feature_names) {
    hp.validate();
    if (X.rows == 0) throw DataError("fit_tree: no rows");
    if (X.rows != y.size()) throw ShapeError("fit_tree: row count mismatch");

    RegressionTree tree;
    tree.feature_names = resolve_names(std::move(feature_names), X.cols);
    TreeBuilder builder(X, y, hp, SplitObjective{}, presort_features(X));
    tree.nodes = builder.build();
    return tree;
}

namespace {

BoostedEnsemble fit_boosted(const Matrix& X, std::span<const double> y,
                            const TreeHyperparams& hp, std::vector<std::string> names,
                            BoostMode mode) {
    hp.validate();
    if (X.rows == 0) throw DataError("boosting: no rows");
    if (X.rows != y.size()) throw ShapeError("boosting: row count mismatch");

    BoostedEnsemble ensemble;
    ensemble.mode = mode;
    ensemble.shrinkage = hp.shrinkage;
    ensemble.feature_names = resolve_names(std::move(names), X.cols);
    ensemble.base_prediction = mean_of(y);
    if (mode == BoostMode::SecondOrder) {
        ensemble.lambda = hp.lambda;
        ensemble.gamma = hp.gamma;
    }

    SplitObjective objective;
    if (mode == BoostMode::SecondOrder) {
        objective.second_order = true;
        objective.lambda = hp.lambda;
        objective.gamma = hp.gamma;
    }

    const FeatureOrder master_order = presort_features(X);
    std::vector<double> current(X.rows, ensemble.base_prediction);
    std::vector<double> g(X.rows, 0.0);
    for (int round = 0; round < hp.n_rounds; ++round) {
        if (mode == BoostMode::FirstOrder) {
            for (std::size_t i = 0; i < X.rows; ++i) g[i] = y[i] - current[i];
        } else {
            for (std::size_t i = 0; i < X.rows; ++i) g[i] = current[i] - y[i];
        }
        RegressionTree tree;
        tree.feature_names = ensemble.feature_names;
        TreeBuilder builder(X, g, hp, objective, master_order);
        tree.nodes = builder.build();
        for (std::size_t i = 0; i < X.rows; ++i) {
            current[i] += hp.shrinkage * tree.predict_row(X.row(i));
        }
        ensemble.trees.push_back(std::move(tree));
    }
    return ensemble;
}

} // namespace

BoostedEnsemble fit_gbdt(const Matrix& X, std::span<const double> y,
                         const TreeHyperparams& hp, std::vector<std::string> feature_names) {
    return fit_boosted(X, y, hp, std::move(feature_names), BoostMode::FirstOrder);
}

BoostedEnsemble fit_xgb_style(const Matrix& X, std::span<const double> y,
                              const TreeHyperparams& hp,
                              std::vector<std::string> feature_names) {
    return fit_boosted(X, y, hp, std::move(feature_names), BoostMode::SecondOrder);
}

std::vector<double> predict(const LinearModel& model, const Matrix& X) {
    check_columns(model.coefficients.size(), X);
    std::vector<double> out(X.rows, model.intercept);
    for (std::size_t r = 0; r < X.rows; ++r) {
        const auto row = X.row(r);
        for (std::size_t j = 0; j < X.cols; ++j) out[r] += model.coefficients[j] * row[j];
    }
    return out;
}

std::vector<double> predict(const RegressionTree& tree, const Matrix& X) {
    check_columns(tree.feature_names.size(), X);
    std::vector<double> out(X.rows, 0.0);
    for (std::size_t r = 0; r < X.rows; ++r) out[r] = tree.predict_row(X.row(r));
    return out;
}

std::vector<double> predict(const BoostedEnsemble& ensemble, const Matrix& X) {
    check_columns(ensemble.feature_names.size(), X);
    std::vector<double> out(X.rows, ensemble.base_prediction);
    for (const auto& tree : ensemble.trees) {
        for (std::size_t r = 0; r < X.rows; ++r) {
            out[r] += ensemble.shrinkage * tree.predict_row(X.row(r));
        }
    }
    return out;
}

namespace {

void accumulate_gains(const RegressionTree& tree, std::map<std::string, double>& gains) {
    for (const auto& node : tree.nodes) {
        if (!node.is_leaf()) {
            gains[tree.feature_names[static_cast<std::size_t>(node.feature)]] += node.gain;
        }
    }
}

std::map<std::string, double> zero_gains(const std::vector<std::string>& names) {
    std::map<std::string, double> gains;
    for (const auto& name : names) gains[name] = 0.0;
    return gains;
}

} // namespace

std::map<std::string, double> gain_importance(const RegressionTree& tree) {
    auto gains = zero_gains(tree.feature_names);
    accumulate_gains(tree, gains);
    return gains;
}

std::map<std::string, double> gain_importance(const BoostedEnsemble& ensemble) {
    auto gains = zero_gains(ensemble.feature_names);
    for (const auto& tree : ensemble.trees) accumulate_gains(tree, gains);
    return gains;
}

} // namespace surveycast
