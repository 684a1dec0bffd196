#include "surveycast/tabmodels.hpp"

#include "surveycast/error.hpp"
#include "testutil.hpp"

#include <doctest.h>

#include <cmath>
#include <optional>

using namespace surveycast;

namespace {

// Exhaustive (feature, midpoint) search maximizing the naive squared-error
// reduction sse(parent) - sse(left) - sse(right), ties broken by lower
// feature index then lower threshold. Independent of the builder.
struct BruteSplit {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

double sse_of(const std::vector<double>& ys) {
    double mean = 0;
    for (const double y : ys) mean += y;
    mean /= static_cast<double>(ys.size());
    double s = 0;
    for (const double y : ys) s += (y - mean) * (y - mean);
    return s;
}

std::optional<BruteSplit> brute_force_root(const Matrix& X, const std::vector<double>& y,
                                           int min_samples_leaf) {
    std::optional<BruteSplit> best;
    std::vector<double> all(y.begin(), y.end());
    const double parent = sse_of(all);
    for (std::size_t f = 0; f < X.cols; ++f) {
        std::vector<double> values;
        for (std::size_t i = 0; i < X.rows; ++i) values.push_back(X.at(i, f));
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        for (std::size_t v = 0; v + 1 < values.size(); ++v) {
            const double threshold = (values[v] + values[v + 1]) / 2.0;
            std::vector<double> left, right;
            for (std::size_t i = 0; i < X.rows; ++i) {
                (X.at(i, f) < threshold ? left : right).push_back(y[i]);
            }
            if (left.size() < static_cast<std::size_t>(min_samples_leaf) ||
                right.size() < static_cast<std::size_t>(min_samples_leaf)) {
                continue;
            }
            const double gain = parent - sse_of(left) - sse_of(right);
            if (gain > 0 && (!best || gain > best->gain)) {
                best = BruteSplit{static_cast<int>(f), threshold, gain};
            }
        }
    }
    return best;
}

} // namespace

TEST_CASE("fit_linear recovers exact linear data") {
    Matrix X(6, 1);
    std::vector<double> y(6);
    for (int i = 0; i < 6; ++i) {
        X.at(i, 0) = i;
        y[static_cast<std::size_t>(i)] = 2.0 * i + 1.0;
    }
    const auto m = fit_linear(X, y);
    CHECK(m.coefficients[0] == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(m.intercept == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("fit_linear on a constant target") {
    Rng rng(3);
    Matrix X = testutil::random_matrix(rng, 12, 3, 0, 10);
    const std::vector<double> y(12, 4.25);
    const auto m = fit_linear(X, y);
    for (const double c : m.coefficients) CHECK(c == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(m.intercept == doctest::Approx(4.25).epsilon(1e-6));
}

TEST_CASE("fit_linear matches a gradient-descent minimizer of the same objective") {
    Rng rng(17);
    const Matrix X = testutil::random_matrix(rng, 5, 2, -2, 2);
    const auto y = testutil::random_vector(rng, 5, -3, 3);

    // plain full-batch gradient descent on the squared error, run to
    // convergence; independent of the normal-equation path
    std::vector<double> beta(2, 0.0);
    double intercept = 0.0;
    const double lr = 0.02;
    for (int iter = 0; iter < 200000; ++iter) {
        std::vector<double> gb(2, 0.0);
        double gi = 0.0;
        for (std::size_t i = 0; i < 5; ++i) {
            const double pred = beta[0] * X.at(i, 0) + beta[1] * X.at(i, 1) + intercept;
            const double resid = pred - y[i];
            gb[0] += 2 * resid * X.at(i, 0);
            gb[1] += 2 * resid * X.at(i, 1);
            gi += 2 * resid;
        }
        beta[0] -= lr * gb[0];
        beta[1] -= lr * gb[1];
        intercept -= lr * gi;
    }

    const auto m = fit_linear(X, y);
    CHECK(m.coefficients[0] == doctest::Approx(beta[0]).epsilon(1e-4));
    CHECK(m.coefficients[1] == doctest::Approx(beta[1]).epsilon(1e-4));
    CHECK(m.intercept == doctest::Approx(intercept).epsilon(1e-4));
}

TEST_CASE("fit_tree finds a single perfect split on step data") {
    Matrix X(10, 1);
    std::vector<double> y(10);
    for (int i = 0; i < 10; ++i) {
        X.at(i, 0) = i;
        y[static_cast<std::size_t>(i)] = i < 5 ? 0.0 : 10.0;
    }
    TreeHyperparams hp;
    hp.max_depth = 4;
    hp.min_samples_leaf = 1;
    const auto tree = fit_tree(X, y, hp);
    REQUIRE(!tree.nodes[0].is_leaf());
    CHECK(tree.nodes[0].feature == 0);
    CHECK(tree.nodes[0].threshold > 4.0);
    CHECK(tree.nodes[0].threshold <= 5.0);
    CHECK(tree.depth() == 1);
    const auto preds = predict(tree, X);
    for (std::size_t i = 0; i < 10; ++i) CHECK(preds[i] == y[i]);
}

TEST_CASE("fit_tree honors max_depth") {
    Rng rng(23);
    for (int depth = 1; depth <= 4; ++depth) {
        const Matrix X = testutil::random_matrix(rng, 64, 3, 0, 1);
        const auto y = testutil::random_vector(rng, 64, 0, 1);
        TreeHyperparams hp;
        hp.max_depth = depth;
        hp.min_samples_leaf = 1;
        const auto tree = fit_tree(X, y, hp);
        CHECK(tree.depth() <= depth);
    }
}

TEST_CASE("fit_tree root split equals exhaustive enumeration on an 8-row instance") {
    Rng rng(29);
    Matrix X(8, 2);
    for (auto& v : X.a) v = rng.uniform(0, 10);
    const auto y = testutil::random_vector(rng, 8, 0, 5);
    TreeHyperparams hp;
    hp.max_depth = 1;
    hp.min_samples_leaf = 1;
    const auto tree = fit_tree(X, y, hp);
    const auto oracle = brute_force_root(X, y, 1);
    REQUIRE(oracle.has_value());
    REQUIRE(!tree.nodes[0].is_leaf());
    CHECK(tree.nodes[0].feature == oracle->feature);
    CHECK(tree.nodes[0].threshold == oracle->threshold);
    CHECK(tree.nodes[0].gain == doctest::Approx(oracle->gain).epsilon(1e-9));
}

TEST_CASE("leaf values equal the mean of the training targets routed to them") {
    Rng rng(41);
    const Matrix X = testutil::random_matrix(rng, 50, 3, 0, 100);
    const auto y = testutil::random_vector(rng, 50, 0, 50);
    TreeHyperparams hp;
    hp.max_depth = 3;
    hp.min_samples_leaf = 2;
    const auto tree = fit_tree(X, y, hp);

    std::map<int, std::vector<double>> routed;
    for (std::size_t i = 0; i < X.rows; ++i) {
        int node = 0;
        while (!tree.nodes[static_cast<std::size_t>(node)].is_leaf()) {
            const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
            node = X.at(i, static_cast<std::size_t>(nd.feature)) < nd.threshold ? nd.left
                                                                                : nd.right;
        }
        routed[node].push_back(y[i]);
    }
    for (const auto& [node, ys] : routed) {
        double mean = 0;
        for (const double v : ys) mean += v;
        mean /= static_cast<double>(ys.size());
        CHECK(tree.nodes[static_cast<std::size_t>(node)].value ==
              doctest::Approx(mean).epsilon(1e-9));
        CHECK(tree.nodes[static_cast<std::size_t>(node)].n_rows ==
              static_cast<long long>(ys.size()));
    }
}

TEST_CASE("fit_gbdt on a constant target") {
    Rng rng(51);
    const Matrix X = testutil::random_matrix(rng, 20, 2, 0, 1);
    const std::vector<double> y(20, 6.5);
    TreeHyperparams hp;
    hp.n_rounds = 5;
    const auto ens = fit_gbdt(X, y, hp);
    CHECK(ens.base_prediction == doctest::Approx(6.5));
    const auto preds = predict(ens, X);
    for (const double p : preds) CHECK(p == doctest::Approx(6.5).epsilon(1e-12));
}

TEST_CASE("one-round unshrunk gbdt equals base plus a single residual tree") {
    Rng rng(53);
    const Matrix X = testutil::random_matrix(rng, 24, 2, 0, 10);
    const auto y = testutil::random_vector(rng, 24, 0, 10);
    TreeHyperparams hp;
    hp.n_rounds = 1;
    hp.shrinkage = 1.0;
    hp.max_depth = 32;
    hp.min_samples_leaf = 1;
    const auto ens = fit_gbdt(X, y, hp);
    const auto preds = predict(ens, X);

    double base = 0;
    for (const double v : y) base += v;
    base /= 24.0;
    std::vector<double> resid(24);
    for (std::size_t i = 0; i < 24; ++i) resid[i] = y[i] - base;
    const auto tree = fit_tree(X, resid, hp);
    const auto tree_preds = predict(tree, X);

    double mse = 0, var = 0;
    for (std::size_t i = 0; i < 24; ++i) {
        CHECK(preds[i] == doctest::Approx(base + tree_preds[i]).epsilon(1e-12));
        mse += (preds[i] - y[i]) * (preds[i] - y[i]);
        var += (y[i] - base) * (y[i] - base);
    }
    CHECK(mse <= var);
}

TEST_CASE("gbdt training error is non-increasing per round") {
    Rng rng(59);
    const Matrix X = testutil::random_matrix(rng, 40, 3, 0, 10);
    const auto y = testutil::random_vector(rng, 40, 0, 100);
    TreeHyperparams hp;
    hp.n_rounds = 60;
    hp.max_depth = 3;
    const auto ens = fit_gbdt(X, y, hp);

    std::vector<double> current(40, ens.base_prediction);
    double prev_mse = std::numeric_limits<double>::infinity();
    for (const auto& tree : ens.trees) {
        double mse = 0;
        for (std::size_t i = 0; i < 40; ++i) {
            current[i] += ens.shrinkage * tree.predict_row(X.row(i));
            mse += (current[i] - y[i]) * (current[i] - y[i]);
        }
        mse /= 40.0;
        CHECK(mse <= prev_mse * (1 + 1e-12) + 1e-15);
        prev_mse = mse;
    }
}

TEST_CASE("second-order boosting with regularizers off collapses to first order") {
    Rng rng(61);
    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t n = 10 + rng.below(30);
        const Matrix X = testutil::random_matrix(rng, n, 3, 0, 10);
        const auto y = testutil::random_vector(rng, n, 0, 50);
        TreeHyperparams hp;
        hp.n_rounds = 30;
        hp.max_depth = 3;
        hp.lambda = 0.0;
        hp.gamma = 0.0;
        const auto first = fit_gbdt(X, y, hp);
        const auto second = fit_xgb_style(X, y, hp);
        const auto pf = predict(first, X);
        const auto ps = predict(second, X);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(ps[i] == doctest::Approx(pf[i]).epsilon(1e-9));
        }
    }
}

TEST_CASE("a large gamma rejects every split") {
    Rng rng(67);
    const Matrix X = testutil::random_matrix(rng, 30, 2, 0, 10);
    const auto y = testutil::random_vector(rng, 30, 0, 100);
    TreeHyperparams hp;
    hp.n_rounds = 3;
    hp.gamma = 1e12;
    const auto ens = fit_xgb_style(X, y, hp);
    const auto preds = predict(ens, X);
    for (const double p : preds) {
        CHECK(p == doctest::Approx(ens.base_prediction).epsilon(1e-12));
    }
    for (const auto& tree : ens.trees) CHECK(tree.nodes[0].is_leaf());
}

TEST_CASE("second-order split gain and leaf weights match hand evaluation") {
    // y = [0,0,0,6,6,6] on x = [1..6]; one round, shrinkage 1, lambda 2,
    // gamma 0.5. Gradients at the 3.0 base are [3,3,3,-3,-3,-3]: split at
    // 3.5 gives gain 0.5*(81/5 + 81/5 - 0) - 0.5 = 15.7, leaves -/+ 9/5.
    Matrix X(6, 1);
    std::vector<double> y = {0, 0, 0, 6, 6, 6};
    for (int i = 0; i < 6; ++i) X.at(i, 0) = i + 1;
    TreeHyperparams hp;
    hp.n_rounds = 1;
    hp.shrinkage = 1.0;
    hp.max_depth = 1;
    hp.min_samples_leaf = 1;
    hp.lambda = 2.0;
    hp.gamma = 0.5;
    const auto ens = fit_xgb_style(X, y, hp);
    REQUIRE(ens.trees.size() == 1);
    const auto& root = ens.trees[0].nodes[0];
    REQUIRE(!root.is_leaf());
    CHECK(root.feature == 0);
    CHECK(root.threshold == doctest::Approx(3.5));
    CHECK(root.gain == doctest::Approx(15.7).epsilon(1e-12));
    const auto preds = predict(ens, X);
    CHECK(preds[0] == doctest::Approx(3.0 - 1.8).epsilon(1e-12));
    CHECK(preds[5] == doctest::Approx(3.0 + 1.8).epsilon(1e-12));
}

TEST_CASE("predict contracts") {
    SUBCASE("single-leaf tree predicts its value everywhere") {
        RegressionTree tree;
        tree.feature_names = {"a"};
        TreeNode leaf;
        leaf.value = 7.0;
        tree.nodes.push_back(leaf);
        Matrix X(3, 1);
        const auto preds = predict(tree, X);
        for (const double p : preds) CHECK(p == 7.0);
    }
    SUBCASE("linear model evaluates beta . x + b") {
        LinearModel m;
        m.coefficients = {2.0};
        m.intercept = 1.0;
        m.feature_names = {"a"};
        Matrix X(1, 1);
        X.at(0, 0) = 3.0;
        CHECK(predict(m, X)[0] == 7.0);
    }
    SUBCASE("ensemble prediction is base plus shrunk tree sum") {
        Rng rng(71);
        const Matrix X = testutil::random_matrix(rng, 15, 2, 0, 10);
        const auto y = testutil::random_vector(rng, 15, 0, 10);
        TreeHyperparams hp;
        hp.n_rounds = 10;
        const auto ens = fit_gbdt(X, y, hp);
        const auto preds = predict(ens, X);
        for (std::size_t i = 0; i < X.rows; ++i) {
            double manual = ens.base_prediction;
            for (const auto& tree : ens.trees) {
                manual += ens.shrinkage * tree.predict_row(X.row(i));
            }
            CHECK(preds[i] == doctest::Approx(manual).epsilon(1e-12));
        }
    }
    SUBCASE("column mismatch is a shape error") {
        LinearModel m;
        m.coefficients = {1.0, 2.0};
        m.feature_names = {"a", "b"};
        Matrix X(2, 3);
        CHECK_THROWS_AS(predict(m, X), ShapeError);
    }
}

TEST_CASE("gain importance") {
    SUBCASE("single split concentrates importance on the split feature") {
        Matrix X(10, 2);
        std::vector<double> y(10);
        for (int i = 0; i < 10; ++i) {
            X.at(i, 0) = 0.5; // constant, never splittable
            X.at(i, 1) = i;
            y[static_cast<std::size_t>(i)] = i < 5 ? 0.0 : 1.0;
        }
        TreeHyperparams hp;
        hp.max_depth = 1;
        hp.min_samples_leaf = 1;
        const auto tree = fit_tree(X, y, hp, {"dead", "step"});
        const auto imp = gain_importance(tree);
        CHECK(imp.at("dead") == 0.0);
        CHECK(imp.at("step") > 0.0);
    }
    SUBCASE("an unsplit stump has all-zero importances") {
        Matrix X(4, 2);
        const std::vector<double> y(4, 3.0);
        TreeHyperparams hp;
        const auto tree = fit_tree(X, y, hp);
        for (const auto& [name, v] : gain_importance(tree)) {
            (void)name;
            CHECK(v == 0.0);
        }
    }
    SUBCASE("importances sum to the total recorded gain") {
        Rng rng(73);
        const Matrix X = testutil::random_matrix(rng, 60, 4, 0, 10);
        const auto y = testutil::random_vector(rng, 60, 0, 100);
        TreeHyperparams hp;
        hp.n_rounds = 20;
        const auto ens = fit_xgb_style(X, y, hp);
        double total_gain = 0;
        for (const auto& tree : ens.trees) {
            for (const auto& node : tree.nodes) {
                if (!node.is_leaf()) total_gain += node.gain;
            }
        }
        double total_importance = 0;
        for (const auto& [name, v] : gain_importance(ens)) {
            (void)name;
            total_importance += v;
        }
        CHECK(total_importance == doctest::Approx(total_gain).epsilon(1e-9));
    }
}

TEST_CASE("fits are deterministic") {
    Rng rng(79);
    const Matrix X = testutil::random_matrix(rng, 30, 3, 0, 10);
    const auto y = testutil::random_vector(rng, 30, 0, 10);
    TreeHyperparams hp;
    hp.n_rounds = 15;
    const auto a = fit_xgb_style(X, y, hp);
    const auto b = fit_xgb_style(X, y, hp);
    REQUIRE(a.trees.size() == b.trees.size());
    for (std::size_t t = 0; t < a.trees.size(); ++t) {
        REQUIRE(a.trees[t].nodes.size() == b.trees[t].nodes.size());
        for (std::size_t i = 0; i < a.trees[t].nodes.size(); ++i) {
            CHECK(a.trees[t].nodes[i].feature == b.trees[t].nodes[i].feature);
            CHECK(a.trees[t].nodes[i].threshold == b.trees[t].nodes[i].threshold);
            CHECK(a.trees[t].nodes[i].value == b.trees[t].nodes[i].value);
        }
    }
}

TEST_CASE("hyperparameter validation") {
    TreeHyperparams hp;
    hp.max_depth = 0;
    CHECK_THROWS_AS(hp.validate(), ConfigError);
    hp = {};
    hp.shrinkage = 0.0;
    CHECK_THROWS_AS(hp.validate(), ConfigError);
    hp = {};
    hp.lambda = -1;
    CHECK_THROWS_AS(hp.validate(), ConfigError);
}
