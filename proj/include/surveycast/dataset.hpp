#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace surveycast {

// Calendar dates are ISO-8601 strings (YYYY-MM-DD); lexicographic order is
// chronological order, which keeps splits and joins trivial.
using Date = std::string;

bool is_valid_date(const Date& d);
Date add_days(const Date& d, int days);

struct Demographic {
    std::string gender = "all";
    std::string age_bucket = "all";

    bool aggregate() const { return gender == "all" && age_bucket == "all"; }
    bool operator==(const Demographic&) const = default;
    auto operator<=>(const Demographic&) const = default;
};

// One survey extract row: percentages of respondents reporting each signal.
struct SurveySnapshot {
    std::string state;
    Date date;
    Demographic demographic;
    std::map<std::string, double> features; // missing cells are absent keys
};

struct CumulativePoint {
    Date date;
    long long cumulative = 0;
};

struct CumulativeCaseSeries {
    std::string state;
    std::vector<CumulativePoint> points; // dates strictly increasing
};

struct PanelRow {
    std::string state;
    Date date;
    std::vector<double> features;
    double target = 0.0; // daily new cases
};

// The universal training/evaluation container: joined (state, date) rows of
// feature values plus the daily-case target.
struct PanelDataset {
    std::vector<std::string> feature_names;
    std::vector<PanelRow> rows;

    std::size_t n_features() const { return feature_names.size(); }

    // Canonical order: (state, date) ascending.
    void sort_canonical();

    // Sorted distinct dates across all rows.
    std::vector<Date> distinct_dates() const;
    std::vector<std::string> distinct_states() const;

    // Throws DataError if any invariant is violated (vector lengths,
    // duplicate (state, date) pairs, duplicate feature names).
    void validate() const;
};

struct DateSplit {
    PanelDataset train;
    PanelDataset test;
    Date boundary; // last training date
};

// Dense row-major matrix used by the model fitters.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return a[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return a[r * cols + c]; }
    std::span<const double> row(std::size_t r) const {
        return {a.data() + r * cols, cols};
    }
};

Matrix features_matrix(const PanelDataset& ds);
std::vector<double> targets(const PanelDataset& ds);

// The 35 canonical survey feature names.
const std::vector<std::string>& canonical_feature_names();

enum class CoefficientLayout {
    Shared,   // one coefficient vector for every state
    PerState, // independent coefficients per state
    Explicit, // caller-provided state-by-feature matrix
};

// Configuration for the synthetic panel generator (ground truth known).
struct SynthConfig {
    int n_states = 5;
    int n_dates = 60;
    int n_features = 35;
    int n_informative = 15;
    CoefficientLayout layout = CoefficientLayout::Shared;
    std::vector<std::vector<double>> explicit_coef; // state x feature
    double noise_sd = 0.0;
    std::uint64_t seed = 0;
    Date start_date = "2020-04-06";

    void validate() const; // throws ConfigError
};

struct SynthCoefficients {
    std::vector<std::string> states;
    std::vector<double> intercepts;          // per state
    std::vector<std::vector<double>> coef;   // state x feature
};

} // namespace surveycast
