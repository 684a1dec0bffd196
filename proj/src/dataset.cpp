#include "surveycast/dataset.hpp"

#include "surveycast/error.hpp"

#include <algorithm>
#include <chrono>
#include <set>

namespace surveycast {

namespace {

std::optional<std::chrono::year_month_day> parse_ymd(const Date& d) {
    if (d.size() != 10 || d[4] != '-' || d[7] != '-') return std::nullopt;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
        if (d[i] < '0' || d[i] > '9') return std::nullopt;
    }
    const int y = std::stoi(d.substr(0, 4));
    const unsigned m = static_cast<unsigned>(std::stoi(d.substr(5, 2)));
    const unsigned day = static_cast<unsigned>(std::stoi(d.substr(8, 2)));
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                          std::chrono::day{day}};
    if (!ymd.ok()) return std::nullopt;
    return ymd;
}

} // namespace

bool is_valid_date(const Date& d) {
    return parse_ymd(d).has_value();
}

Date add_days(const Date& d, int days) {
    auto ymd = parse_ymd(d);
    if (!ymd) throw DataError("invalid date: " + d);
    std::chrono::sys_days sd{*ymd};
    sd += std::chrono::days{days};
    const std::chrono::year_month_day out{sd};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(out.year()),
                  unsigned(out.month()), unsigned(out.day()));
    return buf;
}

void PanelDataset::sort_canonical() {
    std::sort(rows.begin(), rows.end(), [](const PanelRow& a, const PanelRow& b) {
        if (a.state != b.state) return a.state < b.state;
        return a.date < b.date;
    });
}

std::vector<Date> PanelDataset::distinct_dates() const {
    std::set<Date> s;
    for (const auto& r : rows) s.insert(r.date);
    return {s.begin(), s.end()};
}

std::vector<std::string> PanelDataset::distinct_states() const {
    std::set<std::string> s;
    for (const auto& r : rows) s.insert(r.state);
    return {s.begin(), s.end()};
}

void PanelDataset::validate() const {
    std::set<std::string> names(feature_names.begin(), feature_names.end());
    if (names.size() != feature_names.size()) {
        throw DataError("panel: duplicate feature names");
    }
    std::set<std::pair<std::string, Date>> keys;
    for (const auto& r : rows) {
        if (r.features.size() != feature_names.size()) {
            throw DataError("panel: row (" + r.state + ", " + r.date +
                            ") has wrong feature count");
        }
        if (!keys.emplace(r.state, r.date).second) {
            throw DataError("panel: duplicate (state, date) pair (" + r.state + ", " +
                            r.date + ")");
        }
    }
}

Matrix features_matrix(const PanelDataset& ds) {
    Matrix m(ds.rows.size(), ds.n_features());
    for (std::size_t i = 0; i < ds.rows.size(); ++i) {
        std::copy(ds.rows[i].features.begin(), ds.rows[i].features.end(),
                  m.a.begin() + static_cast<std::ptrdiff_t>(i * m.cols));
    }
    return m;
}

std::vector<double> targets(const PanelDataset& ds) {
    std::vector<double> y;
    y.reserve(ds.rows.size());
    for (const auto& r : ds.rows) y.push_back(r.target);
    return y;
}

const std::vector<std::string>& canonical_feature_names() {
    static const std::vector<std::string> names = {
        "cmnty_cli",
        "avoid_contact_all_or_most_time",
        "runny_nose",
        "worked_outside_home",
        "hh_cough",
        "self_cough",
        "anosmia_ageusia",
        "hh_sore_throat",
        "none_of_above",
        "self_sore_throat",
        "multiple_symptoms",
        "nasal_congestion",
        "other",
        "high_blood_pressure",
        "hh_shortness_of_breath",
        "hh_difficulty_breathing",
        "hh_cli",
        "self_difficulty_breathing",
        "heart_disease",
        "persistent_pain_pressure_in_chest",
        "muscle_joint_aches",
        "hh_fever",
        "self_shortness_of_breath",
        "multiple_medical_conditions",
        "kidney_disease",
        "diarrhea",
        "chronic_lung_disease",
        "tiredness_or_exhaustion",
        "self_fever",
        "no_above_medical_conditions",
        "cancer",
        "asthma",
        "nausea_vomiting",
        "diabetes",
        "autoimmune_disorder",
    };
    return names;
}

void SynthConfig::validate() const {
    if (n_states < 1 || n_states > 26 * 26) {
        throw ConfigError("synth: n_states must be in [1, 676]");
    }
    if (n_dates < 1) throw ConfigError("synth: n_dates must be >= 1");
    if (n_features < 1) throw ConfigError("synth: n_features must be >= 1");
    if (n_informative < 0 || n_informative > n_features) {
        throw ConfigError("synth: n_informative must be in [0, n_features]");
    }
    if (noise_sd < 0.0) throw ConfigError("synth: noise_sd must be >= 0");
    if (!is_valid_date(start_date)) {
        throw ConfigError("synth: invalid start_date: " + start_date);
    }
    if (layout == CoefficientLayout::Explicit) {
        if (explicit_coef.size() != static_cast<std::size_t>(n_states)) {
            throw ConfigError("synth: explicit coefficient matrix needs one row per state");
        }
        for (const auto& row : explicit_coef) {
            if (row.size() != static_cast<std::size_t>(n_features)) {
                throw ConfigError("synth: explicit coefficient row has wrong length");
            }
        }
    }
}

} // namespace surveycast
