#include "surveycast/ingest.hpp"

#include "surveycast/csv.hpp"
#include "surveycast/error.hpp"
#include "surveycast/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace surveycast {

namespace {

std::string normalize_state(const std::string& raw, std::size_t lineno) {
    std::string s = raw;
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (s.size() != 2 || !std::isalpha(static_cast<unsigned char>(s[0])) ||
        !std::isalpha(static_cast<unsigned char>(s[1]))) {
        throw DataError("line " + std::to_string(lineno) +
                        ": state must be a two-letter code, got '" + raw + "'");
    }
    return s;
}

Date require_date(const std::string& raw, std::size_t lineno) {
    if (!is_valid_date(raw)) {
        throw DataError("line " + std::to_string(lineno) + ": invalid date '" + raw + "'");
    }
    return raw;
}

} // namespace

std::vector<SurveySnapshot> parse_survey_table(std::istream& raw,
                                               const ColumnManifest& manifest) {
    const CsvTable table = read_csv(raw);

    const auto state_idx = table.column(manifest.state_col);
    const auto date_idx = table.column(manifest.date_col);
    if (!state_idx) throw DataError("survey: missing column '" + manifest.state_col + "'");
    if (!date_idx) throw DataError("survey: missing column '" + manifest.date_col + "'");
    const auto gender_idx = table.column(manifest.gender_col);
    const auto age_idx = table.column(manifest.age_col);

    struct FeatureColumn {
        std::size_t index;
        std::string name;
    };
    std::vector<FeatureColumn> feature_cols;
    std::set<std::string> seen_names;
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (i == *state_idx || i == *date_idx) continue;
        if (gender_idx && i == *gender_idx) continue;
        if (age_idx && i == *age_idx) continue;
        std::string name = table.header[i];
        if (auto it = manifest.feature_renames.find(name);
            it != manifest.feature_renames.end()) {
            name = it->second;
        }
        if (!seen_names.insert(name).second) {
            throw DataError("survey: duplicate feature column '" + name + "'");
        }
        feature_cols.push_back({i, std::move(name)});
    }

    std::vector<SurveySnapshot> out;
    out.reserve(table.rows.size());
    std::set<std::tuple<std::string, Date, Demographic>> seen;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& fields = table.rows[r];
        const std::size_t lineno = r + 2; // header is line 1
        SurveySnapshot snap;
        snap.state = normalize_state(fields[*state_idx], lineno);
        snap.date = require_date(fields[*date_idx], lineno);
        if (gender_idx && !fields[*gender_idx].empty()) {
            snap.demographic.gender = fields[*gender_idx];
        }
        if (age_idx && !fields[*age_idx].empty()) {
            snap.demographic.age_bucket = fields[*age_idx];
        }
        for (const auto& fc : feature_cols) {
            const std::string& cell = fields[fc.index];
            if (cell.empty()) continue;
            const auto value = parse_double(cell);
            if (!value) continue; // unparseable numeric cell: missing, not zero
            if (*value < 0.0 || *value > 100.0) {
                throw DataError("line " + std::to_string(lineno) + ", column '" + fc.name +
                                "': percentage " + cell + " outside [0, 100]");
            }
            snap.features[fc.name] = *value;
        }
        if (!seen.emplace(snap.state, snap.date, snap.demographic).second) {
            throw DataError("line " + std::to_string(lineno) +
                            ": duplicate (state, date, demographic) row for (" +
                            snap.state + ", " + snap.date + ")");
        }
        out.push_back(std::move(snap));
    }
    return out;
}

std::vector<CumulativeCaseSeries> parse_cases_table(std::istream& raw) {
    const CsvTable table = read_csv(raw);
    const auto state_idx = table.column("state");
    const auto date_idx = table.column("date");
    const auto cum_idx = table.column("cumulative_cases");
    if (!state_idx || !date_idx || !cum_idx) {
        throw DataError("cases: required columns are state, date, cumulative_cases");
    }

    std::map<std::string, std::vector<CumulativePoint>> by_state;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& fields = table.rows[r];
        const std::size_t lineno = r + 2;
        const std::string state = normalize_state(fields[*state_idx], lineno);
        const Date date = require_date(fields[*date_idx], lineno);
        const auto cum = parse_int(fields[*cum_idx]);
        if (!cum || *cum < 0) {
            throw DataError("line " + std::to_string(lineno) +
                            ": cumulative_cases must be a non-negative integer, got '" +
                            fields[*cum_idx] + "'");
        }
        by_state[state].push_back({date, *cum});
    }

    std::vector<CumulativeCaseSeries> out;
    for (auto& [state, points] : by_state) {
        std::sort(points.begin(), points.end(),
                  [](const CumulativePoint& a, const CumulativePoint& b) {
                      return a.date < b.date;
                  });
        for (std::size_t i = 1; i < points.size(); ++i) {
            if (points[i].date == points[i - 1].date) {
                throw DataError("cases: duplicate date " + points[i].date + " for state " +
                                state);
            }
        }
        out.push_back({state, std::move(points)});
    }
    return out;
}

FilterResult filter_aggregate_demographics(std::vector<SurveySnapshot> snapshots) {
    FilterResult result;
    for (auto& s : snapshots) {
        if (s.demographic.aggregate()) {
            result.kept.push_back(std::move(s));
        } else {
            ++result.dropped;
        }
    }
    return result;
}

DailyResult cumulative_to_daily(const CumulativeCaseSeries& series) {
    DailyResult result;
    for (std::size_t i = 1; i < series.points.size(); ++i) {
        const auto& prev = series.points[i - 1];
        const auto& cur = series.points[i];
        if (cur.date <= prev.date) {
            throw DataError("cases: dates not strictly increasing for state " +
                            series.state + " at " + cur.date);
        }
        double diff = static_cast<double>(cur.cumulative - prev.cumulative);
        if (diff < 0.0) {
            diff = 0.0; // upstream correction
            ++result.clamped;
        }
        result.records.push_back({series.state, cur.date, diff});
    }
    return result;
}

JoinResult join_panel(const std::vector<SurveySnapshot>& snapshots,
                      const std::vector<DailyRecord>& daily,
                      const std::vector<std::string>& feature_names) {
    if (feature_names.empty()) {
        throw ConfigError("join: feature name list is empty");
    }
    if (std::set<std::string>(feature_names.begin(), feature_names.end()).size() !=
        feature_names.size()) {
        throw ConfigError("join: feature name list contains duplicates");
    }

    std::map<std::pair<std::string, Date>, double> target_by_key;
    for (const auto& d : daily) {
        target_by_key[{d.state, d.date}] = d.new_cases;
    }

    JoinResult result;
    result.panel.feature_names = feature_names;
    for (const auto& snap : snapshots) {
        const auto target = target_by_key.find({snap.state, snap.date});
        if (target == target_by_key.end()) {
            ++result.dropped_missing_target;
            continue;
        }
        PanelRow row;
        row.state = snap.state;
        row.date = snap.date;
        row.target = target->second;
        row.features.reserve(feature_names.size());
        bool complete = true;
        for (const auto& name : feature_names) {
            const auto it = snap.features.find(name);
            if (it == snap.features.end()) {
                complete = false;
                break;
            }
            row.features.push_back(it->second);
        }
        if (!complete) {
            ++result.dropped_missing_feature;
            continue;
        }
        result.panel.rows.push_back(std::move(row));
    }
    result.panel.sort_canonical();
    return result;
}

DateSplit split_by_date(const PanelDataset& ds, double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("split: train_fraction must lie in (0, 1)");
    }
    const std::vector<Date> dates = ds.distinct_dates();
    if (dates.size() < 2) {
        throw DataError("split: need at least 2 distinct dates, have " +
                        std::to_string(dates.size()));
    }
    std::size_t n_train =
        static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(dates.size())));
    if (n_train < 1) n_train = 1;
    if (n_train >= dates.size()) {
        throw DataError("split: train_fraction " + format_double(train_fraction) +
                        " leaves an empty test set");
    }

    DateSplit split;
    split.boundary = dates[n_train - 1];
    split.train.feature_names = ds.feature_names;
    split.test.feature_names = ds.feature_names;
    for (const auto& row : ds.rows) {
        if (row.date <= split.boundary) {
            split.train.rows.push_back(row);
        } else {
            split.test.rows.push_back(row);
        }
    }
    split.train.sort_canonical();
    split.test.sort_canonical();
    return split;
}

SynthResult generate_synthetic(const SynthConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);

    SynthResult result;
    auto& truth = result.truth;
    for (int s = 0; s < cfg.n_states; ++s) {
        std::string code;
        code += static_cast<char>('a' + s / 26);
        code += static_cast<char>('a' + s % 26);
        truth.states.push_back(code);
    }

    const std::size_t F = static_cast<std::size_t>(cfg.n_features);
    switch (cfg.layout) {
    case CoefficientLayout::Shared: {
        std::vector<double> coef(F, 0.0);
        for (int j = 0; j < cfg.n_informative; ++j) coef[j] = rng.uniform(0.5, 2.0);
        const double intercept = rng.uniform(0.0, 50.0);
        truth.coef.assign(truth.states.size(), coef);
        truth.intercepts.assign(truth.states.size(), intercept);
        break;
    }
    case CoefficientLayout::PerState: {
        for (std::size_t s = 0; s < truth.states.size(); ++s) {
            std::vector<double> coef(F, 0.0);
            for (int j = 0; j < cfg.n_informative; ++j) coef[j] = rng.uniform(0.5, 2.0);
            truth.coef.push_back(std::move(coef));
            truth.intercepts.push_back(rng.uniform(0.0, 50.0));
        }
        break;
    }
    case CoefficientLayout::Explicit:
        truth.coef = cfg.explicit_coef;
        truth.intercepts.assign(truth.states.size(), 0.0);
        break;
    }

    auto& panel = result.panel;
    if (cfg.n_features == 35) {
        panel.feature_names = canonical_feature_names();
    } else {
        for (int j = 0; j < cfg.n_features; ++j) {
            char buf[24];
            std::snprintf(buf, sizeof(buf), "feature_%02d", j + 1);
            panel.feature_names.emplace_back(buf);
        }
    }

    panel.rows.reserve(truth.states.size() * static_cast<std::size_t>(cfg.n_dates));
    for (std::size_t s = 0; s < truth.states.size(); ++s) {
        Date date = cfg.start_date;
        for (int d = 0; d < cfg.n_dates; ++d) {
            PanelRow row;
            row.state = truth.states[s];
            row.date = date;
            row.features.resize(F);
            double linear = truth.intercepts[s];
            for (std::size_t j = 0; j < F; ++j) {
                row.features[j] = rng.uniform(0.0, 100.0);
                linear += truth.coef[s][j] * row.features[j];
            }
            row.target = std::max(0.0, linear + rng.normal(0.0, cfg.noise_sd));
            panel.rows.push_back(std::move(row));
            date = add_days(date, 1);
        }
    }
    panel.sort_canonical();
    return result;
}

} // namespace surveycast
