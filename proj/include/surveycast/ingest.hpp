#pragma once

#include "surveycast/dataset.hpp"

#include <istream>
#include <map>
#include <string>
#include <vector>

namespace surveycast {

// Maps raw survey column headers onto row roles. Columns not named here are
// treated as feature columns, optionally renamed through feature_renames.
struct ColumnManifest {
    std::string state_col = "state";
    std::string date_col = "date";
    std::string gender_col = "gender";        // optional in the file
    std::string age_col = "age_bucket";       // optional in the file
    std::map<std::string, std::string> feature_renames;
};

// Parses a survey CSV stream into snapshots. Percentages must lie in
// [0, 100]; unparseable numeric cells become missing values, not zeros.
// Throws DataError on a missing header, missing state/date column, bad
// date, out-of-range percentage (naming row and column) or duplicate
// (state, date, demographic) key.
std::vector<SurveySnapshot> parse_survey_table(std::istream& raw,
                                               const ColumnManifest& manifest = {});

// Parses a cases CSV (state, date, cumulative_cases) into per-state series
// sorted by date. Duplicate (state, date) rows are an error.
std::vector<CumulativeCaseSeries> parse_cases_table(std::istream& raw);

struct FilterResult {
    std::vector<SurveySnapshot> kept;
    std::size_t dropped = 0;
};

// Keeps only the all-genders/all-ages aggregate rows; the demographic
// splits of the target are not available, so split rows are dropped.
FilterResult filter_aggregate_demographics(std::vector<SurveySnapshot> snapshots);

struct DailyRecord {
    std::string state;
    Date date;
    double new_cases = 0.0;
};

struct DailyResult {
    std::vector<DailyRecord> records;
    std::size_t clamped = 0; // negative differences clamped to zero
};

// First-differences a cumulative series. The first date of the series is
// dropped (no predecessor); negative differences clamp to 0 and are tallied.
DailyResult cumulative_to_daily(const CumulativeCaseSeries& series);

struct JoinResult {
    PanelDataset panel;
    std::size_t dropped_missing_feature = 0;
    std::size_t dropped_missing_target = 0;
};

// Inner join of demographic-filtered snapshots with daily case records on
// (state, date). Rows missing any named feature or missing a target are
// dropped and counted. Output rows are in canonical (state, date) order.
JoinResult join_panel(const std::vector<SurveySnapshot>& snapshots,
                      const std::vector<DailyRecord>& daily,
                      const std::vector<std::string>& feature_names);

// Chronological split: the first floor(train_fraction * |dates|) distinct
// dates (at least one) train, the rest test. Same boundary for every state.
DateSplit split_by_date(const PanelDataset& ds, double train_fraction);

struct SynthResult {
    PanelDataset panel;
    SynthCoefficients truth;
};

// Generates a synthetic panel with known per-state linear ground truth:
// target = max(0, intercept_s + coef_s . x + gaussian(0, noise_sd)).
// Deterministic for a fixed config.
SynthResult generate_synthetic(const SynthConfig& cfg);

} // namespace surveycast
