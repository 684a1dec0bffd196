#pragma once

#include "surveycast/dataset.hpp"
#include "surveycast/orchestrate.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <string>

namespace surveycast {

// Flat line-oriented config: [section] headers, key = value lines, '#'
// comments. Throws ConfigError with line numbers on malformed input.
struct KeyValueFile {
    std::map<std::string, std::map<std::string, std::string>> sections;

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback) const;
};

KeyValueFile parse_key_values(std::istream& in);
KeyValueFile parse_key_values_file(const std::filesystem::path& path);

struct CliConfig {
    std::filesystem::path survey_csv;
    std::filesystem::path cases_csv;
    std::filesystem::path out_dir = "out";
    RunConfig run;
    SynthConfig synth;
    bool emit_plot = false;

    // report toggles
    bool report_per_state = true;
    bool report_importance = true;
    bool report_frequency = true;
};

// Builds a typed config from a parsed file; unknown sections or keys are a
// ConfigError so typos fail fast.
CliConfig load_cli_config(const std::filesystem::path& path);

struct IngestStats {
    std::size_t survey_rows = 0;
    std::size_t dropped_demographic = 0;
    std::size_t clamped_daily = 0;
    std::size_t dropped_missing_feature = 0;
    std::size_t dropped_missing_target = 0;
    std::vector<std::string> feature_names;
    Date min_date;
    Date max_date;

    nlohmann::json to_json() const;
};

// Full ingestion: survey csv -> demographic filter, cases csv -> daily new
// cases, inner join. Feature names are the survey file's feature columns in
// file order.
PanelDataset load_panel(const std::filesystem::path& survey_csv,
                        const std::filesystem::path& cases_csv, IngestStats& stats);

} // namespace surveycast
