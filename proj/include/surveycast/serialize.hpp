#pragma once

#include "surveycast/metrics.hpp"
#include "surveycast/orchestrate.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace surveycast {

// FNV-1a 64-bit content hash (hex string); manifests embed input hashes so
// stale results are detectable.
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::string fnv1a64_file_hex(const std::filesystem::path& path);

nlohmann::json run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);

nlohmann::json synth_config_to_json(const SynthConfig& cfg);

// Linear/tree/ensemble models serialize fully to JSON. A neural model
// serializes to a JSON spec plus a little-endian binary parameter blob with
// a named-tensor index; the blob lives next to the JSON file as
// <basename>.bin.
void save_model(const std::filesystem::path& dir, const std::string& basename,
                const AnyModel& model);
AnyModel load_model(const std::filesystem::path& dir, const std::string& basename);

void write_predictions_csv(std::ostream& out, const PredictionSet& preds);
PredictionSet read_predictions_csv(std::istream& in);

// Writes manifest.json, per-seed prediction CSVs, ranking CSVs and model
// dumps under dir. extra_manifest is merged into the manifest (input hashes,
// ingest stats, wall clock).
void save_suite(const std::filesystem::path& dir, const SuiteResult& suite,
                const nlohmann::json& extra_manifest);

struct LoadedSuite {
    nlohmann::json manifest;
    RunConfig config;
    std::vector<std::pair<std::uint64_t, PredictionSet>> predictions; // per seed
    std::vector<std::string> scopes; // "global" or state codes, sorted
};

LoadedSuite load_suite(const std::filesystem::path& dir);
AnyModel load_suite_model(const std::filesystem::path& dir, const std::string& scope,
                          std::uint64_t seed);

} // namespace surveycast
