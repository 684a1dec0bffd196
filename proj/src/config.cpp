#include "surveycast/config.hpp"

#include "surveycast/csv.hpp"
#include "surveycast/error.hpp"
#include "surveycast/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace surveycast {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

} // namespace

bool KeyValueFile::has(const std::string& section, const std::string& key) const {
    const auto s = sections.find(section);
    return s != sections.end() && s->second.count(key) > 0;
}

std::string KeyValueFile::get(const std::string& section, const std::string& key,
                              const std::string& fallback) const {
    const auto s = sections.find(section);
    if (s == sections.end()) return fallback;
    const auto k = s->second.find(key);
    return k == s->second.end() ? fallback : k->second;
}

KeyValueFile parse_key_values(std::istream& in) {
    KeyValueFile file;
    std::string line;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": unterminated section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) {
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": empty section name");
            }
            file.sections[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        }
        if (section.empty()) {
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": key outside any [section]");
        }
        if (!file.sections[section].emplace(key, value).second) {
            throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" +
                              key + "'");
        }
    }
    return file;
}

KeyValueFile parse_key_values_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    return parse_key_values(in);
}

namespace {

double to_double(const std::string& section, const std::string& key, const std::string& v) {
    const auto d = parse_double(v);
    if (!d) throw ConfigError("config [" + section + "] " + key + ": not a number: " + v);
    return *d;
}

long long to_int(const std::string& section, const std::string& key, const std::string& v) {
    const auto i = parse_int(v);
    if (!i) throw ConfigError("config [" + section + "] " + key + ": not an integer: " + v);
    return *i;
}

bool to_bool(const std::string& section, const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config [" + section + "] " + key + ": not a boolean: " + v);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(v);
    while (std::getline(ss, cur, ',')) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

std::vector<int> to_int_list(const std::string& section, const std::string& key,
                             const std::string& v) {
    std::vector<int> out;
    for (const auto& item : split_list(v)) {
        out.push_back(static_cast<int>(to_int(section, key, item)));
    }
    return out;
}

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"data", {"survey", "cases", "output"}},
        {"run",
         {"family", "granularity", "feature_k", "train_fraction", "seeds",
          "min_state_train_rows", "clamp_nonneg"}},
        {"tree",
         {"max_depth", "min_samples_leaf", "n_rounds", "shrinkage", "lambda", "gamma"}},
        {"neural",
         {"optimizer", "lr", "beta1", "beta2", "eps", "epochs", "batch_size",
          "standardize_features", "standardize_target", "mlp_hidden", "cnn_channels",
          "resnet_channels"}},
        {"synth",
         {"n_states", "n_dates", "n_features", "n_informative", "coefficients", "noise_sd",
          "seed", "start_date"}},
        {"report", {"per_state", "importance", "frequency", "plot"}},
    };
    return keys;
}

} // namespace

CliConfig load_cli_config(const std::filesystem::path& path) {
    const KeyValueFile file = parse_key_values_file(path);

    const auto& known = known_keys();
    for (const auto& [section, kv] : file.sections) {
        const auto it = known.find(section);
        if (it == known.end()) {
            throw ConfigError("config: unknown section [" + section + "]");
        }
        for (const auto& [key, value] : kv) {
            (void)value;
            if (!it->second.count(key)) {
                throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
            }
        }
    }

    CliConfig cfg;
    if (file.has("data", "survey")) cfg.survey_csv = file.get("data", "survey", "");
    if (file.has("data", "cases")) cfg.cases_csv = file.get("data", "cases", "");
    if (file.has("data", "output")) cfg.out_dir = file.get("data", "output", "out");

    auto& run = cfg.run;
    run.family = family_from_name(file.get("run", "family", "gbdt"));
    const std::string gran = file.get("run", "granularity", "global");
    if (gran == "global") {
        run.granularity = Granularity::Global;
    } else if (gran == "local") {
        run.granularity = Granularity::Local;
    } else {
        throw ConfigError("config [run] granularity: must be global or local, got " + gran);
    }
    const std::string k = file.get("run", "feature_k", "all");
    if (k == "all") {
        run.feature_k = 0;
    } else {
        const long long kv = to_int("run", "feature_k", k);
        if (kv < 1) throw ConfigError("config [run] feature_k: must be >= 1 or 'all'");
        run.feature_k = static_cast<std::size_t>(kv);
    }
    run.train_fraction = to_double("run", "train_fraction",
                                   file.get("run", "train_fraction", "0.8"));
    if (file.has("run", "seeds")) {
        run.seeds.clear();
        for (const auto& s : split_list(file.get("run", "seeds", ""))) {
            run.seeds.push_back(static_cast<std::uint64_t>(to_int("run", "seeds", s)));
        }
    }
    run.min_state_train_rows = static_cast<std::size_t>(to_int(
        "run", "min_state_train_rows", file.get("run", "min_state_train_rows", "10")));
    run.clamp_nonneg =
        to_bool("run", "clamp_nonneg", file.get("run", "clamp_nonneg", "false"));

    auto& tree = run.tree;
    tree.max_depth =
        static_cast<int>(to_int("tree", "max_depth", file.get("tree", "max_depth", "4")));
    tree.min_samples_leaf = static_cast<int>(to_int(
        "tree", "min_samples_leaf", file.get("tree", "min_samples_leaf", "2")));
    tree.n_rounds =
        static_cast<int>(to_int("tree", "n_rounds", file.get("tree", "n_rounds", "200")));
    tree.shrinkage = to_double("tree", "shrinkage", file.get("tree", "shrinkage", "0.1"));
    tree.lambda = to_double("tree", "lambda", file.get("tree", "lambda", "1.0"));
    tree.gamma = to_double("tree", "gamma", file.get("tree", "gamma", "0.0"));

    auto& nn = run.neural;
    const std::string opt = file.get("neural", "optimizer", "adam");
    if (opt == "adam") {
        nn.options.optimizer = TrainOptions::Optimizer::Adam;
    } else if (opt == "sgd") {
        nn.options.optimizer = TrainOptions::Optimizer::Sgd;
    } else {
        throw ConfigError("config [neural] optimizer: must be adam or sgd, got " + opt);
    }
    nn.options.lr = to_double("neural", "lr", file.get("neural", "lr", "0.001"));
    nn.options.beta1 = to_double("neural", "beta1", file.get("neural", "beta1", "0.9"));
    nn.options.beta2 = to_double("neural", "beta2", file.get("neural", "beta2", "0.999"));
    nn.options.eps = to_double("neural", "eps", file.get("neural", "eps", "1e-8"));
    nn.options.epochs =
        static_cast<int>(to_int("neural", "epochs", file.get("neural", "epochs", "200")));
    nn.options.batch_size = static_cast<int>(
        to_int("neural", "batch_size", file.get("neural", "batch_size", "32")));
    nn.options.standardize_features = to_bool(
        "neural", "standardize_features", file.get("neural", "standardize_features", "true"));
    nn.options.standardize_target = to_bool(
        "neural", "standardize_target", file.get("neural", "standardize_target", "true"));
    if (file.has("neural", "mlp_hidden")) {
        nn.mlp_hidden = to_int_list("neural", "mlp_hidden", file.get("neural", "mlp_hidden", ""));
    }
    if (file.has("neural", "cnn_channels")) {
        nn.cnn_channels =
            to_int_list("neural", "cnn_channels", file.get("neural", "cnn_channels", ""));
    }
    if (file.has("neural", "resnet_channels")) {
        nn.resnet_channels = to_int_list("neural", "resnet_channels",
                                         file.get("neural", "resnet_channels", ""));
    }

    auto& synth = cfg.synth;
    synth.n_states =
        static_cast<int>(to_int("synth", "n_states", file.get("synth", "n_states", "5")));
    synth.n_dates =
        static_cast<int>(to_int("synth", "n_dates", file.get("synth", "n_dates", "60")));
    synth.n_features = static_cast<int>(
        to_int("synth", "n_features", file.get("synth", "n_features", "35")));
    synth.n_informative = static_cast<int>(
        to_int("synth", "n_informative", file.get("synth", "n_informative", "15")));
    const std::string layout = file.get("synth", "coefficients", "shared");
    if (layout == "shared") {
        synth.layout = CoefficientLayout::Shared;
    } else if (layout == "per_state") {
        synth.layout = CoefficientLayout::PerState;
    } else {
        throw ConfigError("config [synth] coefficients: must be shared or per_state, got " +
                          layout);
    }
    synth.noise_sd = to_double("synth", "noise_sd", file.get("synth", "noise_sd", "0"));
    synth.seed = static_cast<std::uint64_t>(
        to_int("synth", "seed", file.get("synth", "seed", "0")));
    synth.start_date = file.get("synth", "start_date", "2020-04-06");

    cfg.report_per_state =
        to_bool("report", "per_state", file.get("report", "per_state", "true"));
    cfg.report_importance =
        to_bool("report", "importance", file.get("report", "importance", "true"));
    cfg.report_frequency =
        to_bool("report", "frequency", file.get("report", "frequency", "true"));
    cfg.emit_plot = to_bool("report", "plot", file.get("report", "plot", "false"));

    return cfg;
}

nlohmann::json IngestStats::to_json() const {
    nlohmann::json j;
    j["survey_rows"] = survey_rows;
    j["dropped_demographic"] = dropped_demographic;
    j["clamped_daily"] = clamped_daily;
    j["dropped_missing_feature"] = dropped_missing_feature;
    j["dropped_missing_target"] = dropped_missing_target;
    j["feature_names"] = feature_names;
    j["date_range"] = {min_date, max_date};
    return j;
}

PanelDataset load_panel(const std::filesystem::path& survey_csv,
                        const std::filesystem::path& cases_csv, IngestStats& stats) {
    std::ifstream survey_in(survey_csv);
    if (!survey_in) throw DataError("cannot open survey file: " + survey_csv.string());
    std::vector<SurveySnapshot> snapshots = parse_survey_table(survey_in);
    stats.survey_rows = snapshots.size();

    FilterResult filtered = filter_aggregate_demographics(std::move(snapshots));
    stats.dropped_demographic = filtered.dropped;

    // feature universe = every feature column seen, in sorted order
    std::set<std::string> name_set;
    for (const auto& s : filtered.kept) {
        for (const auto& [name, v] : s.features) {
            (void)v;
            name_set.insert(name);
        }
    }
    std::vector<std::string> feature_names(name_set.begin(), name_set.end());

    std::ifstream cases_in(cases_csv);
    if (!cases_in) throw DataError("cannot open cases file: " + cases_csv.string());
    const auto series = parse_cases_table(cases_in);
    std::vector<DailyRecord> daily;
    for (const auto& s : series) {
        DailyResult r = cumulative_to_daily(s);
        stats.clamped_daily += r.clamped;
        daily.insert(daily.end(), r.records.begin(), r.records.end());
    }

    JoinResult joined = join_panel(filtered.kept, daily, feature_names);
    stats.dropped_missing_feature = joined.dropped_missing_feature;
    stats.dropped_missing_target = joined.dropped_missing_target;
    stats.feature_names = joined.panel.feature_names;
    if (!joined.panel.rows.empty()) {
        const auto dates = joined.panel.distinct_dates();
        stats.min_date = dates.front();
        stats.max_date = dates.back();
    }
    return std::move(joined.panel);
}

} // namespace surveycast
