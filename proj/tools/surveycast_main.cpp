// surveycast: predict daily state-level case counts from symptom-survey
// aggregates. Subcommands: synth, train, evaluate, sweep, importance.

#include "surveycast/config.hpp"
#include "surveycast/csv.hpp"
#include "surveycast/error.hpp"
#include "surveycast/ingest.hpp"
#include "surveycast/reports.hpp"
#include "surveycast/serialize.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

using namespace surveycast;
using nlohmann::json;
namespace fs = std::filesystem;

struct GlobalFlags {
    std::string config_path;
    std::string out_dir;
    std::optional<std::int64_t> seed;
    bool clamp_nonneg = false;
    bool quiet = false;
};

void info(const GlobalFlags& g, const std::string& msg) {
    if (!g.quiet) std::cerr << msg << '\n';
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

CliConfig load_config(const GlobalFlags& g) {
    if (g.config_path.empty()) {
        throw ConfigError("--config is required for this subcommand");
    }
    CliConfig cfg = load_cli_config(g.config_path);
    if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
    if (g.seed) {
        cfg.run.seeds = {static_cast<std::uint64_t>(*g.seed)};
        cfg.synth.seed = static_cast<std::uint64_t>(*g.seed);
    }
    if (g.clamp_nonneg) cfg.run.clamp_nonneg = true;
    return cfg;
}

void write_text_file(const fs::path& path, const std::string& contents) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << contents;
}

// ---------------------------------------------------------------- synth ---

int cmd_synth(const GlobalFlags& g) {
    const CliConfig cfg = load_config(g);
    cfg.synth.validate();
    fs::create_directories(cfg.out_dir);

    const SynthResult synth = generate_synthetic(cfg.synth);
    const PanelDataset& panel = synth.panel;

    // Survey CSV: aggregate-demographic rows, full precision percentages.
    {
        std::ofstream out(cfg.out_dir / fs::path("survey.csv"));
        if (!out) throw DataError("cannot write survey.csv");
        out << "state,date,gender,age_bucket";
        for (const auto& name : panel.feature_names) out << ',' << csv_escape(name);
        out << '\n';
        for (const auto& row : panel.rows) {
            out << row.state << ',' << row.date << ",all,all";
            for (const double v : row.features) out << ',' << format_double(v);
            out << '\n';
        }
    }

    // Cases CSV: integer cumulative counts whose first differences reproduce
    // the (rounded) panel targets. Each state gets a zero row one day before
    // its first panel date so the first panel date survives differencing.
    {
        std::ofstream out(cfg.out_dir / fs::path("cases.csv"));
        if (!out) throw DataError("cannot write cases.csv");
        out << "state,date,cumulative_cases\n";
        std::string current_state;
        long long cumulative = 0;
        for (const auto& row : panel.rows) {
            if (row.state != current_state) {
                current_state = row.state;
                cumulative = 0;
                out << row.state << ',' << add_days(row.date, -1) << ",0\n";
            }
            cumulative += static_cast<long long>(std::llround(row.target));
            out << row.state << ',' << row.date << ',' << cumulative << '\n';
        }
    }

    // Ground truth JSON.
    {
        json truth;
        truth["config"] = synth_config_to_json(cfg.synth);
        truth["states"] = synth.truth.states;
        truth["intercepts"] = synth.truth.intercepts;
        truth["coefficients"] = synth.truth.coef;
        truth["feature_names"] = panel.feature_names;
        write_text_file(cfg.out_dir / fs::path("truth.json"), truth.dump(2) + "\n");
    }

    // Manifest.
    {
        json manifest;
        manifest["kind"] = "synth";
        manifest["config"] = synth_config_to_json(cfg.synth);
        manifest["rows"] = panel.rows.size();
        manifest["outputs"] = {"survey.csv", "cases.csv", "truth.json"};
        manifest["wall_clock_utc"] = utc_now();
        write_text_file(cfg.out_dir / fs::path("manifest.json"), manifest.dump(2) + "\n");
    }

    info(g, "synth: wrote " + std::to_string(panel.rows.size()) + " panel rows to " +
                cfg.out_dir.string());
    return 0;
}

// ---------------------------------------------------------------- train ---

int cmd_train(const GlobalFlags& g) {
    const CliConfig cfg = load_config(g);
    cfg.run.validate();

    IngestStats stats;
    const PanelDataset panel = load_panel(cfg.survey_csv, cfg.cases_csv, stats);
    if (panel.rows.empty()) throw DataError("train: ingestion produced an empty panel");
    info(g, "train: panel has " + std::to_string(panel.rows.size()) + " rows, " +
                std::to_string(panel.n_features()) + " features");

    const SuiteResult suite = cfg.run.granularity == Granularity::Global
                                  ? run_global(panel, cfg.run)
                                  : run_local(panel, cfg.run);
    for (const auto& s : suite.skipped_states) {
        info(g, "train: skipped state " + s + " (fewer than " +
                    std::to_string(cfg.run.min_state_train_rows) + " training rows)");
    }

    json extra;
    extra["inputs"] = {
        {"survey", {{"path", cfg.survey_csv.string()},
                    {"fnv1a64", fnv1a64_file_hex(cfg.survey_csv)}}},
        {"cases", {{"path", cfg.cases_csv.string()},
                   {"fnv1a64", fnv1a64_file_hex(cfg.cases_csv)}}},
    };
    extra["ingest"] = stats.to_json();
    extra["wall_clock_utc"] = utc_now();
    save_suite(cfg.out_dir, suite, extra);

    for (const auto& sr : suite.per_seed) {
        info(g, "train: seed " + std::to_string(sr.seed) +
                    " mae=" + format_double(sr.mae) +
                    (sr.nmae ? " nmae=" + format_double(*sr.nmae) + "%" : ""));
    }
    info(g, "train: suite written to " + cfg.out_dir.string());
    return 0;
}

// ------------------------------------------------------------- evaluate ---

ErrorReport mean_per_state_report(
    const std::vector<std::pair<std::uint64_t, PredictionSet>>& predictions) {
    // ErrorReport per seed, then per-state means across seeds. n_s is
    // seed-independent, so the weighted-mean identity carries over.
    std::vector<ErrorReport> reports;
    reports.reserve(predictions.size());
    for (const auto& [seed, preds] : predictions) {
        (void)seed;
        reports.push_back(per_state_report(preds));
    }
    ErrorReport out = reports.front();
    if (reports.size() == 1) return out;
    const double inv = 1.0 / static_cast<double>(reports.size());
    out.overall_mae = 0.0;
    double overall_nmae = 0.0;
    bool have_nmae = true;
    for (auto& [state, se] : out.per_state) {
        se.mae = 0.0;
        se.nmae = std::nullopt;
    }
    for (const auto& r : reports) {
        out.overall_mae += r.overall_mae * inv;
        if (r.overall_nmae) {
            overall_nmae += *r.overall_nmae * inv;
        } else {
            have_nmae = false;
        }
        for (const auto& [state, se] : r.per_state) {
            auto& acc = out.per_state[state];
            acc.mae += se.mae * inv;
            if (se.nmae) acc.nmae = acc.nmae.value_or(0.0) + *se.nmae * inv;
        }
    }
    out.overall_nmae = have_nmae ? std::optional<double>(overall_nmae) : std::nullopt;
    return out;
}

int cmd_evaluate(const GlobalFlags& g, const std::string& suite_dir,
                 const std::string& compare_dir) {
    const LoadedSuite suite = load_suite(suite_dir);
    fs::path out_dir = g.out_dir.empty() ? fs::path(suite_dir) / "reports" : fs::path(g.out_dir);
    fs::create_directories(out_dir);

    std::vector<SeedResult> per_seed;
    for (const auto& [seed, preds] : suite.predictions) {
        SeedResult sr;
        sr.seed = seed;
        sr.predictions = preds;
        sr.mae = mae(preds);
        double target_sum = 0.0;
        for (const auto& r : preds.rows) target_sum += r.actual;
        if (target_sum > 0.0) sr.nmae = nmae(preds);
        per_seed.push_back(std::move(sr));
    }

    {
        std::ofstream out(out_dir / "per_seed.csv");
        write_per_seed_csv(out, per_seed);
    }
    {
        std::ofstream out(out_dir / "ci.csv");
        write_ci_csv(out, per_seed);
    }

    const ErrorReport report = mean_per_state_report(suite.predictions);
    {
        std::ofstream out(out_dir / "per_state.csv");
        write_error_report_csv(out, report);
    }
    info(g, "evaluate: overall mae=" + format_double(report.overall_mae) +
                (report.overall_nmae ? " nmae=" + format_double(*report.overall_nmae) + "%"
                                     : ""));

    if (!compare_dir.empty()) {
        const LoadedSuite other = load_suite(compare_dir);
        const ErrorReport other_report = mean_per_state_report(other.predictions);
        const CompareWins wins = count_lower_mae(report, other_report);
        if (wins.total == 0) {
            throw DataError("compare: the two suites share no states");
        }
        {
            std::ofstream out(out_dir / "compare.csv");
            write_compare_csv(out, report, other_report);
        }
        std::cout << "local wins: " << wins.wins << "/" << wins.total << " states\n";
    }

    {
        json manifest;
        manifest["kind"] = "evaluate";
        manifest["suite"] = std::string(suite_dir);
        manifest["compare"] = compare_dir;
        manifest["config"] = suite.manifest.at("config");
        json hashes;
        for (const auto& [seed, preds] : suite.predictions) {
            (void)preds;
            const std::string name = "predictions_seed_" + std::to_string(seed) + ".csv";
            hashes[name] = fnv1a64_file_hex(fs::path(suite_dir) / name);
        }
        manifest["input_hashes"] = hashes;
        manifest["outputs"] = compare_dir.empty()
                                  ? json::array({"per_seed.csv", "ci.csv", "per_state.csv"})
                                  : json::array({"per_seed.csv", "ci.csv", "per_state.csv",
                                                 "compare.csv"});
        manifest["wall_clock_utc"] = utc_now();
        write_text_file(out_dir / "evaluate_manifest.json", manifest.dump(2) + "\n");
    }

    info(g, "evaluate: reports written to " + out_dir.string());
    return 0;
}

// ---------------------------------------------------------------- sweep ---

int cmd_sweep(const GlobalFlags& g, const std::string& ks_arg) {
    const CliConfig cfg = load_config(g);

    std::vector<std::size_t> ks;
    {
        std::stringstream ss(ks_arg);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto v = parse_int(item);
            if (!v || *v < 1) throw ConfigError("sweep: bad k value '" + item + "'");
            ks.push_back(static_cast<std::size_t>(*v));
        }
    }
    if (ks.empty()) throw ConfigError("sweep: --ks list is empty");

    IngestStats stats;
    const PanelDataset panel = load_panel(cfg.survey_csv, cfg.cases_csv, stats);
    const auto curve = feature_sweep(panel, cfg.run, ks);

    fs::create_directories(cfg.out_dir);
    {
        std::ofstream out(cfg.out_dir / fs::path("sweep.csv"));
        write_sweep_csv(out, curve);
    }
    if (cfg.emit_plot) {
        std::ofstream out(cfg.out_dir / fs::path("sweep.svg"));
        write_sweep_svg(out, curve);
    }
    {
        json manifest;
        manifest["kind"] = "sweep";
        manifest["config"] = run_config_to_json(cfg.run);
        manifest["ks"] = ks;
        manifest["inputs"] = {
            {"survey", {{"path", cfg.survey_csv.string()},
                        {"fnv1a64", fnv1a64_file_hex(cfg.survey_csv)}}},
            {"cases", {{"path", cfg.cases_csv.string()},
                       {"fnv1a64", fnv1a64_file_hex(cfg.cases_csv)}}},
        };
        manifest["wall_clock_utc"] = utc_now();
        write_text_file(cfg.out_dir / fs::path("manifest.json"), manifest.dump(2) + "\n");
    }
    for (const auto& [k, m] : curve) {
        info(g, "sweep: k=" + std::to_string(k) + " mae=" + format_double(m));
    }
    return 0;
}

// ----------------------------------------------------------- importance ---

int cmd_importance(const GlobalFlags& g, const std::string& suite_dir,
                   std::vector<int> tops, const std::string& method_arg) {
    const LoadedSuite suite = load_suite(suite_dir);
    fs::path out_dir = g.out_dir.empty() ? fs::path(suite_dir) / "reports" : fs::path(g.out_dir);
    fs::create_directories(out_dir);

    if (tops.empty()) tops = {5, 15};
    std::sort(tops.begin(), tops.end());
    const int k_small = tops.front();
    const int k_large = tops.back();

    ImportanceMethod method = ImportanceMethod::Gain;
    if (method_arg == "permutation") {
        method = ImportanceMethod::Permutation;
    } else if (!method_arg.empty() && method_arg != "gain") {
        throw ConfigError("importance: method must be gain or permutation");
    }

    // The first seed's models define the importance tables: one model per
    // state (or the single global model).
    const std::uint64_t seed = suite.config.seeds.front();

    // Permutation needs the dataset; rebuild it from the manifest inputs.
    std::optional<PanelDataset> panel;
    std::optional<DateSplit> split;
    if (method == ImportanceMethod::Permutation) {
        const auto& inputs = suite.manifest.at("inputs");
        IngestStats stats;
        panel = load_panel(inputs.at("survey").at("path").get<std::string>(),
                           inputs.at("cases").at("path").get<std::string>(), stats);
        split = split_by_date(*panel, suite.config.train_fraction);
    }

    ImportanceTable table;
    table.method = method;
    for (const auto& scope : suite.scopes) {
        AnyModel model = load_suite_model(suite_dir, scope, seed);
        if (method == ImportanceMethod::Gain) {
            if (!model.supports_gain()) {
                throw ConfigError("importance: family " + family_name(suite.config.family) +
                                  " records no gains; rerun with --method permutation");
            }
            table.per_state[scope] = sorted_importance(model.gain());
        } else {
            // score each scope's model on its own test rows
            PanelDataset scope_test;
            scope_test.feature_names = split->test.feature_names;
            for (const auto& row : split->test.rows) {
                if (scope == "global" || row.state == scope) {
                    scope_test.rows.push_back(row);
                }
            }
            // project onto the model's training features, in model order
            const std::vector<std::string>* names = &model.feature_names();
            std::vector<std::string> neural_names;
            if (names->empty()) {
                // neural models bind features through the suite's ranking csv
                std::ifstream rin(fs::path(suite_dir) / ("ranking_" + scope + ".csv"));
                if (!rin) throw DataError("importance: missing ranking for scope " + scope);
                FeatureRanking r = read_ranking_csv(rin);
                const std::size_t k = suite.config.feature_k == 0
                                          ? r.entries.size()
                                          : suite.config.feature_k;
                for (std::size_t i = 0; i < k; ++i) neural_names.push_back(r.entries[i].name);
                names = &neural_names;
            }
            FeatureRanking as_ranking;
            for (const auto& n : *names) as_ranking.entries.push_back({n, 0.0, 0.0, false});
            const PanelDataset projected =
                select_top_k(scope_test, as_ranking, as_ranking.entries.size());
            auto predictor = [&model](const Matrix& X) { return model.predict(X); };
            table.per_state[scope] =
                permutation_importance(predictor, projected, 5, suite.config.seeds.front());
        }
    }

    {
        std::ofstream out(out_dir / "importance_top.csv");
        write_importance_csv(out, table, static_cast<std::size_t>(k_large));
    }

    const bool local_suite = suite.config.granularity == Granularity::Local;
    if (local_suite) {
        const FrequencyReport freq = top_k_frequency(table, k_small, k_large);
        std::ofstream out(out_dir / "frequency.csv");
        write_frequency_csv(out, freq);
    } else {
        info(g, "importance: global-only suite, frequency table skipped");
    }

    {
        json manifest;
        manifest["kind"] = "importance";
        manifest["suite"] = std::string(suite_dir);
        manifest["method"] = method == ImportanceMethod::Gain ? "gain" : "permutation";
        manifest["tops"] = json::array({k_small, k_large});
        manifest["seed_used"] = seed;
        manifest["config"] = suite.manifest.at("config");
        manifest["frequency_emitted"] = local_suite;
        manifest["wall_clock_utc"] = utc_now();
        write_text_file(out_dir / "importance_manifest.json", manifest.dump(2) + "\n");
    }

    info(g, "importance: reports written to " + out_dir.string());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"surveycast: daily case prediction from symptom-survey aggregates"};
    app.require_subcommand(1);

    GlobalFlags g;
    app.add_option("--config", g.config_path, "path to a key = value config file");
    app.add_option("--out", g.out_dir, "output directory (overrides config)");
    std::int64_t seed_opt = 0;
    auto* seed_flag = app.add_option("--seed", seed_opt, "override the seed list with one seed");
    app.add_flag("--clamp-nonneg", g.clamp_nonneg, "clamp predictions at zero before metrics");
    app.add_flag("--quiet", g.quiet, "suppress progress output");

    auto* synth = app.add_subcommand("synth", "generate a synthetic survey/cases dataset");
    synth->fallthrough();
    auto* train = app.add_subcommand("train", "train a model suite and write predictions");
    train->fallthrough();
    auto* evaluate = app.add_subcommand("evaluate", "emit error reports for a trained suite");
    evaluate->fallthrough();
    std::string suite_dir, compare_dir;
    evaluate->add_option("suite", suite_dir, "suite directory")->required();
    evaluate->add_option("--compare", compare_dir, "second suite for local-vs-global tables");
    auto* sweep = app.add_subcommand("sweep", "MAE vs feature-count curve");
    sweep->fallthrough();
    std::string ks = "1,5,15,35";
    sweep->add_option("--ks", ks, "comma-separated feature counts");
    auto* importance = app.add_subcommand("importance", "feature importance and frequency tables");
    importance->fallthrough();
    std::string imp_suite, imp_method;
    std::vector<int> imp_tops;
    importance->add_option("suite", imp_suite, "suite directory")->required();
    importance->add_option("--top", imp_tops, "top-k list sizes (repeatable)");
    importance->add_option("--method", imp_method, "gain (default) or permutation");

    CLI11_PARSE(app, argc, argv);
    if (*seed_flag) g.seed = seed_opt;

    try {
        if (app.got_subcommand(synth)) return cmd_synth(g);
        if (app.got_subcommand(train)) return cmd_train(g);
        if (app.got_subcommand(evaluate)) return cmd_evaluate(g, suite_dir, compare_dir);
        if (app.got_subcommand(sweep)) return cmd_sweep(g, ks);
        if (app.got_subcommand(importance)) {
            return cmd_importance(g, imp_suite, imp_tops, imp_method);
        }
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
