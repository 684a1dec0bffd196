#include "surveycast/serialize.hpp"

#include "surveycast/csv.hpp"
#include "surveycast/error.hpp"
#include "surveycast/reports.hpp"

#include <fstream>
#include <sstream>

namespace surveycast {

using nlohmann::json;

std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string fnv1a64_file_hex(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file for hashing: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string bytes = buf.str();
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
    return out;
}

namespace {

std::string granularity_name(Granularity g) {
    return g == Granularity::Global ? "global" : "local";
}

Granularity granularity_from_name(const std::string& s) {
    if (s == "global") return Granularity::Global;
    if (s == "local") return Granularity::Local;
    throw ConfigError("unknown granularity '" + s + "'");
}

std::string optimizer_name(TrainOptions::Optimizer o) {
    return o == TrainOptions::Optimizer::Adam ? "adam" : "sgd";
}

} // namespace

json run_config_to_json(const RunConfig& cfg) {
    json j;
    j["family"] = family_name(cfg.family);
    j["granularity"] = granularity_name(cfg.granularity);
    if (cfg.feature_k == 0) {
        j["feature_k"] = "all";
    } else {
        j["feature_k"] = cfg.feature_k;
    }
    j["train_fraction"] = cfg.train_fraction;
    j["seeds"] = cfg.seeds;
    j["min_state_train_rows"] = cfg.min_state_train_rows;
    j["clamp_nonneg"] = cfg.clamp_nonneg;
    j["tree"] = {{"max_depth", cfg.tree.max_depth},
                 {"min_samples_leaf", cfg.tree.min_samples_leaf},
                 {"n_rounds", cfg.tree.n_rounds},
                 {"shrinkage", cfg.tree.shrinkage},
                 {"lambda", cfg.tree.lambda},
                 {"gamma", cfg.tree.gamma}};
    j["neural"] = {{"optimizer", optimizer_name(cfg.neural.options.optimizer)},
                   {"lr", cfg.neural.options.lr},
                   {"beta1", cfg.neural.options.beta1},
                   {"beta2", cfg.neural.options.beta2},
                   {"eps", cfg.neural.options.eps},
                   {"epochs", cfg.neural.options.epochs},
                   {"batch_size", cfg.neural.options.batch_size},
                   {"standardize_features", cfg.neural.options.standardize_features},
                   {"standardize_target", cfg.neural.options.standardize_target},
                   {"mlp_hidden", cfg.neural.mlp_hidden},
                   {"cnn_channels", cfg.neural.cnn_channels},
                   {"resnet_channels", cfg.neural.resnet_channels}};
    return j;
}

RunConfig run_config_from_json(const json& j) {
    RunConfig cfg;
    cfg.family = family_from_name(j.at("family").get<std::string>());
    cfg.granularity = granularity_from_name(j.at("granularity").get<std::string>());
    if (j.at("feature_k").is_string()) {
        cfg.feature_k = 0;
    } else {
        cfg.feature_k = j.at("feature_k").get<std::size_t>();
    }
    cfg.train_fraction = j.at("train_fraction").get<double>();
    cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    cfg.min_state_train_rows = j.at("min_state_train_rows").get<std::size_t>();
    cfg.clamp_nonneg = j.at("clamp_nonneg").get<bool>();
    const json& t = j.at("tree");
    cfg.tree.max_depth = t.at("max_depth").get<int>();
    cfg.tree.min_samples_leaf = t.at("min_samples_leaf").get<int>();
    cfg.tree.n_rounds = t.at("n_rounds").get<int>();
    cfg.tree.shrinkage = t.at("shrinkage").get<double>();
    cfg.tree.lambda = t.at("lambda").get<double>();
    cfg.tree.gamma = t.at("gamma").get<double>();
    const json& n = j.at("neural");
    cfg.neural.options.optimizer = n.at("optimizer").get<std::string>() == "sgd"
                                       ? TrainOptions::Optimizer::Sgd
                                       : TrainOptions::Optimizer::Adam;
    cfg.neural.options.lr = n.at("lr").get<double>();
    cfg.neural.options.beta1 = n.at("beta1").get<double>();
    cfg.neural.options.beta2 = n.at("beta2").get<double>();
    cfg.neural.options.eps = n.at("eps").get<double>();
    cfg.neural.options.epochs = n.at("epochs").get<int>();
    cfg.neural.options.batch_size = n.at("batch_size").get<int>();
    cfg.neural.options.standardize_features = n.at("standardize_features").get<bool>();
    cfg.neural.options.standardize_target = n.at("standardize_target").get<bool>();
    cfg.neural.mlp_hidden = n.at("mlp_hidden").get<std::vector<int>>();
    cfg.neural.cnn_channels = n.at("cnn_channels").get<std::vector<int>>();
    cfg.neural.resnet_channels = n.at("resnet_channels").get<std::vector<int>>();
    return cfg;
}

json synth_config_to_json(const SynthConfig& cfg) {
    json j;
    j["n_states"] = cfg.n_states;
    j["n_dates"] = cfg.n_dates;
    j["n_features"] = cfg.n_features;
    j["n_informative"] = cfg.n_informative;
    switch (cfg.layout) {
    case CoefficientLayout::Shared: j["coefficients"] = "shared"; break;
    case CoefficientLayout::PerState: j["coefficients"] = "per_state"; break;
    case CoefficientLayout::Explicit: j["coefficients"] = "explicit"; break;
    }
    j["noise_sd"] = cfg.noise_sd;
    j["seed"] = cfg.seed;
    j["start_date"] = cfg.start_date;
    return j;
}

namespace {

json tree_nodes_to_json(const RegressionTree& tree) {
    json nodes = json::array();
    for (const auto& n : tree.nodes) {
        nodes.push_back({n.feature, n.threshold, n.gain, n.value, n.n_rows, n.left, n.right});
    }
    return nodes;
}

RegressionTree tree_from_json(const json& nodes, std::vector<std::string> names) {
    RegressionTree tree;
    tree.feature_names = std::move(names);
    for (const auto& n : nodes) {
        TreeNode node;
        node.feature = n.at(0).get<int>();
        node.threshold = n.at(1).get<double>();
        node.gain = n.at(2).get<double>();
        node.value = n.at(3).get<double>();
        node.n_rows = n.at(4).get<long long>();
        node.left = n.at(5).get<int>();
        node.right = n.at(6).get<int>();
        tree.nodes.push_back(node);
    }
    return tree;
}

json layer_spec_to_json(const LayerSpec& ls) {
    json j;
    switch (ls.kind) {
    case LayerKind::Dense:
        j["kind"] = "dense";
        j["out_units"] = ls.out_units;
        break;
    case LayerKind::Conv1d:
        j["kind"] = "conv1d";
        j["out_channels"] = ls.out_channels;
        j["kernel_size"] = ls.kernel_size;
        j["stride"] = ls.stride;
        j["padding"] = ls.padding;
        break;
    case LayerKind::Relu: j["kind"] = "relu"; break;
    case LayerKind::BatchNorm1d: j["kind"] = "batchnorm1d"; break;
    case LayerKind::GlobalAvgPool: j["kind"] = "global_avg_pool"; break;
    case LayerKind::Dropout:
        j["kind"] = "dropout";
        j["rate"] = ls.rate;
        break;
    case LayerKind::ResidualBlock:
        j["kind"] = "residual_block";
        j["out_channels"] = ls.out_channels;
        j["stride"] = ls.stride;
        break;
    }
    return j;
}

LayerSpec layer_spec_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "dense") return LayerSpec::dense(j.at("out_units").get<int>());
    if (kind == "conv1d") {
        return LayerSpec::conv1d(j.at("out_channels").get<int>(),
                                 j.at("kernel_size").get<int>(), j.at("stride").get<int>(),
                                 j.at("padding").get<int>());
    }
    if (kind == "relu") return LayerSpec::relu();
    if (kind == "batchnorm1d") return LayerSpec::batchnorm1d();
    if (kind == "global_avg_pool") return LayerSpec::global_avg_pool();
    if (kind == "dropout") return LayerSpec::dropout(j.at("rate").get<double>());
    if (kind == "residual_block") {
        return LayerSpec::residual_block(j.at("out_channels").get<int>(),
                                         j.at("stride").get<int>());
    }
    throw DataError("model json: unknown layer kind '" + kind + "'");
}

json network_spec_to_json(const NetworkSpec& spec) {
    json j;
    j["in_channels"] = spec.in_channels;
    j["in_length"] = spec.in_length;
    j["seed"] = spec.seed;
    j["layers"] = json::array();
    for (const auto& ls : spec.layers) j["layers"].push_back(layer_spec_to_json(ls));
    return j;
}

NetworkSpec network_spec_from_json(const json& j) {
    NetworkSpec spec;
    spec.in_channels = j.at("in_channels").get<std::size_t>();
    spec.in_length = j.at("in_length").get<std::size_t>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& lj : j.at("layers")) spec.layers.push_back(layer_spec_from_json(lj));
    return spec;
}

void write_le_doubles(std::ostream& out, const std::vector<double>& v) {
    // assumes a little-endian host (x86-64 / aarch64); asserted in save_model
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

bool host_is_little_endian() {
    const std::uint16_t probe = 1;
    return *reinterpret_cast<const unsigned char*>(&probe) == 1;
}

} // namespace

void save_model(const std::filesystem::path& dir, const std::string& basename,
                const AnyModel& model) {
    std::filesystem::create_directories(dir);
    json j;
    if (const auto* lin = std::get_if<LinearModel>(&model.model)) {
        j["kind"] = "linear";
        j["feature_names"] = lin->feature_names;
        j["intercept"] = lin->intercept;
        j["coefficients"] = lin->coefficients;
    } else if (const auto* tree = std::get_if<RegressionTree>(&model.model)) {
        j["kind"] = "tree";
        j["feature_names"] = tree->feature_names;
        j["nodes"] = tree_nodes_to_json(*tree);
    } else if (const auto* ens = std::get_if<BoostedEnsemble>(&model.model)) {
        j["kind"] = "boosted";
        j["mode"] = ens->mode == BoostMode::FirstOrder ? "first_order" : "second_order";
        j["feature_names"] = ens->feature_names;
        j["base_prediction"] = ens->base_prediction;
        j["shrinkage"] = ens->shrinkage;
        j["lambda"] = ens->lambda;
        j["gamma"] = ens->gamma;
        j["trees"] = json::array();
        for (const auto& tree : ens->trees) j["trees"].push_back(tree_nodes_to_json(tree));
    } else if (const auto* net = std::get_if<TrainedNetwork>(&model.model)) {
        if (!host_is_little_endian()) {
            throw DataError("save_model: parameter blobs require a little-endian host");
        }
        j["kind"] = "neural";
        j["spec"] = network_spec_to_json(net->spec);
        j["normalization"] = {{"x_mean", net->normalization.x_mean},
                              {"x_sd", net->normalization.x_sd},
                              {"y_mean", net->normalization.y_mean},
                              {"y_sd", net->normalization.y_sd},
                              {"x_on", net->normalization.x_on},
                              {"y_on", net->normalization.y_on}};
        j["blob"] = basename + ".bin";
        json index = json::array();
        std::ofstream blob(dir / (basename + ".bin"), std::ios::binary);
        if (!blob) throw DataError("cannot write blob for model " + basename);
        std::size_t offset = 0;
        for (const auto& [name, tensor] : net->parameters) {
            index.push_back({{"name", name},
                             {"shape", tensor.shape},
                             {"offset", offset},
                             {"count", tensor.v.size()}});
            write_le_doubles(blob, tensor.v);
            offset += tensor.v.size();
        }
        j["tensors"] = index;
    }
    std::ofstream out(dir / (basename + ".json"));
    if (!out) throw DataError("cannot write model file " + basename + ".json");
    out << j.dump(2) << '\n';
}

AnyModel load_model(const std::filesystem::path& dir, const std::string& basename) {
    std::ifstream in(dir / (basename + ".json"));
    if (!in) throw DataError("cannot open model file " + (dir / basename).string() + ".json");
    json j;
    in >> j;

    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "linear") {
        LinearModel m;
        m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        m.intercept = j.at("intercept").get<double>();
        m.coefficients = j.at("coefficients").get<std::vector<double>>();
        return {std::move(m)};
    }
    if (kind == "tree") {
        return {tree_from_json(j.at("nodes"),
                               j.at("feature_names").get<std::vector<std::string>>())};
    }
    if (kind == "boosted") {
        BoostedEnsemble ens;
        ens.mode = j.at("mode").get<std::string>() == "second_order"
                       ? BoostMode::SecondOrder
                       : BoostMode::FirstOrder;
        ens.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        ens.base_prediction = j.at("base_prediction").get<double>();
        ens.shrinkage = j.at("shrinkage").get<double>();
        ens.lambda = j.at("lambda").get<double>();
        ens.gamma = j.at("gamma").get<double>();
        for (const auto& t : j.at("trees")) {
            ens.trees.push_back(tree_from_json(t, ens.feature_names));
        }
        return {std::move(ens)};
    }
    if (kind == "neural") {
        TrainedNetwork net;
        net.spec = network_spec_from_json(j.at("spec"));
        const json& nj = j.at("normalization");
        net.normalization.x_mean = nj.at("x_mean").get<std::vector<double>>();
        net.normalization.x_sd = nj.at("x_sd").get<std::vector<double>>();
        net.normalization.y_mean = nj.at("y_mean").get<double>();
        net.normalization.y_sd = nj.at("y_sd").get<double>();
        net.normalization.x_on = nj.at("x_on").get<bool>();
        net.normalization.y_on = nj.at("y_on").get<bool>();

        std::ifstream blob(dir / j.at("blob").get<std::string>(), std::ios::binary);
        if (!blob) throw DataError("cannot open parameter blob for model " + basename);
        for (const auto& tj : j.at("tensors")) {
            Tensor t(tj.at("shape").get<std::vector<std::size_t>>());
            const std::size_t count = tj.at("count").get<std::size_t>();
            if (count != t.v.size()) throw DataError("model blob: tensor size mismatch");
            blob.seekg(static_cast<std::streamoff>(tj.at("offset").get<std::size_t>() *
                                                   sizeof(double)));
            blob.read(reinterpret_cast<char*>(t.v.data()),
                      static_cast<std::streamsize>(count * sizeof(double)));
            if (!blob) throw DataError("model blob: truncated read");
            net.parameters[tj.at("name").get<std::string>()] = std::move(t);
        }
        return {std::move(net)};
    }
    throw DataError("model json: unknown kind '" + kind + "'");
}

void write_predictions_csv(std::ostream& out, const PredictionSet& preds) {
    out << "state,date,predicted,actual\n";
    for (const auto& r : preds.rows) {
        out << r.state << ',' << r.date << ',' << format_double(r.predicted) << ','
            << format_double(r.actual) << '\n';
    }
}

PredictionSet read_predictions_csv(std::istream& in) {
    const CsvTable table = read_csv(in);
    const auto state = table.column("state");
    const auto date = table.column("date");
    const auto predicted = table.column("predicted");
    const auto actual = table.column("actual");
    if (!state || !date || !predicted || !actual) {
        throw DataError("predictions csv: required columns are state,date,predicted,actual");
    }
    PredictionSet preds;
    for (const auto& row : table.rows) {
        const auto p = parse_double(row[*predicted]);
        const auto a = parse_double(row[*actual]);
        if (!p || !a) throw DataError("predictions csv: bad numeric cell");
        preds.rows.push_back({row[*state], row[*date], *p, *a});
    }
    return preds;
}

void save_suite(const std::filesystem::path& dir, const SuiteResult& suite,
                const json& extra_manifest) {
    std::filesystem::create_directories(dir);

    json manifest;
    manifest["kind"] = "suite";
    manifest["format_version"] = 1;
    manifest["config"] = run_config_to_json(suite.config);
    manifest["boundary"] = suite.boundary;
    manifest["skipped_states"] = suite.skipped_states;
    json scopes = json::array();
    for (const auto& [scope, by_seed] : suite.models) scopes.push_back(scope);
    manifest["scopes"] = scopes;
    manifest["defaults_in_force"] = {
        {"ci_formula", "two-sided Student t over run-level metrics"},
        {"ranking_split", "train_only"},
        {"local_ranking", "per_state"},
        {"split_rule", "first floor(fraction * n_dates) distinct dates, minimum 1"},
        {"negative_daily_diff", "clamped to 0 with tally"},
        {"first_series_date", "dropped"},
        {"missing_feature_rows", "dropped"},
    };
    for (const auto& [key, value] : extra_manifest.items()) manifest[key] = value;

    {
        std::ofstream out(dir / "manifest.json");
        if (!out) throw DataError("cannot write manifest.json");
        out << manifest.dump(2) << '\n';
    }

    for (const auto& sr : suite.per_seed) {
        std::ofstream out(dir / ("predictions_seed_" + std::to_string(sr.seed) + ".csv"));
        if (!out) throw DataError("cannot write prediction csv");
        write_predictions_csv(out, sr.predictions);
    }

    for (const auto& [scope, ranking] : suite.rankings) {
        std::ofstream out(dir / ("ranking_" + scope + ".csv"));
        if (!out) throw DataError("cannot write ranking csv");
        write_ranking_csv(out, ranking);
    }

    for (const auto& [scope, by_seed] : suite.loss_curves) {
        for (const auto& [seed, curve] : by_seed) {
            std::ofstream out(dir /
                              ("loss_" + scope + "_seed_" + std::to_string(seed) + ".csv"));
            if (!out) throw DataError("cannot write loss curve csv");
            write_loss_curve_csv(out, curve);
        }
    }

    for (const auto& [scope, by_seed] : suite.models) {
        for (const auto& [seed, model] : by_seed) {
            save_model(dir / "models", scope + "_seed_" + std::to_string(seed), model);
        }
    }
}

LoadedSuite load_suite(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw DataError("cannot open " + (dir / "manifest.json").string());
    LoadedSuite suite;
    in >> suite.manifest;
    if (suite.manifest.value("kind", "") != "suite") {
        throw DataError("manifest.json: not a suite manifest");
    }
    suite.config = run_config_from_json(suite.manifest.at("config"));
    for (const auto& s : suite.manifest.at("scopes")) {
        suite.scopes.push_back(s.get<std::string>());
    }
    for (const std::uint64_t seed : suite.config.seeds) {
        std::ifstream pin(dir / ("predictions_seed_" + std::to_string(seed) + ".csv"));
        if (!pin) throw DataError("suite: missing predictions for seed " + std::to_string(seed));
        suite.predictions.emplace_back(seed, read_predictions_csv(pin));
    }
    return suite;
}

AnyModel load_suite_model(const std::filesystem::path& dir, const std::string& scope,
                          std::uint64_t seed) {
    return load_model(dir / "models", scope + "_seed_" + std::to_string(seed));
}

} // namespace surveycast
