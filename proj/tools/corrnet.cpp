// corrnet command-line front end.
//
// Subcommands: synth, embed, dimension, volume, network, mst, rolling,
// replay. Every run writes a manifest.json describing the exact
// parameters; `corrnet replay --manifest <file>` reproduces the outputs
// byte for byte. All computation happens before any file is written, so
// a failing run leaves no partial artifacts.

#include "corrnet/common.hpp"
#include "corrnet/geometry.hpp"
#include "corrnet/io.hpp"
#include "corrnet/network.hpp"
#include "corrnet/panel.hpp"
#include "corrnet/rolling.hpp"
#include "corrnet/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using corrnet::Json;
using corrnet::ValidationError;

namespace {

struct Options {
    std::string input;
    std::string format = "long";
    std::int64_t window_start = -1;   // -1 = not set
    std::int64_t window_length = -1;  // -1 = full panel
    std::string dim = "3";            // positive integer or "auto"
    std::size_t permutations = 100;
    double quantile = 0.95;
    std::uint64_t seed = 0;
    std::string out;
    bool drop_constant = false;
    std::string labels_path;
    std::string null_model = "permutation";
    std::size_t threads = 1;
    // rolling
    std::size_t step = 1;
    // network
    std::size_t topk = 10;
    bool topk_explicit = false;     // --topk given (explicit values are range-checked)
    bool mst_dim_explicit = false;  // mst --dim given (default is the full distance matrix)
    // synth
    std::size_t entities = 24;
    std::size_t periods = 110;
    std::size_t factors = 3;
    double noise = 0.3;
    std::string ramp;  // "start:end" switches to the regime generator
    std::vector<std::string> eccentric;
    std::string ids;   // comma-separated entity ids
};

struct Artifacts {
    std::map<std::string, std::string> files;  // name -> content
    Json resolved = Json::object();
    std::vector<std::string> notes;            // printed to stderr after writing
};

corrnet::Labels load_labels_file(const Options& o) {
    if (o.labels_path.empty()) return {};
    std::ifstream in(o.labels_path);
    if (!in) throw ValidationError("cannot open labels file '" + o.labels_path + "'");
    return corrnet::load_labels(in);
}

corrnet::Panel load_input(const Options& o, bool apply_constant_policy, std::vector<std::string>* dropped) {
    if (o.input.empty()) throw ValidationError("--input is required");
    std::ifstream in(o.input, std::ios::binary);
    if (!in) throw ValidationError("cannot open input file '" + o.input + "'");
    corrnet::Panel p = corrnet::load_panel(in, corrnet::parse_format(o.format));

    if (o.window_start >= 0 && o.window_length < 0)
        throw ValidationError("--window-start requires --window-length");
    if (o.window_length >= 0) {
        std::size_t start = o.window_start >= 0 ? static_cast<std::size_t>(o.window_start) : 0;
        p = corrnet::window(p, start, static_cast<std::size_t>(o.window_length));
    }

    if (apply_constant_policy) {
        auto constants = corrnet::constant_entities(p);
        if (!constants.empty()) {
            if (!o.drop_constant) {
                std::string list;
                for (const auto& id : constants) list += (list.empty() ? "'" : ", '") + id + "'";
                throw ValidationError("zero variance: constant series for " + list +
                                      " over [" + p.period_labels.front() + " .. " + p.period_labels.back() +
                                      "]; rerun with --drop-constant to exclude them");
            }
            p = corrnet::drop_entities(p, constants);
            if (dropped) *dropped = constants;
        }
    }
    return p;
}

struct DimChoice {
    std::size_t value = 3;
    bool was_auto = false;
    std::optional<corrnet::DimensionResult> result;
};

DimChoice resolve_dim(const corrnet::Panel& p, const Options& o) {
    DimChoice c;
    if (o.dim == "auto") {
        c.was_auto = true;
        c.result = corrnet::effective_dimension(p, o.permutations, o.quantile, o.seed,
                                                corrnet::parse_null_model(o.null_model), o.threads);
        c.value = c.result->dim > 0 ? c.result->dim : 1;
        return c;
    }
    std::size_t d = 0;
    try {
        d = static_cast<std::size_t>(std::stoull(o.dim));
    } catch (const std::exception&) {
        throw ValidationError("--dim must be a positive integer or 'auto', got '" + o.dim + "'");
    }
    if (d < 1 || d > p.entities() - 1)
        throw ValidationError("--dim " + std::to_string(d) + " out of range [1, " +
                              std::to_string(p.entities() - 1) + "]");
    c.value = d;
    return c;
}

Json common_params(const Options& o) {
    Json j;
    j["input"] = o.input;
    j["format"] = o.format;
    if (o.window_start >= 0) j["window_start"] = o.window_start;
    if (o.window_length >= 0) j["window_length"] = o.window_length;
    j["drop_constant"] = o.drop_constant;
    if (!o.labels_path.empty()) j["labels"] = o.labels_path;
    return j;
}

Json geometry_params(const Options& o) {
    Json j;
    j["dim"] = o.dim;
    j["permutations"] = o.permutations;
    j["quantile"] = o.quantile;
    j["seed"] = o.seed;
    j["null"] = o.null_model;
    j["threads"] = o.threads;
    return j;
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

Artifacts run_embed(const Options& o, Json& params) {
    params.update(common_params(o));
    params.update(geometry_params(o));

    std::vector<std::string> dropped;
    corrnet::Panel p = load_input(o, true, &dropped);
    corrnet::Labels labels = load_labels_file(o);

    corrnet::Embedding emb = corrnet::embed(p);
    auto dim_result = corrnet::effective_dimension(p, o.permutations, o.quantile, o.seed,
                                                   corrnet::parse_null_model(o.null_model), o.threads);
    emb.surrogate = dim_result.stats;

    std::size_t export_dim;
    Artifacts a;
    if (o.dim == "auto") {
        export_dim = dim_result.dim > 0 ? dim_result.dim : 1;
        a.resolved["effective_dim"] = dim_result.dim;
    } else {
        DimChoice c = resolve_dim(p, o);
        export_dim = c.value;
    }
    a.resolved["dim"] = export_dim;
    if (!dropped.empty()) a.resolved["dropped_entities"] = dropped;

    a.files["embedding.json"] = dump_json(corrnet::embedding_json(emb, export_dim, labels));
    a.files["eigs.csv"] = corrnet::eigs_csv(emb.eigenvalues, dim_result.stats);
    return a;
}

Artifacts run_dimension(const Options& o, Json& params) {
    params.update(common_params(o));
    Json g = geometry_params(o);
    g.erase("dim");
    params.update(g);

    std::vector<std::string> dropped;
    corrnet::Panel p = load_input(o, true, &dropped);
    auto res = corrnet::effective_dimension(p, o.permutations, o.quantile, o.seed,
                                            corrnet::parse_null_model(o.null_model), o.threads);

    Json j;
    j["dim"] = res.dim;
    j["permutations"] = res.stats.permutations;
    j["quantile"] = res.stats.quantile_level;
    j["seed"] = o.seed;
    j["null"] = o.null_model;
    j["actual"] = std::vector<double>(res.actual.begin(), res.actual.end());
    j["surrogate_upper"] = res.stats.upper;
    j["surrogate_median"] = res.stats.median;

    Artifacts a;
    a.resolved["effective_dim"] = res.dim;
    if (!dropped.empty()) a.resolved["dropped_entities"] = dropped;
    a.files["dimension.json"] = dump_json(j);
    a.files["eigs.csv"] = corrnet::eigs_csv(res.actual, res.stats);
    a.notes.push_back("effective dimension: " + std::to_string(res.dim));
    return a;
}

Artifacts run_volume(const Options& o, Json& params) {
    params.update(common_params(o));
    params.update(geometry_params(o));

    std::vector<std::string> dropped;
    corrnet::Panel p = load_input(o, true, &dropped);
    corrnet::Embedding emb = corrnet::embed(p);
    DimChoice c = resolve_dim(p, o);

    bool degenerate = false;
    double v = corrnet::volume(emb, c.value, &degenerate);

    Json j;
    j["V"] = v;
    j["dim"] = c.value;
    j["degenerate"] = degenerate;
    j["window_start"] = p.period_labels.front();
    j["window_end"] = p.period_labels.back();
    j["eigenvalues"] = std::vector<double>(emb.eigenvalues.begin(), emb.eigenvalues.end());

    Artifacts a;
    a.resolved["dim"] = c.value;
    if (c.was_auto) a.resolved["effective_dim"] = c.result->dim;
    if (!dropped.empty()) a.resolved["dropped_entities"] = dropped;
    a.files["volume.json"] = dump_json(j);
    if (degenerate)
        a.notes.push_back("warning: a leading eigenvalue is zero, the reduced space is degenerate and V = 0");
    return a;
}

Artifacts run_network(const Options& o, Json& params) {
    params.update(common_params(o));
    params.update(geometry_params(o));

    std::vector<std::string> dropped;
    corrnet::Panel p = load_input(o, true, &dropped);
    corrnet::Labels labels = load_labels_file(o);

    corrnet::Embedding emb = corrnet::embed(p);
    DimChoice c = resolve_dim(p, o);
    corrnet::ReducedSpace rs = corrnet::reduce(emb, c.value);
    corrnet::ExposureNetwork net = corrnet::exposure_network(rs);

    const std::size_t pairs = net.size() * (net.size() - 1) / 2;
    std::size_t topk = o.topk;
    if (o.topk > pairs) {
        if (o.topk_explicit)
            throw ValidationError("--topk " + std::to_string(o.topk) + " exceeds the " +
                                  std::to_string(pairs) + " available pairs");
        topk = pairs;  // small panels clamp the default of 10
    }
    params["topk"] = topk;

    double clustering = corrnet::continuous_clustering(rs);
    bool degenerate = false;
    double v = corrnet::volume(emb, c.value, &degenerate);

    Artifacts a;
    a.resolved["dim"] = c.value;
    if (c.was_auto) a.resolved["effective_dim"] = c.result->dim;
    if (!dropped.empty()) a.resolved["dropped_entities"] = dropped;
    if (!net.floor_applied.empty()) {
        Json floored = Json::array();
        for (auto [i, j] : net.floor_applied)
            floored.push_back({net.entity_ids[i], net.entity_ids[j]});
        a.resolved["floor_applied"] = floored;
    }
    a.files["graph.json"] = dump_json(corrnet::graph_json(rs, net, topk, labels));
    a.files["graph.dot"] = corrnet::graph_dot(net, topk, labels);
    a.files["metrics.csv"] = corrnet::window_metrics_csv(p.period_labels.front(), p.period_labels.back(),
                                                         corrnet::node_stats(rs, net), clustering, v);
    return a;
}

Artifacts run_mst(const Options& o, Json& params) {
    params.update(common_params(o));
    if (o.mst_dim_explicit) params.update(geometry_params(o));

    std::vector<std::string> dropped;
    corrnet::Panel p = load_input(o, true, &dropped);
    corrnet::DistanceMatrix dm = corrnet::distance_matrix(p);

    corrnet::SpanningTree tree;
    Artifacts a;
    if (o.mst_dim_explicit) {
        corrnet::Embedding emb = corrnet::embed(dm);
        DimChoice c = resolve_dim(p, o);
        a.resolved["dim"] = c.value;
        if (c.was_auto) a.resolved["effective_dim"] = c.result->dim;
        tree = corrnet::mst(corrnet::reduce(emb, c.value));
    } else {
        tree = corrnet::mst(dm);
    }
    if (!dropped.empty()) a.resolved["dropped_entities"] = dropped;
    a.resolved["total_weight"] = tree.total_weight;
    a.files["mst.dot"] = corrnet::mst_dot(p.entity_ids, tree);
    a.files["mst_edges.csv"] = corrnet::mst_edges_csv(p.entity_ids, tree);
    return a;
}

Artifacts run_rolling(const Options& o, Json& params) {
    if (o.window_start >= 0)
        throw ValidationError("rolling consumes the whole panel; --window-start is not applicable "
                              "(--window-length sets the moving-window length)");
    params.update(common_params(o));
    params.update(geometry_params(o));
    params["window_length"] = o.window_length >= 0 ? o.window_length : 56;
    params["step"] = o.step;

    // rolling applies the constant-series policy per window itself
    Options in_opts = o;
    in_opts.window_length = -1;
    corrnet::Panel p = load_input(in_opts, false, nullptr);

    corrnet::RollingConfig cfg;
    cfg.window_length = o.window_length >= 0 ? static_cast<std::size_t>(o.window_length) : 56;
    cfg.step = o.step;
    if (o.dim == "auto") {
        cfg.dim = std::nullopt;
    } else {
        DimChoice c;
        c = resolve_dim(p, o);  // validates the number against N
        cfg.dim = c.value;
    }
    cfg.permutations = o.permutations;
    cfg.quantile = o.quantile;
    cfg.seed = o.seed;
    cfg.null_model = corrnet::parse_null_model(o.null_model);
    cfg.drop_constant = o.drop_constant;
    cfg.threads = o.threads;

    corrnet::MetricSeries ms = corrnet::rolling_analysis(p, cfg);

    Artifacts a;
    a.resolved["windows"] = ms.windows();
    if (!ms.dropped_entities.empty()) a.resolved["dropped_entities"] = ms.dropped_entities;
    if (!ms.degenerate_windows.empty()) a.resolved["degenerate_windows"] = ms.degenerate_windows;
    a.files["rolling.csv"] = corrnet::rolling_csv(ms);
    a.files["entities_rolling.csv"] = corrnet::entities_rolling_csv(ms);
    return a;
}

Artifacts run_synth(const Options& o, Json& params) {
    params["entities"] = o.entities;
    params["periods"] = o.periods;
    params["factors"] = o.factors;
    params["noise"] = o.noise;
    params["seed"] = o.seed;
    params["format"] = o.format;
    if (!o.ramp.empty()) params["ramp"] = o.ramp;
    if (!o.eccentric.empty()) params["eccentric"] = o.eccentric;
    if (!o.ids.empty()) params["ids"] = o.ids;

    corrnet::FactorSpec base;
    base.n_entities = o.entities;
    base.n_periods = o.periods;
    base.n_factors = o.factors;
    base.noise_sigma = o.noise;
    base.seed = o.seed;
    if (!o.ids.empty()) {
        std::stringstream ss(o.ids);
        std::string id;
        while (std::getline(ss, id, ',')) base.entity_ids.push_back(id);
    }

    corrnet::Panel p;
    if (!o.ramp.empty()) {
        auto colon = o.ramp.find(':');
        double start = 0.0, end = 0.0;
        if (colon == std::string::npos || !corrnet::parse_double(o.ramp.substr(0, colon), start) ||
            !corrnet::parse_double(o.ramp.substr(colon + 1), end))
            throw ValidationError("--ramp expects 'start:end', got '" + o.ramp + "'");
        corrnet::RegimeSpec spec{base, start, end, o.eccentric};
        p = corrnet::gen_regime_panel(spec);
    } else {
        if (!o.eccentric.empty()) throw ValidationError("--eccentric requires --ramp");
        p = corrnet::gen_factor_panel(base);
    }

    std::ostringstream csv;
    corrnet::save_panel(p, csv, corrnet::parse_format(o.format));
    Artifacts a;
    a.files["panel.csv"] = csv.str();
    return a;
}

// ---------------------------------------------------------------------------
// manifest + dispatch
// ---------------------------------------------------------------------------

void write_artifacts(const std::string& subcommand, const Options& o, const Json& params,
                     const Artifacts& artifacts) {
    if (o.out.empty()) throw ValidationError("--out is required");
    fs::path out_dir(o.out);
    fs::create_directories(out_dir);

    Json manifest;
    manifest["tool"] = "corrnet";
    manifest["version"] = std::string(corrnet::kVersion);
    manifest["subcommand"] = subcommand;
    manifest["inputs"] = o.input.empty() ? Json::array() : Json::array({o.input});
    manifest["parameters"] = params;
    if (!artifacts.resolved.empty()) manifest["resolved"] = artifacts.resolved;
    Json names = Json::array();
    for (const auto& [name, content] : artifacts.files) names.push_back(name);
    manifest["outputs"] = names;

    for (const auto& [name, content] : artifacts.files)
        corrnet::write_file_atomic(out_dir / name, content);
    corrnet::write_file_atomic(out_dir / "manifest.json", dump_json(manifest));

    for (const auto& [name, content] : artifacts.files)
        std::cout << "wrote " << (out_dir / name).string() << "\n";
    std::cout << "wrote " << (out_dir / "manifest.json").string() << "\n";
    for (const auto& note : artifacts.notes) std::cerr << note << "\n";
}

int dispatch(const std::string& subcommand, const Options& o) {
    Json params = Json::object();
    Artifacts a;
    if (subcommand == "embed") a = run_embed(o, params);
    else if (subcommand == "dimension") a = run_dimension(o, params);
    else if (subcommand == "volume") a = run_volume(o, params);
    else if (subcommand == "network") a = run_network(o, params);
    else if (subcommand == "mst") a = run_mst(o, params);
    else if (subcommand == "rolling") a = run_rolling(o, params);
    else if (subcommand == "synth") a = run_synth(o, params);
    else throw ValidationError("unknown subcommand '" + subcommand + "'");
    write_artifacts(subcommand, o, params, a);
    return 0;
}

int run_replay(const std::string& manifest_path, std::string out_override) {
    std::ifstream in(manifest_path);
    if (!in) throw ValidationError("cannot open manifest '" + manifest_path + "'");
    Json manifest = Json::parse(in, nullptr, true);

    const std::string subcommand = manifest.at("subcommand").get<std::string>();
    const Json& params = manifest.at("parameters");

    Options o;
    o.out = out_override.empty() ? fs::path(manifest_path).parent_path().string() : std::move(out_override);
    if (o.out.empty()) o.out = ".";

    auto get_or = [&](const char* key, auto fallback) {
        using T = decltype(fallback);
        return params.contains(key) ? params.at(key).get<T>() : fallback;
    };
    o.input = get_or("input", std::string{});
    o.format = get_or("format", std::string{"long"});
    o.window_start = get_or("window_start", std::int64_t{-1});
    o.window_length = get_or("window_length", std::int64_t{-1});
    o.dim = get_or("dim", std::string{"3"});
    o.permutations = get_or("permutations", std::size_t{100});
    o.quantile = get_or("quantile", 0.95);
    o.seed = get_or("seed", std::uint64_t{0});
    o.drop_constant = get_or("drop_constant", false);
    o.labels_path = get_or("labels", std::string{});
    o.null_model = get_or("null", std::string{"permutation"});
    o.threads = get_or("threads", std::size_t{1});
    o.step = get_or("step", std::size_t{1});
    o.topk = get_or("topk", std::size_t{10});
    o.entities = get_or("entities", std::size_t{24});
    o.periods = get_or("periods", std::size_t{110});
    o.factors = get_or("factors", std::size_t{3});
    o.noise = get_or("noise", 0.3);
    o.ramp = get_or("ramp", std::string{});
    o.eccentric = get_or("eccentric", std::vector<std::string>{});
    o.ids = get_or("ids", std::string{});
    o.topk_explicit = params.contains("topk");
    o.mst_dim_explicit = subcommand == "mst" && params.contains("dim");

    return dispatch(subcommand, o);
}

void add_common_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--input", o.input, "Panel CSV file");
    cmd->add_option("--format", o.format, "Input format: long|wide")->check(CLI::IsMember({"long", "wide"}));
    cmd->add_option("--window-start", o.window_start, "First period index of the analysis window")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--window-length", o.window_length, "Number of periods in the analysis window")
        ->check(CLI::NonNegativeNumber);
    cmd->add_flag("--drop-constant", o.drop_constant, "Drop constant series instead of aborting");
    cmd->add_option("--labels", o.labels_path, "Optional labels CSV (entity,display_name,group)");
    cmd->add_option("--out", o.out, "Output directory")->required();
}

void add_geometry_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--dim", o.dim, "Reduction dimension (positive integer or 'auto')");
    cmd->add_option("--permutations", o.permutations, "Surrogate ensemble size");
    cmd->add_option("--quantile", o.quantile, "Surrogate exceedance quantile");
    cmd->add_option("--seed", o.seed, "Seed for all randomness");
    cmd->add_option("--null", o.null_model, "Null model: permutation|gaussian")
        ->check(CLI::IsMember({"permutation", "gaussian"}));
    cmd->add_option("--threads", o.threads, "Worker threads (output is thread-count invariant)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Correlation-geometry and network analytics for panels of time series"};
    app.set_version_flag("--version", std::string(corrnet::kVersion));
    app.require_subcommand(1);

    Options o;

    CLI::App* embed = app.add_subcommand("embed", "Distance-geometry embedding with surrogate eigenvalue stats");
    add_common_flags(embed, o);
    add_geometry_flags(embed, o);

    CLI::App* dimension = app.add_subcommand("dimension", "Characteristic dimension via the surrogate test");
    add_common_flags(dimension, o);
    add_geometry_flags(dimension, o);

    CLI::App* volume = app.add_subcommand("volume", "Reduced-space volume of a window");
    add_common_flags(volume, o);
    add_geometry_flags(volume, o);

    CLI::App* network = app.add_subcommand("network", "Weighted exposure network with node statistics");
    add_common_flags(network, o);
    add_geometry_flags(network, o);
    network->add_option("--topk", o.topk, "Number of links to highlight");

    CLI::App* mst_cmd = app.add_subcommand("mst", "Minimal spanning tree of the distance graph");
    add_common_flags(mst_cmd, o);
    add_geometry_flags(mst_cmd, o);
    auto* mst_dim_opt = mst_cmd->get_option("--dim");
    mst_dim_opt->description("Reduce to this dimension first (default: full distances)");

    CLI::App* rolling = app.add_subcommand("rolling", "Full pipeline over moving windows");
    add_common_flags(rolling, o);
    add_geometry_flags(rolling, o);
    rolling->add_option("--step", o.step, "Stride between window starts");

    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic panel");
    synth->add_option("--entities", o.entities, "Number of entities");
    synth->add_option("--periods", o.periods, "Number of periods");
    synth->add_option("--factors", o.factors, "Number of common factors");
    synth->add_option("--noise", o.noise, "Idiosyncratic noise sigma");
    synth->add_option("--seed", o.seed, "Generator seed");
    synth->add_option("--ramp", o.ramp, "Common-factor weight path 'start:end' (regime panel)");
    synth->add_option("--eccentric", o.eccentric, "Entities with flipped common loading (requires --ramp)");
    synth->add_option("--ids", o.ids, "Comma-separated entity ids (default E00, E01, ...)");
    synth->add_option("--format", o.format, "Output format: long|wide")->check(CLI::IsMember({"long", "wide"}));
    synth->add_option("--out", o.out, "Output directory")->required();

    CLI::App* replay = app.add_subcommand("replay", "Re-run a recorded manifest");
    std::string manifest_path;
    std::string replay_out;
    replay->add_option("--manifest", manifest_path, "Path to manifest.json")->required();
    replay->add_option("--out", replay_out, "Output directory (default: the manifest's directory)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (replay->parsed()) return run_replay(manifest_path, replay_out);
        CLI::App* active = app.get_subcommands().front();
        o.mst_dim_explicit = active == mst_cmd && mst_dim_opt->count() > 0;
        o.topk_explicit = active == network && network->get_option("--topk")->count() > 0;
        return dispatch(active->get_name(), o);
    } catch (const corrnet::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
