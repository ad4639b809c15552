// File exports: embedding JSON, eigenvalue CSV, graph JSON/DOT, node and
// window metric CSVs, labels files. All numbers use shortest round-trip
// formatting so repeated runs are byte-identical.

#pragma once

#include "corrnet/common.hpp"
#include "corrnet/geometry.hpp"
#include "corrnet/network.hpp"
#include "corrnet/panel.hpp"
#include "corrnet/rolling.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace corrnet {

using Json = nlohmann::ordered_json;

struct EntityLabel {
    std::string display_name;
    std::string group;
};

using Labels = std::map<std::string, EntityLabel>;

/// Labels CSV: header `entity,display_name,group`. Group is only used to
/// color exports; entities missing from the file get an empty group.
inline Labels load_labels(std::istream& in) {
    Labels out;
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("empty labels file");
    auto header = detail::split_csv_line(line);
    if (header.size() != 3 || header[0] != "entity" || header[1] != "display_name" || header[2] != "group")
        throw ValidationError("labels file must start with header 'entity,display_name,group'");
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto f = detail::split_csv_line(line);
        if (f.size() != 3) throw ValidationError("labels row has " + std::to_string(f.size()) + " fields, expected 3");
        out[f[0]] = EntityLabel{f[1], f[2]};
    }
    return out;
}

inline std::string group_of(const Labels& labels, const std::string& id) {
    auto it = labels.find(id);
    return it == labels.end() ? std::string{} : it->second.group;
}

/// embedding.json: entity ids, all eigenvalues, the leading `dim`
/// coordinate columns, surrogate quantiles per rank when present, and
/// groups when a labels file was supplied.
inline Json embedding_json(const Embedding& emb, std::size_t dim, const Labels& labels = {}) {
    if (dim > emb.size() - 1) dim = emb.size() - 1;
    Json j;
    j["entities"] = emb.entity_ids;
    j["dim"] = dim;
    j["eigenvalues"] = std::vector<double>(emb.eigenvalues.begin(), emb.eigenvalues.end());
    Json coords = Json::array();
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(emb.size()); ++i) {
        Json row = Json::array();
        for (std::size_t c = 0; c < dim; ++c) row.push_back(emb.coordinates(i, static_cast<Eigen::Index>(c)));
        coords.push_back(row);
    }
    j["coordinates"] = coords;
    if (emb.surrogate) {
        j["surrogate"] = {{"permutations", emb.surrogate->permutations},
                          {"quantile", emb.surrogate->quantile_level},
                          {"upper", emb.surrogate->upper},
                          {"median", emb.surrogate->median}};
    }
    if (!labels.empty()) {
        std::vector<std::string> groups;
        groups.reserve(emb.size());
        for (const auto& id : emb.entity_ids) groups.push_back(group_of(labels, id));
        j["groups"] = groups;
    }
    return j;
}

/// eigs.csv: rank (1-based), actual eigenvalue, surrogate quantile.
inline std::string eigs_csv(const Eigen::VectorXd& actual, const SurrogateStats& stats) {
    std::ostringstream out;
    out << "rank,actual,surrogate_quantile\n";
    for (Eigen::Index r = 0; r < actual.size(); ++r)
        out << (r + 1) << ',' << format_double(actual(r)) << ','
            << format_double(stats.upper[static_cast<std::size_t>(r)]) << '\n';
    return out.str();
}

/// Graph JSON: nodes with id/group/strength/closeness, every edge with
/// weight, descending-weight rank and a top-k flag.
inline Json graph_json(const ReducedSpace& rs, const ExposureNetwork& net, std::size_t topk,
                       const Labels& labels = {}) {
    Json j;
    Json nodes = Json::array();
    for (std::size_t k = 0; k < net.size(); ++k)
        nodes.push_back({{"id", net.entity_ids[k]},
                         {"group", group_of(labels, net.entity_ids[k])},
                         {"strength", strength(net, k)},
                         {"closeness", closeness_centrality(rs, k)}});
    j["nodes"] = nodes;

    auto ranked = top_links(net, net.size() * (net.size() - 1) / 2);
    Json edges = Json::array();
    for (std::size_t r = 0; r < ranked.size(); ++r)
        edges.push_back({{"source", net.entity_ids[ranked[r].i]},
                         {"target", net.entity_ids[ranked[r].j]},
                         {"weight", ranked[r].weight},
                         {"rank", r + 1},
                         {"top", r < topk}});
    j["edges"] = edges;
    return j;
}

/// DOT export with pen-width proportional to weight; the top-k edges are
/// tagged with a color attribute for the layout tool.
inline std::string graph_dot(const ExposureNetwork& net, std::size_t topk, const Labels& labels = {}) {
    std::ostringstream out;
    out << "graph exposures {\n";
    for (std::size_t k = 0; k < net.size(); ++k) {
        out << "  \"" << net.entity_ids[k] << "\"";
        std::string group = group_of(labels, net.entity_ids[k]);
        if (!group.empty()) out << " [group=\"" << group << "\"]";
        out << ";\n";
    }
    auto ranked = top_links(net, net.size() * (net.size() - 1) / 2);
    double max_w = ranked.empty() ? 1.0 : ranked.front().weight;
    for (std::size_t r = 0; r < ranked.size(); ++r) {
        const auto& l = ranked[r];
        double penwidth = max_w > 0.0 ? 5.0 * l.weight / max_w : 1.0;
        out << "  \"" << net.entity_ids[l.i] << "\" -- \"" << net.entity_ids[l.j] << "\" [weight="
            << format_double(l.weight) << ", penwidth=" << format_double(penwidth);
        if (r < topk) out << ", color=\"blue\"";
        out << "];\n";
    }
    out << "}\n";
    return out.str();
}

/// Per-window metrics CSV: one row per entity with strength and closeness,
/// then one window row carrying the clustering coefficient and volume.
inline std::string window_metrics_csv(const std::string& window_start, const std::string& window_end,
                                      const std::vector<NodeStats>& stats, double clustering, double vol) {
    std::ostringstream out;
    out << "window_start,window_end,entity,strength,closeness,C,V\n";
    for (const auto& s : stats)
        out << detail::csv_escape(window_start) << ',' << detail::csv_escape(window_end) << ','
            << detail::csv_escape(s.entity_id) << ',' << format_double(s.strength) << ','
            << format_double(s.closeness) << ",,\n";
    out << detail::csv_escape(window_start) << ',' << detail::csv_escape(window_end) << ",,,,"
        << format_double(clustering) << ',' << format_double(vol) << '\n';
    return out.str();
}

/// rolling.csv: window_start,window_end,V,C and the chosen dimension per
/// window when the surrogate test selected it.
inline std::string rolling_csv(const MetricSeries& ms) {
    std::ostringstream out;
    const bool has_dim = !ms.effective_dim.empty();
    out << "window_start,window_end,V,C" << (has_dim ? ",effective_dim" : "") << '\n';
    for (std::size_t w = 0; w < ms.windows(); ++w) {
        out << detail::csv_escape(ms.window_start_labels[w]) << ','
            << detail::csv_escape(ms.window_end_labels[w]) << ',' << format_double(ms.volume[w]) << ','
            << format_double(ms.clustering[w]);
        if (has_dim) out << ',' << ms.effective_dim[w];
        out << '\n';
    }
    return out.str();
}

/// entities_rolling.csv: long format, one row per (window, entity).
inline std::string entities_rolling_csv(const MetricSeries& ms) {
    std::ostringstream out;
    out << "window_start,window_end,entity,strength,closeness\n";
    for (std::size_t w = 0; w < ms.windows(); ++w)
        for (std::size_t i = 0; i < ms.entity_ids.size(); ++i)
            out << detail::csv_escape(ms.window_start_labels[w]) << ','
                << detail::csv_escape(ms.window_end_labels[w]) << ',' << detail::csv_escape(ms.entity_ids[i])
                << ',' << format_double(ms.strength(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(w)))
                << ',' << format_double(ms.closeness(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(w)))
                << '\n';
    return out.str();
}

/// mst_edges.csv: one row per tree edge in selection order.
inline std::string mst_edges_csv(const std::vector<std::string>& ids, const SpanningTree& tree) {
    std::ostringstream out;
    out << "entity_a,entity_b,distance\n";
    for (const auto& e : tree.edges)
        out << detail::csv_escape(ids[e.i]) << ',' << detail::csv_escape(ids[e.j]) << ','
            << format_double(e.distance) << '\n';
    return out.str();
}

inline std::string mst_dot(const std::vector<std::string>& ids, const SpanningTree& tree) {
    std::ostringstream out;
    out << "graph spanning_tree {\n";
    for (const auto& id : ids) out << "  \"" << id << "\";\n";
    for (const auto& e : tree.edges)
        out << "  \"" << ids[e.i] << "\" -- \"" << ids[e.j] << "\" [weight=" << format_double(e.distance)
            << "];\n";
    out << "}\n";
    return out.str();
}

/// Write through a temp file plus rename so a failing run never leaves a
/// half-written artifact in place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot open '" + tmp.string() + "' for writing");
        out << content;
        if (!out) throw ValidationError("failed writing '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

}  // namespace corrnet
