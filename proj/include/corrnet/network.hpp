// Fully-connected weighted exposure networks over reduced-space distances:
// bilateral exposures B_ij = 1/d_ij, node strength, top links, continuous
// clustering, closeness centrality and the minimal spanning tree.

#pragma once

#include "corrnet/common.hpp"
#include "corrnet/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

namespace corrnet {

// Distances below this are floored before inversion; coincident entities
// would otherwise produce an infinite exposure.
inline constexpr double kDistanceFloor = 1e-8;

struct ExposureNetwork {
    std::vector<std::string> entity_ids;
    Eigen::MatrixXd weights;  // B, symmetric, zero diagonal
    std::vector<std::pair<std::size_t, std::size_t>> floor_applied;

    std::size_t size() const { return entity_ids.size(); }
};

struct NodeStats {
    std::string entity_id;
    double strength = 0.0;   // sum of link weights at the node
    double closeness = 0.0;  // sum of reduced distances; lower = more central
};

struct Link {
    std::size_t i = 0, j = 0;  // i < j
    double weight = 0.0;
};

struct SpanningTree {
    struct Edge {
        std::size_t i = 0, j = 0;  // i < j
        double distance = 0.0;
    };
    std::vector<Edge> edges;  // N-1 edges in selection (ascending-weight) order
    double total_weight = 0.0;
};

namespace detail {

inline std::size_t entity_index(const std::vector<std::string>& ids, std::string_view id) {
    for (std::size_t k = 0; k < ids.size(); ++k)
        if (ids[k] == id) return k;
    throw ValidationError("unknown entity '" + std::string(id) + "'");
}

// Unordered pair key for the lexicographic tie-break: the two entity ids
// in sorted order.
inline std::pair<std::string_view, std::string_view> id_pair(const std::vector<std::string>& ids,
                                                             std::size_t i, std::size_t j) {
    std::string_view a = ids[i], b = ids[j];
    if (b < a) std::swap(a, b);
    return {a, b};
}

}  // namespace detail

/// B(i,j) = 1 / max(reduced_d(i,j), floor). Floored pairs are recorded.
inline ExposureNetwork exposure_network(const ReducedSpace& rs) {
    if (rs.dim < 1) throw ValidationError("exposure network needs a reduced space of dimension >= 1");
    const auto n = static_cast<Eigen::Index>(rs.size());
    ExposureNetwork net;
    net.entity_ids = rs.entity_ids;
    net.weights = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double dist = rs.reduced_d(i, j);
            if (dist < kDistanceFloor) {
                dist = kDistanceFloor;
                net.floor_applied.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
            }
            net.weights(i, j) = 1.0 / dist;
            net.weights(j, i) = net.weights(i, j);
        }
    return net;
}

/// Total strength of the links at node k: sum of row k of B.
inline double strength(const ExposureNetwork& net, std::size_t k) {
    if (k >= net.size()) throw ValidationError("entity index " + std::to_string(k) + " out of range");
    return net.weights.row(static_cast<Eigen::Index>(k)).sum();
}

inline double strength(const ExposureNetwork& net, std::string_view id) {
    return strength(net, detail::entity_index(net.entity_ids, id));
}

/// The k heaviest links, each unordered pair once, sorted by descending
/// weight; equal weights ordered lexicographically by entity-id pair.
inline std::vector<Link> top_links(const ExposureNetwork& net, std::size_t k = 10) {
    const std::size_t n = net.size();
    const std::size_t pairs = n * (n - 1) / 2;
    if (k > pairs)
        throw ValidationError("top-links count " + std::to_string(k) + " exceeds the " +
                              std::to_string(pairs) + " available pairs");
    std::vector<Link> all;
    all.reserve(pairs);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            all.push_back({i, j, net.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
    std::sort(all.begin(), all.end(), [&](const Link& a, const Link& b) {
        if (a.weight != b.weight) return a.weight > b.weight;
        return detail::id_pair(net.entity_ids, a.i, a.j) < detail::id_pair(net.entity_ids, b.i, b.j);
    });
    all.resize(k);
    return all;
}

/// Neighbor degree of a pair: V_ij = exp(-d_ij / mean distance).
inline double neighbor_degree(const ReducedSpace& rs, std::size_t i, std::size_t j) {
    if (rs.mean_reduced_distance <= 0.0)
        throw ValidationError("degenerate configuration: all reduced distances are zero");
    return std::exp(-rs.reduced_d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) /
                    rs.mean_reduced_distance);
}

/// Continuous clustering coefficient: the average of V_ij V_jk V_ik over
/// the N(N-1)(N-2) ordered triples of pairwise-distinct indices. Computed
/// over unordered triples times 6; the naive ordered loop is the test
/// oracle.
inline double continuous_clustering(const ReducedSpace& rs) {
    const std::size_t n = rs.size();
    if (n < 3) throw ValidationError("clustering needs at least 3 entities, got " + std::to_string(n));
    if (rs.mean_reduced_distance <= 0.0)
        throw ValidationError("degenerate configuration: all reduced distances are zero");
    Eigen::MatrixXd v = (-rs.reduced_d / rs.mean_reduced_distance).array().exp();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            for (std::size_t k = j + 1; k < n; ++k)
                sum += v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
                       v(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) *
                       v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    double triples = static_cast<double>(n) * static_cast<double>(n - 1) * static_cast<double>(n - 2);
    return 6.0 * sum / triples;
}

/// Closeness centrality of node k: the sum of reduced-space distances to
/// every other node. In Euclidean space the direct edge is the geodesic,
/// so this equals the sum of geodesic distances.
inline double closeness_centrality(const ReducedSpace& rs, std::size_t k) {
    if (k >= rs.size()) throw ValidationError("entity index " + std::to_string(k) + " out of range");
    return rs.reduced_d.row(static_cast<Eigen::Index>(k)).sum();
}

inline double closeness_centrality(const ReducedSpace& rs, std::string_view id) {
    return closeness_centrality(rs, detail::entity_index(rs.entity_ids, id));
}

/// Strength and closeness for every node, in entity order.
inline std::vector<NodeStats> node_stats(const ReducedSpace& rs, const ExposureNetwork& net) {
    std::vector<NodeStats> out;
    out.reserve(rs.size());
    for (std::size_t k = 0; k < rs.size(); ++k)
        out.push_back({rs.entity_ids[k], strength(net, k), closeness_centrality(rs, k)});
    return out;
}

/// Kruskal minimal spanning tree on the complete distance graph. Equal
/// weights are ordered lexicographically by entity-id pair, which makes
/// the tree deterministic.
inline SpanningTree mst(const std::vector<std::string>& ids, const Eigen::MatrixXd& dist) {
    const std::size_t n = ids.size();
    if (n < 2) throw ValidationError("spanning tree needs at least 2 entities");
    if (dist.rows() != static_cast<Eigen::Index>(n) || dist.cols() != static_cast<Eigen::Index>(n))
        throw ValidationError("distance matrix shape does not match entity list");

    struct Candidate {
        std::size_t i, j;
        double w;
    };
    std::vector<Candidate> edges;
    edges.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            edges.push_back({i, j, dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
    std::sort(edges.begin(), edges.end(), [&](const Candidate& a, const Candidate& b) {
        if (a.w != b.w) return a.w < b.w;
        return detail::id_pair(ids, a.i, a.j) < detail::id_pair(ids, b.i, b.j);
    });

    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };

    SpanningTree tree;
    tree.edges.reserve(n - 1);
    for (const auto& e : edges) {
        std::size_t a = find(e.i), b = find(e.j);
        if (a == b) continue;
        parent[a] = b;
        tree.edges.push_back({e.i, e.j, e.w});
        tree.total_weight += e.w;
        if (tree.edges.size() == n - 1) break;
    }
    return tree;
}

inline SpanningTree mst(const DistanceMatrix& dm) { return mst(dm.entity_ids, dm.d); }
inline SpanningTree mst(const ReducedSpace& rs) { return mst(rs.entity_ids, rs.reduced_d); }

}  // namespace corrnet
