// Correlation-metric geometry: distances d_ij = sqrt(2(1 - C_ij)), the
// distance-geometry embedding obtained by double-centering the squared
// distances, surrogate-based selection of the number of characteristic
// directions, reduced subspaces and reduced-space volume.

#pragma once

#include "corrnet/common.hpp"
#include "corrnet/panel.hpp"
#include "corrnet/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace corrnet {

// Eigenvalues of the centered Gram matrix below this are corrupt input;
// values in [-kEigTolerance, 0) are numerical noise and clamp to zero.
inline constexpr double kEigTolerance = 1e-9;

struct DistanceMatrix {
    std::vector<std::string> entity_ids;
    Eigen::MatrixXd d;  // symmetric, zero diagonal, entries in [0, 2]

    std::size_t size() const { return entity_ids.size(); }
};

/// Per-rank summary of the surrogate eigenvalue ensemble.
struct SurrogateStats {
    std::size_t permutations = 0;
    double quantile_level = 0.0;
    std::vector<double> upper;   // per-rank empirical quantile at quantile_level
    std::vector<double> median;  // per-rank empirical median
};

struct Embedding {
    std::vector<std::string> entity_ids;
    Eigen::VectorXd eigenvalues;   // length N, descending, >= 0
    Eigen::MatrixXd coordinates;   // N x (N-1); row k = center-of-mass coordinates of entity k
    std::optional<SurrogateStats> surrogate;

    std::size_t size() const { return entity_ids.size(); }
};

struct ReducedSpace {
    std::vector<std::string> entity_ids;
    std::size_t dim = 0;
    Eigen::MatrixXd coordinates;  // N x dim, leading columns of the embedding
    Eigen::MatrixXd reduced_d;    // N x N pairwise distances in the subspace
    double mean_reduced_distance = 0.0;

    std::size_t size() const { return entity_ids.size(); }
};

/// Stacked normalized series, one row per entity. Throws on constant rows.
inline Eigen::MatrixXd normalized_rows(const Panel& p) {
    Eigen::MatrixXd rho(p.values.rows(), p.values.cols());
    for (std::size_t i = 0; i < p.entities(); ++i)
        rho.row(static_cast<Eigen::Index>(i)) = normalize(p, i).rho.transpose();
    return rho;
}

/// d(i,j) = ||rho(i) - rho(j)|| = sqrt(2 (1 - C_ij)), clamped to [0, 2].
inline DistanceMatrix distance_matrix(const Panel& p) {
    Eigen::MatrixXd rho = normalized_rows(p);
    const auto n = rho.rows();
    DistanceMatrix dm;
    dm.entity_ids = p.entity_ids;
    dm.d = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double dist = std::min((rho.row(i) - rho.row(j)).norm(), 2.0);
            dm.d(i, j) = dist;
            dm.d(j, i) = dist;
        }
    return dm;
}

namespace detail {

inline void check_distance_matrix(const DistanceMatrix& dm) {
    const auto n = dm.d.rows();
    if (dm.d.cols() != n || static_cast<std::size_t>(n) != dm.entity_ids.size())
        throw ValidationError("distance matrix shape does not match entity list");
    if (n < 2) throw ValidationError("distance matrix needs at least 2 entities");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (dm.d(i, i) != 0.0)
            throw ValidationError("distance matrix has nonzero diagonal at entity '" + dm.entity_ids[static_cast<std::size_t>(i)] + "'");
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if (std::abs(dm.d(i, j) - dm.d(j, i)) > 1e-12)
                throw ValidationError("distance matrix is not symmetric at pair ('" +
                                      dm.entity_ids[static_cast<std::size_t>(i)] + "', '" +
                                      dm.entity_ids[static_cast<std::size_t>(j)] + "')");
            if (dm.d(i, j) < 0.0 || dm.d(i, j) > 2.0)
                throw ValidationError("distance out of [0, 2] at pair ('" +
                                      dm.entity_ids[static_cast<std::size_t>(i)] + "', '" +
                                      dm.entity_ids[static_cast<std::size_t>(j)] + "')");
        }
    }
}

// Flip each eigenvector so its largest-magnitude component is positive;
// the first such component wins ties. Keeps coordinates reproducible
// across eigensolver implementations.
inline void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
    Eigen::Index best = 0;
    double mag = -1.0;
    for (Eigen::Index k = 0; k < v.size(); ++k)
        if (std::abs(v(k)) > mag) {
            mag = std::abs(v(k));
            best = k;
        }
    if (v(best) < 0.0) v = -v;
}

}  // namespace detail

/// Classical distance-geometry embedding: double-center the squared
/// distances into the Gram matrix of center-of-mass coordinates and
/// diagonalize. Coordinates live in R^(N-1); the centering forces one
/// structurally zero eigenvalue whose direction is dropped.
inline Embedding embed(const DistanceMatrix& dm) {
    detail::check_distance_matrix(dm);
    const auto n = dm.d.rows();

    Eigen::MatrixXd sq = dm.d.array().square();
    Eigen::VectorXd row_mean = sq.rowwise().mean();
    double grand_mean = sq.mean();
    Eigen::MatrixXd gram(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            gram(i, j) = -0.5 * (sq(i, j) - row_mean(i) - row_mean(j) + grand_mean);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success)
        throw NumericalError("eigendecomposition failed on the centered Gram matrix");

    Embedding emb;
    emb.entity_ids = dm.entity_ids;
    emb.eigenvalues.resize(n);
    emb.coordinates = Eigen::MatrixXd::Zero(n, n - 1);

    // solver returns ascending order; reverse to descending
    for (Eigen::Index r = 0; r < n; ++r) {
        Eigen::Index src = n - 1 - r;
        double lambda = solver.eigenvalues()(src);
        if (lambda < -kEigTolerance)
            throw NumericalError("non-embeddable distance matrix: eigenvalue " + format_double(lambda) +
                                 " below tolerance at rank " + std::to_string(r + 1));
        if (lambda < 0.0) lambda = 0.0;
        emb.eigenvalues(r) = lambda;
        if (r < n - 1) {
            Eigen::VectorXd v = solver.eigenvectors().col(src);
            detail::fix_sign(v);
            emb.coordinates.col(r) = std::sqrt(lambda) * v;
        }
    }
    return emb;
}

inline Embedding embed(const Panel& p) { return embed(distance_matrix(p)); }

/// Independent time permutation of each entity's series; the null model
/// behind the characteristic-dimension test. Deterministic per seed.
inline Panel surrogate_panel(const Panel& p, std::uint64_t seed) {
    Panel out = p;
    rng::Engine eng(seed);
    for (Eigen::Index i = 0; i < out.values.rows(); ++i) {
        Eigen::VectorXd row = out.values.row(i).transpose();
        rng::shuffle(std::span<double>(row.data(), static_cast<std::size_t>(row.size())), eng);
        out.values.row(i) = row.transpose();
    }
    return out;
}

/// Alternative null: i.i.d. standard Gaussian panel of the same shape.
inline Panel gaussian_panel_like(const Panel& p, std::uint64_t seed) {
    Panel out;
    out.entity_ids = p.entity_ids;
    out.period_labels = p.period_labels;
    out.values.resize(p.values.rows(), p.values.cols());
    rng::Engine eng(seed);
    rng::Gaussian gauss;
    for (Eigen::Index i = 0; i < out.values.rows(); ++i)
        for (Eigen::Index t = 0; t < out.values.cols(); ++t)
            out.values(i, t) = gauss(eng);
    return out;
}

enum class NullModel { permutation, gaussian };

inline NullModel parse_null_model(std::string_view s) {
    if (s == "permutation") return NullModel::permutation;
    if (s == "gaussian") return NullModel::gaussian;
    throw ValidationError("unknown null model '" + std::string(s) + "' (expected permutation|gaussian)");
}

struct DimensionResult {
    std::size_t dim = 0;            // leading run of characteristic ranks
    Eigen::VectorXd actual;         // actual eigenvalues, descending
    SurrogateStats stats;
};

namespace detail {

// Empirical quantile as the ceil(q*M)-th order statistic (1-based).
inline double empirical_quantile(std::vector<double>& sorted, double q) {
    std::size_t m = sorted.size();
    std::size_t idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(m)));
    if (idx > 0) --idx;
    if (idx >= m) idx = m - 1;
    return sorted[idx];
}

}  // namespace detail

/// Per-rank surrogate test: rank i is characteristic when the actual
/// eigenvalue exceeds the empirical `quantile` of the rank-i surrogate
/// eigenvalues over `permutations` draws; the effective dimension is the
/// length of the maximal leading run of characteristic ranks.
/// Surrogate m draws from a generator seeded with seed + m.
inline DimensionResult effective_dimension(const Panel& p, std::size_t permutations = 100,
                                           double quantile = 0.95, std::uint64_t seed = 0,
                                           NullModel null_model = NullModel::permutation,
                                           std::size_t threads = 1) {
    if (permutations < 10)
        throw ValidationError("permutations must be at least 10 for a meaningful quantile, got " +
                              std::to_string(permutations));
    if (!(quantile > 0.0 && quantile < 1.0))
        throw ValidationError("quantile must lie in (0, 1), got " + format_double(quantile));

    Embedding actual = embed(p);
    const std::size_t n = actual.size();

    std::vector<Eigen::VectorXd> surrogate_eigs(permutations);
    parallel_for(permutations, threads, [&](std::size_t m) {
        std::uint64_t s = seed + static_cast<std::uint64_t>(m);
        Panel null_panel = null_model == NullModel::permutation ? surrogate_panel(p, s)
                                                                : gaussian_panel_like(p, s);
        surrogate_eigs[m] = embed(null_panel).eigenvalues;
    });

    DimensionResult res;
    res.actual = actual.eigenvalues;
    res.stats.permutations = permutations;
    res.stats.quantile_level = quantile;
    res.stats.upper.resize(n);
    res.stats.median.resize(n);

    std::vector<double> rank_values(permutations);
    std::vector<bool> characteristic(n, false);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t m = 0; m < permutations; ++m)
            rank_values[m] = surrogate_eigs[m](static_cast<Eigen::Index>(r));
        std::sort(rank_values.begin(), rank_values.end());
        res.stats.upper[r] = detail::empirical_quantile(rank_values, quantile);
        res.stats.median[r] = detail::empirical_quantile(rank_values, 0.5);
        characteristic[r] = res.actual(static_cast<Eigen::Index>(r)) > res.stats.upper[r];
    }
    // rank N is the structural centering zero; at most N-1 directions exist
    while (res.dim < n - 1 && characteristic[res.dim]) ++res.dim;
    return res;
}

/// Restrict coordinates to the d leading characteristic directions and
/// recompute pairwise distances inside that subspace.
inline ReducedSpace reduce(const Embedding& emb, std::size_t d) {
    const std::size_t n = emb.size();
    if (d < 1 || d > n - 1)
        throw ValidationError("reduction dimension " + std::to_string(d) + " out of range [1, " +
                              std::to_string(n - 1) + "]");
    ReducedSpace rs;
    rs.entity_ids = emb.entity_ids;
    rs.dim = d;
    rs.coordinates = emb.coordinates.leftCols(static_cast<Eigen::Index>(d));
    rs.reduced_d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    double sum = 0.0;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i)
        for (Eigen::Index j = i + 1; j < static_cast<Eigen::Index>(n); ++j) {
            double dist = (rs.coordinates.row(i) - rs.coordinates.row(j)).norm();
            rs.reduced_d(i, j) = dist;
            rs.reduced_d(j, i) = dist;
            sum += 2.0 * dist;
        }
    rs.mean_reduced_distance = sum / (static_cast<double>(n) * static_cast<double>(n - 1));
    return rs;
}

/// Build a reduced space directly from a coordinate matrix. reduce() uses
/// the embedding's leading columns; tests and callers with external
/// coordinates use this entry point.
inline ReducedSpace reduced_from_coordinates(std::vector<std::string> ids, Eigen::MatrixXd coords) {
    const auto n = coords.rows();
    if (static_cast<std::size_t>(n) != ids.size())
        throw ValidationError("coordinate rows do not match entity list");
    ReducedSpace rs;
    rs.entity_ids = std::move(ids);
    rs.dim = static_cast<std::size_t>(coords.cols());
    rs.coordinates = std::move(coords);
    rs.reduced_d = Eigen::MatrixXd::Zero(n, n);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double dist = (rs.coordinates.row(i) - rs.coordinates.row(j)).norm();
            rs.reduced_d(i, j) = dist;
            rs.reduced_d(j, i) = dist;
            sum += 2.0 * dist;
        }
    rs.mean_reduced_distance = n > 1 ? sum / (static_cast<double>(n) * static_cast<double>(n - 1)) : 0.0;
    return rs;
}

/// Geometric mean of the top-d eigenvalues. A zero among the top d makes
/// the reduced space degenerate: the volume is 0 and *degenerate is set.
inline double volume(const Embedding& emb, std::size_t d = 3, bool* degenerate = nullptr) {
    if (degenerate) *degenerate = false;
    if (d < 1 || d > emb.size())
        throw ValidationError("volume dimension " + std::to_string(d) + " out of range [1, " +
                              std::to_string(emb.size()) + "]");
    double log_sum = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        double lambda = emb.eigenvalues(static_cast<Eigen::Index>(i));
        if (lambda <= 0.0) {
            if (degenerate) *degenerate = true;
            return 0.0;
        }
        log_sum += std::log(lambda);
    }
    return std::exp(log_sum / static_cast<double>(d));
}

}  // namespace corrnet
