// Rolling-window driver: runs the distance -> embedding -> reduction ->
// network pipeline over moving windows and assembles time-indexed series
// of volume, clustering, strength and closeness.

#pragma once

#include "corrnet/common.hpp"
#include "corrnet/geometry.hpp"
#include "corrnet/network.hpp"
#include "corrnet/panel.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace corrnet {

struct RollingConfig {
    std::size_t window_length = 56;
    std::size_t step = 1;
    std::optional<std::size_t> dim = 3;  // nullopt = choose per window via the surrogate test
    std::size_t permutations = 100;
    double quantile = 0.95;
    std::uint64_t seed = 0;
    NullModel null_model = NullModel::permutation;
    bool drop_constant = false;
    std::size_t threads = 1;
};

struct MetricSeries {
    std::vector<std::string> entity_ids;
    std::vector<std::size_t> window_starts;
    std::vector<std::string> window_start_labels;
    std::vector<std::string> window_end_labels;
    std::vector<double> volume;              // V per window
    std::vector<double> clustering;          // C per window
    Eigen::MatrixXd strength;                // N x W
    Eigen::MatrixXd closeness;               // N x W
    std::vector<std::size_t> effective_dim;  // per window, only in auto mode
    std::vector<std::size_t> degenerate_windows;
    std::vector<std::string> dropped_entities;

    std::size_t windows() const { return window_starts.size(); }
};

namespace detail {

inline void check_rolling_config(const RollingConfig& cfg, std::size_t n_entities) {
    if (cfg.window_length < 3)
        throw ValidationError("window length must be at least 3, got " + std::to_string(cfg.window_length));
    if (cfg.step < 1) throw ValidationError("step must be at least 1");
    if (cfg.dim && (*cfg.dim < 1 || *cfg.dim > n_entities - 1))
        throw ValidationError("dim " + std::to_string(*cfg.dim) + " out of range [1, " +
                              std::to_string(n_entities - 1) + "]");
}

}  // namespace detail

/// Windows are processed independently; in auto mode each window's
/// surrogate generator is seeded with seed XOR window-index so results
/// are identical under any thread count.
inline MetricSeries rolling_analysis(const Panel& panel, const RollingConfig& cfg) {
    detail::check_rolling_config(cfg, panel.entities());
    if (panel.periods() < cfg.window_length)
        throw ValidationError("panel has " + std::to_string(panel.periods()) +
                              " periods, fewer than the window length " + std::to_string(cfg.window_length));

    const std::size_t w_count = (panel.periods() - cfg.window_length) / cfg.step + 1;

    Panel work = panel;
    std::vector<std::string> dropped;
    {
        std::vector<std::string> offenders;
        for (std::size_t w = 0; w < w_count; ++w) {
            Panel sub = window(work, w * cfg.step, cfg.window_length);
            for (const auto& id : constant_entities(sub)) {
                if (std::find(offenders.begin(), offenders.end(), id) == offenders.end())
                    offenders.push_back(id);
                if (!cfg.drop_constant)
                    throw ValidationError("zero variance: entity '" + id + "' is constant in window " +
                                          std::to_string(w) + " [" + sub.period_labels.front() + " .. " +
                                          sub.period_labels.back() + "]");
            }
        }
        if (!offenders.empty()) {
            work = drop_entities(work, offenders);
            dropped = std::move(offenders);
            if (cfg.dim && *cfg.dim > work.entities() - 1)
                throw ValidationError("dim " + std::to_string(*cfg.dim) + " out of range [1, " +
                                      std::to_string(work.entities() - 1) + "] after dropping constant entities");
        }
    }

    const auto n = static_cast<Eigen::Index>(work.entities());
    MetricSeries ms;
    ms.entity_ids = work.entity_ids;
    ms.dropped_entities = dropped;
    ms.window_starts.resize(w_count);
    ms.window_start_labels.resize(w_count);
    ms.window_end_labels.resize(w_count);
    ms.volume.resize(w_count);
    ms.clustering.resize(w_count);
    ms.strength.resize(n, static_cast<Eigen::Index>(w_count));
    ms.closeness.resize(n, static_cast<Eigen::Index>(w_count));
    if (!cfg.dim) ms.effective_dim.resize(w_count);
    std::vector<char> degenerate(w_count, 0);

    parallel_for(w_count, cfg.threads, [&](std::size_t w) {
        const std::size_t start = w * cfg.step;
        Panel sub = window(work, start, cfg.window_length);
        ms.window_starts[w] = start;
        ms.window_start_labels[w] = sub.period_labels.front();
        ms.window_end_labels[w] = sub.period_labels.back();

        Embedding emb = embed(sub);
        std::size_t d = 0;
        if (cfg.dim) {
            d = *cfg.dim;
        } else {
            auto res = effective_dimension(sub, cfg.permutations, cfg.quantile,
                                           cfg.seed ^ static_cast<std::uint64_t>(w), cfg.null_model);
            ms.effective_dim[w] = res.dim;
            d = res.dim > 0 ? res.dim : 1;  // a zero-dimensional window still needs coordinates
        }
        ReducedSpace rs = reduce(emb, d);
        ExposureNetwork net = exposure_network(rs);

        bool degen = false;
        ms.volume[w] = corrnet::volume(emb, d, &degen);
        degenerate[w] = degen ? 1 : 0;
        ms.clustering[w] = continuous_clustering(rs);
        for (Eigen::Index i = 0; i < n; ++i) {
            ms.strength(i, static_cast<Eigen::Index>(w)) = corrnet::strength(net, static_cast<std::size_t>(i));
            ms.closeness(i, static_cast<Eigen::Index>(w)) =
                closeness_centrality(rs, static_cast<std::size_t>(i));
        }
    });

    for (std::size_t w = 0; w < w_count; ++w)
        if (degenerate[w]) ms.degenerate_windows.push_back(w);
    return ms;
}

struct SeriesSummary {
    double min = 0.0;
    double max = 0.0;
    std::size_t argmin = 0;  // window index of the first minimum
    std::size_t argmax = 0;
};

inline SeriesSummary series_summary(std::span<const double> series) {
    if (series.empty()) throw ValidationError("cannot summarize an empty series");
    SeriesSummary s{series[0], series[0], 0, 0};
    for (std::size_t i = 1; i < series.size(); ++i) {
        if (series[i] < s.min) {
            s.min = series[i];
            s.argmin = i;
        }
        if (series[i] > s.max) {
            s.max = series[i];
            s.argmax = i;
        }
    }
    return s;
}

/// Relative change (v[to] - v[from]) / v[from] over a sub-range.
inline double relative_change(std::span<const double> series, std::size_t from, std::size_t to) {
    if (series.empty() || from >= series.size() || to >= series.size() || from > to)
        throw ValidationError("empty or out-of-range sub-range for relative change");
    if (series[from] == 0.0) throw ValidationError("relative change undefined from a zero value");
    return (series[to] - series[from]) / series[from];
}

}  // namespace corrnet
