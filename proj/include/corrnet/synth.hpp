// Synthetic panels with known ground truth: Gaussian factor panels for
// dimension-selection validation and regime panels whose common-factor
// weight ramps over time, with optional anti-correlated entities.

#pragma once

#include "corrnet/common.hpp"
#include "corrnet/panel.hpp"
#include "corrnet/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace corrnet {

struct FactorSpec {
    std::size_t n_entities = 0;
    std::size_t n_periods = 0;
    std::size_t n_factors = 0;
    std::optional<Eigen::MatrixXd> loadings;  // N x F; absent = random U[0.5, 1.5]
    double noise_sigma = 0.3;
    std::uint64_t seed = 0;
    std::vector<std::string> entity_ids;      // empty = generated E00, E01, ...
};

struct RegimeSpec {
    FactorSpec base;
    double ramp_start = 0.1;  // common-factor weight at the first period
    double ramp_end = 0.9;    // and at the last, linear in between
    std::vector<std::string> eccentric_entities;  // common loading sign flipped
};

namespace detail {

inline std::vector<std::string> synth_ids(const FactorSpec& spec) {
    if (!spec.entity_ids.empty()) {
        if (spec.entity_ids.size() != spec.n_entities)
            throw ValidationError("entity id list has " + std::to_string(spec.entity_ids.size()) +
                                  " entries for " + std::to_string(spec.n_entities) + " entities");
        return spec.entity_ids;
    }
    std::vector<std::string> ids;
    ids.reserve(spec.n_entities);
    for (std::size_t i = 0; i < spec.n_entities; ++i) {
        std::string num = std::to_string(i);
        if (num.size() < 2) num.insert(num.begin(), '0');
        ids.push_back("E" + num);
    }
    return ids;
}

inline std::vector<std::string> synth_periods(std::size_t t) {
    std::vector<std::string> out;
    out.reserve(t);
    for (std::size_t i = 0; i < t; ++i) out.push_back("t" + std::to_string(i));
    return out;
}

inline void check_factor_spec(const FactorSpec& spec) {
    if (spec.n_entities < 3)
        throw ValidationError("factor spec needs at least 3 entities, got " + std::to_string(spec.n_entities));
    if (spec.n_periods < 2)
        throw ValidationError("factor spec needs at least 2 periods, got " + std::to_string(spec.n_periods));
    if (spec.n_factors >= std::min(spec.n_entities, spec.n_periods))
        throw ValidationError("n_factors must be below min(entities, periods)");
    if (spec.noise_sigma < 0.0) throw ValidationError("noise_sigma must be >= 0");
    if (spec.n_factors == 0 && spec.noise_sigma == 0.0)
        throw ValidationError("a factorless spec needs noise_sigma > 0 to produce any variation");
    if (spec.loadings) {
        if (static_cast<std::size_t>(spec.loadings->rows()) != spec.n_entities ||
            static_cast<std::size_t>(spec.loadings->cols()) != spec.n_factors)
            throw ValidationError("loadings matrix shape does not match n_entities x n_factors");
    }
}

// Draw order is pinned: factors (factor-major), then loadings if random
// (entity-major, magnitude then sign), then noise (entity-major).
// Changing it would silently change every seeded panel.
//
// Random loadings carry a random sign. All-positive loadings would align
// every factor mode with the all-ones vector, which the center-of-mass
// subtraction removes, leaving the factors invisible to the embedding.
inline Eigen::MatrixXd factor_values(const FactorSpec& spec, rng::Engine& eng) {
    rng::Gaussian gauss;
    const auto n = static_cast<Eigen::Index>(spec.n_entities);
    const auto t = static_cast<Eigen::Index>(spec.n_periods);
    const auto f = static_cast<Eigen::Index>(spec.n_factors);

    Eigen::MatrixXd factors(f, t);
    for (Eigen::Index a = 0; a < f; ++a)
        for (Eigen::Index b = 0; b < t; ++b) factors(a, b) = gauss(eng);

    Eigen::MatrixXd loadings;
    if (spec.loadings) {
        loadings = *spec.loadings;
    } else {
        loadings.resize(n, f);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index a = 0; a < f; ++a) {
                double magnitude = 0.5 + rng::uniform01(eng);
                loadings(i, a) = (eng() & 1) ? magnitude : -magnitude;
            }
    }

    Eigen::MatrixXd values = f > 0 ? Eigen::MatrixXd(loadings * factors) : Eigen::MatrixXd::Zero(n, t);
    if (spec.noise_sigma > 0.0)
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index b = 0; b < t; ++b) values(i, b) += spec.noise_sigma * gauss(eng);
    return values;
}

}  // namespace detail

/// values(i, t) = sum_f loading(i, f) * factor(f, t) + noise_sigma * eps(i, t).
inline Panel gen_factor_panel(const FactorSpec& spec) {
    detail::check_factor_spec(spec);
    rng::Engine eng(spec.seed);
    Panel p;
    p.entity_ids = detail::synth_ids(spec);
    p.period_labels = detail::synth_periods(spec.n_periods);
    p.values = detail::factor_values(spec, eng);
    return p;
}

/// Blend of a base factor panel with a single common factor whose weight
/// w(t) interpolates linearly from ramp_start to ramp_end:
///
///   values(i, t) = w(t) * a_i * g(t) + (1 - w(t)) * base(i, t)
///
/// Later windows are therefore more correlated. Eccentric entities get
/// their common loading a_i negated, anti-correlating them with the rest.
inline Panel gen_regime_panel(const RegimeSpec& spec) {
    detail::check_factor_spec(spec.base);
    if (!(spec.ramp_start >= 0.0 && spec.ramp_start <= 1.0 && spec.ramp_end >= 0.0 && spec.ramp_end <= 1.0))
        throw ValidationError("ramp weights must lie in [0, 1]");

    rng::Engine eng(spec.base.seed);
    rng::Gaussian gauss;
    Panel p;
    p.entity_ids = detail::synth_ids(spec.base);
    p.period_labels = detail::synth_periods(spec.base.n_periods);
    Eigen::MatrixXd base = detail::factor_values(spec.base, eng);

    const auto n = static_cast<Eigen::Index>(spec.base.n_entities);
    const auto t = static_cast<Eigen::Index>(spec.base.n_periods);

    Eigen::VectorXd common(n);
    for (Eigen::Index i = 0; i < n; ++i) common(i) = 0.5 + rng::uniform01(eng);
    for (const auto& id : spec.eccentric_entities) {
        auto it = std::find(p.entity_ids.begin(), p.entity_ids.end(), id);
        if (it == p.entity_ids.end())
            throw ValidationError("eccentric entity '" + id + "' does not exist in the panel");
        common(static_cast<Eigen::Index>(it - p.entity_ids.begin())) *= -1.0;
    }

    Eigen::VectorXd g(t);
    for (Eigen::Index b = 0; b < t; ++b) g(b) = gauss(eng);

    p.values.resize(n, t);
    for (Eigen::Index b = 0; b < t; ++b) {
        double w = t > 1 ? spec.ramp_start + (spec.ramp_end - spec.ramp_start) *
                                                 (static_cast<double>(b) / static_cast<double>(t - 1))
                         : spec.ramp_start;
        p.values.col(b) = w * g(b) * common + (1.0 - w) * base.col(b);
    }
    return p;
}

}  // namespace corrnet
