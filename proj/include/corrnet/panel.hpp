// Panels of time series: CSV ingestion, windowing, normalization.
//
// A Panel is a rectangular N x T block of real observations, one row per
// entity, columns in the chronological order declared by the input file.
// Period labels are opaque strings; the math never parses them.

#pragma once

#include "corrnet/common.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace corrnet {

struct Panel {
    std::vector<std::string> entity_ids;    // unique, first-appearance order
    std::vector<std::string> period_labels; // file order
    Eigen::MatrixXd values;                 // N x T

    std::size_t entities() const { return entity_ids.size(); }
    std::size_t periods() const { return period_labels.size(); }
};

/// Eq-style normalized series: zero mean, unit Euclidean norm.
struct NormalizedSeries {
    std::string entity_id;
    Eigen::VectorXd rho;
};

enum class PanelFormat { long_form, wide_form };

inline PanelFormat parse_format(std::string_view s) {
    if (s == "long") return PanelFormat::long_form;
    if (s == "wide") return PanelFormat::wide_form;
    throw ValidationError("unknown panel format '" + std::string(s) + "' (expected long|wide)");
}

namespace detail {

// Minimal CSV line splitter: double-quoted fields, "" escapes, CR stripped.
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

inline double parse_cell(const std::string& raw, const std::string& entity, const std::string& period) {
    std::string s = raw;
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
    if (s.size() > 1 && s.front() == '+') s.erase(s.begin());  // from_chars rejects a leading '+'
    if (s.empty())
        throw ValidationError("missing observation for entity '" + entity + "' period '" + period + "'");
    double v = 0.0;
    if (!parse_double(s, v))
        throw ValidationError("non-numeric value '" + raw + "' for entity '" + entity + "' period '" + period + "'");
    if (!std::isfinite(v))
        throw ValidationError("non-finite value for entity '" + entity + "' period '" + period + "'");
    return v;
}

inline void check_panel_shape(std::size_t n, std::size_t t) {
    if (n < 3) throw ValidationError("panel has " + std::to_string(n) + " entities; at least 3 required");
    if (t < 2) throw ValidationError("panel has " + std::to_string(t) + " periods; at least 2 required");
}

inline Panel load_long(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("empty input");
    auto header = split_csv_line(line);
    if (header.size() != 3 || header[0] != "entity" || header[1] != "period" || header[2] != "value")
        throw ValidationError("long CSV must start with header 'entity,period,value'");

    std::vector<std::string> entities, periods;
    std::map<std::string, std::size_t> entity_index, period_index;
    struct Cell { double value; };
    std::map<std::pair<std::size_t, std::size_t>, Cell> cells;

    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto f = split_csv_line(line);
        if (f.size() != 3)
            throw ValidationError("long CSV row has " + std::to_string(f.size()) + " fields, expected 3: " + line);
        auto [eit, enew] = entity_index.try_emplace(f[0], entities.size());
        if (enew) entities.push_back(f[0]);
        auto [pit, pnew] = period_index.try_emplace(f[1], periods.size());
        if (pnew) periods.push_back(f[1]);
        auto key = std::make_pair(eit->second, pit->second);
        if (cells.count(key))
            throw ValidationError("duplicate cell for entity '" + f[0] + "' period '" + f[1] + "'");
        cells[key] = Cell{parse_cell(f[2], f[0], f[1])};
    }

    check_panel_shape(entities.size(), periods.size());
    Panel p;
    p.entity_ids = std::move(entities);
    p.period_labels = std::move(periods);
    p.values.resize(static_cast<Eigen::Index>(p.entities()), static_cast<Eigen::Index>(p.periods()));
    for (std::size_t i = 0; i < p.entities(); ++i)
        for (std::size_t t = 0; t < p.periods(); ++t) {
            auto it = cells.find({i, t});
            if (it == cells.end())
                throw ValidationError("missing observation for entity '" + p.entity_ids[i] +
                                      "' period '" + p.period_labels[t] + "'");
            p.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = it->second.value;
        }
    return p;
}

inline Panel load_wide(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("empty input");
    auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "period")
        throw ValidationError("wide CSV must start with header 'period,<id1>,<id2>,...'");

    std::vector<std::string> entities(header.begin() + 1, header.end());
    {
        std::map<std::string, int> seen;
        for (const auto& id : entities) {
            if (id.empty()) throw ValidationError("empty entity id in wide CSV header");
            if (seen[id]++) throw ValidationError("duplicate entity '" + id + "' in wide CSV header");
        }
    }

    std::vector<std::string> periods;
    std::map<std::string, int> period_seen;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto f = split_csv_line(line);
        if (f.size() != entities.size() + 1)
            throw ValidationError("wide CSV row for period '" + (f.empty() ? "?" : f[0]) + "' has " +
                                  std::to_string(f.size() ? f.size() - 1 : 0) + " values, expected " +
                                  std::to_string(entities.size()));
        if (period_seen[f[0]]++)
            throw ValidationError("duplicate cell for period '" + f[0] + "' (period listed twice)");
        periods.push_back(f[0]);
        std::vector<double> row(entities.size());
        for (std::size_t i = 0; i < entities.size(); ++i)
            row[i] = parse_cell(f[i + 1], entities[i], f[0]);
        rows.push_back(std::move(row));
    }

    check_panel_shape(entities.size(), periods.size());
    Panel p;
    p.entity_ids = std::move(entities);
    p.period_labels = std::move(periods);
    p.values.resize(static_cast<Eigen::Index>(p.entities()), static_cast<Eigen::Index>(p.periods()));
    for (std::size_t t = 0; t < p.periods(); ++t)
        for (std::size_t i = 0; i < p.entities(); ++i)
            p.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = rows[t][i];
    return p;
}

}  // namespace detail

inline Panel load_panel(std::istream& in, PanelFormat format) {
    return format == PanelFormat::long_form ? detail::load_long(in) : detail::load_wide(in);
}

inline Panel load_panel(const std::string& text, PanelFormat format) {
    std::istringstream in(text);
    return load_panel(in, format);
}

/// Writes a panel back out with shortest round-trip number formatting, so a
/// save/load cycle reproduces values bit-exactly.
inline void save_panel(const Panel& p, std::ostream& out, PanelFormat format) {
    if (format == PanelFormat::long_form) {
        out << "entity,period,value\n";
        for (std::size_t i = 0; i < p.entities(); ++i)
            for (std::size_t t = 0; t < p.periods(); ++t)
                out << detail::csv_escape(p.entity_ids[i]) << ',' << detail::csv_escape(p.period_labels[t])
                    << ',' << format_double(p.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)))
                    << '\n';
    } else {
        out << "period";
        for (const auto& id : p.entity_ids) out << ',' << detail::csv_escape(id);
        out << '\n';
        for (std::size_t t = 0; t < p.periods(); ++t) {
            out << detail::csv_escape(p.period_labels[t]);
            for (std::size_t i = 0; i < p.entities(); ++i)
                out << ',' << format_double(p.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)));
            out << '\n';
        }
    }
}

/// Restrict a panel to columns [start, start + length).
inline Panel window(const Panel& p, std::size_t start, std::size_t length) {
    if (length < 2)
        throw ValidationError("window length " + std::to_string(length) + " is below the minimum of 2");
    if (start + length > p.periods())
        throw ValidationError("window [" + std::to_string(start) + ", " + std::to_string(start + length) +
                              ") out of range for panel with " + std::to_string(p.periods()) + " periods");
    Panel w;
    w.entity_ids = p.entity_ids;
    w.period_labels.assign(p.period_labels.begin() + static_cast<std::ptrdiff_t>(start),
                           p.period_labels.begin() + static_cast<std::ptrdiff_t>(start + length));
    w.values = p.values.middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(length));
    return w;
}

/// True when every observation of the entity is identical over the panel.
inline bool is_constant_series(const Panel& p, std::size_t entity) {
    auto row = p.values.row(static_cast<Eigen::Index>(entity));
    return row.maxCoeff() == row.minCoeff();
}

/// rho = (l - <l>) / sqrt(n * population-variance(l)); equivalently the
/// centered series scaled to unit Euclidean norm.
inline NormalizedSeries normalize(const Panel& p, std::size_t entity) {
    if (entity >= p.entities())
        throw ValidationError("entity index " + std::to_string(entity) + " out of range");
    Eigen::VectorXd centered =
        p.values.row(static_cast<Eigen::Index>(entity)).transpose().array() -
        p.values.row(static_cast<Eigen::Index>(entity)).mean();
    double norm = centered.norm();
    if (is_constant_series(p, entity) || norm == 0.0)
        throw ValidationError("zero variance: entity '" + p.entity_ids[entity] + "' is constant over [" +
                              p.period_labels.front() + " .. " + p.period_labels.back() + "]");
    return NormalizedSeries{p.entity_ids[entity], centered / norm};
}

/// Entities with constant series over this panel, in row order.
inline std::vector<std::string> constant_entities(const Panel& p) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < p.entities(); ++i)
        if (is_constant_series(p, i)) out.push_back(p.entity_ids[i]);
    return out;
}

/// Remove the named entities from the panel. Used by the --drop-constant
/// policy; errors if fewer than 3 entities remain.
inline Panel drop_entities(const Panel& p, const std::vector<std::string>& ids) {
    Panel out;
    out.period_labels = p.period_labels;
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < p.entities(); ++i)
        if (std::find(ids.begin(), ids.end(), p.entity_ids[i]) == ids.end()) keep.push_back(i);
    if (keep.size() < 3)
        throw ValidationError("dropping constant entities leaves " + std::to_string(keep.size()) +
                              " of " + std::to_string(p.entities()) + "; at least 3 required");
    out.entity_ids.reserve(keep.size());
    out.values.resize(static_cast<Eigen::Index>(keep.size()), p.values.cols());
    for (std::size_t r = 0; r < keep.size(); ++r) {
        out.entity_ids.push_back(p.entity_ids[keep[r]]);
        out.values.row(static_cast<Eigen::Index>(r)) = p.values.row(static_cast<Eigen::Index>(keep[r]));
    }
    return out;
}

}  // namespace corrnet
