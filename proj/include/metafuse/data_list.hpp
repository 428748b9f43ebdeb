#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "metafuse/csv.hpp"
#include "metafuse/error.hpp"
#include "metafuse/rng.hpp"

namespace metafuse {

enum class FeatureType { continuous, discrete, ordinal, categorical, mixed };

inline constexpr FeatureType kAllFeatureTypes[] = {FeatureType::continuous, FeatureType::discrete,
                                                   FeatureType::ordinal, FeatureType::categorical,
                                                   FeatureType::mixed};

inline std::string_view to_string(FeatureType t) {
    switch (t) {
        case FeatureType::continuous: return "continuous";
        case FeatureType::discrete: return "discrete";
        case FeatureType::ordinal: return "ordinal";
        case FeatureType::categorical: return "categorical";
        case FeatureType::mixed: return "mixed";
    }
    return "?";
}

inline FeatureType parse_feature_type(std::string_view s) {
    for (auto t : kAllFeatureTypes)
        if (to_string(t) == s) return t;
    throw Error("feature type", "unknown type '" + std::string(s) +
                                    "' (expected continuous, discrete, ordinal, categorical or mixed)");
}

inline std::size_t type_index(FeatureType t) { return static_cast<std::size_t>(t); }

// One feature. Categorical columns store level codes (0-based, levels sorted)
// in `values`.
struct Column {
    std::string name;
    bool categorical = false;
    std::vector<double> values;
    std::vector<std::string> levels;

    std::string cell(std::size_t i) const {
        if (categorical) return levels[static_cast<std::size_t>(values[i])];
        return csv::format_number(values[i]);
    }
};

inline Column make_numeric_column(std::string name, std::vector<double> values) {
    return Column{std::move(name), false, std::move(values), {}};
}

inline Column make_categorical_column(std::string name, const std::vector<std::string>& cells) {
    Column col;
    col.name = std::move(name);
    col.categorical = true;
    std::set<std::string> lv(cells.begin(), cells.end());
    col.levels.assign(lv.begin(), lv.end());
    col.values.reserve(cells.size());
    for (const auto& c : cells) {
        auto it = std::lower_bound(col.levels.begin(), col.levels.end(), c);
        col.values.push_back(static_cast<double>(it - col.levels.begin()));
    }
    return col;
}

struct DataComponent {
    std::string name;
    std::string domain;
    FeatureType type = FeatureType::continuous;
    std::vector<std::string> uids;
    std::vector<Column> columns;

    std::size_t n_obs() const { return uids.size(); }
    std::size_t n_features() const { return columns.size(); }
};

// Input for build_data_list: a raw table plus its component metadata.
struct ComponentSpec {
    csv::Table table;
    std::string name;
    std::string domain;
    FeatureType type = FeatureType::continuous;
};

class DataList {
public:
    DataList() = default;
    DataList(std::vector<DataComponent> components, std::string uid_column)
        : components_(std::move(components)), uid_column_(std::move(uid_column)) {
        validate();
    }

    const std::vector<DataComponent>& components() const { return components_; }
    const DataComponent& component(std::size_t i) const { return components_.at(i); }
    std::size_t n_components() const { return components_.size(); }
    std::vector<std::string> component_names() const {
        std::vector<std::string> out;
        for (const auto& c : components_) out.push_back(c.name);
        return out;
    }
    const std::string& uid_column() const { return uid_column_; }
    const std::vector<std::string>& uids() const { return components_.front().uids; }
    std::size_t n_obs() const { return uids().size(); }

    std::size_t n_features() const {
        std::size_t n = 0;
        for (const auto& c : components_) n += c.n_features();
        return n;
    }

    // Feature names in component order, then column order.
    std::vector<std::string> feature_names() const {
        std::vector<std::string> out;
        for (const auto& c : components_)
            for (const auto& col : c.columns) out.push_back(col.name);
        return out;
    }

    // Offset of component i's first feature in feature_names().
    std::size_t feature_offset(std::size_t component) const {
        std::size_t off = 0;
        for (std::size_t i = 0; i < component; ++i) off += components_[i].n_features();
        return off;
    }

    struct FeatureRef {
        std::size_t component;
        std::size_t column;
        std::size_t global;
    };

    std::optional<FeatureRef> find_feature(std::string_view name) const {
        std::size_t g = 0;
        for (std::size_t c = 0; c < components_.size(); ++c)
            for (std::size_t j = 0; j < components_[c].columns.size(); ++j, ++g)
                if (components_[c].columns[j].name == name) return FeatureRef{c, j, g};
        return std::nullopt;
    }

    std::optional<std::size_t> find_component(std::string_view name) const {
        for (std::size_t c = 0; c < components_.size(); ++c)
            if (components_[c].name == name) return c;
        return std::nullopt;
    }

    /// Restrict to the given uids (each must be present; output sorted).
    DataList select(std::span<const std::string> keep) const {
        std::unordered_map<std::string, std::size_t> pos;
        for (std::size_t i = 0; i < n_obs(); ++i) pos.emplace(uids()[i], i);
        std::vector<std::string> sorted(keep.begin(), keep.end());
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        std::vector<std::size_t> rows;
        rows.reserve(sorted.size());
        for (const auto& u : sorted) {
            auto it = pos.find(u);
            if (it == pos.end()) throw Error("select", "uid '" + u + "' not in data list");
            rows.push_back(it->second);
        }
        return select_rows(rows);
    }

    // Rows by index; indices must be increasing so uid order stays sorted.
    DataList select_rows(std::span<const std::size_t> rows) const {
        std::vector<DataComponent> comps;
        comps.reserve(components_.size());
        for (const auto& c : components_) {
            DataComponent nc{c.name, c.domain, c.type, {}, {}};
            nc.uids.reserve(rows.size());
            for (auto r : rows) nc.uids.push_back(c.uids[r]);
            for (const auto& col : c.columns) {
                Column ncol{col.name, col.categorical, {}, col.levels};
                ncol.values.reserve(rows.size());
                for (auto r : rows) ncol.values.push_back(col.values[r]);
                nc.columns.push_back(std::move(ncol));
            }
            comps.push_back(std::move(nc));
        }
        return DataList(std::move(comps), uid_column_);
    }

    void validate() const {
        require(!components_.empty(), "data list", "at least one component is required");
        const auto& ref = components_.front().uids;
        require(!ref.empty(), "data list", "no observations");
        for (std::size_t i = 1; i < ref.size(); ++i)
            require(ref[i - 1] < ref[i], "data list", "uids must be strictly sorted and unique (at '" + ref[i] + "')");
        std::unordered_set<std::string> names;
        std::unordered_set<std::string> comp_names;
        for (const auto& c : components_) {
            require(comp_names.insert(c.name).second, "data list", "duplicate component name '" + c.name + "'");
            require(c.uids == ref, "data list", "component '" + c.name + "' uid vector differs from the first component");
            require(!c.columns.empty(), "data list", "component '" + c.name + "' has no features");
            for (const auto& col : c.columns) {
                require(col.values.size() == ref.size(), "data list",
                        "feature '" + col.name + "' length does not match the uid count");
                require(names.insert(col.name).second, "data list",
                        "feature name '" + col.name + "' is not unique across components");
                for (double v : col.values)
                    require(std::isfinite(v), "data list", "feature '" + col.name + "' has a missing value");
                if (c.type != FeatureType::mixed)
                    require(col.categorical == (c.type == FeatureType::categorical), "data list",
                            "feature '" + col.name + "' kind does not match component type");
            }
        }
    }

private:
    std::vector<DataComponent> components_;
    std::string uid_column_;
};

// A data list holding out-of-model evaluation features.
struct TargetList {
    DataList data;
};

namespace detail {

inline std::set<std::string> complete_uids_of(const csv::Table& t, const std::string& uid, const std::string& name) {
    auto uc = t.column(uid);
    if (!uc) throw Error("table '" + name + "'", "missing uid column '" + uid + "'");
    std::set<std::string> out;
    for (const auto& row : t.rows) {
        bool complete = !csv::is_missing(row[*uc]);
        for (const auto& cell : row)
            if (csv::is_missing(cell)) complete = false;
        if (complete) out.insert(row[*uc]);
    }
    return out;
}

}  // namespace detail

/// UIDs with no missing value in any column of any table. Pure: the tables
/// are not filtered.
inline std::vector<std::string> get_complete_uids(std::span<const csv::Table> tables, const std::string& uid,
                                                  std::span<const std::string> names = {}) {
    std::set<std::string> acc;
    for (std::size_t i = 0; i < tables.size(); ++i) {
        std::string name = i < names.size() ? names[i] : "#" + std::to_string(i + 1);
        auto s = detail::complete_uids_of(tables[i], uid, name);
        if (i == 0) {
            acc = std::move(s);
        } else {
            std::set<std::string> inter;
            std::set_intersection(acc.begin(), acc.end(), s.begin(), s.end(), std::inserter(inter, inter.end()));
            acc = std::move(inter);
        }
    }
    return {acc.begin(), acc.end()};
}

inline std::vector<std::string> get_complete_uids(std::span<const ComponentSpec> specs, const std::string& uid) {
    std::vector<csv::Table> tables;
    std::vector<std::string> names;
    for (const auto& s : specs) {
        tables.push_back(s.table);
        names.push_back(s.name);
    }
    return get_complete_uids(tables, uid, names);
}

inline DataComponent parse_component(const ComponentSpec& spec, const std::string& uid,
                                     const std::vector<std::string>& keep) {
    const auto& t = spec.table;
    const std::string where = "component '" + spec.name + "'";
    auto uc = t.column(uid);
    if (!uc) throw Error(where, "missing uid column '" + uid + "'");

    std::unordered_map<std::string, std::size_t> row_of;
    for (std::size_t r = 0; r < t.rows.size(); ++r)
        if (!row_of.emplace(t.rows[r][*uc], r).second)
            throw Error(where, "duplicate uid '" + t.rows[r][*uc] + "'");

    DataComponent comp{spec.name, spec.domain, spec.type, keep, {}};
    for (std::size_t c = 0; c < t.header.size(); ++c) {
        if (c == *uc) continue;
        std::vector<std::string> cells;
        cells.reserve(keep.size());
        for (const auto& u : keep) cells.push_back(t.rows[row_of.at(u)][c]);

        std::vector<double> nums;
        bool numeric = spec.type != FeatureType::categorical;
        if (numeric) {
            nums.reserve(cells.size());
            for (const auto& cell : cells) {
                auto v = csv::parse_number(cell);
                if (!v) {
                    numeric = false;
                    break;
                }
                nums.push_back(*v);
            }
        }
        if (!numeric && spec.type != FeatureType::categorical && spec.type != FeatureType::mixed)
            throw Error(where, "feature '" + t.header[c] + "' is declared " + std::string(to_string(spec.type)) +
                                   " but has non-numeric values");
        comp.columns.push_back(numeric ? make_numeric_column(t.header[c], std::move(nums))
                                       : make_categorical_column(t.header[c], cells));
    }
    if (comp.columns.empty()) throw Error(where, "no feature columns besides the uid");
    return comp;
}

/// Rows are restricted to uids complete across every component; uids sorted.
inline DataList build_data_list(std::span<const ComponentSpec> specs, const std::string& uid) {
    require(!specs.empty(), "build_data_list", "at least one component is required");
    std::unordered_set<std::string> seen;
    for (const auto& s : specs) {
        auto uc = s.table.column(uid);
        if (!uc) throw Error("component '" + s.name + "'", "missing uid column '" + uid + "'");
        std::unordered_set<std::string> uids_here;
        for (const auto& row : s.table.rows)
            if (!uids_here.insert(row[*uc]).second)
                throw Error("component '" + s.name + "'", "duplicate uid '" + row[*uc] + "'");
        for (std::size_t c = 0; c < s.table.header.size(); ++c) {
            if (c == *uc) continue;
            if (!seen.insert(s.table.header[c]).second)
                throw Error("build_data_list", "feature name '" + s.table.header[c] + "' appears in more than one component");
        }
    }
    auto keep = get_complete_uids(specs, uid);
    require(!keep.empty(), "build_data_list", "no observation is complete across all components");
    std::vector<DataComponent> comps;
    for (const auto& s : specs) comps.push_back(parse_component(s, uid, keep));
    return DataList(std::move(comps), uid);
}

struct ComponentSummary {
    std::string name;
    FeatureType type;
    std::string domain;
    std::size_t length;  // observations
    std::size_t width;   // features + uid column
};

struct FeatureSummary {
    std::string name;
    FeatureType type;
    std::string domain;
};

inline std::vector<ComponentSummary> summarize_components(const DataList& dl) {
    std::vector<ComponentSummary> out;
    for (const auto& c : dl.components()) out.push_back({c.name, c.type, c.domain, c.n_obs(), c.n_features() + 1});
    return out;
}

inline std::vector<FeatureSummary> summarize_features(const DataList& dl) {
    std::vector<FeatureSummary> out;
    for (const auto& c : dl.components())
        for (const auto& col : c.columns) out.push_back({col.name, c.type, c.domain});
    return out;
}

/// One table keyed by uid: all features, component order then feature order.
inline csv::Table collapse_data_list(const DataList& dl) {
    csv::Table t;
    t.header.push_back(dl.uid_column());
    for (const auto& n : dl.feature_names()) t.header.push_back(n);
    for (std::size_t i = 0; i < dl.n_obs(); ++i) {
        std::vector<std::string> row{dl.uids()[i]};
        for (const auto& c : dl.components())
            for (const auto& col : c.columns) row.push_back(col.cell(i));
        t.rows.push_back(std::move(row));
    }
    return t;
}

/// Each subsample: floor(fraction * N) distinct uids, drawn without
/// replacement from stream (seed, s).
inline std::vector<DataList> subsample_data_list(const DataList& dl, std::size_t n_subsamples, double fraction,
                                                 std::uint64_t seed) {
    require(fraction > 0.0 && fraction <= 1.0, "subsample_data_list", "fraction must be in (0, 1]");
    const std::size_t n = dl.n_obs();
    const auto m = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
    require(m >= 2, "subsample_data_list", "subsample size floor(fraction*N) must be at least 2");
    std::vector<DataList> out;
    out.reserve(n_subsamples);
    for (std::size_t s = 0; s < n_subsamples; ++s) {
        Rng rng(stream_seed(seed, {kSubsampleStream, s + 1}));
        auto rows = rng.sample_without_replacement(n, m);
        std::sort(rows.begin(), rows.end());
        out.push_back(dl.select_rows(rows));
    }
    return out;
}

struct AdjustResult {
    DataList data;
    std::vector<std::string> unadjusted;  // features passed through unchanged
};

/// Replaces every continuous feature by its OLS residuals on `covariate`.
inline AdjustResult linear_adjust(const DataList& dl, std::span<const double> covariate) {
    require(covariate.size() == dl.n_obs(), "linear_adjust", "covariate length does not match the observation count");
    const double n = static_cast<double>(covariate.size());
    double xbar = 0.0;
    for (double x : covariate) xbar += x;
    xbar /= n;
    double sxx = 0.0;
    for (double x : covariate) sxx += (x - xbar) * (x - xbar);
    require(sxx > 0.0, "linear_adjust", "covariate has zero variance");

    AdjustResult res;
    std::vector<DataComponent> comps = dl.components();
    for (auto& c : comps) {
        for (auto& col : c.columns) {
            if (c.type != FeatureType::continuous) {
                res.unadjusted.push_back(col.name);
                continue;
            }
            double ybar = 0.0;
            for (double y : col.values) ybar += y;
            ybar /= n;
            double sxy = 0.0;
            for (std::size_t i = 0; i < col.values.size(); ++i) sxy += (covariate[i] - xbar) * (col.values[i] - ybar);
            const double slope = sxy / sxx;
            const double intercept = ybar - slope * xbar;
            for (std::size_t i = 0; i < col.values.size(); ++i)
                col.values[i] -= intercept + slope * covariate[i];
        }
    }
    res.data = DataList(std::move(comps), dl.uid_column());
    return res;
}

}  // namespace metafuse
