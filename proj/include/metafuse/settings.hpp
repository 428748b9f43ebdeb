#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "metafuse/csv.hpp"
#include "metafuse/data_list.hpp"
#include "metafuse/error.hpp"
#include "metafuse/rng.hpp"

namespace metafuse {

enum class SnfScheme { individual = 1, two_step = 2, domain_concatenation = 3 };

// Settings column names for the five metric selectors, in FeatureType order.
inline constexpr const char* kDistColumns[] = {"cont_dist", "disc_dist", "ord_dist", "cat_dist", "mix_dist"};

struct SettingsRow {
    int row_id = 0;
    double alpha = 0.5;
    int k = 20;
    int t = 20;
    int snf_scheme = 1;
    int clust_alg = 1;
    std::array<int, 5> dist{1, 1, 1, 1, 1};
    std::vector<int> inc;  // one 0/1 flag per component, data list order

    int dist_for(FeatureType t) const { return dist[type_index(t)]; }

    // Equality on every column except row_id.
    bool same_settings(const SettingsRow& o) const {
        return alpha == o.alpha && k == o.k && t == o.t && snf_scheme == o.snf_scheme && clust_alg == o.clust_alg &&
               dist == o.dist && inc == o.inc;
    }
};

// Number of choices per registry; indices drawn in generation stay within these.
struct RegistrySizes {
    std::size_t clust_algs = 2;
    std::array<std::size_t, 5> metrics{1, 1, 1, 1, 1};
};

enum class DropoutDist { none, uniform, exponential };

inline DropoutDist parse_dropout(std::string_view s) {
    if (s == "none") return DropoutDist::none;
    if (s == "uniform") return DropoutDist::uniform;
    if (s == "exponential") return DropoutDist::exponential;
    throw Error("settings", "unknown dropout distribution '" + std::string(s) + "'");
}

struct SettingsOptions {
    double min_alpha = 0.3;
    double max_alpha = 0.8;
    std::vector<double> alpha_values;  // overrides the range when nonempty
    int min_k = 10;
    int max_k = 100;
    std::vector<int> k_values;
    int min_t = 20;
    int max_t = 20;
    std::vector<int> t_values;
    std::vector<int> snf_schemes{1, 2, 3};
    std::vector<int> clust_algs;  // empty: every registered algorithm
    DropoutDist dropout = DropoutDist::exponential;
    int min_removed_inputs = 0;
    std::optional<int> max_removed_inputs;
};

class SettingsMatrix {
public:
    std::vector<std::string> component_names;
    RegistrySizes registries;
    std::uint64_t seed = 0;
    std::vector<SettingsRow> rows;

    std::size_t size() const { return rows.size(); }
    const SettingsRow& row(std::size_t i) const { return rows.at(i); }

    std::vector<std::string> column_names() const {
        std::vector<std::string> h{"row_id", "alpha", "k", "t", "snf_scheme", "clust_alg"};
        for (auto* d : kDistColumns) h.emplace_back(d);
        for (const auto& c : component_names) h.push_back("inc_" + c);
        return h;
    }

    void validate_row(const SettingsRow& r) const {
        const std::string where = "settings row " + std::to_string(r.row_id);
        require(r.inc.size() == component_names.size(), where.c_str(), "inclusion flag count mismatch");
        require(std::any_of(r.inc.begin(), r.inc.end(), [](int v) { return v == 1; }), where.c_str(),
                "at least one component must be included");
        for (int v : r.inc) require(v == 0 || v == 1, where.c_str(), "inclusion flags must be 0 or 1");
        require(r.snf_scheme >= 1 && r.snf_scheme <= 3, where.c_str(), "snf_scheme must be 1, 2 or 3");
        require(r.k >= 1 && r.t >= 1, where.c_str(), "k and t must be positive");
        require(r.alpha > 0.0, where.c_str(), "alpha must be positive");
        require(r.clust_alg >= 1 && static_cast<std::size_t>(r.clust_alg) <= registries.clust_algs, where.c_str(),
                "clust_alg index out of range");
        for (std::size_t i = 0; i < 5; ++i)
            require(r.dist[i] >= 1 && static_cast<std::size_t>(r.dist[i]) <= registries.metrics[i], where.c_str(),
                    std::string(kDistColumns[i]) + " index out of range");
    }

    void validate() const {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            validate_row(rows[i]);
            require(rows[i].row_id == static_cast<int>(i) + 1, "settings", "row_ids must be consecutive from 1");
        }
    }
};

namespace detail {

inline std::vector<double> alpha_choices(const SettingsOptions& o) {
    if (!o.alpha_values.empty()) return o.alpha_values;
    require(o.min_alpha <= o.max_alpha, "settings", "min_alpha exceeds max_alpha");
    std::vector<double> v;
    const long lo = std::lround(std::ceil(o.min_alpha * 10.0 - 1e-9));
    const long hi = std::lround(std::floor(o.max_alpha * 10.0 + 1e-9));
    for (long a = lo; a <= hi; ++a) v.push_back(static_cast<double>(a) / 10.0);
    require(!v.empty(), "settings", "alpha range contains no value on the 0.1 grid");
    return v;
}

inline std::vector<int> int_choices(const std::vector<int>& values, int lo, int hi, const char* what) {
    if (!values.empty()) return values;
    require(lo <= hi, "settings", std::string("min_") + what + " exceeds max_" + what);
    std::vector<int> v;
    for (int x = lo; x <= hi; ++x) v.push_back(x);
    return v;
}

template <class T>
T pick(Rng& rng, const std::vector<T>& v) {
    return v[rng.index(v.size())];
}

// Number of removed components: support [min_removed, max_removed], weights 2^-j
// (exponential), flat (uniform), or fixed 0 (none).
inline int draw_removed(Rng& rng, const SettingsOptions& o, int n_components) {
    if (o.dropout == DropoutDist::none) return 0;
    const int lo = o.min_removed_inputs;
    const int hi = std::min(o.max_removed_inputs.value_or(n_components - 1), n_components - 1);
    require(lo <= hi, "settings", "min_removed_inputs exceeds max_removed_inputs");
    std::vector<double> w;
    for (int j = lo; j <= hi; ++j) w.push_back(o.dropout == DropoutDist::exponential ? std::ldexp(1.0, -(j - lo)) : 1.0);
    return lo + static_cast<int>(rng.weighted_index(w));
}

inline SettingsRow draw_row(Rng& rng, const SettingsOptions& o, const RegistrySizes& reg, int n_components,
                            int row_id) {
    SettingsRow r;
    r.row_id = row_id;
    r.alpha = pick(rng, alpha_choices(o));
    r.k = pick(rng, int_choices(o.k_values, o.min_k, o.max_k, "k"));
    r.t = pick(rng, int_choices(o.t_values, o.min_t, o.max_t, "t"));
    r.snf_scheme = pick(rng, o.snf_schemes);
    std::vector<int> algs = o.clust_algs;
    if (algs.empty())
        for (std::size_t i = 1; i <= reg.clust_algs; ++i) algs.push_back(static_cast<int>(i));
    r.clust_alg = pick(rng, algs);
    for (std::size_t i = 0; i < 5; ++i) r.dist[i] = static_cast<int>(rng.uniform_int(1, static_cast<std::int64_t>(reg.metrics[i])));
    const int removed = draw_removed(rng, o, n_components);
    r.inc.assign(static_cast<std::size_t>(n_components), 1);
    for (auto idx : rng.sample_without_replacement(static_cast<std::size_t>(n_components), static_cast<std::size_t>(removed)))
        r.inc[idx] = 0;
    return r;
}

inline void check_options(const SettingsOptions& o, int n_components) {
    require(o.min_removed_inputs >= 0, "settings", "min_removed_inputs must be nonnegative");
    require(o.min_removed_inputs < n_components, "settings",
            "min_removed_inputs (" + std::to_string(o.min_removed_inputs) + ") must be below the component count (" +
                std::to_string(n_components) + ")");
    require(!o.snf_schemes.empty(), "settings", "no snf schemes allowed");
    for (int s : o.snf_schemes) require(s >= 1 && s <= 3, "settings", "snf schemes must be in 1..3");
    for (int k : o.k_values) require(k >= 1, "settings", "k values must be positive");
    require(o.k_values.empty() ? o.min_k >= 1 : true, "settings", "min_k must be positive");
    require(o.t_values.empty() ? o.min_t >= 1 : true, "settings", "min_t must be positive");
}

}  // namespace detail

/// Appends `nrow` rows drawn under `options`; row_ids continue the sequence
/// and rows duplicating any existing row are re-drawn (up to 100 * nrow times).
inline SettingsMatrix add_settings_matrix_rows(SettingsMatrix sm, std::size_t nrow, const SettingsOptions& options,
                                               std::uint64_t seed) {
    const int nc = static_cast<int>(sm.component_names.size());
    detail::check_options(options, nc);
    for (int a : options.clust_algs)
        require(a >= 1 && static_cast<std::size_t>(a) <= sm.registries.clust_algs, "settings", "clust_alg choice out of range");
    std::size_t attempts = 0;
    const std::size_t max_attempts = 100 * std::max<std::size_t>(nrow, 1);
    for (std::size_t added = 0; added < nrow;) {
        const int row_id = static_cast<int>(sm.rows.size()) + 1;
        Rng rng(stream_seed(seed, {kSettingsStream, static_cast<std::uint64_t>(row_id), attempts}));
        SettingsRow r = detail::draw_row(rng, options, sm.registries, nc, row_id);
        const bool dup = std::any_of(sm.rows.begin(), sm.rows.end(), [&](const SettingsRow& o) { return o.same_settings(r); });
        if (!dup) {
            sm.validate_row(r);
            sm.rows.push_back(std::move(r));
            ++added;
        } else if (++attempts > max_attempts) {
            throw Error("settings", "could not draw " + std::to_string(nrow) +
                                        " distinct rows; the option space is too small for the requested row count");
        }
    }
    return sm;
}

inline SettingsMatrix generate_settings_matrix(const DataList& dl, std::size_t nrow, const SettingsOptions& options,
                                               const RegistrySizes& registries, std::uint64_t seed) {
    SettingsMatrix sm;
    for (const auto& c : dl.components()) sm.component_names.push_back(c.name);
    sm.registries = registries;
    sm.seed = seed;
    return add_settings_matrix_rows(std::move(sm), nrow, options, seed);
}

// ---- CSV ----

inline std::vector<std::string> settings_cells(const SettingsRow& r) {
    std::vector<std::string> row{std::to_string(r.row_id), csv::format_number(r.alpha), std::to_string(r.k),
                                 std::to_string(r.t),      std::to_string(r.snf_scheme), std::to_string(r.clust_alg)};
    for (int d : r.dist) row.push_back(std::to_string(d));
    for (int v : r.inc) row.push_back(std::to_string(v));
    return row;
}

inline csv::Table to_table(const SettingsMatrix& sm) {
    csv::Table t{sm.column_names(), {}};
    for (const auto& r : sm.rows) t.rows.push_back(settings_cells(r));
    return t;
}

namespace detail {

inline int parse_int_cell(const std::string& s, const std::string& col) {
    auto v = csv::parse_number(s);
    if (!v || *v != std::floor(*v)) throw Error("settings", "column '" + col + "' expects an integer, got '" + s + "'");
    return static_cast<int>(*v);
}

// Column positions of the settings block inside a wider table.
struct SettingsLayout {
    std::array<std::size_t, 6> base{};
    std::array<std::size_t, 5> dist{};
    std::vector<std::size_t> inc;
    std::vector<std::string> component_names;

    static SettingsLayout of(const csv::Table& t) {
        SettingsLayout l;
        const char* base_names[] = {"row_id", "alpha", "k", "t", "snf_scheme", "clust_alg"};
        for (std::size_t i = 0; i < 6; ++i) l.base[i] = t.require_column(base_names[i], "settings");
        for (std::size_t i = 0; i < 5; ++i) l.dist[i] = t.require_column(kDistColumns[i], "settings");
        for (std::size_t c = 0; c < t.header.size(); ++c)
            if (t.header[c].rfind("inc_", 0) == 0) {
                l.inc.push_back(c);
                l.component_names.push_back(t.header[c].substr(4));
            }
        require(!l.inc.empty(), "settings", "no inc_ columns found");
        return l;
    }

    bool is_settings_column(std::size_t c) const {
        if (std::find(base.begin(), base.end(), c) != base.end()) return true;
        if (std::find(dist.begin(), dist.end(), c) != dist.end()) return true;
        return std::find(inc.begin(), inc.end(), c) != inc.end();
    }

    SettingsRow parse_row(const std::vector<std::string>& cells, const csv::Table& t) const {
        SettingsRow r;
        r.row_id = parse_int_cell(cells[base[0]], "row_id");
        r.alpha = csv::parse_cell_number(cells[base[1]]);
        r.k = parse_int_cell(cells[base[2]], "k");
        r.t = parse_int_cell(cells[base[3]], "t");
        r.snf_scheme = parse_int_cell(cells[base[4]], "snf_scheme");
        r.clust_alg = parse_int_cell(cells[base[5]], "clust_alg");
        for (std::size_t i = 0; i < 5; ++i) r.dist[i] = parse_int_cell(cells[dist[i]], kDistColumns[i]);
        for (auto c : inc) r.inc.push_back(parse_int_cell(cells[c], t.header[c]));
        return r;
    }
};

}  // namespace detail

/// Registry sizes are not stored in the CSV; pass the ones the matrix was
/// generated against (indices are validated against them).
inline SettingsMatrix settings_from_table(const csv::Table& t, const RegistrySizes& registries) {
    auto layout = detail::SettingsLayout::of(t);
    SettingsMatrix sm;
    sm.component_names = layout.component_names;
    sm.registries = registries;
    for (const auto& cells : t.rows) sm.rows.push_back(layout.parse_row(cells, t));
    for (const auto& r : sm.rows) sm.validate_row(r);
    return sm;
}

/// Every column except row_id min-max scaled to [0, 1] (constant columns map to 0).
inline csv::Table scaled_settings_table(const SettingsMatrix& sm) {
    csv::Table raw = to_table(sm);
    csv::Table out{raw.header, {}};
    const std::size_t ncol = raw.header.size();
    std::vector<double> lo(ncol, INFINITY), hi(ncol, -INFINITY);
    std::vector<std::vector<double>> vals;
    for (const auto& row : raw.rows) {
        std::vector<double> v;
        for (std::size_t c = 0; c < ncol; ++c) {
            v.push_back(csv::parse_cell_number(row[c]));
            lo[c] = std::min(lo[c], v.back());
            hi[c] = std::max(hi[c], v.back());
        }
        vals.push_back(std::move(v));
    }
    for (const auto& v : vals) {
        std::vector<std::string> row{csv::format_number(v[0])};
        for (std::size_t c = 1; c < ncol; ++c)
            row.push_back(csv::format_number(hi[c] > lo[c] ? (v[c] - lo[c]) / (hi[c] - lo[c]) : 0.0));
        out.rows.push_back(std::move(row));
    }
    return out;
}

}  // namespace metafuse
