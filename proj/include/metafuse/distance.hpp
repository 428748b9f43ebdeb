#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "metafuse/csv.hpp"
#include "metafuse/data_list.hpp"
#include "metafuse/error.hpp"
#include "metafuse/rng.hpp"

namespace metafuse {

// Symmetric, nonnegative, zero-diagonal n x n matrix in the data list's uid order.
struct DistanceMatrix {
    Eigen::MatrixXd values;
    std::vector<std::string> warnings;

    Eigen::Index size() const { return values.rows(); }
};

using MetricFn = std::function<DistanceMatrix(const DataComponent&, std::span<const double> weights)>;

namespace detail {

inline void check_weights(const DataComponent& c, std::span<const double> w) {
    require(w.size() == c.n_features(), "distance",
            "component '" + c.name + "' has " + std::to_string(c.n_features()) + " features but " +
                std::to_string(w.size()) + " weights were given");
    for (double x : w) require(x >= 0.0 && std::isfinite(x), "distance", "weights must be finite and nonnegative");
}

// n x p matrix of numeric features, each column multiplied by scale[j].
inline Eigen::MatrixXd scaled_numeric(const DataComponent& c, std::span<const double> scale, const char* metric) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(c.n_obs()), static_cast<Eigen::Index>(c.n_features()));
    for (std::size_t j = 0; j < c.columns.size(); ++j) {
        const auto& col = c.columns[j];
        if (col.categorical)
            throw Error(metric, "feature '" + col.name + "' is categorical; this metric needs numeric features");
        for (std::size_t i = 0; i < col.values.size(); ++i)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col.values[i] * scale[j];
    }
    return x;
}

inline Eigen::MatrixXd pairwise_euclidean(const Eigen::MatrixXd& x) {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = (x.row(i) - x.row(j)).norm();
            d(i, j) = v;
            d(j, i) = v;
        }
    return d;
}

}  // namespace detail

namespace metrics {

inline DistanceMatrix euclidean(const DataComponent& c, std::span<const double> w) {
    detail::check_weights(c, w);
    return {detail::pairwise_euclidean(detail::scaled_numeric(c, w, "euclidean")), {}};
}

// Columns z-scored with the population sd (sd = 0 maps to zeros), then weighted Euclidean.
inline DistanceMatrix sn_euclidean(const DataComponent& c, std::span<const double> w) {
    detail::check_weights(c, w);
    std::vector<double> ones(c.n_features(), 1.0);
    Eigen::MatrixXd x = detail::scaled_numeric(c, ones, "sn_euclidean");
    const double n = static_cast<double>(x.rows());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double mean = x.col(j).mean();
        const double sd = std::sqrt((x.col(j).array() - mean).square().sum() / n);
        if (sd > 0.0)
            x.col(j) = ((x.col(j).array() - mean) / sd * w[static_cast<std::size_t>(j)]).matrix();
        else
            x.col(j).setZero();
    }
    return {detail::pairwise_euclidean(x), {}};
}

// Squared, including weights: weight columns, Euclidean, square.
inline DistanceMatrix siw_euclidean(const DataComponent& c, std::span<const double> w) {
    detail::check_weights(c, w);
    Eigen::MatrixXd d = detail::pairwise_euclidean(detail::scaled_numeric(c, w, "siw_euclidean"));
    return {d.array().square().matrix(), {}};
}

// Squared, excluding weights: sqrt(weight) columns, Euclidean, square.
inline DistanceMatrix sew_euclidean(const DataComponent& c, std::span<const double> w) {
    detail::check_weights(c, w);
    std::vector<double> root(w.size());
    for (std::size_t j = 0; j < w.size(); ++j) root[j] = std::sqrt(w[j]);
    Eigen::MatrixXd d = detail::pairwise_euclidean(detail::scaled_numeric(c, root, "sew_euclidean"));
    return {d.array().square().matrix(), {}};
}

/// Gower: numeric features contribute |x_i - x_j| / range, categorical ones
/// a 0/1 mismatch; the weighted mean uses weights normalized to sum 1.
inline DistanceMatrix gower(const DataComponent& c, std::span<const double> w) {
    detail::check_weights(c, w);
    double total = 0.0;
    for (double x : w) total += x;
    require(total > 0.0, "gower", "weights of component '" + c.name + "' sum to zero");
    const auto n = static_cast<Eigen::Index>(c.n_obs());
    DistanceMatrix out{Eigen::MatrixXd::Zero(n, n), {}};
    for (std::size_t j = 0; j < c.columns.size(); ++j) {
        const auto& col = c.columns[j];
        const double wj = w[j] / total;
        if (wj == 0.0) continue;
        double scale = 1.0;
        if (!col.categorical) {
            auto [lo, hi] = std::minmax_element(col.values.begin(), col.values.end());
            const double range = *hi - *lo;
            if (range == 0.0) {
                out.warnings.push_back("gower: feature '" + col.name + "' has zero range and contributes 0");
                continue;
            }
            scale = 1.0 / range;
        }
        for (Eigen::Index a = 0; a < n; ++a)
            for (Eigen::Index b = a + 1; b < n; ++b) {
                const double va = col.values[static_cast<std::size_t>(a)];
                const double vb = col.values[static_cast<std::size_t>(b)];
                const double dj = col.categorical ? (va != vb ? 1.0 : 0.0) : std::abs(va - vb) * scale;
                out.values(a, b) += wj * dj;
            }
    }
    out.values.triangularView<Eigen::StrictlyLower>() = out.values.transpose();
    return out;
}

// Weighted count of mismatching features (exact equality on parsed values).
inline DistanceMatrix hamming(const DataComponent& c, std::span<const double> w) {
    detail::check_weights(c, w);
    const auto n = static_cast<Eigen::Index>(c.n_obs());
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t j = 0; j < c.columns.size(); ++j) {
        const auto& v = c.columns[j].values;
        for (Eigen::Index a = 0; a < n; ++a)
            for (Eigen::Index b = a + 1; b < n; ++b)
                if (v[static_cast<std::size_t>(a)] != v[static_cast<std::size_t>(b)]) d(a, b) += w[j];
    }
    d.triangularView<Eigen::StrictlyLower>() = d.transpose();
    return {d, {}};
}

}  // namespace metrics

inline MetricFn builtin_metric(const std::string& name) {
    if (name == "euclidean") return metrics::euclidean;
    if (name == "sn_euclidean") return metrics::sn_euclidean;
    if (name == "siw_euclidean") return metrics::siw_euclidean;
    if (name == "sew_euclidean") return metrics::sew_euclidean;
    if (name == "gower") return metrics::gower;
    if (name == "hamming") return metrics::hamming;
    throw Error("metrics", "unknown metric '" + name + "'");
}

inline DistanceMatrix compute_distance_matrix(const DataComponent& c, const std::string& metric,
                                              std::span<const double> weights) {
    return builtin_metric(metric)(c, weights);
}

struct NamedMetric {
    std::string name;
    MetricFn fn;
};

/// Per feature type, an ordered list of metrics. Settings columns
/// (cont_dist ... mix_dist) select entries by 1-based index.
class MetricsRegistry {
public:
    // euclidean for continuous/discrete/ordinal, gower for categorical/mixed.
    static MetricsRegistry defaults() {
        MetricsRegistry r;
        r.add(FeatureType::continuous, "euclidean");
        r.add(FeatureType::discrete, "euclidean");
        r.add(FeatureType::ordinal, "euclidean");
        r.add(FeatureType::categorical, "gower");
        r.add(FeatureType::mixed, "gower");
        return r;
    }

    static MetricsRegistry empty() { return {}; }

    MetricsRegistry& add(FeatureType t, const std::string& builtin) { return add(t, builtin, builtin_metric(builtin)); }

    MetricsRegistry& add(FeatureType t, std::string name, MetricFn fn) {
        by_type_[type_index(t)].push_back({std::move(name), std::move(fn)});
        return *this;
    }

    std::size_t size(FeatureType t) const { return by_type_[type_index(t)].size(); }

    const NamedMetric& at(FeatureType t, int index_1based) const {
        const auto& v = by_type_[type_index(t)];
        if (index_1based < 1 || static_cast<std::size_t>(index_1based) > v.size())
            throw Error("metrics", "index " + std::to_string(index_1based) + " out of range for " +
                                       std::string(to_string(t)) + " metrics (size " + std::to_string(v.size()) + ")");
        return v[static_cast<std::size_t>(index_1based - 1)];
    }

    void validate() const {
        for (auto t : kAllFeatureTypes)
            require(size(t) >= 1, "metrics", "no metric registered for " + std::string(to_string(t)) + " features");
    }

private:
    std::array<std::vector<NamedMetric>, 5> by_type_;
};

// One row per settings row, one column per data list feature.
struct WeightsMatrix {
    std::vector<std::string> features;
    Eigen::MatrixXd values;

    std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }

    std::vector<double> row(std::size_t r) const {
        std::vector<double> out(features.size());
        for (std::size_t j = 0; j < features.size(); ++j)
            out[j] = values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j));
        return out;
    }
};

enum class WeightFill { ones, uniform, exponential };

inline WeightFill parse_weight_fill(std::string_view s) {
    if (s == "ones") return WeightFill::ones;
    if (s == "uniform") return WeightFill::uniform;
    if (s == "exponential") return WeightFill::exponential;
    throw Error("weights", "unknown fill '" + std::string(s) + "' (expected ones, uniform or exponential)");
}

inline WeightsMatrix generate_weights_matrix(const DataList& dl, std::size_t nrow, WeightFill fill,
                                             std::uint64_t seed = 42) {
    require(nrow >= 1, "generate_weights_matrix", "nrow must be at least 1");
    WeightsMatrix wm{dl.feature_names(), Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(nrow),
                                                               static_cast<Eigen::Index>(dl.n_features()))};
    if (fill == WeightFill::ones) return wm;
    for (std::size_t r = 0; r < nrow; ++r) {
        Rng rng(stream_seed(seed, {kWeightsStream, r + 1}));
        for (Eigen::Index j = 0; j < wm.values.cols(); ++j)
            wm.values(static_cast<Eigen::Index>(r), j) = fill == WeightFill::uniform ? rng.uniform_open() : rng.exponential();
    }
    return wm;
}

inline csv::Table to_table(const WeightsMatrix& wm) {
    csv::Table t{wm.features, {}};
    for (Eigen::Index r = 0; r < wm.values.rows(); ++r) {
        std::vector<std::string> row;
        for (Eigen::Index j = 0; j < wm.values.cols(); ++j) row.push_back(csv::format_number(wm.values(r, j)));
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline WeightsMatrix weights_from_table(const csv::Table& t) {
    WeightsMatrix wm{t.header, Eigen::MatrixXd(static_cast<Eigen::Index>(t.rows.size()),
                                               static_cast<Eigen::Index>(t.header.size()))};
    for (std::size_t r = 0; r < t.rows.size(); ++r)
        for (std::size_t j = 0; j < t.header.size(); ++j) {
            const double v = csv::parse_cell_number(t.rows[r][j]);
            require(v >= 0.0 && std::isfinite(v), "weights", "weights must be finite and nonnegative");
            wm.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = v;
        }
    return wm;
}

/// Reorders the columns of `wm` to the data list's feature order.
inline WeightsMatrix align_weights(const WeightsMatrix& wm, const DataList& dl) {
    auto names = dl.feature_names();
    require(names.size() == wm.features.size(), "weights",
            "weights matrix has " + std::to_string(wm.features.size()) + " columns but the data list has " +
                std::to_string(names.size()) + " features");
    WeightsMatrix out{names, Eigen::MatrixXd(wm.values.rows(), static_cast<Eigen::Index>(names.size()))};
    for (std::size_t j = 0; j < names.size(); ++j) {
        auto it = std::find(wm.features.begin(), wm.features.end(), names[j]);
        require(it != wm.features.end(), "weights", "no weights column for feature '" + names[j] + "'");
        out.values.col(static_cast<Eigen::Index>(j)) = wm.values.col(it - wm.features.begin());
    }
    return out;
}

}  // namespace metafuse
