#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "metafuse/data_list.hpp"
#include "metafuse/distance.hpp"
#include "metafuse/error.hpp"
#include "metafuse/settings.hpp"

namespace metafuse {

using Matrix = Eigen::MatrixXd;

inline constexpr double kEpsilonFloor = 1e-12;

/// Scaled exponential kernel. For each i, m_i is the mean distance to its k
/// nearest neighbours (self excluded); eps(i,j) = (m_i + m_j + d(i,j)) / 3 and
/// W(i,j) = exp(-d(i,j)^2 / (2 (alpha eps(i,j))^2)), then (W + W^T) / 2.
inline Matrix affinity_matrix(const Matrix& d, int k, double alpha) {
    const Eigen::Index n = d.rows();
    require(d.cols() == n, "affinity_matrix", "distance matrix must be square");
    require(k >= 1 && k < n, "affinity_matrix",
            "k must satisfy 1 <= k < n (k=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");
    require(alpha > 0.0, "affinity_matrix", "alpha must be positive");

    Eigen::VectorXd knn_mean(n);
    std::vector<double> row;
    for (Eigen::Index i = 0; i < n; ++i) {
        row.clear();
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) row.push_back(d(i, j));
        std::nth_element(row.begin(), row.begin() + (k - 1), row.end());
        double s = 0.0;
        for (int j = 0; j < k; ++j) s += row[static_cast<std::size_t>(j)];
        knn_mean(i) = s / k;
    }

    Matrix w(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            const double eps = std::max((knn_mean(i) + knn_mean(j) + d(i, j)) / 3.0, kEpsilonFloor);
            const double sigma = alpha * eps;
            w(i, j) = std::max(std::exp(-d(i, j) * d(i, j) / (2.0 * sigma * sigma)), std::numeric_limits<double>::min());
        }
    return (w + w.transpose()) / 2.0;
}

/// Row-stochastic normalization with a fixed self-weight of 1/2:
/// P(i,j) = W(i,j) / (2 sum_{l != i} W(i,l)), P(i,i) = 1/2.
inline Matrix full_kernel(const Matrix& w) {
    const Eigen::Index n = w.rows();
    Matrix p(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double off = w.row(i).sum() - w(i, i);
        if (!(off > 0.0)) throw Error("full_kernel", "row " + std::to_string(i + 1) + " has no off-diagonal mass");
        p.row(i) = w.row(i) / (2.0 * off);
        p(i, i) = 0.5;
    }
    return p;
}

/// k-nearest-neighbour truncation: row i keeps its k most similar other
/// observations (ties broken by lower index), renormalized to sum 1.
inline Matrix local_kernel(const Matrix& w, int k) {
    const Eigen::Index n = w.rows();
    require(k >= 1 && k < n, "local_kernel", "k must satisfy 1 <= k < n");
    Matrix s = Matrix::Zero(n, n);
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < n; ++i) {
        idx.clear();
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) idx.push_back(j);
        std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](Eigen::Index a, Eigen::Index b) {
            if (w(i, a) != w(i, b)) return w(i, a) > w(i, b);
            return a < b;
        });
        double total = 0.0;
        for (int m = 0; m < k; ++m) total += w(i, idx[static_cast<std::size_t>(m)]);
        if (!(total > 0.0)) throw Error("local_kernel", "row " + std::to_string(i + 1) + " has no neighbour mass");
        for (int m = 0; m < k; ++m) {
            auto j = idx[static_cast<std::size_t>(m)];
            s(i, j) = w(i, j) / total;
        }
    }
    return s;
}

/// Cross-diffusion fusion. Each round updates every view from the previous
/// round's matrices: P_v <- full_kernel(S_v * mean_{u != v} P_u * S_v^T).
/// The result is full_kernel(mean_v P_v), symmetrized.
inline Matrix snf_fuse(std::span<const Matrix> ws, int k, int t) {
    require(!ws.empty(), "snf_fuse", "at least one similarity matrix is required");
    const Eigen::Index n = ws.front().rows();
    for (const auto& w : ws)
        require(w.rows() == n && w.cols() == n, "snf_fuse", "similarity matrices must share one n x n shape");
    require(t >= 1, "snf_fuse", "t must be at least 1");

    const std::size_t m = ws.size();
    std::vector<Matrix> p, s;
    p.reserve(m);
    s.reserve(m);
    for (const auto& w : ws) {
        p.push_back(full_kernel(w));
        s.push_back(local_kernel(w, k));
    }
    if (m > 1) {
        std::vector<Matrix> next(m);
        for (int iter = 0; iter < t; ++iter) {
            Matrix total = Matrix::Zero(n, n);
            for (const auto& pv : p) total += pv;
            for (std::size_t v = 0; v < m; ++v) {
                const Matrix others = (total - p[v]) / static_cast<double>(m - 1);
                next[v] = full_kernel(s[v] * others * s[v].transpose());
            }
            std::swap(p, next);
        }
    }
    Matrix mean = Matrix::Zero(n, n);
    for (const auto& pv : p) mean += pv;
    mean /= static_cast<double>(m);
    Matrix f = full_kernel(mean);
    return (f + f.transpose()) / 2.0;
}

inline Matrix snf_fuse(const std::vector<Matrix>& ws, int k, int t) { return snf_fuse(std::span<const Matrix>(ws), k, t); }

// Neighbour count actually used for n observations: min(k, n - 1).
inline int effective_k(int k, Eigen::Index n) { return static_cast<int>(std::min<Eigen::Index>(k, n - 1)); }

namespace detail {

inline Matrix component_affinity(const DataComponent& c, FeatureType type, const SettingsRow& row,
                                 const MetricsRegistry& metrics, std::span<const double> weights, int k,
                                 std::vector<std::string>* warnings) {
    const auto& metric = metrics.at(type, row.dist_for(type));
    DistanceMatrix d = metric.fn(c, weights);
    if (warnings) warnings->insert(warnings->end(), d.warnings.begin(), d.warnings.end());
    return affinity_matrix(d.values, k, row.alpha);
}

// Domains of the included components, in order of first appearance.
inline std::vector<std::vector<std::size_t>> group_by_domain(const DataList& dl, const std::vector<std::size_t>& included) {
    std::vector<std::string> order;
    std::vector<std::vector<std::size_t>> groups;
    for (auto c : included) {
        const auto& dom = dl.component(c).domain;
        auto it = std::find(order.begin(), order.end(), dom);
        if (it == order.end()) {
            order.push_back(dom);
            groups.push_back({c});
        } else {
            groups[static_cast<std::size_t>(it - order.begin())].push_back(c);
        }
    }
    return groups;
}

}  // namespace detail

/// Builds the fused similarity matrix for one settings row. `weights` covers
/// every data list feature in feature_names() order.
inline Matrix run_scheme(const DataList& dl, const SettingsRow& row, const MetricsRegistry& metrics,
                         std::span<const double> weights, std::vector<std::string>* warnings = nullptr) {
    require(row.inc.size() == dl.n_components(), "run_scheme", "inclusion flags do not match the component count");
    require(weights.size() == dl.n_features(), "run_scheme", "weights row does not cover every feature");
    std::vector<std::size_t> included;
    for (std::size_t c = 0; c < dl.n_components(); ++c)
        if (row.inc[c] == 1) included.push_back(c);
    require(!included.empty(), "run_scheme", "every component is excluded");

    const auto n = static_cast<Eigen::Index>(dl.n_obs());
    require(n >= 3, "run_scheme", "at least 3 observations are required");
    const int k = effective_k(row.k, n);

    auto weights_of = [&](std::size_t c) {
        return weights.subspan(dl.feature_offset(c), dl.component(c).n_features());
    };
    auto affinity_of = [&](std::size_t c) {
        const auto& comp = dl.component(c);
        return detail::component_affinity(comp, comp.type, row, metrics, weights_of(c), k, warnings);
    };

    switch (static_cast<SnfScheme>(row.snf_scheme)) {
        case SnfScheme::individual: {
            std::vector<Matrix> ws;
            for (auto c : included) ws.push_back(affinity_of(c));
            return snf_fuse(ws, k, row.t);
        }
        case SnfScheme::two_step: {
            std::vector<Matrix> per_domain;
            for (const auto& group : detail::group_by_domain(dl, included)) {
                std::vector<Matrix> ws;
                for (auto c : group) ws.push_back(affinity_of(c));
                per_domain.push_back(ws.size() == 1 ? std::move(ws.front()) : snf_fuse(ws, k, row.t));
            }
            return snf_fuse(per_domain, k, row.t);
        }
        case SnfScheme::domain_concatenation: {
            std::vector<Matrix> ws;
            for (const auto& group : detail::group_by_domain(dl, included)) {
                if (group.size() == 1) {
                    ws.push_back(affinity_of(group.front()));
                    continue;
                }
                DataComponent merged;
                merged.domain = dl.component(group.front()).domain;
                merged.name = merged.domain;
                merged.uids = dl.uids();
                merged.type = dl.component(group.front()).type;
                std::vector<double> w;
                for (auto c : group) {
                    const auto& comp = dl.component(c);
                    if (comp.type != merged.type) merged.type = FeatureType::mixed;
                    merged.columns.insert(merged.columns.end(), comp.columns.begin(), comp.columns.end());
                    auto wc = weights_of(c);
                    w.insert(w.end(), wc.begin(), wc.end());
                }
                ws.push_back(detail::component_affinity(merged, merged.type, row, metrics, w, k, warnings));
            }
            return snf_fuse(ws, k, row.t);
        }
    }
    throw Error("run_scheme", "unknown snf_scheme " + std::to_string(row.snf_scheme));
}

}  // namespace metafuse
