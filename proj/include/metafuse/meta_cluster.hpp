#pragma once

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "metafuse/batch.hpp"
#include "metafuse/error.hpp"
#include "metafuse/parallel.hpp"

namespace metafuse {

namespace detail {

inline double choose2(double x) { return x * (x - 1.0) / 2.0; }

}  // namespace detail

inline double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
    require(a.size() == b.size(), "adjusted_rand_index", "label vectors differ in length");
    require(a.size() >= 2, "adjusted_rand_index", "at least two observations are required");
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> ra, rb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[{a[i], b[i]}] += 1;
        ra[a[i]] += 1;
        rb[b[i]] += 1;
    }
    double index = 0, sa = 0, sb = 0;
    for (const auto& [_, c] : joint) index += detail::choose2(c);
    for (const auto& [_, c] : ra) sa += detail::choose2(c);
    for (const auto& [_, c] : rb) sb += detail::choose2(c);
    const double expected = sa * sb / detail::choose2(static_cast<double>(a.size()));
    const double max_index = 0.5 * (sa + sb);
    if (max_index == expected) {
        // Both partitions all singletons or both one cluster.
        return joint.size() == ra.size() && joint.size() == rb.size() ? 1.0 : 0.0;
    }
    return (index - expected) / (max_index - expected);
}

struct AriMatrix {
    std::vector<int> row_ids;
    Eigen::MatrixXd values;

    std::size_t size() const { return row_ids.size(); }
};

inline AriMatrix calc_aris(const SolutionsMatrix& solm, unsigned processes = 1) {
    const std::size_t r = solm.size();
    require(r >= 2, "calc_aris", "at least two solutions are required");
    AriMatrix am{solm.row_ids(), Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r))};
    parallel_for(r, processes, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < r; ++j) {
            const double v = adjusted_rand_index(solm.labels(i), solm.labels(j));
            am.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            am.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
        }
    });
    return am;
}

inline csv::Table to_table(const AriMatrix& am) {
    csv::Table t{{"row_id"}, {}};
    for (int id : am.row_ids) t.header.push_back(std::to_string(id));
    for (std::size_t i = 0; i < am.size(); ++i) {
        std::vector<std::string> row{std::to_string(am.row_ids[i])};
        for (std::size_t j = 0; j < am.size(); ++j)
            row.push_back(csv::format_number(am.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline AriMatrix ari_matrix_from_table(const csv::Table& t) {
    require(!t.header.empty() && t.header.size() == t.rows.size() + 1, "ari matrix", "table is not square");
    const auto n = static_cast<Eigen::Index>(t.rows.size());
    AriMatrix am{{}, Eigen::MatrixXd(n, n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = t.rows[static_cast<std::size_t>(i)];
        am.row_ids.push_back(detail::parse_int_cell(row[0], "row_id"));
        require(row[0] == t.header[static_cast<std::size_t>(i) + 1], "ari matrix", "row and column ids differ");
        for (Eigen::Index j = 0; j < n; ++j) am.values(i, j) = csv::parse_cell_number(row[static_cast<std::size_t>(j) + 1]);
    }
    return am;
}

enum class Linkage { complete, single, average };

inline Linkage parse_linkage(std::string_view s) {
    if (s == "complete") return Linkage::complete;
    if (s == "single") return Linkage::single;
    if (s == "average") return Linkage::average;
    throw Error("get_matrix_order", "unknown linkage '" + std::string(s) + "'");
}

enum class OrderDistance { euclidean, manhattan };

inline OrderDistance parse_order_distance(std::string_view s) {
    if (s == "euclidean") return OrderDistance::euclidean;
    if (s == "manhattan") return OrderDistance::manhattan;
    throw Error("get_matrix_order", "unknown distance '" + std::string(s) + "'");
}

/// Leaf order (0-based positions into `m`) of agglomerative clustering on the
/// distances between the rows of `m`. Among equally close pairs the one with
/// the smaller minimum member index merges first; in every merge the subtree
/// holding the smaller original index is placed on the left.
inline std::vector<std::size_t> hclust_order(const Eigen::MatrixXd& m, OrderDistance dist = OrderDistance::euclidean,
                                             Linkage linkage = Linkage::complete) {
    const auto n = static_cast<std::size_t>(m.rows());
    require(n >= 1, "get_matrix_order", "empty matrix");
    Eigen::MatrixXd d(m.rows(), m.rows());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.rows(); ++j)
            d(i, j) = dist == OrderDistance::euclidean ? (m.row(i) - m.row(j)).norm() : (m.row(i) - m.row(j)).cwiseAbs().sum();

    // Clusters are identified by their smallest member, which is also the
    // slot holding their current distances.
    std::vector<std::vector<std::size_t>> leaves(n);
    std::vector<std::size_t> sizes(n, 1);
    std::vector<bool> alive(n, true);
    for (std::size_t i = 0; i < n; ++i) leaves[i] = {i};
    for (std::size_t step = 1; step < n; ++step) {
        std::size_t bi = n, bj = n;
        double best = INFINITY;
        for (std::size_t i = 0; i < n; ++i) {
            if (!alive[i]) continue;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (!alive[j]) continue;
                const double v = d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                if (v < best) {
                    best = v;
                    bi = i;
                    bj = j;
                }
            }
        }
        for (std::size_t k = 0; k < n; ++k) {
            if (!alive[k] || k == bi || k == bj) continue;
            const auto ki = static_cast<Eigen::Index>(k);
            const double a = d(ki, static_cast<Eigen::Index>(bi)), b = d(ki, static_cast<Eigen::Index>(bj));
            double v = 0;
            switch (linkage) {
                case Linkage::complete: v = std::max(a, b); break;
                case Linkage::single: v = std::min(a, b); break;
                case Linkage::average:
                    v = (a * static_cast<double>(sizes[bi]) + b * static_cast<double>(sizes[bj])) /
                        static_cast<double>(sizes[bi] + sizes[bj]);
                    break;
            }
            d(ki, static_cast<Eigen::Index>(bi)) = d(static_cast<Eigen::Index>(bi), ki) = v;
        }
        leaves[bi].insert(leaves[bi].end(), leaves[bj].begin(), leaves[bj].end());
        leaves[bj].clear();
        sizes[bi] += sizes[bj];
        alive[bj] = false;
    }
    return leaves[0];
}

/// Ordering of the solutions for the ARI heatmap, as 0-based positions into
/// the ARI matrix rows.
inline std::vector<std::size_t> get_matrix_order(const AriMatrix& am, const std::string& dist_method = "euclidean",
                                                 const std::string& hclust_method = "complete") {
    require(am.size() >= 2, "get_matrix_order", "at least two solutions are required");
    return hclust_order(am.values, parse_order_distance(dist_method), parse_linkage(hclust_method));
}

// "A".."Z", then "AA", "AB", ...
inline std::string meta_cluster_label(std::size_t block) {
    std::string s;
    std::size_t b = block + 1;
    while (b > 0) {
        s.insert(s.begin(), static_cast<char>('A' + (b - 1) % 26));
        b = (b - 1) / 26;
    }
    return s;
}

struct MetaClusterPartition {
    std::vector<std::size_t> order;  // 0-based positions into the ARI matrix
    std::vector<int> splits;
    std::vector<std::vector<std::size_t>> blocks;  // members of each block, in order
    std::vector<std::string> labels;               // per ARI-matrix position

    std::vector<std::size_t> block_sizes() const {
        std::vector<std::size_t> s;
        for (const auto& b : blocks) s.push_back(b.size());
        return s;
    }
};

/// Split value s closes a block after ordered position s (1-based).
inline MetaClusterPartition partition_by_split_vector(const std::vector<std::size_t>& order, const std::vector<int>& splits) {
    const std::size_t r = order.size();
    for (std::size_t i = 0; i < splits.size(); ++i) {
        require(splits[i] >= 1 && static_cast<std::size_t>(splits[i]) <= r - 1, "split vector",
                "split " + std::to_string(splits[i]) + " outside 1.." + std::to_string(r - 1));
        require(i == 0 || splits[i] > splits[i - 1], "split vector", "splits must be strictly increasing");
    }
    MetaClusterPartition p{order, splits, {}, std::vector<std::string>(r)};
    std::size_t start = 0;
    for (std::size_t b = 0; b <= splits.size(); ++b) {
        const std::size_t end = b < splits.size() ? static_cast<std::size_t>(splits[b]) : r;
        std::vector<std::size_t> members(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(end));
        for (auto m : members) p.labels.at(m) = meta_cluster_label(b);
        p.blocks.push_back(std::move(members));
        start = end;
    }
    return p;
}

/// Reads a split vector: integers separated by commas and/or whitespace,
/// optionally wrapped in brackets. Empty input means one meta cluster.
inline std::vector<int> parse_split_vector(std::string_view text) {
    std::string s(text);
    for (char& c : s)
        if (c == ',' || c == '[' || c == ']') c = ' ';
    std::istringstream in(s);
    std::vector<int> out;
    std::string tok;
    while (in >> tok) {
        auto v = csv::parse_number(tok);
        require(v && *v == std::floor(*v), "split vector", "not an integer: '" + tok + "'");
        out.push_back(static_cast<int>(*v));
    }
    return out;
}

inline std::string format_split_vector(const std::vector<int>& splits) {
    std::string s;
    for (std::size_t i = 0; i < splits.size(); ++i) s += (i ? "," : "") + std::to_string(splits[i]);
    return s;
}

/// Positions (into the ARI matrix) of each block's representative: highest
/// mean ARI to the other members, ties to the lower row_id.
inline std::vector<std::size_t> representative_positions(const AriMatrix& am, const MetaClusterPartition& p) {
    std::vector<std::size_t> reps;
    for (auto block : p.blocks) {
        // fixed summation order, so ties cannot depend on the block's ordering
        std::sort(block.begin(), block.end());
        std::size_t best = block.front();
        double best_mean = -INFINITY;
        for (auto i : block) {
            double sum = 0;
            for (auto j : block)
                if (j != i) sum += am.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            const double mean = block.size() > 1 ? sum / static_cast<double>(block.size() - 1) : 0.0;
            if (mean > best_mean || (mean == best_mean && am.row_ids[i] < am.row_ids[best])) {
                best = i;
                best_mean = mean;
            }
        }
        reps.push_back(best);
    }
    return reps;
}

/// One solutions row per meta cluster, original row ids preserved.
inline SolutionsMatrix get_representative_solutions(const AriMatrix& am, const MetaClusterPartition& p,
                                                    const SolutionsMatrix& solm) {
    std::vector<std::size_t> rows;
    for (auto pos : representative_positions(am, p)) {
        auto r = solm.find_row(am.row_ids[pos]);
        require(r.has_value(), "representatives", "row_id " + std::to_string(am.row_ids[pos]) + " not in the solutions matrix");
        rows.push_back(*r);
    }
    return solm.subset(rows);
}

/// Stirling number of the second kind via S(n,k) = k S(n-1,k) + S(n-1,k-1).
inline boost::multiprecision::cpp_int stirling2(unsigned n, unsigned k) {
    require(k <= n, "stirling2", "k must not exceed n");
    using boost::multiprecision::cpp_int;
    std::vector<cpp_int> row(k + 1, 0);
    row[0] = 1;  // S(0,0)
    for (unsigned i = 1; i <= n; ++i) {
        for (unsigned j = std::min(i, k); j >= 1; --j) row[j] = j * row[j] + row[j - 1];
        row[0] = 0;
    }
    return row[k];
}

}  // namespace metafuse
