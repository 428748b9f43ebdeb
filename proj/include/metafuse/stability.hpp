#pragma once

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "metafuse/batch.hpp"
#include "metafuse/meta_cluster.hpp"
#include "metafuse/parallel.hpp"

namespace metafuse {

struct SubsampleAriSummary {
    int row_id = 0;
    double mean_ari = NAN;
    double sd_ari = NAN;
    std::size_t missing_pairs = 0;  // subsample pairs sharing fewer than two uids
};

struct SubsampleAris {
    std::vector<SubsampleAriSummary> summary;
    std::vector<Eigen::MatrixXd> raw;  // per settings row, S x S; NaN for missing pairs
};

namespace detail {

inline void require_same_rows(const std::vector<SolutionsMatrix>& subs) {
    require(!subs.empty(), "stability", "no subsample solutions");
    for (const auto& s : subs)
        require(s.row_ids() == subs.front().row_ids(), "stability", "subsamples were clustered with different settings rows");
}

inline std::unordered_map<std::string, std::size_t> uid_positions(const std::vector<std::string>& uids) {
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < uids.size(); ++i) pos.emplace(uids[i], i);
    return pos;
}

}  // namespace detail

/// ARIs between the solutions of every pair of subsamples, computed over
/// the uids the two subsamples share.
inline SubsampleAris subsample_pairwise_aris(const std::vector<SolutionsMatrix>& subs, bool return_raw = false,
                                             unsigned processes = 1) {
    detail::require_same_rows(subs);
    require(subs.size() >= 2, "subsample_pairwise_aris", "at least two subsamples are required");
    const std::size_t s_count = subs.size(), rows = subs.front().size();

    // Shared uids of each subsample pair, as index lists into each side.
    struct Shared {
        std::vector<std::size_t> a, b;
    };
    std::vector<std::vector<Shared>> shared(s_count, std::vector<Shared>(s_count));
    for (std::size_t i = 0; i < s_count; ++i) {
        auto pos = detail::uid_positions(subs[i].uids);
        for (std::size_t j = i + 1; j < s_count; ++j)
            for (std::size_t u = 0; u < subs[j].uids.size(); ++u) {
                auto it = pos.find(subs[j].uids[u]);
                if (it == pos.end()) continue;
                shared[i][j].a.push_back(it->second);
                shared[i][j].b.push_back(u);
            }
    }

    SubsampleAris out;
    out.summary.resize(rows);
    out.raw.resize(rows);
    parallel_for(rows, processes, [&](std::size_t r) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(s_count), static_cast<Eigen::Index>(s_count));
        std::vector<double> vals;
        std::size_t missing = 0;
        for (std::size_t i = 0; i < s_count; ++i)
            for (std::size_t j = i + 1; j < s_count; ++j) {
                const auto& sh = shared[i][j];
                double v = NAN;
                if (sh.a.size() >= 2) {
                    std::vector<int> la, lb;
                    for (auto q : sh.a) la.push_back(subs[i].labels(r)[q]);
                    for (auto q : sh.b) lb.push_back(subs[j].labels(r)[q]);
                    v = adjusted_rand_index(la, lb);
                    vals.push_back(v);
                } else {
                    ++missing;
                }
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
                m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
            }
        SubsampleAriSummary s{subs.front().row_id(r), NAN, NAN, missing};
        if (!vals.empty()) {
            double sum = 0;
            for (double v : vals) sum += v;
            s.mean_ari = sum / static_cast<double>(vals.size());
            if (vals.size() >= 2) {
                double ss = 0;
                for (double v : vals) ss += (v - s.mean_ari) * (v - s.mean_ari);
                s.sd_ari = std::sqrt(ss / static_cast<double>(vals.size() - 1));
            }
        }
        out.summary[r] = s;
        if (return_raw) out.raw[r] = std::move(m);
    });
    if (!return_raw) out.raw.clear();
    return out;
}

inline csv::Table to_table(const std::vector<SubsampleAriSummary>& s) {
    csv::Table t{{"row_id", "mean_ari", "sd_ari", "missing_pairs"}, {}};
    for (const auto& r : s)
        t.rows.push_back({std::to_string(r.row_id), csv::format_number(r.mean_ari), csv::format_number(r.sd_ari),
                          std::to_string(r.missing_pairs)});
    return t;
}

struct CoclusterRecord {
    std::string uid_1, uid_2;
    int orig_cluster_1 = 0, orig_cluster_2 = 0;
    int same_solution = 0;
    int same_cluster = 0;
    double cocluster_frac = NAN;  // NaN when the pair never shares a subsample
};

struct RowCoclustering {
    int row_id = 0;
    std::vector<CoclusterRecord> records;
    Eigen::MatrixXi same_solution;  // n x n over the parent uids
    Eigen::MatrixXi same_cluster;
    Eigen::MatrixXd fraction;       // diagonal 1, NaN where undefined
    double mean_cocluster_frac = NAN;  // over pairs clustered together originally
};

struct Coclustering {
    std::vector<std::string> uids;
    std::vector<RowCoclustering> rows;
};

inline double cocluster_fraction(int same_cluster, int same_solution) {
    return same_solution > 0 ? static_cast<double>(same_cluster) / same_solution : NAN;
}

/// Pairwise co-clustering counts across subsamples for every settings row of
/// the parent solutions matrix.
inline Coclustering calculate_coclustering(const std::vector<SolutionsMatrix>& subs, const SolutionsMatrix& solm,
                                           unsigned processes = 1) {
    detail::require_same_rows(subs);
    require(subs.front().row_ids() == solm.row_ids(), "calculate_coclustering",
            "subsample solutions and the solutions matrix have different rows");
    const auto parent = detail::uid_positions(solm.uids);
    std::vector<std::vector<std::size_t>> to_parent(subs.size());
    for (std::size_t s = 0; s < subs.size(); ++s)
        for (const auto& u : subs[s].uids) {
            auto it = parent.find(u);
            require(it != parent.end(), "calculate_coclustering", "subsample uid '" + u + "' not in the solutions matrix");
            to_parent[s].push_back(it->second);
        }

    const auto n = static_cast<Eigen::Index>(solm.uids.size());
    Coclustering out{solm.uids, std::vector<RowCoclustering>(solm.size())};
    parallel_for(solm.size(), processes, [&](std::size_t r) {
        RowCoclustering rc{solm.row_id(r), {}, Eigen::MatrixXi::Zero(n, n), Eigen::MatrixXi::Zero(n, n),
                           Eigen::MatrixXd::Constant(n, n, NAN), NAN};
        for (std::size_t s = 0; s < subs.size(); ++s) {
            const auto& lab = subs[s].labels(r);
            const auto& map = to_parent[s];
            for (std::size_t i = 0; i < map.size(); ++i)
                for (std::size_t j = i + 1; j < map.size(); ++j) {
                    const auto a = static_cast<Eigen::Index>(std::min(map[i], map[j]));
                    const auto b = static_cast<Eigen::Index>(std::max(map[i], map[j]));
                    rc.same_solution(a, b) += 1;
                    if (lab[i] == lab[j]) rc.same_cluster(a, b) += 1;
                }
        }
        const auto& orig = solm.labels(r);
        double sum = 0;
        std::size_t count = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            rc.fraction(i, i) = 1.0;
            for (Eigen::Index j = i + 1; j < n; ++j) {
                rc.same_solution(j, i) = rc.same_solution(i, j);
                rc.same_cluster(j, i) = rc.same_cluster(i, j);
                const double f = cocluster_fraction(rc.same_cluster(i, j), rc.same_solution(i, j));
                rc.fraction(i, j) = rc.fraction(j, i) = f;
                const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
                rc.records.push_back({solm.uids[ui], solm.uids[uj], orig[ui], orig[uj], rc.same_solution(i, j),
                                      rc.same_cluster(i, j), f});
                if (orig[ui] == orig[uj] && !std::isnan(f)) {
                    sum += f;
                    ++count;
                }
            }
        }
        if (count > 0) rc.mean_cocluster_frac = sum / static_cast<double>(count);
        out.rows[r] = std::move(rc);
    });
    return out;
}

inline csv::Table cocluster_records_table(const Coclustering& cc) {
    csv::Table t{{"row_id", "uid_1", "uid_2", "orig_cluster_1", "orig_cluster_2", "same_solution", "same_cluster",
                  "cocluster_frac"},
                 {}};
    for (const auto& r : cc.rows)
        for (const auto& rec : r.records)
            t.rows.push_back({std::to_string(r.row_id), rec.uid_1, rec.uid_2, std::to_string(rec.orig_cluster_1),
                              std::to_string(rec.orig_cluster_2), std::to_string(rec.same_solution),
                              std::to_string(rec.same_cluster), csv::format_number(rec.cocluster_frac)});
    return t;
}

inline csv::Table cocluster_summary_table(const Coclustering& cc) {
    csv::Table t{{"row_id", "mean_cocluster_frac"}, {}};
    for (const auto& r : cc.rows) t.rows.push_back({std::to_string(r.row_id), csv::format_number(r.mean_cocluster_frac)});
    return t;
}

// Square matrix with uid header row and column.
template <class M>
csv::Table uid_matrix_table(const std::vector<std::string>& uids, const M& m) {
    csv::Table t{{"uid"}, {}};
    t.header.insert(t.header.end(), uids.begin(), uids.end());
    for (std::size_t i = 0; i < uids.size(); ++i) {
        std::vector<std::string> row{uids[i]};
        for (std::size_t j = 0; j < uids.size(); ++j)
            row.push_back(csv::format_number(static_cast<double>(m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))));
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace metafuse
