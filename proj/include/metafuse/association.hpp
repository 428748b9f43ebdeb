#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "metafuse/batch.hpp"
#include "metafuse/data_list.hpp"
#include "metafuse/parallel.hpp"
#include "metafuse/stats.hpp"

namespace metafuse {

enum class CategoricalTest { chi_squared, fisher };

inline CategoricalTest parse_categorical_test(std::string_view s) {
    if (s == "chi_squared") return CategoricalTest::chi_squared;
    if (s == "fisher") return CategoricalTest::fisher;
    throw Error("association", "unknown categorical test '" + std::string(s) + "'");
}

// How a feature enters a test. Mixed components contribute their numeric
// columns as continuous and the rest as categorical.
enum class TestKind { numeric, ordinal, categorical };

inline TestKind test_kind(const Column& col, FeatureType type) {
    if (col.categorical) return TestKind::categorical;
    return type == FeatureType::ordinal ? TestKind::ordinal : TestKind::numeric;
}

/// p-value for the association between a cluster solution and one feature;
/// the feature is the response, the clusters a factor predictor.
inline stats::TestResult cluster_feature_pvalue(std::span<const int> labels, const Column& col, FeatureType type,
                                                CategoricalTest cat_test = CategoricalTest::chi_squared) {
    require(labels.size() == col.values.size(), "cluster_feature_pvalue", "label and feature lengths differ");
    require(count_distinct(labels) >= 2, "cluster_feature_pvalue", "a single cluster carries no association");
    switch (test_kind(col, type)) {
        case TestKind::numeric: return stats::anova(col.values, labels);
        case TestKind::ordinal: return stats::ordinal_lrt(col.values, labels);
        case TestKind::categorical: break;
    }
    std::vector<int> codes(col.values.begin(), col.values.end());
    Eigen::MatrixXd table = stats::contingency(labels, codes);
    if (cat_test == CategoricalTest::fisher) {
        if (table.rows() == 2 && table.cols() == 2) return stats::fisher_exact_2x2(table);
        auto r = stats::chi_squared(table);
        r.flag = "fisher_requires_2x2";
        return r;
    }
    return stats::chi_squared(table);
}

struct PvalueSummary {
    double min = 0, mean = 0, max = 0;
};

inline PvalueSummary summarize_pvalues(std::span<const double> p) {
    require(!p.empty(), "summarize_pvalues", "no p-values");
    PvalueSummary s{p[0], 0.0, p[0]};
    double sum = 0;
    for (double v : p) {
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
        sum += v;
    }
    s.mean = std::clamp(sum / static_cast<double>(p.size()), s.min, s.max);
    return s;
}

struct ExtendOptions {
    double min_pval = 1e-10;
    bool calculate_summaries = true;
    CategoricalTest categorical_test = CategoricalTest::chi_squared;
    unsigned processes = 1;
};

/// Solutions matrix plus one p-value column per evaluated feature.
struct ExtendedSolutionsMatrix {
    SolutionsMatrix solutions;
    std::vector<std::string> features;
    std::vector<bool> is_target;
    Eigen::MatrixXd pvals;  // solution row x feature
    std::vector<std::string> flags;  // "row_id:feature:flag" for flagged tests
    std::vector<PvalueSummary> summaries;  // empty when not calculated
};

namespace detail {

struct FeatureHandle {
    const Column* column;
    FeatureType type;
    bool target;
    std::vector<std::size_t> to_list;  // solutions uid index -> list row
};

inline void collect_features(const DataList& dl, bool target, const std::vector<std::string>& uids,
                             std::vector<FeatureHandle>& out) {
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < dl.uids().size(); ++i) pos.emplace(dl.uids()[i], i);
    std::vector<std::size_t> map;
    for (const auto& u : uids) {
        auto it = pos.find(u);
        require(it != pos.end(), "extend_solutions", "uid '" + u + "' missing from a data list");
        map.push_back(it->second);
    }
    for (const auto& comp : dl.components())
        for (const auto& col : comp.columns) out.push_back({&col, comp.type, target, map});
}

}  // namespace detail

/// Lists may hold observations beyond the solutions' uids (a target table
/// that was never filtered for completeness, say); those rows are ignored.
inline ExtendedSolutionsMatrix extend_solutions(const SolutionsMatrix& solm, const DataList* data_list,
                                                const DataList* target_list, const ExtendOptions& opt = {}) {
    require(data_list || target_list, "extend_solutions", "provide a data list, a target list, or both");
    std::vector<detail::FeatureHandle> feats;
    if (data_list) detail::collect_features(*data_list, false, solm.uids, feats);
    if (target_list) detail::collect_features(*target_list, true, solm.uids, feats);

    ExtendedSolutionsMatrix ext;
    ext.solutions = solm;
    for (const auto& f : feats) {
        require(std::find(ext.features.begin(), ext.features.end(), f.column->name) == ext.features.end(),
                "extend_solutions", "feature '" + f.column->name + "' appears twice");
        ext.features.push_back(f.column->name);
        ext.is_target.push_back(f.target);
    }
    const auto nrow = static_cast<Eigen::Index>(solm.size()), nf = static_cast<Eigen::Index>(feats.size());
    ext.pvals = Eigen::MatrixXd::Ones(nrow, nf);
    std::vector<std::vector<std::string>> row_flags(solm.size());

    parallel_for(solm.size(), opt.processes, [&](std::size_t r) {
        for (std::size_t f = 0; f < feats.size(); ++f) {
            const auto& h = feats[f];
            Column aligned{h.column->name, h.column->categorical, {}, h.column->levels};
            for (auto i : h.to_list) aligned.values.push_back(h.column->values[i]);
            auto res = cluster_feature_pvalue(solm.labels(r), aligned, h.type, opt.categorical_test);
            ext.pvals(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f)) = std::max(res.p, opt.min_pval);
            if (!res.flag.empty())
                row_flags[r].push_back(std::to_string(solm.row_id(r)) + ":" + h.column->name + ":" + res.flag);
        }
    });
    for (auto& f : row_flags) ext.flags.insert(ext.flags.end(), f.begin(), f.end());

    if (opt.calculate_summaries && target_list) {
        for (Eigen::Index r = 0; r < nrow; ++r) {
            std::vector<double> tp;
            for (Eigen::Index f = 0; f < nf; ++f)
                if (ext.is_target[static_cast<std::size_t>(f)]) tp.push_back(ext.pvals(r, f));
            ext.summaries.push_back(summarize_pvalues(tp));
        }
    }
    return ext;
}

inline csv::Table to_table(const ExtendedSolutionsMatrix& ext) {
    csv::Table t = to_table(ext.solutions);
    for (const auto& f : ext.features) t.header.push_back(f + "_pval");
    if (!ext.summaries.empty()) t.header.insert(t.header.end(), {"min_pval", "mean_pval", "max_pval"});
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        for (Eigen::Index f = 0; f < ext.pvals.cols(); ++f)
            t.rows[r].push_back(csv::format_number(ext.pvals(static_cast<Eigen::Index>(r), f)));
        if (!ext.summaries.empty()) {
            const auto& s = ext.summaries[r];
            t.rows[r].insert(t.rows[r].end(),
                             {csv::format_number(s.min), csv::format_number(s.mean), csv::format_number(s.max)});
        }
    }
    return t;
}

/// Pairwise feature association p-values (F x F, symmetric, zero diagonal).
struct AssocPvalMatrix {
    std::vector<std::string> features;
    Eigen::MatrixXd values;
};

inline stats::TestResult feature_pair_pvalue(const Column& a, FeatureType ta, const Column& b, FeatureType tb) {
    const bool ca = test_kind(a, ta) == TestKind::categorical, cb = test_kind(b, tb) == TestKind::categorical;
    if (!ca && !cb) return stats::correlation(a.values, b.values);
    if (ca && cb) {
        std::vector<int> x(a.values.begin(), a.values.end()), y(b.values.begin(), b.values.end());
        return stats::chi_squared(stats::contingency(x, y));
    }
    const Column& num = ca ? b : a;
    const Column& cat = ca ? a : b;
    std::vector<int> groups(cat.values.begin(), cat.values.end());
    if (count_distinct(groups) < 2) return {1.0, 0.0, "anova", "constant"};
    return stats::anova(num.values, groups);
}

inline AssocPvalMatrix calc_assoc_pval_matrix(const DataList& dl, double min_pval = 1e-10, unsigned processes = 1) {
    std::vector<std::pair<const Column*, FeatureType>> cols;
    for (const auto& comp : dl.components())
        for (const auto& col : comp.columns) cols.emplace_back(&col, comp.type);
    require(cols.size() >= 2, "calc_assoc_pval_matrix", "at least two features are required");
    const auto f = static_cast<Eigen::Index>(cols.size());
    AssocPvalMatrix m{dl.feature_names(), Eigen::MatrixXd::Zero(f, f)};
    parallel_for(cols.size(), processes, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < cols.size(); ++j) {
            const double p = std::max(min_pval, feature_pair_pvalue(*cols[i].first, cols[i].second, *cols[j].first,
                                                                    cols[j].second).p);
            m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = p;
            m.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = p;
        }
    });
    return m;
}

inline csv::Table to_table(const AssocPvalMatrix& m) {
    csv::Table t{{"feature"}, {}};
    t.header.insert(t.header.end(), m.features.begin(), m.features.end());
    for (std::size_t i = 0; i < m.features.size(); ++i) {
        std::vector<std::string> row{m.features[i]};
        for (Eigen::Index j = 0; j < m.values.cols(); ++j)
            row.push_back(csv::format_number(m.values(static_cast<Eigen::Index>(i), j)));
        t.rows.push_back(std::move(row));
    }
    return t;
}

/// Normalized mutual information I(X;Y) / sqrt(H(X) H(Y)).
inline double nmi(std::span<const int> x, std::span<const int> y) {
    require(x.size() == y.size() && !x.empty(), "nmi", "label vectors must be nonempty and of equal length");
    const Eigen::MatrixXd t = stats::contingency(x, y);
    const double n = static_cast<double>(x.size());
    const Eigen::VectorXd px = t.rowwise().sum() / n, py = t.colwise().sum().transpose() / n;
    auto entropy = [](const Eigen::VectorXd& p) {
        double h = 0;
        for (Eigen::Index i = 0; i < p.size(); ++i)
            if (p(i) > 0) h -= p(i) * std::log(p(i));
        return h;
    };
    const double hx = entropy(px), hy = entropy(py);
    if (hx == 0 && hy == 0) return 1.0;
    if (hx == 0 || hy == 0) return 0.0;
    double mi = 0;
    for (Eigen::Index i = 0; i < t.rows(); ++i)
        for (Eigen::Index j = 0; j < t.cols(); ++j)
            if (t(i, j) > 0) {
                const double pij = t(i, j) / n;
                mi += pij * std::log(pij / (px(i) * py(j)));
            }
    return std::clamp(mi / std::sqrt(hx * hy), 0.0, 1.0);
}

/// NMI between each solution and the solution obtained by rerunning that
/// row's pipeline on a single feature. Entry is NaN when the row excludes
/// the feature's component.
struct NmiTable {
    std::vector<std::string> features;
    std::vector<int> row_ids;
    Eigen::MatrixXd values;  // feature x solution row
};

inline NmiTable batch_nmi(const DataList& dl, const SolutionsMatrix& solm, const BatchOptions& opt = {}) {
    require(solm.uids == dl.uids(), "batch_nmi", "solutions matrix does not cover the data list observations");
    const Eigen::MatrixXd weights = detail::weights_for(dl, solm.settings, opt);
    struct Single {
        std::size_t component;
        std::size_t global;
        DataList list;
    };
    std::vector<Single> singles;
    for (std::size_t c = 0; c < dl.n_components(); ++c) {
        const auto& comp = dl.component(c);
        for (const auto& col : comp.columns) {
            DataComponent one{col.name, comp.domain, comp.type, comp.uids, {col}};
            singles.push_back({c, singles.size(), DataList({std::move(one)}, dl.uid_column())});
        }
    }
    NmiTable out{dl.feature_names(), solm.row_ids(),
                 Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(singles.size()), static_cast<Eigen::Index>(solm.size()), NAN)};
    std::atomic<std::size_t> done{0};
    parallel_for(solm.size(), opt.processes, [&](std::size_t r) {
        const SettingsRow& row = solm.settings.rows[r];
        for (const auto& s : singles) {
            if (row.inc.at(s.component) != 1) continue;
            SettingsRow solo = row;
            solo.snf_scheme = static_cast<int>(SnfScheme::individual);
            solo.inc = {1};
            const double w = weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s.global));
            std::vector<double> wv{w};
            try {
                auto res = solve_row(s.list, solo, opt.metrics, opt.clust_algs, wv, solm.settings.seed);
                out.values(static_cast<Eigen::Index>(s.global), static_cast<Eigen::Index>(r)) =
                    nmi(res.solution.labels, solm.labels(r));
            } catch (const std::exception& e) {
                throw Error("batch_nmi", "row_id " + std::to_string(row.row_id) + ", feature '" +
                                             s.list.component(0).columns[0].name + "': " + e.what());
            }
        }
        if (opt.progress) opt.progress(done.fetch_add(1) + 1, solm.size());
    });
    return out;
}

inline csv::Table to_table(const NmiTable& t) {
    csv::Table out{{"feature"}, {}};
    for (int id : t.row_ids) out.header.push_back("row_id_" + std::to_string(id));
    for (std::size_t f = 0; f < t.features.size(); ++f) {
        std::vector<std::string> row{t.features[f]};
        for (Eigen::Index r = 0; r < t.values.cols(); ++r)
            row.push_back(csv::format_number(t.values(static_cast<Eigen::Index>(f), r)));
        out.rows.push_back(std::move(row));
    }
    return out;
}

struct QualityIndices {
    int row_id = 0;
    double silhouette = NAN;
    double dunn = NAN;
    double davies_bouldin = NAN;
    std::string flag;
};

/// Internal validity indices of one solution on its fused network, using the
/// dissimilarity D = max(W) - W with a zero diagonal.
inline QualityIndices quality_indices(const Eigen::MatrixXd& w, std::span<const int> labels) {
    const auto n = static_cast<Eigen::Index>(labels.size());
    require(w.rows() == n && w.cols() == n, "quality_indices", "similarity matrix does not match the labels");
    QualityIndices q;
    int k = 0;
    auto codes = stats::dense_codes(labels, &k);
    if (k < 2) {
        q.flag = "single_cluster";
        return q;
    }
    Eigen::MatrixXd d = Eigen::MatrixXd::Constant(n, n, w.maxCoeff()) - w;
    d.diagonal().setZero();
    std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < n; ++i) members[static_cast<std::size_t>(codes[static_cast<std::size_t>(i)])].push_back(i);

    double sil = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto ci = static_cast<std::size_t>(codes[static_cast<std::size_t>(i)]);
        if (members[ci].size() == 1) continue;  // s(i) = 0
        double a = 0, b = INFINITY;
        for (auto j : members[ci]) a += d(i, j);
        a /= static_cast<double>(members[ci].size() - 1);
        for (std::size_t c = 0; c < members.size(); ++c) {
            if (c == ci) continue;
            double m = 0;
            for (auto j : members[c]) m += d(i, j);
            b = std::min(b, m / static_cast<double>(members[c].size()));
        }
        const double den = std::max(a, b);
        sil += den > 0 ? (b - a) / den : 0.0;
    }
    q.silhouette = sil / static_cast<double>(n);

    double min_between = INFINITY, max_diameter = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if (codes[static_cast<std::size_t>(i)] == codes[static_cast<std::size_t>(j)])
                max_diameter = std::max(max_diameter, d(i, j));
            else
                min_between = std::min(min_between, d(i, j));
        }
    if (max_diameter > 0) {
        q.dunn = min_between / max_diameter;
    } else {
        q.dunn = INFINITY;
        q.flag = "zero_diameter";
    }

    std::vector<Eigen::Index> medoid(members.size());
    std::vector<double> scatter(members.size());
    for (std::size_t c = 0; c < members.size(); ++c) {
        double best = INFINITY;
        for (auto i : members[c]) {
            double s = 0;
            for (auto j : members[c]) s += d(i, j);
            if (s < best) {
                best = s;
                medoid[c] = i;
            }
        }
        scatter[c] = best / static_cast<double>(members[c].size());
    }
    double db = 0;
    for (std::size_t c = 0; c < members.size(); ++c) {
        double worst = 0;
        for (std::size_t e = 0; e < members.size(); ++e) {
            if (e == c) continue;
            const double sep = d(medoid[c], medoid[e]);
            const double ratio = sep > 0 ? (scatter[c] + scatter[e]) / sep : INFINITY;
            worst = std::max(worst, ratio);
        }
        db += worst;
    }
    q.davies_bouldin = db / static_cast<double>(members.size());
    if (!std::isfinite(q.davies_bouldin) && q.flag.empty()) q.flag = "zero_separation";
    return q;
}

inline std::vector<QualityIndices> compute_quality_indices(const SolutionsMatrix& solm, const std::vector<Eigen::MatrixXd>& sims) {
    require(sims.size() == solm.size(), "compute_quality_indices", "one similarity matrix per solution row is required");
    std::vector<QualityIndices> out;
    for (std::size_t r = 0; r < solm.size(); ++r) {
        out.push_back(quality_indices(sims[r], solm.labels(r)));
        out.back().row_id = solm.row_id(r);
    }
    return out;
}

inline csv::Table to_table(const std::vector<QualityIndices>& q) {
    csv::Table t{{"row_id", "silhouette_mean", "dunn", "davies_bouldin", "flag"}, {}};
    for (const auto& r : q)
        t.rows.push_back({std::to_string(r.row_id), csv::format_number(r.silhouette), csv::format_number(r.dunn),
                          csv::format_number(r.davies_bouldin), r.flag});
    return t;
}

}  // namespace metafuse
