#pragma once

#include <atomic>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "metafuse/csv.hpp"
#include "metafuse/data_list.hpp"
#include "metafuse/distance.hpp"
#include "metafuse/parallel.hpp"
#include "metafuse/settings.hpp"
#include "metafuse/snf.hpp"
#include "metafuse/spectral.hpp"

namespace metafuse {

/// The settings matrix extended with one cluster solution per row. Extra
/// columns (for example the provenance columns written by combine) sit
/// between the settings block and nclust.
struct SolutionsMatrix {
    SettingsMatrix settings;
    std::vector<std::string> uids;
    std::vector<ClusterSolution> solutions;
    std::vector<std::string> extra_names;
    std::vector<std::vector<std::string>> extra;

    std::size_t size() const { return solutions.size(); }
    int row_id(std::size_t i) const { return settings.rows.at(i).row_id; }
    const std::vector<int>& labels(std::size_t i) const { return solutions.at(i).labels; }

    std::vector<int> row_ids() const {
        std::vector<int> ids;
        for (const auto& r : settings.rows) ids.push_back(r.row_id);
        return ids;
    }

    std::optional<std::size_t> find_row(int id) const {
        for (std::size_t i = 0; i < settings.rows.size(); ++i)
            if (settings.rows[i].row_id == id) return i;
        return std::nullopt;
    }

    SolutionsMatrix subset(const std::vector<std::size_t>& rows) const {
        SolutionsMatrix out{settings, uids, {}, extra_names, {}};
        out.settings.rows.clear();
        for (auto r : rows) {
            out.settings.rows.push_back(settings.rows.at(r));
            out.solutions.push_back(solutions.at(r));
            if (!extra.empty()) out.extra.push_back(extra.at(r));
        }
        return out;
    }

    // Label vector of row i reordered to `order` (a permutation or subset of uids).
    std::vector<int> labels_for(std::size_t i, const std::vector<std::string>& order) const {
        std::unordered_map<std::string, std::size_t> pos;
        for (std::size_t u = 0; u < uids.size(); ++u) pos.emplace(uids[u], u);
        std::vector<int> out;
        out.reserve(order.size());
        for (const auto& u : order) {
            auto it = pos.find(u);
            require(it != pos.end(), "solutions matrix", "uid '" + u + "' has no label");
            out.push_back(solutions.at(i).labels[it->second]);
        }
        return out;
    }

    void validate() const {
        require(solutions.size() == settings.rows.size(), "solutions matrix", "row count mismatch");
        require(extra.empty() || extra.size() == solutions.size(), "solutions matrix", "extra column row count mismatch");
        for (std::size_t i = 0; i < solutions.size(); ++i) {
            const auto& s = solutions[i];
            const std::string where = "solutions row " + std::to_string(row_id(i));
            require(s.labels.size() == uids.size(), where.c_str(), "label count does not match the uid count");
            for (int l : s.labels) require(l >= 1 && l <= s.nclust, where.c_str(), "label outside 1..nclust");
            require(count_distinct(s.labels) == s.nclust, where.c_str(), "nclust does not match the distinct labels");
        }
    }
};

inline csv::Table to_table(const SolutionsMatrix& solm) {
    csv::Table t{solm.settings.column_names(), {}};
    t.header.insert(t.header.end(), solm.extra_names.begin(), solm.extra_names.end());
    t.header.emplace_back("nclust");
    t.header.insert(t.header.end(), solm.uids.begin(), solm.uids.end());
    for (std::size_t i = 0; i < solm.size(); ++i) {
        auto row = settings_cells(solm.settings.rows[i]);
        if (!solm.extra.empty()) row.insert(row.end(), solm.extra[i].begin(), solm.extra[i].end());
        row.push_back(std::to_string(solm.solutions[i].nclust));
        for (int l : solm.solutions[i].labels) row.push_back(std::to_string(l));
        t.rows.push_back(std::move(row));
    }
    return t;
}

namespace detail {

inline bool is_pval_column(const std::string& name) {
    return name.size() > 5 && name.compare(name.size() - 5, 5, "_pval") == 0;
}

}  // namespace detail

/// Parses a solutions (or extended solutions) CSV. Label columns run from
/// nclust to the first column ending in "_pval".
inline SolutionsMatrix solutions_from_table(const csv::Table& t, const RegistrySizes& registries = {}) {
    auto layout = detail::SettingsLayout::of(t);
    const std::size_t nclust_col = t.require_column("nclust", "solutions matrix");
    SolutionsMatrix solm;
    solm.settings.component_names = layout.component_names;
    solm.settings.registries = registries;
    std::vector<std::size_t> extra_cols, label_cols;
    for (std::size_t c = 0; c < nclust_col; ++c)
        if (!layout.is_settings_column(c)) extra_cols.push_back(c);
    for (std::size_t c = nclust_col + 1; c < t.header.size() && !detail::is_pval_column(t.header[c]); ++c)
        label_cols.push_back(c);
    require(label_cols.size() >= 2, "solutions matrix", "fewer than two label columns");
    for (auto c : extra_cols) solm.extra_names.push_back(t.header[c]);
    for (auto c : label_cols) solm.uids.push_back(t.header[c]);
    for (const auto& cells : t.rows) {
        solm.settings.rows.push_back(layout.parse_row(cells, t));
        solm.settings.validate_row(solm.settings.rows.back());
        ClusterSolution s;
        s.nclust = detail::parse_int_cell(cells[nclust_col], "nclust");
        for (auto c : label_cols) s.labels.push_back(detail::parse_int_cell(cells[c], t.header[c]));
        solm.solutions.push_back(std::move(s));
        if (!extra_cols.empty()) {
            std::vector<std::string> e;
            for (auto c : extra_cols) e.push_back(cells[c]);
            solm.extra.push_back(std::move(e));
        }
    }
    solm.validate();
    return solm;
}

/// Long-format labels: one row per uid, one column per solution row_id.
inline csv::Table get_cluster_solutions(const SolutionsMatrix& solm) {
    csv::Table t{{"uid"}, {}};
    for (std::size_t i = 0; i < solm.size(); ++i) t.header.push_back(std::to_string(solm.row_id(i)));
    for (std::size_t u = 0; u < solm.uids.size(); ++u) {
        std::vector<std::string> row{solm.uids[u]};
        for (const auto& s : solm.solutions) row.push_back(std::to_string(s.labels[u]));
        t.rows.push_back(std::move(row));
    }
    return t;
}

// Seed handed to the clustering algorithm of one settings row.
inline std::uint64_t row_seed(std::uint64_t seed, int row_id) {
    return stream_seed(seed, {kClusteringStream, static_cast<std::uint64_t>(row_id)});
}

struct RowOutcome {
    Matrix similarity;
    ClusterSolution solution;
};

/// One pipeline: fused network for the row, then its clustering algorithm.
inline RowOutcome solve_row(const DataList& dl, const SettingsRow& row, const MetricsRegistry& metrics,
                            const ClustAlgsRegistry& clust_algs, std::span<const double> weights, std::uint64_t seed,
                            std::vector<std::string>* warnings = nullptr) {
    RowOutcome out;
    out.similarity = run_scheme(dl, row, metrics, weights, warnings);
    out.solution = run_clust_alg(out.similarity, row.clust_alg, clust_algs, row_seed(seed, row.row_id));
    return out;
}

struct BatchOptions {
    std::optional<WeightsMatrix> weights;  // default: all ones
    MetricsRegistry metrics = MetricsRegistry::defaults();
    ClustAlgsRegistry clust_algs = ClustAlgsRegistry::defaults();
    bool return_similarity = false;
    unsigned processes = 1;  // 0: every hardware thread
    bool keep_going = false;
    // Called from worker threads after each row; must be safe to call concurrently.
    std::function<void(std::size_t done, std::size_t total)> progress;
};

struct BatchResult {
    SolutionsMatrix solutions;
    std::vector<Matrix> similarities;  // by row, only when requested
    std::vector<std::string> warnings;
    std::vector<int> skipped_row_ids;  // keep_going only
};

namespace detail {

inline Eigen::MatrixXd weights_for(const DataList& dl, const SettingsMatrix& sm, const BatchOptions& opt) {
    if (!opt.weights) return Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(sm.size()), static_cast<Eigen::Index>(dl.n_features()));
    require(opt.weights->rows() == sm.size(), "batch_snf",
            "weights matrix has " + std::to_string(opt.weights->rows()) + " rows but the settings matrix has " +
                std::to_string(sm.size()));
    return align_weights(*opt.weights, dl).values;
}

}  // namespace detail

/// Runs every settings row against the data list. Results do not depend on
/// `processes`: each row draws from its own (seed, row_id) stream and writes
/// only its own slot.
inline BatchResult batch_snf(const DataList& dl, const SettingsMatrix& sm, const BatchOptions& opt = {}) {
    require(sm.component_names.size() == dl.n_components(), "batch_snf",
            "settings matrix inclusion columns do not match the data list components");
    for (std::size_t c = 0; c < dl.n_components(); ++c)
        require(sm.component_names[c] == dl.component(c).name, "batch_snf",
                "settings column inc_" + sm.component_names[c] + " does not match component '" + dl.component(c).name + "'");
    opt.metrics.validate();
    const Eigen::MatrixXd weights = detail::weights_for(dl, sm, opt);

    const std::size_t n = sm.size();
    std::vector<std::optional<RowOutcome>> slots(n);
    std::vector<std::vector<std::string>> row_warnings(n);
    std::vector<std::string> row_errors(n);
    std::atomic<std::size_t> done{0};

    parallel_for(n, opt.processes, [&](std::size_t i) {
        const auto& row = sm.rows[i];
        std::vector<double> w(weights.cols());
        for (Eigen::Index j = 0; j < weights.cols(); ++j) w[static_cast<std::size_t>(j)] = weights(static_cast<Eigen::Index>(i), j);
        try {
            slots[i] = solve_row(dl, row, opt.metrics, opt.clust_algs, w, sm.seed, &row_warnings[i]);
        } catch (const std::exception& e) {
            if (!opt.keep_going) throw Error("batch_snf", "row_id " + std::to_string(row.row_id) + ": " + e.what());
            row_errors[i] = e.what();
        }
        if (opt.progress) opt.progress(done.fetch_add(1) + 1, n);
    });

    BatchResult res;
    res.solutions.settings = sm;
    res.solutions.settings.rows.clear();
    res.solutions.uids = dl.uids();
    for (std::size_t i = 0; i < n; ++i) {
        const int id = sm.rows[i].row_id;
        for (const auto& w : row_warnings[i]) res.warnings.push_back("row_id " + std::to_string(id) + ": " + w);
        if (!slots[i]) {
            res.skipped_row_ids.push_back(id);
            res.warnings.push_back("row_id " + std::to_string(id) + " skipped: " + row_errors[i]);
            continue;
        }
        res.solutions.settings.rows.push_back(sm.rows[i]);
        res.solutions.solutions.push_back(std::move(slots[i]->solution));
        if (opt.return_similarity) res.similarities.push_back(std::move(slots[i]->similarity));
    }
    return res;
}

/// batch_snf over each subsampled data list, in order.
inline std::vector<BatchResult> batch_snf_subsamples(const std::vector<DataList>& subsamples, const SettingsMatrix& sm,
                                                     const BatchOptions& opt = {}) {
    std::vector<BatchResult> out;
    out.reserve(subsamples.size());
    for (const auto& s : subsamples) out.push_back(batch_snf(s, sm, opt));
    return out;
}

/// Stacks solutions matrices over the same observations and components.
/// Row ids are renumbered from 1; `source` and `source_row_id` record where
/// each row came from.
inline SolutionsMatrix combine_solutions(const std::vector<std::pair<std::string, SolutionsMatrix>>& parts) {
    require(!parts.empty(), "combine", "nothing to combine");
    const auto& first = parts.front().second;
    SolutionsMatrix out;
    out.settings.component_names = first.settings.component_names;
    out.settings.registries = first.settings.registries;
    out.settings.seed = first.settings.seed;
    out.uids = first.uids;
    out.extra_names = {"source", "source_row_id"};
    for (const auto& [name, solm] : parts) {
        require(solm.uids == first.uids, "combine", "'" + name + "' covers different observations");
        require(solm.settings.component_names == first.settings.component_names, "combine",
                "'" + name + "' has different inclusion columns");
        require(solm.extra_names.empty(), "combine", "'" + name + "' is already a combined matrix");
        for (std::size_t i = 0; i < solm.size(); ++i) {
            SettingsRow r = solm.settings.rows[i];
            r.row_id = static_cast<int>(out.settings.rows.size()) + 1;
            out.settings.rows.push_back(std::move(r));
            out.solutions.push_back(solm.solutions[i]);
            out.extra.push_back({name, std::to_string(solm.row_id(i))});
        }
    }
    return out;
}

}  // namespace metafuse
