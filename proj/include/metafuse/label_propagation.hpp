#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "metafuse/batch.hpp"
#include "metafuse/parallel.hpp"
#include "metafuse/rng.hpp"
#include "metafuse/snf.hpp"

namespace metafuse {

struct TrainTestSplit {
    std::vector<std::string> train;
    std::vector<std::string> test;
};

/// floor(frac * N) subjects drawn without replacement for training; both
/// sides keep the input order.
inline TrainTestSplit train_test_assign(double train_frac, const std::vector<std::string>& subjects, std::uint64_t seed) {
    require(train_frac > 0.0 && train_frac < 1.0, "train_test_assign", "train_frac must lie in (0, 1)");
    require(subjects.size() >= 2, "train_test_assign", "at least two subjects are required");
    const auto n_train = static_cast<std::size_t>(std::floor(train_frac * static_cast<double>(subjects.size()) + 1e-9));
    require(n_train >= 1 && n_train < subjects.size(), "train_test_assign",
            "train_frac leaves one side of the split empty");
    Rng rng(stream_seed(seed, {kTrainTestStream}));
    auto picked = rng.sample_without_replacement(subjects.size(), n_train);
    std::vector<bool> in_train(subjects.size(), false);
    for (auto i : picked) in_train[i] = true;
    TrainTestSplit s;
    for (std::size_t i = 0; i < subjects.size(); ++i) (in_train[i] ? s.train : s.test).push_back(subjects[i]);
    return s;
}

struct PropagationOptions {
    double tolerance = 1e-6;
    int max_iterations = 1000;
};

struct PropagationResult {
    std::vector<int> labels;  // for every uid of the network
    int iterations = 0;
    bool converged = true;
};

/// Clamped label propagation: Y <- P Y with the known rows reset after each
/// step; unknown rows take the arg max (ties to the lower cluster id).
/// `known` holds a label in 1..k, or 0 for an unlabelled node.
inline PropagationResult propagate(const Eigen::MatrixXd& w, const std::vector<int>& known, const PropagationOptions& opt = {}) {
    const auto n = static_cast<Eigen::Index>(known.size());
    require(w.rows() == n && w.cols() == n, "propagate", "network size does not match the label vector");
    const int k = *std::max_element(known.begin(), known.end());
    require(k >= 1, "propagate", "no labelled nodes");
    const Eigen::MatrixXd p = full_kernel(w);
    Eigen::MatrixXd y0 = Eigen::MatrixXd::Zero(n, k);
    for (Eigen::Index i = 0; i < n; ++i)
        if (known[static_cast<std::size_t>(i)] > 0) y0(i, known[static_cast<std::size_t>(i)] - 1) = 1.0;
    Eigen::MatrixXd y = y0;
    PropagationResult res;
    res.converged = false;
    for (res.iterations = 1; res.iterations <= opt.max_iterations; ++res.iterations) {
        Eigen::MatrixXd next = p * y;
        for (Eigen::Index i = 0; i < n; ++i)
            if (known[static_cast<std::size_t>(i)] > 0) next.row(i) = y0.row(i);
        const double delta = (next - y).cwiseAbs().maxCoeff();
        y = std::move(next);
        if (delta < opt.tolerance) {
            res.converged = true;
            break;
        }
    }
    res.iterations = std::min(res.iterations, opt.max_iterations);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (known[static_cast<std::size_t>(i)] > 0) {
            res.labels.push_back(known[static_cast<std::size_t>(i)]);
            continue;
        }
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < k; ++c)
            if (y(i, c) > y(i, best)) best = c;
        res.labels.push_back(static_cast<int>(best) + 1);
    }
    return res;
}

struct PropagatedLabels {
    std::vector<std::string> uids;   // train then test
    std::vector<std::string> group;  // "train" or "test"
    std::vector<int> row_ids;
    std::vector<std::vector<int>> labels;  // per solution row, aligned with uids
    std::vector<std::string> warnings;
};

/// Assigns the observations of `full` that are missing from the training
/// solutions to clusters, by rebuilding each solution row's network on `full`
/// and propagating the training labels over it.
inline PropagatedLabels propagate_labels(const SolutionsMatrix& train, const DataList& full,
                                         const BatchOptions& opt = {}, const PropagationOptions& popt = {}) {
    std::unordered_map<std::string, std::size_t> full_pos;
    for (std::size_t i = 0; i < full.uids().size(); ++i) full_pos.emplace(full.uids()[i], i);
    std::vector<bool> is_train(full.n_obs(), false);
    for (const auto& u : train.uids) {
        auto it = full_pos.find(u);
        require(it != full_pos.end(), "propagate_labels", "training uid '" + u + "' missing from the full data list");
        is_train[it->second] = true;
    }
    PropagatedLabels out;
    out.uids = train.uids;
    out.group.assign(train.uids.size(), "train");
    std::vector<std::size_t> test_pos;
    for (std::size_t i = 0; i < full.n_obs(); ++i)
        if (!is_train[i]) {
            out.uids.push_back(full.uids()[i]);
            out.group.emplace_back("test");
            test_pos.push_back(i);
        }
    out.row_ids = train.row_ids();
    out.labels.resize(train.size());
    const Eigen::MatrixXd weights = detail::weights_for(full, train.settings, opt);
    std::vector<std::string> row_warnings(train.size());

    parallel_for(train.size(), opt.processes, [&](std::size_t r) {
        const auto& train_labels = train.labels(r);
        std::vector<int> row_labels(train_labels.begin(), train_labels.end());
        if (!test_pos.empty()) {
            std::vector<double> w(static_cast<std::size_t>(weights.cols()));
            for (Eigen::Index j = 0; j < weights.cols(); ++j) w[static_cast<std::size_t>(j)] = weights(static_cast<Eigen::Index>(r), j);
            const Eigen::MatrixXd net = run_scheme(full, train.settings.rows[r], opt.metrics, w);
            std::vector<int> known(full.n_obs(), 0);
            for (std::size_t u = 0; u < train.uids.size(); ++u) known[full_pos.at(train.uids[u])] = train_labels[u];
            auto res = propagate(net, known, popt);
            if (!res.converged)
                row_warnings[r] = "row_id " + std::to_string(train.row_id(r)) + ": propagation stopped after " +
                                  std::to_string(popt.max_iterations) + " iterations without converging";
            for (auto i : test_pos) row_labels.push_back(res.labels[i]);
        }
        out.labels[r] = std::move(row_labels);
    });
    for (auto& w : row_warnings)
        if (!w.empty()) out.warnings.push_back(std::move(w));
    return out;
}

inline csv::Table to_table(const PropagatedLabels& p) {
    csv::Table t{{"uid", "group"}, {}};
    for (int id : p.row_ids) t.header.push_back(std::to_string(id));
    for (std::size_t i = 0; i < p.uids.size(); ++i) {
        std::vector<std::string> row{p.uids[i], p.group[i]};
        for (const auto& l : p.labels) row.push_back(std::to_string(l[i]));
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace metafuse
