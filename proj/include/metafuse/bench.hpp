#pragma once

#include <algorithm>
#include <chrono>
#include <vector>

#include <Eigen/Dense>

#include "metafuse/batch.hpp"
#include "metafuse/meta_cluster.hpp"
#include "metafuse/synthetic.hpp"

namespace metafuse::bench {

struct Point {
    std::size_t rows = 0;
    double seconds = 0;
};

/// Goodness of fit of y = a + b x against y = a + c x^2. Both models carry two
/// parameters, so the R^2 values compare directly.
struct FitComparison {
    double r2_linear = 0;
    double r2_quadratic = 0;
    bool linear_wins() const { return r2_linear > r2_quadratic; }
    bool quadratic_wins() const { return r2_quadratic > r2_linear; }
};

inline double r_squared(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    Eigen::MatrixXd a(x.size(), 2);
    a.col(0).setOnes();
    a.col(1) = x;
    const Eigen::VectorXd beta = a.colPivHouseholderQr().solve(y);
    const double ss_res = (y - a * beta).squaredNorm();
    const double ss_tot = (y.array() - y.mean()).square().sum();
    return ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
}

inline FitComparison compare_fits(const std::vector<Point>& pts) {
    require(pts.size() >= 3, "bench", "at least three points are needed to compare fits");
    Eigen::VectorXd x(static_cast<Eigen::Index>(pts.size())), y(x.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        x(static_cast<Eigen::Index>(i)) = static_cast<double>(pts[i].rows);
        y(static_cast<Eigen::Index>(i)) = pts[i].seconds;
    }
    return {r_squared(x, y), r_squared(x.array().square().matrix(), y)};
}

template <class F>
double time_min(F&& f, int reps) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

/// Synthetic normal data: n observations, f features split evenly over
/// `components` continuous components, one domain each.
inline DataList normal_data_list(std::size_t n, std::size_t f, std::size_t components, std::uint64_t seed) {
    require(components >= 1 && f >= components, "bench", "need at least one feature per component");
    const auto full = synthetic::normal_table(n, f, seed);
    std::vector<ComponentSpec> specs;
    std::size_t start = 1;
    for (std::size_t c = 0; c < components; ++c) {
        const std::size_t width = f / components + (c < f % components ? 1 : 0);
        csv::Table t;
        t.header.push_back(full.header[0]);
        for (std::size_t j = 0; j < width; ++j) t.header.push_back(full.header[start + j]);
        for (const auto& row : full.rows) {
            std::vector<std::string> r{row[0]};
            r.insert(r.end(), row.begin() + static_cast<std::ptrdiff_t>(start),
                     row.begin() + static_cast<std::ptrdiff_t>(start + width));
            t.rows.push_back(std::move(r));
        }
        start += width;
        const auto name = "block" + std::to_string(c + 1);
        specs.push_back({std::move(t), name, name, FeatureType::continuous});
    }
    return build_data_list(specs, full.header[0]);
}

/// Wall time of batch_snf over the first R rows of one settings matrix, for
/// each R in `row_counts`.
inline std::vector<Point> time_solutions(const DataList& dl, const std::vector<std::size_t>& row_counts,
                                         const SettingsOptions& opt, std::uint64_t seed, int reps = 3,
                                         int processes = 1) {
    const std::size_t most = *std::max_element(row_counts.begin(), row_counts.end());
    const auto full = generate_settings_matrix(dl, most, opt, {}, seed);
    BatchOptions bo;
    bo.processes = processes;
    std::vector<Point> out;
    for (auto r : row_counts) {
        SettingsMatrix sm = full;
        sm.rows.resize(r);
        out.push_back({r, time_min([&] { (void)batch_snf(dl, sm, bo); }, reps)});
    }
    return out;
}

/// Random solutions matrix with R rows over n uids, each row drawn with 2..8
/// clusters. Only the labels matter for ARI timing.
inline SolutionsMatrix random_solutions(std::size_t rows, std::size_t n, std::uint64_t seed) {
    SolutionsMatrix s;
    s.settings.component_names = {"c"};
    for (std::size_t i = 0; i < n; ++i) s.uids.push_back(synthetic::uid_name(i));
    Rng rng(stream_seed(seed, {kSyntheticStream, 2}));
    for (std::size_t r = 0; r < rows; ++r) {
        SettingsRow sr;
        sr.row_id = static_cast<int>(r) + 1;
        sr.inc = {1};
        s.settings.rows.push_back(sr);
        const int k = 2 + static_cast<int>(rng.index(7));
        std::vector<int> labels(n);
        for (auto& v : labels) v = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(k)));
        labels = relabel_by_first_occurrence(labels);
        s.solutions.push_back({labels, count_distinct(labels)});
    }
    return s;
}

/// Wall time of calc_aris for each R. Small R are repeated inside one timing
/// so every measurement spans a comparable amount of work.
inline std::vector<Point> time_aris(const std::vector<std::size_t>& row_counts, std::size_t n, std::uint64_t seed,
                                    int reps = 3) {
    const std::size_t most = *std::max_element(row_counts.begin(), row_counts.end());
    std::vector<Point> out;
    for (auto r : row_counts) {
        const auto solm = random_solutions(r, n, seed);
        const int inner = static_cast<int>(std::max<std::size_t>(1, (most * most) / (r * r)));
        const double t = time_min(
            [&] {
                for (int i = 0; i < inner; ++i) (void)calc_aris(solm, 1);
            },
            reps);
        out.push_back({r, t / inner});
    }
    return out;
}

}  // namespace metafuse::bench
