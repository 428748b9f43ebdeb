#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "metafuse/error.hpp"
#include "metafuse/rng.hpp"

namespace metafuse {

// Labels 1..nclust per observation; every cluster nonempty.
struct ClusterSolution {
    std::vector<int> labels;
    int nclust = 0;
};

/// Relabels clusters 1, 2, ... in order of first occurrence.
inline std::vector<int> relabel_by_first_occurrence(std::span<const int> labels) {
    std::vector<std::pair<int, int>> seen;
    std::vector<int> out;
    out.reserve(labels.size());
    for (int l : labels) {
        auto it = std::find_if(seen.begin(), seen.end(), [&](const auto& p) { return p.first == l; });
        if (it == seen.end()) {
            seen.emplace_back(l, static_cast<int>(seen.size()) + 1);
            out.push_back(static_cast<int>(seen.size()));
        } else {
            out.push_back(it->second);
        }
    }
    return out;
}

inline int count_distinct(std::span<const int> labels) {
    std::vector<int> v(labels.begin(), labels.end());
    std::sort(v.begin(), v.end());
    return static_cast<int>(std::unique(v.begin(), v.end()) - v.begin());
}

// Eigenpairs of the normalized Laplacian, eigenvalues ascending.
struct LaplacianSpectrum {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

/// L = I - D^{-1/2} W D^{-1/2} with D the row sums of W. Self-similarities
/// (the diagonal) are excluded from W and D.
inline LaplacianSpectrum laplacian_spectrum(const Eigen::MatrixXd& w, std::span<const std::string> uids = {}) {
    const Eigen::Index n = w.rows();
    require(w.cols() == n && n >= 2, "spectral", "similarity matrix must be square with n >= 2");
    Eigen::MatrixXd a = w;
    a.diagonal().setZero();
    a = (a + a.transpose()) / 2.0;
    Eigen::VectorXd inv_sqrt(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double deg = a.row(i).sum();
        if (!(deg > 0.0)) {
            std::string who = static_cast<std::size_t>(i) < uids.size() ? "'" + uids[static_cast<std::size_t>(i)] + "'"
                                                                        : "row " + std::to_string(i + 1);
            throw Error("spectral", "observation " + who + " has zero degree (disconnected)");
        }
        inv_sqrt(i) = 1.0 / std::sqrt(deg);
    }
    Eigen::MatrixXd l = -(inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal());
    l.diagonal().array() += 1.0;
    l = (l + l.transpose()) / 2.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l);
    if (es.info() != Eigen::Success) throw Error("spectral", "eigendecomposition failed");
    return {es.eigenvalues(), es.eigenvectors()};
}

struct KMeansOptions {
    int restarts = 10;
    int max_iterations = 100;
};

namespace detail {

inline double sq_dist(const Eigen::MatrixXd& x, Eigen::Index i, const Eigen::MatrixXd& c, Eigen::Index j) {
    return (x.row(i) - c.row(j)).squaredNorm();
}

inline Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& x, int k, Rng& rng) {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd centers(k, x.cols());
    centers.row(0) = x.row(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n))));
    std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    for (int c = 1; c < k; ++c) {
        for (Eigen::Index i = 0; i < n; ++i)
            d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], sq_dist(x, i, centers, c - 1));
        double total = 0.0;
        for (double v : d2) total += v;
        const Eigen::Index pick = total > 0.0 ? static_cast<Eigen::Index>(rng.weighted_index(d2))
                                              : static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
        centers.row(c) = x.row(pick);
    }
    return centers;
}

inline int nearest_center(const Eigen::MatrixXd& x, Eigen::Index i, const Eigen::MatrixXd& centers, double* dist) {
    int best = 0;
    double bd = sq_dist(x, i, centers, 0);
    for (Eigen::Index c = 1; c < centers.rows(); ++c) {
        const double d = sq_dist(x, i, centers, c);
        if (d < bd) {
            bd = d;
            best = static_cast<int>(c);
        }
    }
    if (dist) *dist = bd;
    return best;
}

// Moves points into empty clusters: each empty cluster takes the point
// farthest from its centre among clusters with more than one member.
inline void fill_empty_clusters(const Eigen::MatrixXd& x, std::vector<int>& assign, Eigen::MatrixXd& centers, int k) {
    for (;;) {
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (int a : assign) ++counts[static_cast<std::size_t>(a)];
        auto empty = std::find(counts.begin(), counts.end(), 0);
        if (empty == counts.end()) return;
        Eigen::Index donor = -1;
        double far = -1.0;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            const int a = assign[static_cast<std::size_t>(i)];
            if (counts[static_cast<std::size_t>(a)] < 2) continue;
            const double d = sq_dist(x, i, centers, a);
            if (d > far) {
                far = d;
                donor = i;
            }
        }
        const int target = static_cast<int>(empty - counts.begin());
        assign[static_cast<std::size_t>(donor)] = target;
        centers.row(target) = x.row(donor);
    }
}

}  // namespace detail

/// Lloyd's k-means with k-means++ seeding; the restart with the lowest
/// within-cluster sum of squares wins (earliest on ties). Returns 0-based
/// assignments with every cluster nonempty.
inline std::vector<int> kmeans(const Eigen::MatrixXd& x, int k, Rng& rng, const KMeansOptions& opt = {}) {
    const Eigen::Index n = x.rows();
    require(k >= 1 && k <= n, "kmeans", "k must satisfy 1 <= k <= n");
    std::vector<int> best;
    double best_inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < opt.restarts; ++r) {
        Eigen::MatrixXd centers = detail::kmeanspp_init(x, k, rng);
        std::vector<int> assign(static_cast<std::size_t>(n), -1);
        for (int it = 0; it < opt.max_iterations; ++it) {
            bool changed = false;
            for (Eigen::Index i = 0; i < n; ++i) {
                const int c = detail::nearest_center(x, i, centers, nullptr);
                if (c != assign[static_cast<std::size_t>(i)]) {
                    assign[static_cast<std::size_t>(i)] = c;
                    changed = true;
                }
            }
            detail::fill_empty_clusters(x, assign, centers, k);
            if (!changed && it > 0) break;
            Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
            std::vector<int> counts(static_cast<std::size_t>(k), 0);
            for (Eigen::Index i = 0; i < n; ++i) {
                sums.row(assign[static_cast<std::size_t>(i)]) += x.row(i);
                ++counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
            }
            for (int c = 0; c < k; ++c)
                if (counts[static_cast<std::size_t>(c)] > 0) centers.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
        }
        double inertia = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) inertia += detail::sq_dist(x, i, centers, assign[static_cast<std::size_t>(i)]);
        if (inertia < best_inertia) {
            best_inertia = inertia;
            best = assign;
        }
    }
    return best;
}

inline ClusterSolution spectral_cluster_from(const LaplacianSpectrum& spec, int k, std::uint64_t seed) {
    const Eigen::Index n = spec.vectors.rows();
    require(k >= 2 && k < n, "spectral_cluster",
            "cluster count must satisfy 2 <= k < n (k=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");
    Eigen::MatrixXd emb = spec.vectors.leftCols(k);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double norm = emb.row(i).norm();
        if (norm > 0.0) emb.row(i) /= norm;
    }
    Rng rng(seed);
    auto assign = kmeans(emb, k, rng);
    ClusterSolution sol;
    sol.labels = relabel_by_first_occurrence(assign);
    sol.nclust = count_distinct(sol.labels);
    return sol;
}

/// Normalized spectral clustering: k smallest Laplacian eigenvectors,
/// unit-length rows, k-means.
inline ClusterSolution spectral_cluster(const Eigen::MatrixXd& w, int k, std::uint64_t seed,
                                        std::span<const std::string> uids = {}) {
    require(k >= 2 && k < w.rows(), "spectral_cluster",
            "cluster count must satisfy 2 <= k < n (k=" + std::to_string(k) + ", n=" + std::to_string(w.rows()) + ")");
    return spectral_cluster_from(laplacian_spectrum(w, uids), k, seed);
}

enum class KHeuristic { eigen_gap, rotation_cost };

struct RotationOptions {
    int max_iterations = 200;
    double tolerance = 1e-6;
};

namespace detail {

// Alignment cost sum_i sum_j Z_ij^2 / max_j Z_ij^2 (rows of zeros skipped).
inline double alignment_cost(const Eigen::MatrixXd& z) {
    double j = 0.0;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const double m = z.row(i).array().square().maxCoeff();
        if (m > 0.0) j += z.row(i).squaredNorm() / m;
    }
    return j;
}

struct Givens {
    Eigen::Index a, b;
};

inline Eigen::MatrixXd givens(Eigen::Index k, Givens g, double theta, bool derivative) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(k, k);
    if (derivative) m.setZero();
    const double c = std::cos(theta), s = std::sin(theta);
    if (derivative) {
        m(g.a, g.a) = -s;
        m(g.a, g.b) = -c;
        m(g.b, g.a) = c;
        m(g.b, g.b) = -s;
    } else {
        m(g.a, g.a) = c;
        m(g.a, g.b) = -s;
        m(g.b, g.a) = s;
        m(g.b, g.b) = c;
    }
    return m;
}

inline Eigen::MatrixXd rotation(Eigen::Index k, const std::vector<Givens>& gs, const std::vector<double>& theta) {
    Eigen::MatrixXd r = Eigen::MatrixXd::Identity(k, k);
    for (std::size_t l = 0; l < gs.size(); ++l) r = r * givens(k, gs[l], theta[l], false);
    return r;
}

}  // namespace detail

/// Minimum alignment cost of the k-dimensional embedding over rotations,
/// found by gradient descent on Givens angles (backtracking step size).
inline double rotation_cost(const Eigen::MatrixXd& x, const RotationOptions& opt = {}) {
    const Eigen::Index k = x.cols();
    const double n = static_cast<double>(x.rows());
    std::vector<detail::Givens> gs;
    for (Eigen::Index a = 0; a < k; ++a)
        for (Eigen::Index b = a + 1; b < k; ++b) gs.push_back({a, b});
    std::vector<double> theta(gs.size(), 0.0);
    if (gs.empty()) return detail::alignment_cost(x);

    double cost = detail::alignment_cost(x) / n;
    double step = 1.0;
    for (int it = 0; it < opt.max_iterations; ++it) {
        // Prefix/suffix products of the Givens factors.
        const std::size_t m = gs.size();
        std::vector<Eigen::MatrixXd> pre(m + 1), suf(m + 1);
        pre[0] = Eigen::MatrixXd::Identity(k, k);
        for (std::size_t l = 0; l < m; ++l) pre[l + 1] = pre[l] * detail::givens(k, gs[l], theta[l], false);
        suf[m] = Eigen::MatrixXd::Identity(k, k);
        for (std::size_t l = m; l-- > 0;) suf[l] = detail::givens(k, gs[l], theta[l], false) * suf[l + 1];
        const Eigen::MatrixXd z = x * pre[m];

        std::vector<Eigen::Index> arg(static_cast<std::size_t>(x.rows()));
        Eigen::VectorXd mx(x.rows()), ss(x.rows());
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            Eigen::Index j;
            mx(i) = z.row(i).array().square().maxCoeff(&j);
            arg[static_cast<std::size_t>(i)] = j;
            ss(i) = z.row(i).squaredNorm();
        }
        std::vector<double> grad(m, 0.0);
        for (std::size_t l = 0; l < m; ++l) {
            const Eigen::MatrixXd dz = x * (pre[l] * detail::givens(k, gs[l], theta[l], true) * suf[l + 1]);
            double g = 0.0;
            for (Eigen::Index i = 0; i < x.rows(); ++i) {
                if (!(mx(i) > 0.0)) continue;
                const Eigen::Index j = arg[static_cast<std::size_t>(i)];
                const double dss = 2.0 * z.row(i).dot(dz.row(i));
                const double dmx = 2.0 * z(i, j) * dz(i, j);
                g += dss / mx(i) - ss(i) * dmx / (mx(i) * mx(i));
            }
            grad[l] = g / n;
        }
        double gnorm = 0.0;
        for (double g : grad) gnorm += g * g;
        if (gnorm == 0.0) break;

        bool improved = false;
        double new_cost = cost;
        std::vector<double> trial(m);
        for (int half = 0; half < 30; ++half) {
            for (std::size_t l = 0; l < m; ++l) trial[l] = theta[l] - step * grad[l];
            new_cost = detail::alignment_cost(x * detail::rotation(k, gs, trial)) / n;
            if (new_cost < cost) {
                improved = true;
                break;
            }
            step /= 2.0;
        }
        if (!improved) break;
        const double delta = cost - new_cost;
        theta = trial;
        cost = new_cost;
        step *= 1.5;
        if (delta < opt.tolerance) break;
    }
    return cost * n;
}

/// Cluster count in [lo, hi]. eigen_gap maximizes lambda_{k+1} - lambda_k;
/// rotation_cost minimizes the aligned embedding cost. Ties go to the smaller k
/// (differences below 1e-10 count as ties).
inline int estimate_k_from(const LaplacianSpectrum& spec, KHeuristic h, int lo = 2, int hi = 10,
                           const RotationOptions& rot = {}) {
    const auto n = spec.values.size();
    require(lo >= 1 && lo <= hi, "estimate_k", "invalid range " + std::to_string(lo) + ".." + std::to_string(hi));
    require(hi < n, "estimate_k", "range upper bound must be below n=" + std::to_string(n));
    constexpr double tie = 1e-10;
    int best = lo;
    if (h == KHeuristic::eigen_gap) {
        double best_gap = -std::numeric_limits<double>::infinity();
        for (int k = lo; k <= hi; ++k) {
            const double gap = spec.values(k) - spec.values(k - 1);
            if (gap > best_gap + tie) {
                best_gap = gap;
                best = k;
            }
        }
    } else {
        double best_cost = std::numeric_limits<double>::infinity();
        for (int k = lo; k <= hi; ++k) {
            const double c = rotation_cost(spec.vectors.leftCols(k), rot);
            if (c < best_cost - tie * std::max(1.0, std::abs(c))) {
                best_cost = c;
                best = k;
            }
        }
    }
    return best;
}

inline int estimate_k(const Eigen::MatrixXd& w, KHeuristic h, int lo = 2, int hi = 10) {
    return estimate_k_from(laplacian_spectrum(w), h, lo, hi);
}

// ---- clustering algorithm registry ----

using ClustAlgFn = std::function<ClusterSolution(const Eigen::MatrixXd& w, std::uint64_t seed)>;

namespace clust_algs {

inline ClustAlgFn spectral_estimated(KHeuristic h) {
    return [h](const Eigen::MatrixXd& w, std::uint64_t seed) {
        auto spec = laplacian_spectrum(w);
        const int hi = std::min<int>(10, static_cast<int>(w.rows()) - 1);
        require(hi >= 2, "spectral", "at least 3 observations are required");
        return spectral_cluster_from(spec, estimate_k_from(spec, h, 2, hi), seed);
    };
}

inline ClustAlgFn spectral_fixed(int k) {
    return [k](const Eigen::MatrixXd& w, std::uint64_t seed) { return spectral_cluster(w, k, seed); };
}

}  // namespace clust_algs

inline ClustAlgFn builtin_clust_alg(const std::string& name) {
    if (name == "spectral_eigen") return clust_algs::spectral_estimated(KHeuristic::eigen_gap);
    if (name == "spectral_rot") return clust_algs::spectral_estimated(KHeuristic::rotation_cost);
    static const char* fixed[] = {"spectral_two", "spectral_three", "spectral_four", "spectral_five",
                                  "spectral_six", "spectral_seven", "spectral_eight"};
    for (int i = 0; i < 7; ++i)
        if (name == fixed[i]) return clust_algs::spectral_fixed(i + 2);
    throw Error("clust_algs", "unknown clustering algorithm '" + name + "'");
}

struct NamedClustAlg {
    std::string name;
    ClustAlgFn fn;
};

/// Ordered clustering algorithms; the settings clust_alg column selects by
/// 1-based index.
class ClustAlgsRegistry {
public:
    static ClustAlgsRegistry defaults() {
        ClustAlgsRegistry r;
        r.add("spectral_eigen").add("spectral_rot");
        return r;
    }
    static ClustAlgsRegistry empty() { return {}; }

    ClustAlgsRegistry& add(const std::string& builtin) { return add(builtin, builtin_clust_alg(builtin)); }
    ClustAlgsRegistry& add(std::string name, ClustAlgFn fn) {
        algs_.push_back({std::move(name), std::move(fn)});
        return *this;
    }

    std::size_t size() const { return algs_.size(); }
    const std::vector<NamedClustAlg>& algorithms() const { return algs_; }

    const NamedClustAlg& at(int index_1based) const {
        if (index_1based < 1 || static_cast<std::size_t>(index_1based) > algs_.size())
            throw Error("clust_algs", "index " + std::to_string(index_1based) + " outside the registry (size " +
                                          std::to_string(algs_.size()) + ")");
        return algs_[static_cast<std::size_t>(index_1based - 1)];
    }

private:
    std::vector<NamedClustAlg> algs_;
};

inline ClusterSolution run_clust_alg(const Eigen::MatrixXd& w, int alg_index, const ClustAlgsRegistry& registry,
                                     std::uint64_t seed) {
    const auto& alg = registry.at(alg_index);
    ClusterSolution sol = alg.fn(w, seed);
    require(sol.labels.size() == static_cast<std::size_t>(w.rows()), "clust_algs",
            "algorithm '" + alg.name + "' returned " + std::to_string(sol.labels.size()) + " labels for " +
                std::to_string(w.rows()) + " observations");
    sol.labels = relabel_by_first_occurrence(sol.labels);
    sol.nclust = count_distinct(sol.labels);
    return sol;
}

}  // namespace metafuse
