#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "metafuse/snf.hpp"
#include "metafuse/spectral.hpp"
#include "metafuse/synthetic.hpp"

using namespace metafuse;

namespace {

// Noisy block similarity: in-block ~0.8, off-block ~0.05, symmetric, no exact ties.
Matrix noisy_blocks(const std::vector<int>& sizes, std::uint64_t seed, double inside = 0.8, double outside = 0.05) {
    Matrix w = synthetic::block_similarity(sizes, inside, outside);
    Rng rng(seed);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = i + 1; j < w.cols(); ++j) {
            w(i, j) *= 1.0 + 0.2 * (rng.uniform() - 0.5);
            w(j, i) = w(i, j);
        }
    return w;
}

Matrix permute(const Matrix& m, const std::vector<Eigen::Index>& perm) {
    Matrix out(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = m(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    return out;
}

double block_mass_ratio(const Matrix& w, const std::vector<int>& labels) {
    double in = 0, off = 0;
    int nin = 0, noff = 0;
    for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = 0; j < w.cols(); ++j) {
            if (i == j) continue;
            if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]) {
                in += w(i, j);
                ++nin;
            } else {
                off += w(i, j);
                ++noff;
            }
        }
    return (off / noff) / (in / nin);
}

DataList blob_data_list(std::vector<std::string> domains) {
    std::vector<ComponentSpec> specs;
    for (std::size_t c = 0; c < domains.size(); ++c) {
        auto blobs = synthetic::gaussian_blobs({{0, 0}, {6, 6}, {0, 8}}, 10, 1.0, 100 + c, "c" + std::to_string(c) + "_");
        specs.push_back({blobs.table, "comp" + std::to_string(c), domains[c], FeatureType::continuous});
    }
    return build_data_list(specs, "uid");
}

SettingsRow row_for(const DataList& dl, int scheme, int k = 10) {
    SettingsRow r;
    r.row_id = 1;
    r.alpha = 0.5;
    r.k = k;
    r.t = 20;
    r.snf_scheme = scheme;
    r.inc.assign(dl.n_components(), 1);
    return r;
}

}  // namespace

TEST(Affinity, ThreePointLineByHand) {
    Matrix d(3, 3);
    d << 0, 1, 10, 1, 0, 9, 10, 9, 0;
    auto w = affinity_matrix(d, 1, 0.5);
    // nearest-neighbour means: m = (1, 1, 9)
    EXPECT_NEAR(w(0, 1), std::exp(-2.0), 1e-14);
    EXPECT_NEAR(w(0, 2), std::exp(-4.5), 1e-14);
    EXPECT_NEAR(w(1, 2), std::exp(-81.0 * 18.0 / 361.0), 1e-14);
    EXPECT_DOUBLE_EQ(w(0, 0), 1.0);
    EXPECT_EQ(w, w.transpose());
}

TEST(Affinity, EqualDistancesGiveEqualSimilarities) {
    Matrix d = Matrix::Constant(5, 5, 2.0);
    d.diagonal().setZero();
    auto w = affinity_matrix(d, 2, 0.4);
    for (Eigen::Index i = 0; i < 5; ++i)
        for (Eigen::Index j = 0; j < 5; ++j)
            if (i != j) EXPECT_DOUBLE_EQ(w(i, j), w(0, 1));
}

TEST(Affinity, DuplicatePointsUseEpsilonFloor) {
    Matrix d = Matrix::Zero(4, 4);
    auto w = affinity_matrix(d, 2, 0.5);
    EXPECT_TRUE(w.allFinite());
    EXPECT_DOUBLE_EQ(w.minCoeff(), 1.0);
}

TEST(Affinity, RejectsKAtLeastN) {
    Matrix d = Matrix::Ones(3, 3);
    EXPECT_THROW(affinity_matrix(d, 3, 0.5), Error);
}

TEST(FullKernel, RowsSumToOneAndHalfDiagonal) {
    auto w = noisy_blocks({5, 7}, 3);
    auto p = full_kernel(w);
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-10);
        EXPECT_EQ(p(i, i), 0.5);
    }
    Matrix two(2, 2);
    two << 1, 0.3, 0.3, 1;
    auto p2 = full_kernel(two);
    EXPECT_TRUE(p2.isApprox(Matrix::Constant(2, 2, 0.5)));
    Matrix bad = Matrix::Identity(3, 3);
    EXPECT_THROW(full_kernel(bad), Error);
}

TEST(LocalKernel, HandNeighbourSets) {
    Matrix w(3, 3);
    w << 1, .9, .2, .9, 1, .5, .2, .5, 1;
    auto s = local_kernel(w, 1);
    Matrix expect(3, 3);
    expect << 0, 1, 0, 1, 0, 0, 0, 1, 0;
    EXPECT_EQ(s, expect);
    auto s2 = local_kernel(w, 2);
    EXPECT_NEAR(s2(2, 0), 0.2 / 0.7, 1e-15);
    EXPECT_NEAR(s2(2, 1), 0.5 / 0.7, 1e-15);
    EXPECT_EQ(s2(2, 2), 0.0);
}

TEST(LocalKernel, ExactlyKNonzerosPerRow) {
    auto w = noisy_blocks({6, 6}, 8);
    for (int k : {1, 3, 11}) {
        auto s = local_kernel(w, k);
        for (Eigen::Index i = 0; i < s.rows(); ++i) {
            EXPECT_EQ((s.row(i).array() > 0).count(), k);
            EXPECT_NEAR(s.row(i).sum(), 1.0, 1e-12);
            EXPECT_EQ(s(i, i), 0.0);
        }
    }
}

TEST(LocalKernel, TiesBrokenByLowerIndex) {
    Matrix w = Matrix::Constant(4, 4, 0.5);
    auto s = local_kernel(w, 1);
    EXPECT_EQ(s(0, 1), 1.0);
    EXPECT_EQ(s(1, 0), 1.0);
    EXPECT_EQ(s(3, 0), 1.0);
}

TEST(SnfFuse, SingleMatrixKeepsPartition) {
    const std::vector<int> sizes{8, 8, 8};
    auto w = noisy_blocks(sizes, 21);
    auto fused = snf_fuse(std::vector<Matrix>{w}, 5, 20);
    auto a = spectral_cluster(w, 3, 1).labels;
    auto b = spectral_cluster(fused, 3, 1).labels;
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, synthetic::block_labels(sizes));
}

TEST(SnfFuse, IdenticalInputsMatchSingleInputPartition) {
    const std::vector<int> sizes{10, 7, 9};
    auto w = noisy_blocks(sizes, 4);
    for (int k : {2, 3}) {
        auto one = spectral_cluster(snf_fuse(std::vector<Matrix>{w}, 5, 20), k, 3).labels;
        for (int m : {2, 3}) {
            std::vector<Matrix> ws(static_cast<std::size_t>(m), w);
            EXPECT_EQ(spectral_cluster(snf_fuse(ws, 5, 20), k, 3).labels, one) << "k=" << k << " m=" << m;
        }
    }
}

TEST(SnfFuse, ConsistentBlocksSurviveFusion) {
    const std::vector<int> sizes{12, 12};
    auto fused = snf_fuse(std::vector<Matrix>{noisy_blocks(sizes, 1), noisy_blocks(sizes, 2)}, 6, 20);
    EXPECT_LT(block_mass_ratio(fused, synthetic::block_labels(sizes)), 0.1);
    EXPECT_EQ(spectral_cluster(fused, 2, 0).labels, synthetic::block_labels(sizes));
}

TEST(SnfFuse, SymmetricFiniteNonnegative) {
    Rng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 6 + static_cast<int>(rng.index(20));
        std::vector<Matrix> ws;
        for (int v = 0; v < 3; ++v) {
            Matrix x = Matrix::Random(n, 3);
            Matrix d(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) d(i, j) = (x.row(i) - x.row(j)).norm();
            ws.push_back(affinity_matrix(d, 3, 0.5));
        }
        auto f = snf_fuse(ws, 3, 20);
        EXPECT_LE((f - f.transpose()).cwiseAbs().maxCoeff(), 1e-8);
        EXPECT_TRUE(f.allFinite());
        EXPECT_GE(f.minCoeff(), 0.0);
    }
}

TEST(SnfFuse, ConvergesByTwentyIterations) {
    const std::vector<int> sizes{10, 10, 10};
    std::vector<Matrix> ws{noisy_blocks(sizes, 31), noisy_blocks(sizes, 32), noisy_blocks(sizes, 33)};
    auto f20 = snf_fuse(ws, 8, 20);
    auto f40 = snf_fuse(ws, 8, 40);
    EXPECT_LT((f20 - f40).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(SnfFuse, PermutationEquivariant) {
    const std::vector<int> sizes{7, 9};
    std::vector<Matrix> ws{noisy_blocks(sizes, 41), noisy_blocks(sizes, 42)};
    std::vector<Eigen::Index> perm(16);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(2);
    for (std::size_t i = perm.size(); i-- > 1;) std::swap(perm[i], perm[rng.index(i + 1)]);
    std::vector<Matrix> pws{permute(ws[0], perm), permute(ws[1], perm)};
    auto f = snf_fuse(ws, 4, 20);
    auto pf = snf_fuse(pws, 4, 20);
    EXPECT_LE((permute(f, perm) - pf).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SnfFuse, DimensionMismatch) {
    std::vector<Matrix> ws{Matrix::Ones(3, 3), Matrix::Ones(4, 4)};
    EXPECT_THROW(snf_fuse(ws, 1, 20), Error);
}

TEST(RunScheme, SingleComponentIdenticalAcrossSchemes) {
    auto dl = blob_data_list({"A"});
    auto metrics = MetricsRegistry::defaults();
    std::vector<double> w(dl.n_features(), 1.0);
    auto a = run_scheme(dl, row_for(dl, 1), metrics, w);
    EXPECT_EQ(a, run_scheme(dl, row_for(dl, 2), metrics, w));
    EXPECT_EQ(a, run_scheme(dl, row_for(dl, 3), metrics, w));
}

TEST(RunScheme, TwoDomainsIndividualEqualsTwoStep) {
    auto dl = blob_data_list({"A", "B"});
    auto metrics = MetricsRegistry::defaults();
    std::vector<double> w(dl.n_features(), 1.0);
    auto a = run_scheme(dl, row_for(dl, 1), metrics, w);
    EXPECT_EQ(a, run_scheme(dl, row_for(dl, 2), metrics, w));
    EXPECT_EQ(a, run_scheme(dl, row_for(dl, 3), metrics, w));
}

TEST(RunScheme, TwoStepFusesWithinDomainFirst) {
    auto dl = blob_data_list({"A", "A", "B"});
    auto metrics = MetricsRegistry::defaults();
    std::vector<double> w(dl.n_features(), 1.0);
    auto row = row_for(dl, 2);
    auto aff = [&](std::size_t c) {
        auto ws = std::span<const double>(w).subspan(dl.feature_offset(c), dl.component(c).n_features());
        return affinity_matrix(metrics::euclidean(dl.component(c), ws).values, 10, 0.5);
    };
    Matrix inner = snf_fuse(std::vector<Matrix>{aff(0), aff(1)}, 10, 20);
    Matrix expect = snf_fuse(std::vector<Matrix>{inner, aff(2)}, 10, 20);
    EXPECT_LE((run_scheme(dl, row, metrics, w) - expect).cwiseAbs().maxCoeff(), 1e-15);
    // individual differs: one fusion of three matrices
    EXPECT_GT((run_scheme(dl, row_for(dl, 1), metrics, w) - expect).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(RunScheme, ConcatenationUsesMixedMetricForDifferingTypes) {
    auto blobs = synthetic::gaussian_blobs({{0, 0}, {5, 5}}, 6, 1.0, 3, "n");
    csv::Table cat{{"uid", "colour"}, {}};
    for (std::size_t i = 0; i < blobs.table.rows.size(); ++i)
        cat.rows.push_back({blobs.table.rows[i][0], blobs.truth[i] == 1 ? "red" : "blue"});
    std::vector<ComponentSpec> specs{{blobs.table, "num", "D", FeatureType::continuous},
                                     {cat, "cat", "D", FeatureType::categorical}};
    auto dl = build_data_list(specs, "uid");
    std::vector<double> w(dl.n_features(), 1.0);
    SettingsRow row = row_for(dl, 3, 4);
    auto fused = run_scheme(dl, row, MetricsRegistry::defaults(), w);
    DataComponent merged{"D", "D", FeatureType::mixed, dl.uids(), {}};
    for (const auto& c : dl.components()) merged.columns.insert(merged.columns.end(), c.columns.begin(), c.columns.end());
    auto expect = snf_fuse(std::vector<Matrix>{affinity_matrix(metrics::gower(merged, w).values, 4, 0.5)}, 4, 20);
    EXPECT_LE((fused - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(RunScheme, AllComponentsDroppedIsAnError) {
    auto dl = blob_data_list({"A", "B"});
    std::vector<double> w(dl.n_features(), 1.0);
    auto row = row_for(dl, 1);
    row.inc = {0, 0};
    EXPECT_THROW(run_scheme(dl, row, MetricsRegistry::defaults(), w), Error);
}

TEST(RunScheme, KIsClampedBelowN) {
    auto dl = blob_data_list({"A"});
    std::vector<double> w(dl.n_features(), 1.0);
    auto big = row_for(dl, 1, 500);
    auto clamped = row_for(dl, 1, static_cast<int>(dl.n_obs()) - 1);
    EXPECT_EQ(run_scheme(dl, big, MetricsRegistry::defaults(), w), run_scheme(dl, clamped, MetricsRegistry::defaults(), w));
}
