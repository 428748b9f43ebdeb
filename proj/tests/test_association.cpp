#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>

#include "fixtures.hpp"
#include "metafuse/association.hpp"
#include "metafuse/batch.hpp"

using namespace metafuse;

namespace {

std::string sig7(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.7g", v);
    return buf;
}

const fixtures::Blobs& blobs() {
    static const auto b = fixtures::three_blobs(15);
    return b;
}

// Target list over the blob uids: one feature tracking the blobs, one noise.
DataList blob_targets(std::uint64_t seed) {
    const auto& b = blobs();
    Rng rng(seed);
    csv::Table t{{"uid", "signal", "noise"}, {}};
    for (std::size_t i = 0; i < b.data.n_obs(); ++i)
        t.rows.push_back({b.data.uids()[i], csv::format_number(b.truth[i] * 10.0 + rng.normal()),
                          csv::format_number(rng.normal())});
    std::vector<ComponentSpec> specs{{t, "targets", "outcome", FeatureType::continuous}};
    return build_data_list(specs, "uid");
}

}  // namespace

TEST(PvalueSummary, PrintedOutputRow) {
    std::vector<double> p{0.7344315, 0.7263495};
    auto s = summarize_pvalues(p);
    EXPECT_EQ(s.min, 0.7263495);
    EXPECT_EQ(s.max, 0.7344315);
    EXPECT_EQ(sig7(s.mean), "0.7303905");
    EXPECT_NEAR(s.mean, 0.7303905, 2e-16);
    std::vector<double> one{0.25};
    auto t = summarize_pvalues(one);
    EXPECT_EQ(t.min, 0.25);
    EXPECT_EQ(t.mean, 0.25);
    EXPECT_EQ(t.max, 0.25);
}

TEST(PvalueSummary, OrderedOnRandomInputs) {
    Rng rng(6);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> p(1 + rng.index(6));
        for (auto& v : p) v = rng.uniform() * (rng.uniform() < 0.5 ? 1e-8 : 1.0);
        auto s = summarize_pvalues(p);
        EXPECT_LE(s.min, s.mean);
        EXPECT_LE(s.mean, s.max);
    }
}

TEST(ExtendSolutions, ColumnsFloorsAndTargetOnlySummaries) {
    const auto& dl = blobs().data;
    auto solm = batch_snf(dl, fixtures::small_settings(dl, 4)).solutions;
    auto targets = blob_targets(1);
    auto ext = extend_solutions(solm, &dl, &targets);
    EXPECT_EQ(ext.features, (std::vector<std::string>{"x1", "x2", "x3", "x4", "signal", "noise"}));
    ASSERT_EQ(ext.summaries.size(), 4u);
    for (Eigen::Index r = 0; r < 4; ++r) {
        for (Eigen::Index f = 0; f < 6; ++f) {
            EXPECT_GE(ext.pvals(r, f), 1e-10);
            EXPECT_LE(ext.pvals(r, f), 1.0);
        }
        const auto& s = ext.summaries[static_cast<std::size_t>(r)];
        EXPECT_EQ(s.min, std::min(ext.pvals(r, 4), ext.pvals(r, 5)));
        EXPECT_EQ(s.max, std::max(ext.pvals(r, 4), ext.pvals(r, 5)));
    }
    auto t = to_table(ext);
    EXPECT_EQ(t.header.back(), "max_pval");
    EXPECT_EQ(t.header[t.header.size() - 4], "noise_pval");
    // an extended matrix reads back as its solutions matrix
    EXPECT_EQ(csv::to_string(to_table(solutions_from_table(t))), csv::to_string(to_table(solm)));
}

TEST(ExtendSolutions, SummaryFlagAndNoTargets) {
    const auto& dl = blobs().data;
    auto solm = batch_snf(dl, fixtures::small_settings(dl, 2)).solutions;
    auto targets = blob_targets(2);
    ExtendOptions opt;
    opt.calculate_summaries = false;
    EXPECT_TRUE(extend_solutions(solm, &dl, &targets, opt).summaries.empty());
    EXPECT_TRUE(extend_solutions(solm, &dl, nullptr).summaries.empty());
    EXPECT_EQ(extend_solutions(solm, nullptr, &targets).features.size(), 2u);
    EXPECT_THROW(extend_solutions(solm, nullptr, nullptr), Error);
}

TEST(ExtendSolutions, FloorApplied) {
    const auto& dl = blobs().data;
    auto solm = batch_snf(dl, fixtures::small_settings(dl, 1)).solutions;
    ExtendOptions opt;
    opt.min_pval = 0.5;
    auto ext = extend_solutions(solm, &dl, nullptr, opt);
    EXPECT_GE(ext.pvals.minCoeff(), 0.5);
}

TEST(AssocPvalMatrix, CopiesSymmetryDiagonal) {
    csv::Table t{{"uid", "a", "a_copy", "b", "cat"}, {}};
    Rng rng(3);
    for (int i = 0; i < 40; ++i) {
        const double a = rng.normal();
        t.rows.push_back({synthetic::uid_name(static_cast<std::size_t>(i)), csv::format_number(a), csv::format_number(a),
                          csv::format_number(rng.normal()), i % 3 == 0 ? "x" : "y"});
    }
    std::vector<ComponentSpec> specs{{t, "m", "d", FeatureType::mixed}};
    auto dl = build_data_list(specs, "uid");
    auto m = calc_assoc_pval_matrix(dl);
    ASSERT_EQ(m.values.rows(), 4);
    EXPECT_EQ(m.values, m.values.transpose());
    EXPECT_EQ(m.values.diagonal().cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(m.values(0, 1), 1e-10);
    EXPECT_LE(m.values.maxCoeff(), 1.0);
    EXPECT_GE(m.values(0, 2), 1e-10);
}

TEST(AssocPvalMatrix, IndependentPermutedFeaturesUniform) {
    Rng rng(77);
    std::vector<double> p;
    for (int sim = 0; sim < 400; ++sim) {
        std::vector<double> x(200), y(200);
        for (auto& v : x) v = rng.normal();
        for (auto& v : y) v = rng.exponential();
        auto a = make_numeric_column("x", x), b = make_numeric_column("y", y);
        p.push_back(feature_pair_pvalue(a, FeatureType::continuous, b, FeatureType::continuous).p);
    }
    std::sort(p.begin(), p.end());
    double d = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
        d = std::max({d, (i + 1.0) / p.size() - p[i], p[i] - static_cast<double>(i) / p.size()});
    // critical value of the KS statistic at level 0.01 for n = 400
    EXPECT_LT(d, 1.63 / std::sqrt(400.0));
}

TEST(Nmi, SelfSymmetricAndIndependent) {
    std::vector<int> a{1, 1, 2, 2, 3, 3}, b{1, 2, 1, 2, 1, 2};
    EXPECT_NEAR(nmi(a, a), 1.0, 1e-12);
    EXPECT_EQ(nmi(a, b), nmi(b, a));
    std::vector<int> c{1, 1, 2, 2}, d{1, 2, 1, 2}, one{1, 1, 1, 1};
    EXPECT_NEAR(nmi(c, d), 0.0, 1e-12);
    EXPECT_EQ(nmi(c, one), 0.0);
    EXPECT_EQ(nmi(one, one), 1.0);
    Rng rng(9);
    std::vector<int> x(500), y(500);
    for (auto& v : x) v = 1 + static_cast<int>(rng.index(3));
    for (auto& v : y) v = 1 + static_cast<int>(rng.index(3));
    EXPECT_LE(nmi(x, y), 0.05);
    EXPECT_GE(nmi(x, y), 0.0);
}

TEST(BatchNmi, ShapeAndExclusions) {
    const auto& dl = blobs().data;
    auto sm = fixtures::small_settings(dl, 5);
    sm.rows[1].inc = {1, 0};
    auto solm = batch_snf(dl, sm).solutions;
    auto t = batch_nmi(dl, solm);
    ASSERT_EQ(t.values.rows(), 4);
    ASSERT_EQ(t.values.cols(), 5);
    EXPECT_TRUE(std::isnan(t.values(2, 1)));
    EXPECT_TRUE(std::isnan(t.values(3, 1)));
    EXPECT_FALSE(std::isnan(t.values(0, 1)));
    for (Eigen::Index f = 0; f < 4; ++f)
        for (Eigen::Index r = 0; r < 5; ++r)
            if (!std::isnan(t.values(f, r))) {
                EXPECT_GE(t.values(f, r), 0.0);
                EXPECT_LE(t.values(f, r), 1.0);
            }
    BatchOptions par;
    par.processes = 3;
    auto t2 = batch_nmi(dl, solm, par);
    EXPECT_TRUE(t.values.cwiseEqual(t2.values).count() + t.values.array().isNaN().count() == 20);
    EXPECT_EQ(to_table(t).header[1], "row_id_1");
}

TEST(QualityIndices, IdealBlocks) {
    auto w = synthetic::block_similarity({10, 12}, 0.9, 0.01);
    auto q = quality_indices(w, synthetic::block_labels({10, 12}));
    EXPECT_GT(q.silhouette, 0.8);
    EXPECT_GT(q.dunn, 1.0);
    EXPECT_TRUE(std::isfinite(q.davies_bouldin));
    EXPECT_TRUE(q.flag.empty());
}

TEST(QualityIndices, SingleClusterFlagged) {
    auto w = synthetic::block_similarity({6}, 0.5, 0.5);
    auto q = quality_indices(w, std::vector<int>(6, 1));
    EXPECT_EQ(q.flag, "single_cluster");
    EXPECT_TRUE(std::isnan(q.silhouette));
}

TEST(QualityIndices, SilhouetteInRangeOnBatch) {
    const auto& dl = blobs().data;
    BatchOptions opt;
    opt.return_similarity = true;
    auto res = batch_snf(dl, fixtures::small_settings(dl, 6), opt);
    auto q = compute_quality_indices(res.solutions, res.similarities);
    ASSERT_EQ(q.size(), 6u);
    for (const auto& r : q) {
        EXPECT_GE(r.silhouette, -1.0);
        EXPECT_LE(r.silhouette, 1.0);
    }
    EXPECT_EQ(to_table(q).header[1], "silhouette_mean");
    std::vector<Eigen::MatrixXd> none;
    EXPECT_THROW(compute_quality_indices(res.solutions, none), Error);
}

TEST(ExtendSolutions, TargetListMayCoverMoreObservations) {
    const auto& dl = blobs().data;
    auto solm = batch_snf(dl, fixtures::small_settings(dl, 2)).solutions;
    auto targets = blob_targets(3);
    std::vector<std::string> fewer(dl.uids().begin() + 2, dl.uids().end());
    auto sub = solm;
    sub.uids = fewer;
    for (auto& s : sub.solutions) {
        s.labels.erase(s.labels.begin(), s.labels.begin() + 2);
        s.nclust = count_distinct(s.labels);
    }
    auto ext = extend_solutions(sub, nullptr, &targets);
    EXPECT_EQ(ext.pvals.rows(), 2);
    auto narrow = dl.select(fewer);
    EXPECT_THROW(extend_solutions(solm, &narrow, nullptr), Error);
}
