#include <gtest/gtest.h>

#include <cmath>

#include "metafuse/distance.hpp"
#include "metafuse/synthetic.hpp"

using namespace metafuse;

namespace {

DataComponent numeric_component(std::vector<std::vector<double>> cols, FeatureType type = FeatureType::continuous) {
    DataComponent c{"c", "d", type, {}, {}};
    for (std::size_t i = 0; i < cols.front().size(); ++i) c.uids.push_back(synthetic::uid_name(i));
    for (std::size_t j = 0; j < cols.size(); ++j) c.columns.push_back(make_numeric_column("f" + std::to_string(j), cols[j]));
    return c;
}

DataComponent random_component(Rng& rng, std::size_t n, std::size_t p, bool with_categorical) {
    DataComponent c{"c", "d", with_categorical ? FeatureType::mixed : FeatureType::continuous, {}, {}};
    for (std::size_t i = 0; i < n; ++i) c.uids.push_back(synthetic::uid_name(i));
    for (std::size_t j = 0; j < p; ++j) {
        if (with_categorical && j % 2 == 1) {
            std::vector<std::string> cells;
            for (std::size_t i = 0; i < n; ++i) cells.push_back(std::string(1, static_cast<char>('a' + rng.index(3))));
            c.columns.push_back(make_categorical_column("f" + std::to_string(j), cells));
        } else {
            std::vector<double> v;
            for (std::size_t i = 0; i < n; ++i) v.push_back(rng.normal(0, 2));
            c.columns.push_back(make_numeric_column("f" + std::to_string(j), v));
        }
    }
    return c;
}

void expect_distance_invariants(const Eigen::MatrixXd& d) {
    ASSERT_EQ(d.rows(), d.cols());
    EXPECT_LE((d - d.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(d.diagonal().cwiseAbs().maxCoeff(), 0.0);
    EXPECT_GE(d.minCoeff(), 0.0);
}

}  // namespace

TEST(Euclidean, ThreeFourFive) {
    auto c = numeric_component({{0, 3}, {0, 4}});
    std::vector<double> w{1, 1};
    EXPECT_DOUBLE_EQ(compute_distance_matrix(c, "euclidean", w).values(0, 1), 5.0);
}

TEST(Gower, ByHandNumericPlusCategorical) {
    DataComponent c{"c", "d", FeatureType::mixed, {"a", "b"}, {}};
    c.columns.push_back(make_numeric_column("x", {0, 10}));
    c.columns.push_back(make_categorical_column("colour", {"red", "blue"}));
    std::vector<double> w{1, 1};
    EXPECT_DOUBLE_EQ(compute_distance_matrix(c, "gower", w).values(0, 1), 1.0);
    std::vector<double> w2{3, 1};
    EXPECT_DOUBLE_EQ(compute_distance_matrix(c, "gower", w2).values(0, 1), 1.0);
}

TEST(Gower, PartialRangeAndZeroRangeWarning) {
    DataComponent c{"c", "d", FeatureType::continuous, {"a", "b", "c"}, {}};
    c.columns.push_back(make_numeric_column("x", {0, 5, 10}));
    c.columns.push_back(make_numeric_column("flat", {2, 2, 2}));
    std::vector<double> w{1, 1};
    auto d = compute_distance_matrix(c, "gower", w);
    // x contributes 0.5 * weight 1/2; flat contributes nothing
    EXPECT_DOUBLE_EQ(d.values(0, 1), 0.25);
    ASSERT_EQ(d.warnings.size(), 1u);
    EXPECT_NE(d.warnings[0].find("flat"), std::string::npos);
}

TEST(SewEuclidean, ByHand) {
    auto c = numeric_component({{1, 3}});
    std::vector<double> w{4};
    EXPECT_DOUBLE_EQ(compute_distance_matrix(c, "sew_euclidean", w).values(0, 1), 16.0);
}

TEST(SiwEuclidean, ByHand) {
    auto c = numeric_component({{1, 3}});
    std::vector<double> w{4};
    // (4 * |1 - 3|)^2
    EXPECT_DOUBLE_EQ(compute_distance_matrix(c, "siw_euclidean", w).values(0, 1), 64.0);
}

TEST(SnEuclidean, StandardizesColumns) {
    auto c = numeric_component({{0, 2}, {0, 200}, {5, 5}});
    std::vector<double> w{1, 1, 1};
    // both varying columns z-score to -1/+1; the constant column maps to zero
    EXPECT_NEAR(compute_distance_matrix(c, "sn_euclidean", w).values(0, 1), std::sqrt(8.0), 1e-12);
}

TEST(Hamming, IdenticalAndFullyDifferentRows) {
    DataComponent c{"c", "d", FeatureType::categorical, {"a", "b", "c"}, {}};
    c.columns.push_back(make_categorical_column("p", {"x", "x", "y"}));
    c.columns.push_back(make_categorical_column("q", {"u", "u", "v"}));
    c.columns.push_back(make_categorical_column("r", {"1", "1", "2"}));
    std::vector<double> w{1, 1, 1};
    auto d = compute_distance_matrix(c, "hamming", w).values;
    EXPECT_EQ(d(0, 1), 0.0);
    EXPECT_EQ(d(0, 2), 3.0);
}

TEST(Metrics, ErrorPaths) {
    auto c = numeric_component({{1, 3}});
    std::vector<double> neg{-1};
    EXPECT_THROW(compute_distance_matrix(c, "euclidean", neg), Error);
    std::vector<double> w{1};
    EXPECT_THROW(compute_distance_matrix(c, "manhattan", w), Error);
    std::vector<double> too_many{1, 1};
    EXPECT_THROW(compute_distance_matrix(c, "euclidean", too_many), Error);
    DataComponent cat{"c", "d", FeatureType::categorical, {"a", "b"}, {}};
    cat.columns.push_back(make_categorical_column("p", {"x", "y"}));
    EXPECT_THROW(compute_distance_matrix(cat, "euclidean", w), Error);
}

TEST(Metrics, TypeInvariantsOnRandomComponents) {
    Rng rng(11);
    const char* numeric_metrics[] = {"euclidean", "sn_euclidean", "siw_euclidean", "sew_euclidean", "gower", "hamming"};
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + rng.index(25), p = 1 + rng.index(5);
        auto c = random_component(rng, n, p, false);
        std::vector<double> w(p);
        for (auto& x : w) x = rng.exponential();
        for (auto* m : numeric_metrics) expect_distance_invariants(compute_distance_matrix(c, m, w).values);
        auto mixed = random_component(rng, n, p + 1, true);
        std::vector<double> wm(p + 1, 1.0);
        expect_distance_invariants(compute_distance_matrix(mixed, "gower", wm).values);
        expect_distance_invariants(compute_distance_matrix(mixed, "hamming", wm).values);
    }
}

TEST(Metrics, WeightScaling) {
    Rng rng(5);
    auto c = random_component(rng, 12, 4, false);
    std::vector<double> w{0.5, 1.0, 2.0, 0.25};
    const double s = 3.0;
    std::vector<double> ws;
    for (double x : w) ws.push_back(s * x);
    auto d = [&](const char* m, const std::vector<double>& wt) { return compute_distance_matrix(c, m, wt).values; };
    // columns multiplied by the weights: Euclidean scales with c
    EXPECT_LE((d("euclidean", ws) - s * d("euclidean", w)).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE((d("siw_euclidean", ws) - s * s * d("siw_euclidean", w)).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE((d("sew_euclidean", ws) - s * d("sew_euclidean", w)).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE((d("gower", ws) - d("gower", w)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MetricsRegistry, DefaultsAndIndexing) {
    auto r = MetricsRegistry::defaults();
    EXPECT_NO_THROW(r.validate());
    EXPECT_EQ(r.at(FeatureType::continuous, 1).name, "euclidean");
    EXPECT_EQ(r.at(FeatureType::mixed, 1).name, "gower");
    EXPECT_THROW(r.at(FeatureType::ordinal, 2), Error);
    r.add(FeatureType::continuous, "sn_euclidean");
    EXPECT_EQ(r.size(FeatureType::continuous), 2u);
    EXPECT_THROW(MetricsRegistry::empty().validate(), Error);
}

TEST(WeightsMatrix, FillsAndDeterminism) {
    std::vector<ComponentSpec> specs{{synthetic::normal_table(10, 3, 1), "c", "d", FeatureType::continuous}};
    auto dl = build_data_list(specs, "uid");
    auto ones = generate_weights_matrix(dl, 2, WeightFill::ones);
    EXPECT_EQ(ones.values.rows(), 2);
    EXPECT_EQ(ones.values.cols(), 3);
    EXPECT_EQ(ones.values.minCoeff(), 1.0);
    EXPECT_EQ(ones.values.maxCoeff(), 1.0);
    EXPECT_EQ(ones.features, dl.feature_names());

    auto u = generate_weights_matrix(dl, 50, WeightFill::uniform, 9);
    EXPECT_GT(u.values.minCoeff(), 0.0);
    EXPECT_LT(u.values.maxCoeff(), 1.0);
    EXPECT_EQ(u.values, generate_weights_matrix(dl, 50, WeightFill::uniform, 9).values);

    auto e = generate_weights_matrix(dl, 2000, WeightFill::exponential, 9);
    EXPECT_GT(e.values.minCoeff(), 0.0);
    EXPECT_NEAR(e.values.mean(), 1.0, 0.05);

    auto back = weights_from_table(to_table(u));
    EXPECT_EQ(back.values, u.values);
    EXPECT_EQ(back.features, u.features);
}
