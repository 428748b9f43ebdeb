#include <gtest/gtest.h>

#include <set>

#include "fixtures.hpp"
#include "metafuse/label_propagation.hpp"
#include "metafuse/meta_cluster.hpp"

using namespace metafuse;

namespace {

std::vector<std::string> names(std::size_t n) {
    std::vector<std::string> v;
    for (std::size_t i = 0; i < n; ++i) v.push_back(synthetic::uid_name(i));
    return v;
}

}  // namespace

TEST(TrainTestAssign, SizesAndDeterminism) {
    auto uids = names(87);
    auto s = train_test_assign(0.8, uids, 42);
    EXPECT_EQ(s.train.size(), 69u);
    EXPECT_EQ(s.test.size(), 18u);
    std::set<std::string> all(s.train.begin(), s.train.end());
    all.insert(s.test.begin(), s.test.end());
    EXPECT_EQ(all.size(), 87u);
    auto again = train_test_assign(0.8, uids, 42);
    EXPECT_EQ(again.train, s.train);
    EXPECT_NE(train_test_assign(0.8, uids, 43).train, s.train);
}

TEST(TrainTestAssign, EdgeSizes) {
    auto uids = names(10);
    EXPECT_EQ(train_test_assign(0.95, uids, 1).test.size(), 1u);
    EXPECT_THROW(train_test_assign(0.05, uids, 1), Error);
    EXPECT_THROW(train_test_assign(1.0, uids, 1), Error);
    EXPECT_THROW(train_test_assign(0.0, uids, 1), Error);
}

TEST(Propagate, ClampsKnownNodes) {
    auto w = synthetic::block_similarity({4, 4}, 0.9, 0.05);
    std::vector<int> known{1, 0, 0, 0, 2, 0, 0, 0};
    auto res = propagate(w, known);
    EXPECT_TRUE(res.converged);
    EXPECT_EQ(res.labels, (std::vector<int>{1, 1, 1, 1, 2, 2, 2, 2}));
}

TEST(PropagateLabels, BlobGeneralization) {
    auto blobs = fixtures::three_blobs(30, 0.8, 9);
    const auto& full = blobs.data;
    auto split = train_test_assign(0.8, full.uids(), 5);
    auto train_dl = full.select(split.train);
    SettingsMatrix sm = fixtures::small_settings(train_dl, 3);
    for (auto& r : sm.rows) r.clust_alg = 1;
    auto train = batch_snf(train_dl, sm).solutions;
    auto out = propagate_labels(train, full);
    ASSERT_EQ(out.uids.size(), full.n_obs());
    ASSERT_EQ(out.labels.size(), 3u);
    EXPECT_EQ(out.group.front(), "train");
    EXPECT_EQ(out.group.back(), "test");
    std::map<std::string, int> truth;
    for (std::size_t i = 0; i < full.n_obs(); ++i) truth[full.uids()[i]] = blobs.truth[i];
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t i = 0; i < train.uids.size(); ++i) EXPECT_EQ(out.labels[r][i], train.labels(r)[i]);
        if (train.solutions[r].nclust != 3) continue;
        // map each cluster to the majority truth among training points
        std::map<int, std::map<int, int>> votes;
        for (std::size_t i = 0; i < train.uids.size(); ++i) ++votes[train.labels(r)[i]][truth[train.uids[i]]];
        std::map<int, int> to_truth;
        for (const auto& [c, v] : votes)
            to_truth[c] = std::max_element(v.begin(), v.end(), [](auto& a, auto& b) { return a.second < b.second; })->first;
        int correct = 0, total = 0;
        for (std::size_t i = train.uids.size(); i < out.uids.size(); ++i, ++total)
            correct += to_truth[out.labels[r][i]] == truth[out.uids[i]];
        EXPECT_GE(static_cast<double>(correct) / total, 0.95);
    }
}

TEST(PropagateLabels, DuplicateOfTrainPointTakesItsLabel) {
    csv::Table t{{"uid", "x", "y"}, {}};
    Rng rng(2);
    for (int i = 0; i < 16; ++i)
        t.rows.push_back({synthetic::uid_name(static_cast<std::size_t>(i)), csv::format_number((i < 8 ? 0 : 5) + rng.normal(0, 0.3)),
                          csv::format_number(rng.normal(0, 0.3))});
    t.rows.push_back({"s9999", t.rows[12][1], t.rows[12][2]});  // twin of s0013
    std::vector<ComponentSpec> specs{{t, "c", "d", FeatureType::continuous}};
    auto full = build_data_list(specs, "uid");
    std::vector<std::string> train_uids(full.uids().begin(), full.uids().end() - 1);
    auto train_dl = full.select(train_uids);
    SettingsMatrix sm = fixtures::small_settings(train_dl, 1);
    sm.rows[0].k = 5;
    auto train = batch_snf(train_dl, sm).solutions;
    auto out = propagate_labels(train, full);
    ASSERT_EQ(out.uids.back(), "s9999");
    EXPECT_EQ(out.labels[0].back(), train.labels(0)[12]);
}

TEST(PropagateLabels, EmptyTestSetReturnsTraining) {
    auto blobs = fixtures::three_blobs(8);
    auto train = batch_snf(blobs.data, fixtures::small_settings(blobs.data, 2)).solutions;
    auto out = propagate_labels(train, blobs.data);
    EXPECT_EQ(out.uids, train.uids);
    for (std::size_t r = 0; r < 2; ++r) EXPECT_EQ(out.labels[r], train.labels(r));
    auto t = to_table(out);
    EXPECT_EQ(t.header[1], "group");
    EXPECT_EQ(t.rows[0][1], "train");
}

TEST(PropagateLabels, TrainUidMissingFromFullList) {
    auto blobs = fixtures::three_blobs(8);
    auto train = batch_snf(blobs.data, fixtures::small_settings(blobs.data, 1)).solutions;
    std::vector<std::string> fewer(blobs.data.uids().begin() + 1, blobs.data.uids().end());
    EXPECT_THROW(propagate_labels(train, blobs.data.select(fewer)), Error);
}
