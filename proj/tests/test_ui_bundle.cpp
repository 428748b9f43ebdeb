#include <gtest/gtest.h>

#include <filesystem>

#include "metafuse/ui_bundle.hpp"

using namespace metafuse;

namespace {

AriMatrix fixture_aris(std::size_t r) {
    AriMatrix am{{}, Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r))};
    Rng rng(5);
    for (std::size_t i = 0; i < r; ++i) {
        am.row_ids.push_back(static_cast<int>(i) + 1);
        for (std::size_t j = i + 1; j < r; ++j)
            am.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                am.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = rng.uniform() - 0.2;
    }
    return am;
}

}  // namespace

TEST(UiBundle, RoundTripWithTrackAndSplits) {
    auto am = fixture_aris(20);
    auto order = get_matrix_order(am);
    Track nclust{"nclust", {}};
    for (int i = 0; i < 20; ++i) nclust.values.push_back(2 + i % 4);
    auto b = make_ui_bundle(am, order, {nclust}, {2, 5, 12, 17});
    auto j = to_json(b);
    EXPECT_EQ(j["schema_version"], kBundleSchemaVersion);
    EXPECT_EQ(j["matrix"].size(), 400u);
    auto back = ui_bundle_from_json(nlohmann::json::parse(j.dump()));
    EXPECT_EQ(back.matrix, b.matrix);
    EXPECT_EQ(back.order, b.order);
    EXPECT_EQ(back.splits, b.splits);
    ASSERT_EQ(back.tracks.size(), 1u);
    EXPECT_EQ(back.tracks[0].values, nclust.values);
    EXPECT_EQ(partition_by_split_vector(back.order, back.splits).block_sizes(),
              (std::vector<std::size_t>{2, 3, 7, 5, 3}));
}

TEST(UiBundle, EmptyAnnotationsAndFileIo) {
    auto am = fixture_aris(5);
    auto b = make_ui_bundle(am, {4, 3, 2, 1, 0});
    auto path = (std::filesystem::temp_directory_path() / "metafuse_bundle_test.json").string();
    write_ui_bundle(path, b);
    auto back = read_ui_bundle(path);
    EXPECT_TRUE(back.tracks.empty());
    EXPECT_TRUE(back.splits.empty());
    EXPECT_EQ(back.order, b.order);
    std::filesystem::remove(path);
}

TEST(UiBundle, MissingTrackValuesAreNull) {
    auto am = fixture_aris(3);
    auto b = make_ui_bundle(am, {0, 1, 2}, {{"p", {0.5, NAN, 0.1}}});
    auto j = to_json(b);
    EXPECT_TRUE(j["tracks"][0]["values"][1].is_null());
    EXPECT_TRUE(std::isnan(ui_bundle_from_json(j).tracks[0].values[1]));
}

TEST(UiBundle, Validation) {
    auto am = fixture_aris(4);
    EXPECT_THROW(make_ui_bundle(am, {0, 1, 2}), Error);
    EXPECT_THROW(make_ui_bundle(am, {0, 1, 1, 2}), Error);
    EXPECT_THROW(make_ui_bundle(am, {0, 1, 2, 3}, {{"short", {1, 2}}}), Error);
    EXPECT_THROW(make_ui_bundle(am, {0, 1, 2, 3}, {}, {4}), Error);
    auto j = to_json(make_ui_bundle(am, {0, 1, 2, 3}));
    j["schema_version"] = 99;
    EXPECT_THROW(ui_bundle_from_json(j), Error);
    j["schema_version"] = kBundleSchemaVersion;
    j.erase("order");
    EXPECT_THROW(ui_bundle_from_json(j), Error);
}
