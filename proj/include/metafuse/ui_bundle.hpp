#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "metafuse/csv.hpp"
#include "metafuse/meta_cluster.hpp"

namespace metafuse {

inline constexpr int kBundleSchemaVersion = 1;

// A per-solution annotation drawn beside the heatmap (nclust, p-values, ...).
struct Track {
    std::string name;
    std::vector<double> values;  // aligned with row_ids; NaN for missing
};

/// Everything the annotator needs: the ARI matrix, its display order, an
/// optional initial split vector and annotation tracks.
struct UiBundle {
    std::vector<int> row_ids;
    Eigen::MatrixXd matrix;
    std::vector<std::size_t> order;  // 0-based positions into row_ids
    std::vector<int> splits;
    std::vector<Track> tracks;
};

inline UiBundle make_ui_bundle(const AriMatrix& am, std::vector<std::size_t> order, std::vector<Track> tracks = {},
                               std::vector<int> splits = {}) {
    require(order.size() == am.size(), "export-ui", "order length does not match the ARI matrix");
    std::vector<bool> seen(am.size(), false);
    for (auto p : order) {
        require(p < am.size() && !seen[p], "export-ui", "order is not a permutation");
        seen[p] = true;
    }
    for (const auto& t : tracks)
        require(t.values.size() == am.size(), "export-ui", "track '" + t.name + "' length does not match the ARI matrix");
    partition_by_split_vector(order, splits);  // validates the splits
    return {am.row_ids, am.values, std::move(order), std::move(splits), std::move(tracks)};
}

namespace detail {

inline nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace detail

inline nlohmann::json to_json(const UiBundle& b) {
    using nlohmann::json;
    json j;
    j["schema_version"] = kBundleSchemaVersion;
    j["size"] = b.row_ids.size();
    j["row_ids"] = b.row_ids;
    json m = json::array();
    for (Eigen::Index r = 0; r < b.matrix.rows(); ++r)
        for (Eigen::Index c = 0; c < b.matrix.cols(); ++c) m.push_back(detail::number_or_null(b.matrix(r, c)));
    j["matrix"] = std::move(m);
    // 1-based ordered positions, like the split vector
    json order = json::array();
    for (auto p : b.order) order.push_back(p + 1);
    j["order"] = std::move(order);
    j["splits"] = b.splits;
    json tracks = json::array();
    for (const auto& t : b.tracks) {
        json values = json::array();
        for (double v : t.values) values.push_back(detail::number_or_null(v));
        tracks.push_back({{"name", t.name}, {"values", std::move(values)}});
    }
    j["tracks"] = std::move(tracks);
    return j;
}

inline UiBundle ui_bundle_from_json(const nlohmann::json& j) {
    try {
        require(j.at("schema_version").get<int>() == kBundleSchemaVersion, "ui bundle",
                "unsupported schema_version " + j.at("schema_version").dump());
        AriMatrix am;
        am.row_ids = j.at("row_ids").get<std::vector<int>>();
        const auto n = static_cast<Eigen::Index>(am.row_ids.size());
        const auto& m = j.at("matrix");
        require(j.at("size").get<std::size_t>() == am.row_ids.size() && m.size() == static_cast<std::size_t>(n * n),
                "ui bundle", "matrix size does not match row_ids");
        am.values.resize(n, n);
        for (Eigen::Index r = 0; r < n; ++r)
            for (Eigen::Index c = 0; c < n; ++c) {
                const auto& v = m[static_cast<std::size_t>(r * n + c)];
                am.values(r, c) = v.is_null() ? NAN : v.get<double>();
            }
        std::vector<std::size_t> order;
        for (const auto& p : j.at("order")) {
            const auto v = p.get<long>();
            require(v >= 1, "ui bundle", "order positions are 1-based");
            order.push_back(static_cast<std::size_t>(v - 1));
        }
        std::vector<Track> tracks;
        for (const auto& t : j.at("tracks")) {
            Track tr{t.at("name").get<std::string>(), {}};
            for (const auto& v : t.at("values")) tr.values.push_back(v.is_null() ? NAN : v.get<double>());
            tracks.push_back(std::move(tr));
        }
        return make_ui_bundle(am, std::move(order), std::move(tracks), j.at("splits").get<std::vector<int>>());
    } catch (const nlohmann::json::exception& e) {
        throw Error("ui bundle", std::string("malformed bundle: ") + e.what());
    }
}

inline void write_ui_bundle(const std::string& path, const UiBundle& b) { csv::write_file(path, to_json(b).dump(1) + "\n"); }

inline UiBundle read_ui_bundle(const std::string& path) {
    try {
        return ui_bundle_from_json(nlohmann::json::parse(csv::read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error("ui bundle", path + ": " + e.what());
    }
}

}  // namespace metafuse
