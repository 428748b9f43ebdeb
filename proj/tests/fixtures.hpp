#pragma once

#include <string>
#include <vector>

#include "metafuse/data_list.hpp"
#include "metafuse/settings.hpp"
#include "metafuse/synthetic.hpp"

namespace fixtures {

struct Blobs {
    metafuse::DataList data;
    std::vector<int> truth;
};

// Three well separated 4-d blobs split into two 2-column components in
// different domains. Uids are s0001.. in generation order, so truth aligns.
inline Blobs three_blobs(std::size_t per_blob = 30, double sd = 0.5, std::uint64_t seed = 3) {
    auto lt = metafuse::synthetic::gaussian_blobs({{0, 0, 0, 0}, {6, 6, 0, 6}, {0, 6, 6, -6}}, per_blob, sd, seed);
    metafuse::csv::Table a{{"uid", "x1", "x2"}, {}}, b{{"uid", "x3", "x4"}, {}};
    for (const auto& r : lt.table.rows) {
        a.rows.push_back({r[0], r[1], r[2]});
        b.rows.push_back({r[0], r[3], r[4]});
    }
    std::vector<metafuse::ComponentSpec> specs{{a, "first", "dom_a", metafuse::FeatureType::continuous},
                                               {b, "second", "dom_b", metafuse::FeatureType::continuous}};
    return {metafuse::build_data_list(specs, "uid"), lt.truth};
}

inline metafuse::SettingsMatrix small_settings(const metafuse::DataList& dl, std::size_t nrow, std::uint64_t seed = 42) {
    metafuse::SettingsOptions o;
    o.min_k = 5;
    o.max_k = 30;
    return metafuse::generate_settings_matrix(dl, nrow, o, {}, seed);
}

}  // namespace fixtures
