// In-memory walk through the main workflow on three synthetic blobs:
// settings -> batch -> ARIs -> order -> meta clusters -> representatives ->
// association p-values.

#include <cstdio>

#include "metafuse/metafuse.hpp"

using namespace metafuse;

int main() {
    auto blobs = synthetic::gaussian_blobs({{0, 0, 0, 0}, {5, 5, 0, 5}, {0, 5, 5, -5}}, 25, 1.0, 11);
    csv::Table a{{"uid", "x1", "x2"}, {}}, b{{"uid", "x3", "x4"}, {}};
    for (const auto& r : blobs.table.rows) {
        a.rows.push_back({r[0], r[1], r[2]});
        b.rows.push_back({r[0], r[3], r[4]});
    }
    std::vector<ComponentSpec> specs{{a, "left", "left", FeatureType::continuous},
                                     {b, "right", "right", FeatureType::continuous}};
    const auto dl = build_data_list(specs, "uid");
    std::printf("data list: %zu observations, %zu features\n", dl.n_obs(), dl.n_features());

    SettingsOptions so;
    so.min_k = 5;
    so.max_k = 40;
    const auto sm = generate_settings_matrix(dl, 20, so, {}, 42);

    BatchOptions bo;
    bo.processes = 0;
    bo.progress = [](std::size_t done, std::size_t total) {
        if (done == total) std::printf("batch: %zu rows solved\n", total);
    };
    const auto solm = batch_snf(dl, sm, bo).solutions;

    const auto am = calc_aris(solm);
    const auto order = get_matrix_order(am);
    std::printf("ordered row_ids:");
    for (auto p : order) std::printf(" %d", am.row_ids[p]);
    std::printf("\n");

    // one boundary every five ordered positions
    const auto part = partition_by_split_vector(order, {5, 10, 15});
    const auto reps = get_representative_solutions(am, part, solm);
    for (std::size_t i = 0; i < reps.size(); ++i)
        std::printf("meta cluster %s: representative row_id %d, nclust %d, ARI vs truth %.3f\n",
                    meta_cluster_label(i).c_str(), reps.row_id(i), reps.solutions[i].nclust,
                    adjusted_rand_index(reps.labels(i), blobs.truth));

    const auto ext = extend_solutions(reps, &dl, nullptr);
    for (std::size_t f = 0; f < ext.features.size(); ++f)
        std::printf("%s p-value in first representative: %.3g\n", ext.features[f].c_str(),
                    ext.pvals(0, static_cast<Eigen::Index>(f)));
    return 0;
}
