// Resampling stability and label propagation on synthetic blobs.

#include <cstdio>

#include "metafuse/metafuse.hpp"

using namespace metafuse;

int main() {
    auto blobs = synthetic::gaussian_blobs({{0, 0}, {4, 0}, {2, 4}}, 30, 0.9, 5);
    std::vector<ComponentSpec> specs{{blobs.table, "points", "points", FeatureType::continuous}};
    const auto dl = build_data_list(specs, "uid");

    SettingsOptions so;
    so.min_k = 8;
    so.max_k = 30;
    const auto sm = generate_settings_matrix(dl, 4, so, {}, 3);
    const auto full = batch_snf(dl, sm).solutions;

    const auto subs_dl = subsample_data_list(dl, 30, 0.8, 9);
    std::vector<SolutionsMatrix> subs;
    for (auto& r : batch_snf_subsamples(subs_dl, sm)) subs.push_back(std::move(r.solutions));

    const auto cc = calculate_coclustering(subs, full);
    const auto aris = subsample_pairwise_aris(subs);
    for (std::size_t r = 0; r < full.size(); ++r)
        std::printf("row_id %d: nclust %d, mean co-clustering %.3f, mean subsample ARI %.3f\n", full.row_id(r),
                    full.solutions[r].nclust, cc.rows[r].mean_cocluster_frac, aris.summary[r].mean_ari);

    const auto split = train_test_assign(0.75, dl.uids(), 1);
    const auto train = batch_snf(dl.select(split.train), sm).solutions;
    const auto labels = propagate_labels(train, dl);
    // held-out labels against the full-data solution for the same rows
    for (std::size_t r = 0; r < labels.row_ids.size(); ++r) {
        const auto reference = full.labels_for(r, labels.uids);
        std::vector<int> ref_test, got_test;
        for (std::size_t i = 0; i < labels.uids.size(); ++i)
            if (labels.group[i] == "test") {
                ref_test.push_back(reference[i]);
                got_test.push_back(labels.labels[r][i]);
            }
        std::printf("row_id %d: %zu held-out observations, ARI vs full-data labels %.3f\n", labels.row_ids[r],
                    got_test.size(), adjusted_rand_index(got_test, ref_test));
    }
    return 0;
}
