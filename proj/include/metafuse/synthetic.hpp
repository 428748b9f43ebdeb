#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <string>
#include <vector>

#include "metafuse/csv.hpp"
#include "metafuse/rng.hpp"

// Synthetic fixtures shared by the tests, the demo programs and `bench`.
namespace metafuse::synthetic {

inline std::string uid_name(std::size_t i, std::size_t width = 4) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%0*zu", static_cast<int>(width), i + 1);
    return buf;
}

struct LabelledTable {
    csv::Table table;
    std::vector<int> truth;  // generating blob (1-based), aligned to table rows
};

/// Isotropic Gaussian blobs: `per_blob` points around each centre.
/// Column names are `prefix`1..d; uids s0001, s0002, ...
inline LabelledTable gaussian_blobs(const std::vector<std::vector<double>>& centres, std::size_t per_blob, double sd,
                                    std::uint64_t seed, const std::string& prefix = "x",
                                    const std::string& uid = "uid") {
    LabelledTable out;
    const std::size_t d = centres.front().size();
    out.table.header.push_back(uid);
    for (std::size_t j = 0; j < d; ++j) out.table.header.push_back(prefix + std::to_string(j + 1));
    Rng rng(stream_seed(seed, {kSyntheticStream}));
    std::size_t i = 0;
    for (std::size_t b = 0; b < centres.size(); ++b)
        for (std::size_t p = 0; p < per_blob; ++p, ++i) {
            std::vector<std::string> row{uid_name(i)};
            for (std::size_t j = 0; j < d; ++j) row.push_back(csv::format_number(rng.normal(centres[b][j], sd)));
            out.table.rows.push_back(std::move(row));
            out.truth.push_back(static_cast<int>(b) + 1);
        }
    return out;
}

// n x f table of iid N(0, 1) values.
inline csv::Table normal_table(std::size_t n, std::size_t f, std::uint64_t seed, const std::string& prefix = "f",
                               const std::string& uid = "uid") {
    csv::Table t;
    t.header.push_back(uid);
    for (std::size_t j = 0; j < f; ++j) t.header.push_back(prefix + std::to_string(j + 1));
    Rng rng(stream_seed(seed, {kSyntheticStream, 1}));
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::string> row{uid_name(i)};
        for (std::size_t j = 0; j < f; ++j) row.push_back(csv::format_number(rng.normal()));
        t.rows.push_back(std::move(row));
    }
    return t;
}

/// Block-diagonal similarity: `inside` within blocks, `outside` across, 1 on the diagonal.
inline Eigen::MatrixXd block_similarity(const std::vector<int>& sizes, double inside, double outside) {
    int n = 0;
    for (int s : sizes) n += s;
    Eigen::MatrixXd w = Eigen::MatrixXd::Constant(n, n, outside);
    int off = 0;
    for (int s : sizes) {
        w.block(off, off, s, s).setConstant(inside);
        off += s;
    }
    w.diagonal().setOnes();
    return w;
}

inline std::vector<int> block_labels(const std::vector<int>& sizes) {
    std::vector<int> out;
    for (std::size_t b = 0; b < sizes.size(); ++b) out.insert(out.end(), static_cast<std::size_t>(sizes[b]), static_cast<int>(b) + 1);
    return out;
}

}  // namespace metafuse::synthetic
