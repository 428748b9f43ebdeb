#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace metafuse {

// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Stream-splitting rule: the seed of sub-stream (k1, k2, ...) of `seed` is
/// mix64(... mix64(mix64(seed) ^ k1) ^ k2 ...). Row-level streams use
/// stream_seed(seed, {purpose, row_id}).
inline std::uint64_t stream_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) noexcept {
    std::uint64_t s = mix64(seed);
    for (auto k : keys) s = mix64(s ^ mix64(k + 0x632be59bd9b4e019ULL));
    return s;
}

// Purpose keys for stream_seed; distinct stages never share a stream.
enum StreamTag : std::uint64_t {
    kSubsampleStream = 1,
    kSettingsStream = 2,
    kWeightsStream = 3,
    kClusteringStream = 4,
    kTrainTestStream = 5,
    kSyntheticStream = 6,
};

/// Seedable 64-bit generator (mt19937_64, whose output sequence is fixed by
/// the standard) with distribution helpers implemented here so that draws are
/// identical across standard-library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform on [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform on the open interval (0, 1).
    double uniform_open() {
        double u;
        do { u = uniform(); } while (u == 0.0);
        return u;
    }

    // Uniform integer on [lo, hi], unbiased (rejection on the top range).
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<std::int64_t>(next());
        const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % span);
        std::uint64_t x;
        do { x = next(); } while (x >= limit);
        return lo + static_cast<std::int64_t>(x % span);
    }

    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(n) - 1)); }

    double exponential(double rate = 1.0) { return -std::log(uniform_open()) / rate; }

    // Box-Muller; one draw per call.
    double normal(double mean = 0.0, double sd = 1.0) {
        const double u1 = uniform_open();
        const double u2 = uniform();
        return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Index drawn with probability proportional to weights.
    std::size_t weighted_index(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double target = uniform() * total;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (target < weights[i]) return i;
            target -= weights[i];
        }
        for (std::size_t i = weights.size(); i-- > 0;)
            if (weights[i] > 0) return i;
        return 0;
    }

    // Fisher-Yates prefix: the first m entries of a uniformly shuffled 0..n-1.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t m) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        for (std::size_t i = 0; i < m && i < n; ++i) {
            std::size_t j = i + index(n - i);
            std::swap(idx[i], idx[j]);
        }
        idx.resize(m < n ? m : n);
        return idx;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace metafuse
