#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

// Counting oracles that share no code with the library.
namespace oracles {

using boost::multiprecision::cpp_int;

// Pair-counting ARI: classify every pair by agreement, then the
// Hubert-Arabie form 2(ad - bc) / ((a+b)(b+d) + (a+c)(c+d)).
inline double brute_force_ari(const std::vector<int>& x, const std::vector<int>& y) {
    double a = 0, b = 0, c = 0, d = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            const bool sx = x[i] == x[j], sy = y[i] == y[j];
            if (sx && sy) a += 1;
            else if (sx) b += 1;
            else if (sy) c += 1;
            else d += 1;
        }
    const double den = (a + b) * (b + d) + (a + c) * (c + d);
    if (den == 0) return (b == 0 && c == 0) ? 1.0 : 0.0;
    return 2 * (a * d - b * c) / den;
}

// Number of set partitions of n items into exactly k blocks, by enumerating
// restricted growth strings.
inline long enumerate_partitions(int n, int k) {
    long count = 0;
    std::vector<int> rgs(static_cast<std::size_t>(n), 0);
    std::function<void(int, int)> rec = [&](int pos, int blocks) {
        if (pos == n) {
            if (blocks == k) ++count;
            return;
        }
        for (int b = 0; b <= blocks && b < k; ++b) {
            rgs[static_cast<std::size_t>(pos)] = b;
            rec(pos + 1, std::max(blocks, b + 1));
        }
    };
    rec(0, 0);
    return count;
}

// Explicit sum (1/k!) sum_i (-1)^(k-i) C(k,i) i^n.
inline cpp_int stirling_explicit(unsigned n, unsigned k) {
    cpp_int sum = 0, fact = 1, binom = 1;
    for (unsigned i = 1; i <= k; ++i) fact *= i;
    for (unsigned i = 0; i <= k; ++i) {
        cpp_int term = binom * boost::multiprecision::pow(cpp_int(i), n);
        sum += ((k - i) % 2 == 0) ? term : cpp_int(-term);
        binom = binom * (k - i) / (i + 1);
    }
    return sum / fact;
}

}  // namespace oracles
