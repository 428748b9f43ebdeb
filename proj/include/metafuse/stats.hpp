#pragma once

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "metafuse/error.hpp"

namespace metafuse::stats {

struct TestResult {
    double p = 1.0;
    double statistic = 0.0;
    std::string test;
    std::string flag;  // empty when the test ran as intended
};

inline double f_upper_tail(double f, double df1, double df2) {
    if (!(f > 0)) return 1.0;
    if (std::isinf(f)) return 0.0;
    return boost::math::cdf(boost::math::complement(boost::math::fisher_f(df1, df2), f));
}

inline double chi2_upper_tail(double x, double df) {
    if (!(x > 0)) return 1.0;
    if (std::isinf(x)) return 0.0;
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared(df), x));
}

inline double t_two_sided(double t, double df) {
    if (std::isinf(t)) return 0.0;
    return 2.0 * boost::math::cdf(boost::math::complement(boost::math::students_t(df), std::abs(t)));
}

// Distinct values of `x` mapped to 0..m-1 in ascending order.
inline std::vector<int> dense_codes(std::span<const double> x, int* levels = nullptr) {
    std::map<double, int> codes;
    for (double v : x) codes.emplace(v, 0);
    int next = 0;
    for (auto& [_, c] : codes) c = next++;
    if (levels) *levels = next;
    std::vector<int> out;
    out.reserve(x.size());
    for (double v : x) out.push_back(codes[v]);
    return out;
}

inline std::vector<int> dense_codes(std::span<const int> x, int* levels = nullptr) {
    std::vector<double> d(x.begin(), x.end());
    return dense_codes(std::span<const double>(d), levels);
}

inline bool is_constant(std::span<const double> x) {
    return std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
}

/// One-way ANOVA of `y` across the groups in `g`.
inline TestResult anova(std::span<const double> y, std::span<const int> g) {
    require(y.size() == g.size(), "anova", "length mismatch");
    int k = 0;
    auto codes = dense_codes(g, &k);
    require(k >= 2, "anova", "at least two groups are required");
    TestResult r{1.0, 0.0, "anova", ""};
    if (is_constant(y)) {
        r.flag = "constant";
        return r;
    }
    const double n = static_cast<double>(y.size());
    std::vector<double> sum(static_cast<std::size_t>(k), 0.0), cnt(static_cast<std::size_t>(k), 0.0);
    for (std::size_t i = 0; i < y.size(); ++i) {
        sum[static_cast<std::size_t>(codes[i])] += y[i];
        cnt[static_cast<std::size_t>(codes[i])] += 1;
    }
    const double grand = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double ssb = 0, ssw = 0;
    for (std::size_t j = 0; j < sum.size(); ++j) ssb += cnt[j] * std::pow(sum[j] / cnt[j] - grand, 2);
    for (std::size_t i = 0; i < y.size(); ++i) {
        const auto j = static_cast<std::size_t>(codes[i]);
        ssw += std::pow(y[i] - sum[j] / cnt[j], 2);
    }
    const double df1 = k - 1, df2 = n - k;
    if (df2 <= 0) {
        r.flag = "no_residual_df";
        return r;
    }
    r.statistic = ssw > 0 ? (ssb / df1) / (ssw / df2) : INFINITY;
    r.p = f_upper_tail(r.statistic, df1, df2);
    return r;
}

inline Eigen::MatrixXd contingency(std::span<const int> a, std::span<const int> b) {
    int ka = 0, kb = 0;
    auto ca = dense_codes(a, &ka);
    auto cb = dense_codes(b, &kb);
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(ka, kb);
    for (std::size_t i = 0; i < ca.size(); ++i) t(ca[i], cb[i]) += 1;
    return t;
}

/// Pearson chi-squared test of independence, no continuity correction.
inline TestResult chi_squared(const Eigen::MatrixXd& table) {
    TestResult r{1.0, 0.0, "chi_squared", ""};
    if (table.rows() < 2 || table.cols() < 2) {
        r.flag = "constant";
        return r;
    }
    const Eigen::VectorXd rs = table.rowwise().sum(), cs = table.colwise().sum().transpose();
    const double n = table.sum();
    for (Eigen::Index i = 0; i < table.rows(); ++i)
        for (Eigen::Index j = 0; j < table.cols(); ++j) {
            const double e = rs(i) * cs(j) / n;
            r.statistic += (table(i, j) - e) * (table(i, j) - e) / e;
        }
    r.p = chi2_upper_tail(r.statistic, static_cast<double>((table.rows() - 1) * (table.cols() - 1)));
    return r;
}

/// Two-sided Fisher exact test on a 2x2 table: the total probability of
/// tables (same margins) no more likely than the observed one.
inline TestResult fisher_exact_2x2(const Eigen::Matrix2d& table) {
    TestResult r{1.0, 0.0, "fisher", ""};
    const auto a = static_cast<long>(table(0, 0)), b = static_cast<long>(table(0, 1));
    const auto c = static_cast<long>(table(1, 0)), d = static_cast<long>(table(1, 1));
    const long r1 = a + b, c1 = a + c, n = a + b + c + d;
    auto log_choose = [](long m, long k) {
        return std::lgamma(static_cast<double>(m + 1)) - std::lgamma(static_cast<double>(k + 1)) -
               std::lgamma(static_cast<double>(m - k + 1));
    };
    auto log_prob = [&](long x) { return log_choose(c1, x) + log_choose(n - c1, r1 - x) - log_choose(n, r1); };
    const double observed = log_prob(a);
    double p = 0;
    for (long x = std::max(0L, r1 + c1 - n); x <= std::min(r1, c1); ++x) {
        const double lp = log_prob(x);
        if (lp <= observed + 1e-7 * std::abs(observed) + 1e-12) p += std::exp(lp);
    }
    r.p = std::min(1.0, p);
    return r;
}

// Mid-ranks (1-based) of `y`.
inline std::vector<double> ranks(std::span<const double> y) {
    std::vector<std::size_t> idx(y.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return y[i] < y[j]; });
    std::vector<double> out(y.size());
    for (std::size_t s = 0; s < idx.size();) {
        std::size_t e = s;
        while (e + 1 < idx.size() && y[idx[e + 1]] == y[idx[s]]) ++e;
        const double mid = 0.5 * static_cast<double>(s + e) + 1.0;
        for (std::size_t q = s; q <= e; ++q) out[idx[q]] = mid;
        s = e + 1;
    }
    return out;
}

/// Kruskal-Wallis rank test with tie correction.
inline TestResult kruskal_wallis(std::span<const double> y, std::span<const int> g) {
    int k = 0;
    auto codes = dense_codes(g, &k);
    require(k >= 2, "kruskal_wallis", "at least two groups are required");
    TestResult r{1.0, 0.0, "kruskal_wallis", ""};
    if (is_constant(y)) {
        r.flag = "constant";
        return r;
    }
    const auto rk = ranks(y);
    const double n = static_cast<double>(y.size());
    std::vector<double> rsum(static_cast<std::size_t>(k), 0.0), cnt(static_cast<std::size_t>(k), 0.0);
    for (std::size_t i = 0; i < y.size(); ++i) {
        rsum[static_cast<std::size_t>(codes[i])] += rk[i];
        cnt[static_cast<std::size_t>(codes[i])] += 1;
    }
    double h = 0;
    for (std::size_t j = 0; j < rsum.size(); ++j) h += rsum[j] * rsum[j] / cnt[j];
    h = 12.0 / (n * (n + 1)) * h - 3.0 * (n + 1);
    std::map<double, double> ties;
    for (double v : y) ties[v] += 1;
    double tsum = 0;
    for (const auto& [_, t] : ties) tsum += t * t * t - t;
    h /= 1.0 - tsum / (n * n * n - n);
    r.statistic = h;
    r.p = chi2_upper_tail(h, k - 1);
    return r;
}

namespace detail {

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Log-likelihood, gradient and Hessian of the proportional-odds model
// P(Y <= j | group g) = logistic(theta_j - beta_g), beta_0 = 0, evaluated on
// the group x category count table. Parameters: theta (J-1), beta (G-1).
struct PoEval {
    double ll = 0;
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
    bool valid = true;
};

inline PoEval po_evaluate(const Eigen::MatrixXd& counts, const Eigen::VectorXd& par) {
    const Eigen::Index g = counts.rows(), j = counts.cols(), nt = j - 1, np = nt + g - 1;
    PoEval ev{0, Eigen::VectorXd::Zero(np), Eigen::MatrixXd::Zero(np, np), true};
    for (Eigen::Index q = 1; q < nt; ++q)
        if (!(par(q) > par(q - 1))) ev.valid = false;
    if (!ev.valid) return ev;
    for (Eigen::Index gi = 0; gi < g; ++gi) {
        const double eta = gi == 0 ? 0.0 : par(nt + gi - 1);
        for (Eigen::Index c = 0; c < j; ++c) {
            const double w = counts(gi, c);
            if (w == 0) continue;
            const bool has_a = c < nt, has_b = c > 0;
            const double fa_cdf = has_a ? logistic(par(c) - eta) : 1.0;
            const double fb_cdf = has_b ? logistic(par(c - 1) - eta) : 0.0;
            const double p = fa_cdf - fb_cdf;
            if (!(p > 0)) {
                ev.valid = false;
                return ev;
            }
            const double fa = has_a ? fa_cdf * (1 - fa_cdf) : 0.0, fb = has_b ? fb_cdf * (1 - fb_cdf) : 0.0;
            const double ha = has_a ? fa * (1 - 2 * fa_cdf) : 0.0, hb = has_b ? fb * (1 - 2 * fb_cdf) : 0.0;
            ev.ll += w * std::log(p);
            // derivatives w.r.t. the linear predictors a = theta_c - eta, b = theta_{c-1} - eta
            const double da = fa / p, db = -fb / p;
            const double daa = ha / p - da * da, dbb = -hb / p - db * db, dab = -da * db;
            Eigen::VectorXd ea = Eigen::VectorXd::Zero(np), eb = Eigen::VectorXd::Zero(np);
            if (has_a) ea(c) = 1;
            if (has_b) eb(c - 1) = 1;
            if (gi > 0) {
                if (has_a) ea(nt + gi - 1) = -1;
                if (has_b) eb(nt + gi - 1) = -1;
            }
            ev.grad += w * (da * ea + db * eb);
            ev.hess += w * (daa * ea * ea.transpose() + dbb * eb * eb.transpose() +
                            dab * (ea * eb.transpose() + eb * ea.transpose()));
        }
    }
    return ev;
}

}  // namespace detail

/// Likelihood-ratio test of a proportional-odds (cumulative logit) model with
/// a group factor against the intercept-only model. Falls back to
/// Kruskal-Wallis, flagged, when Newton's method does not converge.
inline TestResult ordinal_lrt(std::span<const double> y, std::span<const int> g, int max_iter = 100, double tol = 1e-8) {
    int ng = 0, nc = 0;
    auto gc = dense_codes(g, &ng);
    auto yc = dense_codes(y, &nc);
    require(ng >= 2, "ordinal_lrt", "at least two groups are required");
    TestResult r{1.0, 0.0, "ordinal_lrt", ""};
    if (nc < 2) {
        r.flag = "constant";
        return r;
    }
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(ng, nc);
    for (std::size_t i = 0; i < y.size(); ++i) counts(gc[i], yc[i]) += 1;
    const double n = counts.sum();
    const Eigen::VectorXd marg = counts.colwise().sum().transpose();
    double ll0 = 0;
    for (Eigen::Index c = 0; c < nc; ++c) ll0 += marg(c) * std::log(marg(c) / n);

    const Eigen::Index nt = nc - 1, np = nt + ng - 1;
    Eigen::VectorXd par = Eigen::VectorXd::Zero(np);
    double cum = 0;
    for (Eigen::Index c = 0; c < nt; ++c) {
        cum += marg(c) / n;
        par(c) = std::log(cum / (1 - cum));
    }
    auto ev = detail::po_evaluate(counts, par);
    bool converged = false;
    for (int it = 0; it < max_iter && ev.valid; ++it) {
        Eigen::VectorXd step = (-ev.hess).ldlt().solve(ev.grad);
        if (!step.allFinite()) break;
        double scale = 1.0;
        detail::PoEval next;
        for (int half = 0; half < 40; ++half, scale *= 0.5) {
            next = detail::po_evaluate(counts, par + scale * step);
            if (next.valid && next.ll >= ev.ll - 1e-12) break;
        }
        if (!next.valid) break;
        par += scale * step;
        const double change = next.ll - ev.ll;
        ev = std::move(next);
        if (std::abs(change) < tol && ev.grad.cwiseAbs().maxCoeff() < 1e-6) {
            converged = true;
            break;
        }
    }
    if (!converged || !std::isfinite(ev.ll) || par.cwiseAbs().maxCoeff() > 30) {
        auto kw = kruskal_wallis(y, g);
        kw.flag = "ordinal_fallback_kruskal_wallis";
        return kw;
    }
    r.statistic = std::max(0.0, 2.0 * (ev.ll - ll0));
    r.p = chi2_upper_tail(r.statistic, ng - 1);
    return r;
}

/// Pearson correlation t-test (two-sided).
inline TestResult correlation(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size(), "correlation", "length mismatch");
    TestResult r{1.0, 0.0, "pearson", ""};
    if (is_constant(x) || is_constant(y)) {
        r.flag = "constant";
        return r;
    }
    const double n = static_cast<double>(x.size());
    if (n < 3) {
        r.flag = "no_residual_df";
        return r;
    }
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n, my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    const double rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    r.statistic = std::abs(rho) >= 1.0 ? std::copysign(INFINITY, rho) : rho * std::sqrt((n - 2) / (1 - rho * rho));
    r.p = t_two_sided(r.statistic, n - 2);
    return r;
}

}  // namespace metafuse::stats
