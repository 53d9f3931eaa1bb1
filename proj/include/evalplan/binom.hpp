#pragma once

// Exact binomial PMF/CDF for trial counts up to ~1e8.
//
// The PMF uses Loader's saddle-point form (Stirling remainder plus the
// deviance term bd0), which keeps full relative precision where the naive
// lgamma expression loses ~log10(n) digits. The CDF is the regularized
// incomplete beta I_{1-p}(n-k, k+1), evaluated by a modified-Lentz continued
// fraction on whichever tail converges; its prefactor reduces to p * pmf(k),
// so both share the same accurate kernel.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>

#include "evalplan/error.hpp"
#include "evalplan/types.hpp"

namespace evalplan {

namespace detail {

// ln(n!) - [(n + 1/2) ln n - n + ln sqrt(2 pi)] for integer n >= 1.
inline double stirling_error(std::int64_t n) {
    static constexpr std::array<double, 16> kTable = {
        0.0,
        0.08106146679532725821967026,
        0.04134069595540929409382208,
        0.02767792568499833914878929,
        0.02079067210376509311152277,
        0.01664469118982119216319487,
        0.01387612882307074799874573,
        0.01189670994589177009505572,
        0.01041126526197209649747857,
        0.009255462182712732917728637,
        0.008330563433362871256469319,
        0.007573675487951840794972024,
        0.006942840107209529865664153,
        0.006408994188004207068439631,
        0.005951370112758847735624416,
        0.005554733551962801371038690,
    };
    constexpr double s0 = 1.0 / 12.0;
    constexpr double s1 = 1.0 / 360.0;
    constexpr double s2 = 1.0 / 1260.0;
    constexpr double s3 = 1.0 / 1680.0;
    constexpr double s4 = 1.0 / 1188.0;

    if (n < static_cast<std::int64_t>(kTable.size())) {
        return kTable[static_cast<std::size_t>(n)];
    }
    const double x = static_cast<double>(n);
    const double xx = x * x;
    if (n > 500) return (s0 - s1 / xx) / x;
    if (n > 80) return (s0 - (s1 - s2 / xx) / xx) / x;
    if (n > 35) return (s0 - (s1 - (s2 - s3 / xx) / xx) / xx) / x;
    return (s0 - (s1 - (s2 - (s3 - s4 / xx) / xx) / xx) / xx) / x;
}

// Deviance term x ln(x/mu) + mu - x, computed without cancellation near x == mu.
inline double deviance(double x, double mu) {
    if (std::fabs(x - mu) < 0.1 * (x + mu)) {
        double v = (x - mu) / (x + mu);
        double sum = (x - mu) * v;
        double term = 2.0 * x * v;
        v *= v;
        for (int j = 1; j < 1000; ++j) {
            term *= v;
            const double next = sum + term / (2 * j + 1);
            if (next == sum) return next;
            sum = next;
        }
        return sum;
    }
    return x * std::log(x / mu) + mu - x;
}

// ln P(X = k), X ~ Bin(n, p), for 0 <= k <= n and 0 < p < 1.
inline double log_pmf_interior(std::int64_t k, std::int64_t n, double p) {
    const double q = 1.0 - p;
    const double nd = static_cast<double>(n);
    if (k == 0) return nd * std::log1p(-p);
    if (k == n) return nd * std::log(p);
    const double kd = static_cast<double>(k);
    const double rest = static_cast<double>(n - k);
    const double lc = stirling_error(n) - stirling_error(k) - stirling_error(n - k) -
                      deviance(kd, nd * p) - deviance(rest, nd * q);
    const double lf = std::log(2.0 * std::numbers::pi) + std::log(kd) + std::log1p(-kd / nd);
    return lc - 0.5 * lf;
}

// Continued fraction for I_x(a, b) with the prefactor x^a (1-x)^b / (a B(a,b))
// stripped off. Converges fast for x < (a + 1) / (a + b + 2).
inline double beta_continued_fraction(double a, double b, double x) {
    constexpr double kTiny = 1e-300;
    constexpr double kEps = 1e-16;
    constexpr int kMaxIter = 10'000'000;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double md = m;
        const double m2 = 2.0 * md;
        double aa = md * (b - md) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + md) * (qab + md) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < kEps) return h;
    }
    throw DomainError("incomplete beta continued fraction failed to converge");
}

// P(X <= k) via the continued fraction, caller guarantees 0 <= k < n, 0 < p < 1
// and that the lower tail is the convergent side.
inline double lower_tail_cf(std::int64_t k, std::int64_t n, double p) {
    const double pmf = std::exp(log_pmf_interior(k, n, p));
    return p * pmf *
           beta_continued_fraction(static_cast<double>(n - k), static_cast<double>(k + 1), 1.0 - p);
}

// P(X > k) via the continued fraction, caller guarantees 0 <= k < n, 0 < p < 1.
inline double upper_tail_cf(std::int64_t k, std::int64_t n, double p) {
    const double pmf = std::exp(log_pmf_interior(k + 1, n, p));
    return (1.0 - p) * pmf *
           beta_continued_fraction(static_cast<double>(k + 1), static_cast<double>(n - k), p);
}

// True when the I_{1-p}(n-k, k+1) fraction is the fast side.
inline bool lower_is_direct(std::int64_t k, std::int64_t n, double p) {
    const double a = static_cast<double>(n - k);
    const double b = static_cast<double>(k + 1);
    return (1.0 - p) < (a + 1.0) / (a + b + 2.0);
}

// {P(X <= k), P(X > k)}, each accurate in the relative sense on its small side.
struct TailPair {
    double lower;
    double upper;
};

inline TailPair tails(std::int64_t k, std::int64_t n, double p) {
    if (k < 0) return {0.0, 1.0};
    if (k >= n) return {1.0, 0.0};
    if (p == 0.0) return {1.0, 0.0};
    if (p == 1.0) return {0.0, 1.0};
    if (lower_is_direct(k, n, p)) {
        const double lo = std::clamp(lower_tail_cf(k, n, p), 0.0, 1.0);
        return {lo, 1.0 - lo};
    }
    const double up = std::clamp(upper_tail_cf(k, n, p), 0.0, 1.0);
    return {1.0 - up, up};
}

inline void check_count(std::int64_t k, std::int64_t n) {
    if (k < 0 || k > n) {
        throw DomainError("trial count " + std::to_string(k) + " outside [0, " + std::to_string(n) + "]");
    }
}

// Lattice bounds closer than this (relative) to an integer are treated as
// lying on it, so decimal inputs such as 0.3 - 0.1 behave as written.
inline constexpr double kLatticeGuard = 16.0 * std::numeric_limits<double>::epsilon();

inline bool near_integer(double t, double& nearest) {
    nearest = std::nearbyint(t);
    return std::fabs(t - nearest) <= kLatticeGuard * std::max(1.0, std::fabs(t));
}

}  // namespace detail

// Smallest integer strictly greater than t.
inline std::int64_t lattice_above(double t) {
    double m = 0.0;
    if (detail::near_integer(t, m)) return static_cast<std::int64_t>(m) + 1;
    return static_cast<std::int64_t>(std::floor(t)) + 1;
}

// Largest integer strictly less than t.
inline std::int64_t lattice_below(double t) {
    double m = 0.0;
    if (detail::near_integer(t, m)) return static_cast<std::int64_t>(m) - 1;
    return static_cast<std::int64_t>(std::floor(t));
}

// Whether t sits on an integer lattice point (with the same guard as above).
inline bool on_lattice(double t) {
    double m = 0.0;
    return detail::near_integer(t, m);
}

// Inclusive range of success counts k in [0, n] with lo*n < k < hi*n.
struct LatticeRange {
    std::int64_t first = 0;
    std::int64_t last = -1;

    bool empty() const noexcept { return first > last; }
    std::int64_t size() const noexcept { return empty() ? 0 : last - first + 1; }
};

inline LatticeRange strict_lattice_range(double lo, double hi, SampleSize n) {
    const double nd = static_cast<double>(n.value());
    // Clamp before converting so huge windows do not overflow int64.
    const double lo_t = std::clamp(lo * nd, -1.0, nd + 1.0);
    const double hi_t = std::clamp(hi * nd, -1.0, nd + 1.0);
    LatticeRange r;
    r.first = std::max<std::int64_t>(lattice_above(lo_t), 0);
    r.last = std::min<std::int64_t>(lattice_below(hi_t), n.value());
    return r;
}

inline double binom_log_pmf(TrialCount k, SampleSize n, Proportion p) {
    detail::check_count(k.value(), n.value());
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    if (p.value() == 0.0) return k.value() == 0 ? 0.0 : kNegInf;
    if (p.value() == 1.0) return k.value() == n.value() ? 0.0 : kNegInf;
    return detail::log_pmf_interior(k.value(), n.value(), p.value());
}

inline double binom_pmf(TrialCount k, SampleSize n, Proportion p) {
    return std::exp(binom_log_pmf(k, n, p));
}

// P(X <= k).
inline Proportion binom_cdf(TrialCount k, SampleSize n, Proportion p) {
    detail::check_count(k.value(), n.value());
    return Proportion(detail::tails(k.value(), n.value(), p.value()).lower);
}

// P(X > k).
inline Proportion binom_sf(TrialCount k, SampleSize n, Proportion p) {
    detail::check_count(k.value(), n.value());
    return Proportion(detail::tails(k.value(), n.value(), p.value()).upper);
}

// P(first <= X <= last), picking the subtraction that avoids cancellation.
inline double binom_range_probability(LatticeRange range, SampleSize n, Proportion p) {
    if (range.empty()) return 0.0;
    const std::int64_t nn = n.value();
    const double pv = p.value();
    const auto below = detail::tails(range.first - 1, nn, pv);  // lower = P(X < first)
    const auto above = detail::tails(range.last, nn, pv);       // upper = P(X > last)
    double mass = 0.0;
    if (below.lower > 0.5) {
        mass = below.upper - above.upper;
    } else if (above.upper > 0.5) {
        mass = above.lower - below.lower;
    } else {
        mass = 1.0 - below.lower - above.upper;
    }
    return std::clamp(mass, 0.0, 1.0);
}

// P(lo < X/n < hi), strict at both ends.
inline Proportion binom_cdf_strict_between(double lo, double hi, SampleSize n, Proportion p) {
    if (!(lo < hi)) {
        throw DomainError("window requires lo < hi, got lo=" + format_double(lo) +
                          " hi=" + format_double(hi));
    }
    return Proportion(binom_range_probability(strict_lattice_range(lo, hi, n), n, p));
}

}  // namespace evalplan
