#pragma once

// Independent reference implementations used only by the tests: plain
// lgamma-based log pmf and direct summation, sharing no code with the
// library's saddle-point / continued-fraction path. Point values use
// __float128 (lgammaq) so that n ~ 1e6 keeps ~1e-25 absolute error in the
// log; the exhaustive scans use long double for speed.

#include <quadmath.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

inline long double pmf_quad(std::int64_t k, std::int64_t n, long double p_in) {
    const __float128 p = p_in;
    if (p == 0) return k == 0 ? 1.0L : 0.0L;
    if (p == 1) return k == n ? 1.0L : 0.0L;
    const __float128 nn = static_cast<__float128>(n);
    const __float128 kk = static_cast<__float128>(k);
    const __float128 lp = lgammaq(nn + 1) - lgammaq(kk + 1) - lgammaq(nn - kk + 1) + kk * logq(p) +
                          (nn - kk) * log1pq(-p);
    return static_cast<long double>(expq(lp));
}

inline long double log_choose(std::int64_t n, std::int64_t k) {
    return lgammal(static_cast<long double>(n) + 1.0L) - lgammal(static_cast<long double>(k) + 1.0L) -
           lgammal(static_cast<long double>(n - k) + 1.0L);
}

inline long double log_pmf(std::int64_t k, std::int64_t n, long double p) {
    return log_choose(n, k) + static_cast<long double>(k) * logl(p) +
           static_cast<long double>(n - k) * log1pl(-p);
}

inline long double pmf(std::int64_t k, std::int64_t n, long double p) {
    if (p == 0.0L) return k == 0 ? 1.0L : 0.0L;
    if (p == 1.0L) return k == n ? 1.0L : 0.0L;
    return expl(log_pmf(k, n, p));
}

// P(a <= X <= b): the term nearest the mode from lgammal, the rest by the
// ratio recurrence walking outward in both directions.
inline long double range_sum(std::int64_t a, std::int64_t b, std::int64_t n, long double p) {
    if (a < 0) a = 0;
    if (b > n) b = n;
    if (a > b) return 0.0L;
    if (p == 0.0L || p == 1.0L) {
        long double sum = 0.0L;
        for (std::int64_t k = a; k <= b; ++k) sum += pmf(k, n, p);
        return sum;
    }
    const long double odds = p / (1.0L - p);
    std::int64_t m = static_cast<std::int64_t>(floorl((static_cast<long double>(n) + 1.0L) * p));
    m = std::clamp(m, a, b);
    const long double peak = pmf(m, n, p);
    long double sum = peak;
    long double term = peak;
    for (std::int64_t k = m; k < b; ++k) {
        term *= static_cast<long double>(n - k) / static_cast<long double>(k + 1) * odds;
        sum += term;
    }
    term = peak;
    for (std::int64_t k = m; k > a; --k) {
        term *= static_cast<long double>(k) / (static_cast<long double>(n - k + 1) * odds);
        sum += term;
    }
    return sum;
}

inline long double cdf(std::int64_t k, std::int64_t n, long double p) { return range_sum(0, k, n, p); }

// Window k/n in (lo, hi) with both bounds given as exact rationals
// lo_num/den and hi_num/den, so lattice coincidences are decided in integers.
struct RationalWindow {
    std::int64_t lo_num;
    std::int64_t hi_num;
    std::int64_t den;
};

inline long double coverage_rational(const RationalWindow& w, std::int64_t n, long double p) {
    // k > lo_num * n / den  <=>  k >= floor(lo_num * n / den) + 1
    const __int128 lo = static_cast<__int128>(w.lo_num) * n;
    const __int128 hi = static_cast<__int128>(w.hi_num) * n;
    auto floor_div = [](__int128 a, __int128 d) {
        __int128 q = a / d;
        if ((a % d != 0) && ((a < 0) != (d < 0))) --q;
        return q;
    };
    const std::int64_t first = static_cast<std::int64_t>(floor_div(lo, w.den)) + 1;
    const std::int64_t last = static_cast<std::int64_t>(-floor_div(-hi, w.den)) - 1;
    return range_sum(first, last, n, p);
}

// Exhaustive scan N = 1, 2, ... for the first N with coverage >= c.
inline std::int64_t exact_scan(const RationalWindow& w, long double p, long double c, std::int64_t n_max) {
    for (std::int64_t n = 1; n <= n_max; ++n) {
        if (coverage_rational(w, n, p) >= c) return n;
    }
    return -1;
}

// Exact Binomial(n, p) draw by summing geometric gaps between successes
// (inversion of the geometric law). Used instead of std::binomial_distribution,
// whose libstdc++ rejection sampler is measurably off in the far tails.
template <typename Rng>
std::int64_t binomial_draw(Rng& rng, std::int64_t n, double p) {
    if (p <= 0.0) return 0;
    if (p >= 1.0) return n;
    if (p > 0.5) return n - binomial_draw(rng, n, 1.0 - p);
    const double log_q = std::log1p(-p);
    std::int64_t k = 0;
    std::int64_t pos = 0;
    for (;;) {
        // u in (0, 1]
        const double u = 1.0 - static_cast<double>(rng() >> 11) * 0x1.0p-53;
        const double gap = std::floor(std::log(u) / log_q);
        if (gap >= static_cast<double>(n - pos)) return k;
        pos += static_cast<std::int64_t>(gap) + 1;
        ++k;
    }
}

}  // namespace oracle
