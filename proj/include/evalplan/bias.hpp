#pragma once

// Directional skew of the empirical rate k/n and the chance of a large
// underestimate, both exact under the binomial model.

#include <cstdint>
#include <vector>

#include "evalplan/binom.hpp"
#include "evalplan/error.hpp"
#include "evalplan/types.hpp"

namespace evalplan {

struct SkewReport {
    Proportion p_under;  // P(k/n < p)
    Proportion p_over;   // P(k/n > p)
    Proportion p_exact;  // P(k/n == p), zero unless n*p is a lattice point
    double skew = 0.0;   // p_under - p_over
};

inline SkewReport underestimation_skew(Proportion p, SampleSize n) {
    if (p.degenerate()) {
        throw DomainError("skew needs p in (0, 1), got " + format_double(p.value()));
    }
    const std::int64_t nn = n.value();
    const double mean = static_cast<double>(nn) * p.value();
    SkewReport r;
    if (on_lattice(mean)) {
        const std::int64_t m = lattice_above(mean) - 1;
        r.p_under = Proportion(detail::tails(m - 1, nn, p.value()).lower);
        r.p_over = Proportion(detail::tails(m, nn, p.value()).upper);
        r.p_exact = Proportion(binom_pmf(TrialCount(m), n, p));
    } else {
        // P(X > m) is evaluated as P(n - X <= n - m - 1) so that p and 1 - p
        // go through the same arithmetic (exact zero skew at p = 1/2).
        const std::int64_t m = lattice_below(mean);
        r.p_under = Proportion(detail::tails(m, nn, p.value()).lower);
        r.p_over = Proportion(detail::tails(nn - m - 1, nn, 1.0 - p.value()).lower);
        r.p_exact = Proportion(0.0);
    }
    r.skew = r.p_under.value() - r.p_over.value();
    return r;
}

// P(k/n < (1 - fraction) * p), strict. fraction = 0.5 is "estimate below half
// the true rate".
inline Proportion severe_underestimation(Proportion p, SampleSize n, double fraction = 0.5) {
    if (p.degenerate()) {
        throw DomainError("severe underestimation needs p in (0, 1), got " + format_double(p.value()));
    }
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw DomainError("fraction must lie in (0, 1), got " + format_double(fraction));
    }
    const double threshold = static_cast<double>(n.value()) * p.value() * (1.0 - fraction);
    const std::int64_t k = lattice_below(threshold);
    if (k < 0) return Proportion(0.0);
    return Proportion(detail::tails(k, n.value(), p.value()).lower);
}

struct BiasRow {
    Proportion p;
    SampleSize n;
    SkewReport skew;
    Proportion severe;
};

// Cross product p_grid x n_list, p-major, in input order.
inline std::vector<BiasRow> bias_curves(const std::vector<Proportion>& p_grid,
                                        const std::vector<SampleSize>& n_list, double fraction = 0.5) {
    if (p_grid.empty() || n_list.empty()) throw DomainError("bias grids must be nonempty");
    std::vector<BiasRow> rows;
    rows.reserve(p_grid.size() * n_list.size());
    for (const auto p : p_grid) {
        for (const auto n : n_list) {
            try {
                rows.push_back({p, n, underestimation_skew(p, n), severe_underestimation(p, n, fraction)});
            } catch (const DomainError& e) {
                throw DomainError("p=" + format_double(p.value()) + " n=" + std::to_string(n.value()) + ": " +
                                  e.what());
            }
        }
    }
    return rows;
}

}  // namespace evalplan
