#pragma once

// Coverage probability of the empirical rate and the sample size needed to
// reach a target coverage.
//
// coverage(p, N) = P(p - sigma < X/N < p + sigma), X ~ Bin(N, p). It is not
// monotone in N: the window edges cross lattice points as N grows, which makes
// the curve a sawtooth. The search therefore never bisects on coverage itself.
// It walks a geometric grid (ratio 1.05) and, for each cell [a, b], bounds the
// coverage of every N in the cell from above:
//
//   window(N) is inside [first(a), last(b)], P_N(X <= K) is nonincreasing in N
//   => coverage(N) <= P_a(X <= last(b)) - P_b(X < first(a)).
//
// Cells whose bound is below c are skipped; the rest are bisected down to
// short runs that are scanned linearly. The result is the exact smallest N.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "evalplan/binom.hpp"
#include "evalplan/error.hpp"
#include "evalplan/parallel.hpp"
#include "evalplan/types.hpp"

namespace evalplan {

class ToleranceSpec {
public:
    enum class Mode { relative, absolute };

    // Window p +- alpha * p.
    static ToleranceSpec relative(double alpha) {
        if (!(alpha > 0.0) || !std::isfinite(alpha)) {
            throw DomainError("relative tolerance alpha must be > 0, got " + format_double(alpha));
        }
        return ToleranceSpec(Mode::relative, alpha);
    }

    // Window p +- sigma.
    static ToleranceSpec absolute(double sigma) {
        if (!(sigma > 0.0 && sigma < 1.0)) {
            throw DomainError("absolute tolerance sigma must lie in (0, 1), got " + format_double(sigma));
        }
        return ToleranceSpec(Mode::absolute, sigma);
    }

    Mode mode() const noexcept { return mode_; }
    double width() const noexcept { return width_; }

    double half_width(Proportion p) const {
        if (mode_ == Mode::absolute) return width_;
        if (p.degenerate()) {
            throw DomainError("relative tolerance degenerates at p=" + format_double(p.value()) +
                              " (sigma = alpha * p leaves no window); use an absolute sigma");
        }
        return width_ * p.value();
    }

private:
    ToleranceSpec(Mode mode, double width) : mode_(mode), width_(width) {}

    Mode mode_;
    double width_;
};

class ConfidenceLevel {
public:
    explicit ConfidenceLevel(double c = 0.95) : c_(c) {
        if (!(c > 0.0 && c < 1.0)) {
            throw DomainError("confidence must lie in (0, 1), got " + format_double(c));
        }
    }

    double value() const noexcept { return c_; }

private:
    double c_;
};

struct PlanOptions {
    std::int64_t n_max = 100'000'000;
    std::int64_t stable_window = 0;
};

struct PlanResult {
    SampleSize n_required{1};
    Proportion coverage_at_n;
    SampleSize scanned_up_to{1};
    bool stable = false;
};

inline Proportion coverage(Proportion p, SampleSize n, const ToleranceSpec& tol) {
    const double sigma = tol.half_width(p);
    return binom_cdf_strict_between(p.value() - sigma, p.value() + sigma, n, p);
}

namespace detail {

class SampleSizeSearch {
public:
    SampleSizeSearch(Proportion p, const ToleranceSpec& tol, double c)
        : p_(p), lo_(p.value() - tol.half_width(p)), hi_(p.value() + tol.half_width(p)), c_(c) {}

    double coverage_at(std::int64_t n) {
        const SampleSize nn(n);
        const double cov = binom_range_probability(strict_lattice_range(lo_, hi_, nn), nn, p_);
        scanned_ = std::max(scanned_, n);
        if (cov > best_cov_) {
            best_cov_ = cov;
            best_n_ = n;
        }
        return cov;
    }

    // Smallest N in [from, to] with coverage >= c.
    std::optional<std::int64_t> first_at_or_after(std::int64_t from, std::int64_t to) {
        std::int64_t a = from;
        while (a <= to) {
            const std::int64_t step = std::max<std::int64_t>(
                1, static_cast<std::int64_t>(std::ceil(static_cast<double>(a) * (kGridRatio - 1.0))));
            const std::int64_t b = std::min(to, a + step - 1);
            if (auto hit = search_cell(a, b)) return hit;
            a = b + 1;
        }
        return std::nullopt;
    }

    std::int64_t scanned() const noexcept { return scanned_; }
    std::int64_t best_n() const noexcept { return best_n_; }
    double best_coverage() const noexcept { return best_cov_; }

private:
    static constexpr double kGridRatio = 1.05;
    static constexpr std::int64_t kLinearRun = 64;
    // Slack on the pruning bound; covers rounding in the two tail evaluations.
    static constexpr double kBoundSlack = 1e-9;

    double upper_bound(std::int64_t a, std::int64_t b) const {
        const auto first = strict_lattice_range(lo_, hi_, SampleSize(a)).first;
        const auto last = strict_lattice_range(lo_, hi_, SampleSize(b)).last;
        if (first > last) return 0.0;
        const double at_most_last = tails(last, a, p_.value()).lower;
        const double below_first = tails(first - 1, b, p_.value()).lower;
        return at_most_last - below_first;
    }

    std::optional<std::int64_t> search_cell(std::int64_t a, std::int64_t b) {
        if (b - a + 1 <= kLinearRun) {
            for (std::int64_t n = a; n <= b; ++n) {
                if (coverage_at(n) >= c_) return n;
            }
            return std::nullopt;
        }
        if (upper_bound(a, b) < c_ - kBoundSlack) return std::nullopt;
        const std::int64_t mid = a + (b - a) / 2;
        if (auto hit = search_cell(a, mid)) return hit;
        return search_cell(mid + 1, b);
    }

    Proportion p_;
    double lo_;
    double hi_;
    double c_;
    std::int64_t scanned_ = 0;
    std::int64_t best_n_ = 0;
    double best_cov_ = -1.0;
};

}  // namespace detail

// Smallest N <= n_max with coverage(p, N) >= c. With stable_window W > 0 the
// coverage must also hold at every N+1..N+W.
inline PlanResult required_sample_size(Proportion p, const ToleranceSpec& tol, ConfidenceLevel c,
                                       const PlanOptions& opts = {}) {
    if (opts.n_max < 1) throw DomainError("n_max must be >= 1");
    if (opts.stable_window < 0) throw DomainError("stable_window must be >= 0");
    if (p.degenerate() && tol.mode() == ToleranceSpec::Mode::relative) {
        tol.half_width(p);  // throws the degenerate-tolerance error
    }
    if (p.degenerate()) {
        throw DomainError("sample-size planning needs p in (0, 1), got " + format_double(p.value()));
    }

    detail::SampleSizeSearch search(p, tol, c.value());
    std::int64_t from = 1;
    while (from <= opts.n_max) {
        const auto hit = search.first_at_or_after(from, opts.n_max);
        if (!hit) break;
        const std::int64_t n = *hit;
        std::int64_t broken = 0;
        for (std::int64_t j = 1; j <= opts.stable_window; ++j) {
            if (search.coverage_at(n + j) < c.value()) {
                broken = n + j;
                break;
            }
        }
        if (broken == 0) {
            PlanResult r;
            r.n_required = SampleSize(n);
            r.coverage_at_n = Proportion(search.coverage_at(n));
            r.scanned_up_to = SampleSize(std::max(search.scanned(), n));
            r.stable = opts.stable_window > 0;
            return r;
        }
        from = broken + 1;
    }
    if (search.best_n() == 0) search.coverage_at(opts.n_max);
    throw UnsatisfiableError("unsatisfiable within n_max=" + std::to_string(opts.n_max) +
                                 ": best coverage " + format_double(search.best_coverage()) + " at N=" +
                                 std::to_string(search.best_n()) + " < c=" + format_double(c.value()),
                             search.best_n(), search.best_coverage());
}

struct PlanPoint {
    Proportion p;
    PlanResult result;
};

// required_sample_size at each grid point, in input order. Points run on up
// to `threads` workers; output is independent of the thread count.
inline std::vector<PlanPoint> plan_curve(const std::vector<Proportion>& p_grid, const ToleranceSpec& tol,
                                         ConfidenceLevel c, const PlanOptions& opts = {},
                                         unsigned threads = 1) {
    if (p_grid.empty()) throw DomainError("p grid must be nonempty");
    std::vector<std::optional<PlanPoint>> slots(p_grid.size());
    parallel_for(p_grid.size(), threads, [&](std::size_t i) {
        const Proportion p = p_grid[i];
        try {
            slots[i] = PlanPoint{p, required_sample_size(p, tol, c, opts)};
        } catch (const UnsatisfiableError& e) {
            throw UnsatisfiableError("p=" + format_double(p.value()) + ": " + e.what(), e.best_n(),
                                     e.best_coverage());
        } catch (const DomainError& e) {
            throw DomainError("p=" + format_double(p.value()) + ": " + e.what());
        }
    });
    std::vector<PlanPoint> out;
    out.reserve(slots.size());
    for (auto& s : slots) out.push_back(*s);
    return out;
}

}  // namespace evalplan
