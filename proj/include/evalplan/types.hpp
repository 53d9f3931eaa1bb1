#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <string>

#include "evalplan/error.hpp"
#include "evalplan/format.hpp"

namespace evalplan {

// A rate in [0, 1]: TPR, FPR or the weight of a coin.
class Proportion {
public:
    constexpr Proportion() = default;
    explicit Proportion(double value) : value_(value) {
        if (!(value >= 0.0 && value <= 1.0)) {
            throw DomainError("proportion must lie in [0, 1], got " + format_double(value));
        }
    }

    constexpr double value() const noexcept { return value_; }
    constexpr bool degenerate() const noexcept { return value_ == 0.0 || value_ == 1.0; }
    Proportion complement() const { return Proportion(1.0 - value_); }

    friend constexpr auto operator<=>(const Proportion&, const Proportion&) = default;

private:
    double value_ = 0.0;
};

// Number of Bernoulli trials, always >= 1.
class SampleSize {
public:
    explicit SampleSize(std::int64_t n) : n_(n) {
        if (n < 1) {
            throw DomainError("sample size must be >= 1, got " + std::to_string(n));
        }
    }

    constexpr std::int64_t value() const noexcept { return n_; }

    friend constexpr auto operator<=>(const SampleSize&, const SampleSize&) = default;

private:
    std::int64_t n_ = 1;
};

// Number of successes; checked against a SampleSize where the pair is used.
class TrialCount {
public:
    explicit TrialCount(std::int64_t k) : k_(k) {
        if (k < 0) {
            throw DomainError("trial count must be >= 0, got " + std::to_string(k));
        }
    }

    constexpr std::int64_t value() const noexcept { return k_; }

    friend constexpr auto operator<=>(const TrialCount&, const TrialCount&) = default;

private:
    std::int64_t k_ = 0;
};

}  // namespace evalplan
