#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace evalplan {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// No N <= n_max reached the requested coverage. Carries the best point seen.
class UnsatisfiableError : public std::runtime_error {
public:
    UnsatisfiableError(const std::string& what, std::int64_t best_n, double best_coverage)
        : std::runtime_error(what), best_n_(best_n), best_coverage_(best_coverage) {}

    std::int64_t best_n() const noexcept { return best_n_; }
    double best_coverage() const noexcept { return best_coverage_; }

private:
    std::int64_t best_n_;
    double best_coverage_;
};

}  // namespace evalplan
