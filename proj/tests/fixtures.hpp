#pragma once

// Synthetic manifests shared by the time-delay tests and the acceptance gate.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "evalplan/random.hpp"
#include "evalplan/roc.hpp"
#include "evalplan/timedelay.hpp"

namespace fixtures {

// synth_scores samples with first_seen uniform over 2016, drawn independently
// of the scores. Labels mature 30 days after first sight.
inline std::vector<evalplan::ManifestEntry> dated_manifest(std::int64_t n_pos, std::int64_t n_neg, double sep,
                                                           std::uint64_t seed) {
    using namespace evalplan;
    const auto samples = synth_scores(SampleSize(n_pos), SampleSize(n_neg), sep, seed);
    auto rng = make_rng(seed, 1);
    std::uniform_int_distribution<int> day(0, 365);
    const Date start(2016, 1, 1);
    std::vector<ManifestEntry> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        const Date seen = start.plus_days(day(rng));
        out.push_back({s.sample_id, seen, s.label, seen.plus_days(30), std::nullopt, s.score});
    }
    return out;
}

struct Rates {
    double tpr, fpr;
    std::int64_t n_pos, n_neg;
};

inline Rates population_rates(const std::vector<evalplan::ManifestEntry>& m, double threshold) {
    Rates r{0, 0, 0, 0};
    for (const auto& e : m) {
        const bool flag = *e.score >= threshold;
        if (e.label == evalplan::Label::malware) {
            ++r.n_pos;
            r.tpr += flag;
        } else {
            ++r.n_neg;
            r.fpr += flag;
        }
    }
    r.tpr /= static_cast<double>(r.n_pos);
    r.fpr /= static_cast<double>(r.n_neg);
    return r;
}

inline bool within_3_sigma(double estimate, double truth, std::int64_t n) {
    const double sd = std::sqrt(truth * (1.0 - truth) / static_cast<double>(n));
    return std::fabs(estimate - truth) <= 3.0 * sd;
}

}  // namespace fixtures
