#pragma once

// Empirical ROC curves and the subsampling experiment that shows how small
// validation sets read optimistically at low FPR.
//
// Decision rule: score >= threshold => flagged malicious. Higher scores are
// more malicious; callers with the opposite convention negate at ingest.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "evalplan/binom.hpp"
#include "evalplan/date.hpp"
#include "evalplan/error.hpp"
#include "evalplan/normal.hpp"
#include "evalplan/parallel.hpp"
#include "evalplan/random.hpp"
#include "evalplan/types.hpp"

namespace evalplan {

enum class Label : std::uint8_t { benign = 0, malware = 1 };

struct ScoredSample {
    std::string sample_id;
    Label label = Label::benign;
    double score = 0.0;
    std::optional<std::string> category;
    std::optional<Date> first_seen;
};

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;
    std::int64_t false_positives = 0;
    std::int64_t true_positives = 0;

    friend bool operator==(const RocPoint&, const RocPoint&) = default;
};

struct RocCurve {
    std::vector<RocPoint> points;
    std::int64_t n_pos = 0;
    std::int64_t n_neg = 0;
};

namespace detail {

struct LabeledScore {
    double score;
    bool positive;
};

// Points at (0, 0, +inf) and then one per distinct score, descending.
inline RocCurve roc_from_scores(std::vector<LabeledScore> scores) {
    std::int64_t n_pos = 0;
    for (auto& s : scores) {
        if (!std::isfinite(s.score)) throw DomainError("scores must be finite");
        s.score += 0.0;  // -0.0 and 0.0 are one threshold
        n_pos += s.positive;
    }
    const auto n_neg = static_cast<std::int64_t>(scores.size()) - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw DomainError("degenerate class balance: need at least one malware and one benign sample (got " +
                          std::to_string(n_pos) + " malware, " + std::to_string(n_neg) + " benign)");
    }
    std::sort(scores.begin(), scores.end(), [](const LabeledScore& a, const LabeledScore& b) {
        return a.score > b.score;
    });

    RocCurve curve;
    curve.n_pos = n_pos;
    curve.n_neg = n_neg;
    curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity(), 0, 0});
    std::int64_t tp = 0, fp = 0;
    const double pos = static_cast<double>(n_pos);
    const double neg = static_cast<double>(n_neg);
    for (std::size_t i = 0; i < scores.size();) {
        const double t = scores[i].score;
        for (; i < scores.size() && scores[i].score == t; ++i) {
            if (scores[i].positive) {
                ++tp;
            } else {
                ++fp;
            }
        }
        curve.points.push_back({static_cast<double>(fp) / neg, static_cast<double>(tp) / pos, t, fp, tp});
    }
    return curve;
}

}  // namespace detail

inline RocCurve roc_from_samples(std::span<const ScoredSample> samples) {
    std::vector<detail::LabeledScore> scores;
    scores.reserve(samples.size());
    for (const auto& s : samples) scores.push_back({s.score, s.label == Label::malware});
    return detail::roc_from_scores(std::move(scores));
}

// TPR of the last point whose FPR does not exceed the target (step read-off).
inline Proportion tpr_at_fpr(const RocCurve& curve, Proportion fpr_target) {
    const auto it = std::upper_bound(curve.points.begin(), curve.points.end(), fpr_target.value(),
                                     [](double target, const RocPoint& pt) { return target < pt.fpr; });
    if (it == curve.points.begin()) return Proportion(0.0);
    return Proportion(std::prev(it)->tpr);
}

// Trapezoidal area under the curve.
inline double auc(const RocCurve& curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
    }
    return area;
}

// TPR at the given FPR when benign scores ~ N(0, 1) and malware ~ N(separation, 1).
inline double analytic_tpr_at_fpr(double fpr, double separation) {
    if (fpr <= 0.0) return 0.0;
    if (fpr >= 1.0) return 1.0;
    return normal::cdf(normal::quantile(fpr) + separation);
}

// Malware first ("pos-<i>"), then benign ("neg-<i>"). Benign scores are
// N(0, 1), malware N(separation, 1), drawn from std::mt19937_64 stream 0 of
// `seed` through std::normal_distribution.
inline std::vector<ScoredSample> synth_scores(SampleSize n_pos, SampleSize n_neg, double separation,
                                              std::uint64_t seed) {
    if (!(separation >= 0.0) || !std::isfinite(separation)) {
        throw DomainError("separation must be finite and >= 0");
    }
    auto rng = make_rng(seed, 0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<ScoredSample> out;
    out.reserve(static_cast<std::size_t>(n_pos.value() + n_neg.value()));
    for (std::int64_t i = 0; i < n_pos.value(); ++i) {
        out.push_back({"pos-" + std::to_string(i), Label::malware, separation + gauss(rng), std::nullopt, std::nullopt});
    }
    for (std::int64_t i = 0; i < n_neg.value(); ++i) {
        out.push_back({"neg-" + std::to_string(i), Label::benign, gauss(rng), std::nullopt, std::nullopt});
    }
    return out;
}

// One-sided sign test: P(Bin(above + below, 1/2) >= above). Ties are dropped.
inline double sign_test_p_value(std::int64_t above, std::int64_t below) {
    const std::int64_t m = above + below;
    if (m == 0 || above == 0) return 1.0;
    return binom_sf(TrialCount(above - 1), SampleSize(m), Proportion(0.5)).value();
}

struct SubsampleBiasReport {
    std::vector<double> fpr_targets;
    std::vector<double> tpr_full;      // read off the full-population curve
    std::vector<double> mean_tpr_sub;  // mean over trials
    std::optional<std::vector<double>> tpr_truth;
    std::vector<double> optimism;      // mean_tpr_sub - (tpr_truth or tpr_full)
    std::vector<std::int64_t> trials_above;
    std::vector<std::int64_t> trials_below;
    std::vector<double> sign_test_p;
    std::int64_t trials = 0;
    std::vector<std::vector<double>> per_trial_tpr;  // [trial][target]
};

struct SubsampleOptions {
    SampleSize sub_n_neg{1};
    SampleSize sub_n_pos{1};
    std::vector<double> fpr_targets;
    std::int64_t trials = 1;
    std::uint64_t seed = 0;
    // Reference TPR per target (e.g. analytic_tpr_at_fpr); defaults to tpr_full.
    std::optional<std::vector<double>> tpr_truth;
};

// Draws `trials` class-stratified subsamples without replacement and reads
// each subsample's ROC at the FPR targets. Trial t uses its own stream
// make_rng(seed, t), so results are independent of `threads`.
inline SubsampleBiasReport subsample_bias_experiment(std::span<const ScoredSample> samples,
                                                     const SubsampleOptions& opts, unsigned threads = 1) {
    if (opts.trials < 1) throw DomainError("trials must be >= 1");
    if (opts.fpr_targets.empty()) throw DomainError("at least one FPR target is required");
    for (const double f : opts.fpr_targets) (void)Proportion(f);
    if (opts.tpr_truth && opts.tpr_truth->size() != opts.fpr_targets.size()) {
        throw DomainError("tpr_truth must have one entry per FPR target");
    }

    std::vector<detail::LabeledScore> pos, neg;
    for (const auto& s : samples) {
        (s.label == Label::malware ? pos : neg).push_back({s.score, s.label == Label::malware});
    }
    if (opts.sub_n_pos.value() > static_cast<std::int64_t>(pos.size()) ||
        opts.sub_n_neg.value() > static_cast<std::int64_t>(neg.size())) {
        throw DomainError("subsample (" + std::to_string(opts.sub_n_pos.value()) + " malware, " +
                          std::to_string(opts.sub_n_neg.value()) + " benign) larger than population (" +
                          std::to_string(pos.size()) + " malware, " + std::to_string(neg.size()) + " benign)");
    }

    const std::size_t n_targets = opts.fpr_targets.size();
    SubsampleBiasReport rep;
    rep.fpr_targets = opts.fpr_targets;
    rep.trials = opts.trials;
    rep.tpr_truth = opts.tpr_truth;

    const RocCurve full = roc_from_samples(samples);
    for (const double f : opts.fpr_targets) rep.tpr_full.push_back(tpr_at_fpr(full, Proportion(f)).value());

    rep.per_trial_tpr.assign(static_cast<std::size_t>(opts.trials), std::vector<double>(n_targets));
    parallel_for(static_cast<std::size_t>(opts.trials), threads, [&](std::size_t t) {
        auto rng = make_rng(opts.seed, t);
        std::vector<detail::LabeledScore> sub;
        sub.reserve(static_cast<std::size_t>(opts.sub_n_pos.value() + opts.sub_n_neg.value()));
        auto take = [&](std::vector<detail::LabeledScore> pool, std::int64_t k) {
            // Partial Fisher-Yates: the first k slots become a uniform k-subset.
            for (std::int64_t i = 0; i < k; ++i) {
                std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), pool.size() - 1);
                std::swap(pool[static_cast<std::size_t>(i)], pool[pick(rng)]);
                sub.push_back(pool[static_cast<std::size_t>(i)]);
            }
        };
        take(pos, opts.sub_n_pos.value());
        take(neg, opts.sub_n_neg.value());
        const RocCurve curve = detail::roc_from_scores(std::move(sub));
        for (std::size_t j = 0; j < n_targets; ++j) {
            rep.per_trial_tpr[t][j] = tpr_at_fpr(curve, Proportion(opts.fpr_targets[j])).value();
        }
    });

    for (std::size_t j = 0; j < n_targets; ++j) {
        const double reference = rep.tpr_truth ? (*rep.tpr_truth)[j] : rep.tpr_full[j];
        double sum = 0.0;
        std::int64_t above = 0, below = 0;
        for (const auto& row : rep.per_trial_tpr) {
            sum += row[j];
            above += row[j] > reference;
            below += row[j] < reference;
        }
        const double mean = sum / static_cast<double>(opts.trials);
        rep.mean_tpr_sub.push_back(mean);
        rep.optimism.push_back(mean - reference);
        rep.trials_above.push_back(above);
        rep.trials_below.push_back(below);
        rep.sign_test_p.push_back(sign_test_p_value(above, below));
    }
    return rep;
}

}  // namespace evalplan
