#pragma once

// Per-category detection statistics recombined under deployment weight
// profiles. Categories are flat and namespaced per class: a benign category
// and a malware category may share a name without being related.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "evalplan/error.hpp"
#include "evalplan/format.hpp"
#include "evalplan/roc.hpp"
#include "evalplan/types.hpp"

namespace evalplan {

inline const char* class_name(Label c) { return c == Label::malware ? "malware" : "benign"; }

class UnknownCategoryError : public DomainError {
public:
    UnknownCategoryError(std::string category, Label cls)
        : DomainError("profile weights unknown " + std::string(class_name(cls)) + " category '" + category + "'"),
          category_(std::move(category)),
          cls_(cls) {}

    const std::string& category() const noexcept { return category_; }
    Label sample_class() const noexcept { return cls_; }

private:
    std::string category_;
    Label cls_;
};

class WeightSumError : public DomainError {
public:
    WeightSumError(Label cls, double sum)
        : DomainError(std::string(class_name(cls)) + " weights sum to " + format_double(sum) +
                      ", expected 1 (use --normalize to rescale)"),
          cls_(cls),
          sum_(sum) {}

    Label sample_class() const noexcept { return cls_; }
    double sum() const noexcept { return sum_; }

private:
    Label cls_;
    double sum_;
};

struct CategoryStats {
    std::string category;
    Label cls = Label::benign;
    std::int64_t n = 1;
    std::int64_t detected = 0;  // samples flagged malicious

    // TPR for malware categories, FPR for benign ones.
    double rate() const { return static_cast<double>(detected) / static_cast<double>(n); }

    void validate() const {
        if (n < 1) throw DomainError("category '" + category + "': n must be >= 1");
        if (detected < 0 || detected > n) {
            throw DomainError("category '" + category + "': detected must lie in [0, n]");
        }
    }
};

struct WeightProfile {
    std::string name;
    std::map<std::string, double> benign_weights;
    std::map<std::string, double> malware_weights;

    const std::map<std::string, double>& weights(Label cls) const {
        return cls == Label::malware ? malware_weights : benign_weights;
    }
};

inline constexpr double kWeightSumTolerance = 1e-9;

inline void validate_profile(const WeightProfile& profile) {
    for (const Label cls : {Label::benign, Label::malware}) {
        const auto& w = profile.weights(cls);
        if (w.empty()) {
            throw DomainError("profile '" + profile.name + "' has no " + class_name(cls) + " weights");
        }
        double sum = 0.0;
        for (const auto& [cat, v] : w) {
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw DomainError("profile '" + profile.name + "': weight of '" + cat + "' must be finite and >= 0");
            }
            sum += v;
        }
        if (std::fabs(sum - 1.0) > kWeightSumTolerance) throw WeightSumError(cls, sum);
    }
}

// Explicit rescaling of each weight map to sum 1.
inline WeightProfile normalized(WeightProfile profile) {
    for (auto* w : {&profile.benign_weights, &profile.malware_weights}) {
        double sum = 0.0;
        for (const auto& [cat, v] : *w) sum += v;
        if (!(sum > 0.0)) throw DomainError("cannot normalize profile '" + profile.name + "': weights sum to 0");
        for (auto& [cat, v] : *w) v /= sum;
    }
    return profile;
}

struct AggregateResult {
    std::string profile_name;
    Proportion tpr;
    Proportion fpr;
    double effective_n_pos = 0.0;  // (sum w)^2 / sum(w^2 / n), diagnostic only
    double effective_n_neg = 0.0;
};

inline AggregateResult aggregate(const std::vector<CategoryStats>& stats, const WeightProfile& profile) {
    validate_profile(profile);
    std::map<std::pair<Label, std::string>, const CategoryStats*> index;
    bool has[2] = {false, false};
    for (const auto& s : stats) {
        s.validate();
        if (!index.emplace(std::pair{s.cls, s.category}, &s).second) {
            throw DomainError(std::string("duplicate ") + class_name(s.cls) + " category '" + s.category + "'");
        }
        has[static_cast<int>(s.cls)] = true;
    }
    if (!has[0] || !has[1]) throw DomainError("stats need at least one benign and one malware category");

    auto combine = [&](Label cls, double& effective_n) {
        double rate = 0.0, wsum = 0.0, wsq = 0.0;
        double lo = 1.0, hi = 0.0;
        // Iterates the profile's sorted map, so the stats order never matters.
        for (const auto& [cat, w] : profile.weights(cls)) {
            const auto it = index.find({cls, cat});
            if (it == index.end()) throw UnknownCategoryError(cat, cls);
            rate += w * it->second->rate();
            if (w > 0.0) {
                lo = std::min(lo, it->second->rate());
                hi = std::max(hi, it->second->rate());
                wsum += w;
                wsq += w * w / static_cast<double>(it->second->n);
            }
        }
        effective_n = wsq > 0.0 ? wsum * wsum / wsq : 0.0;
        // Rounding may step just outside the rates being mixed.
        return lo <= hi ? std::clamp(rate, lo, hi) : 0.0;
    };

    AggregateResult r;
    r.profile_name = profile.name;
    r.tpr = Proportion(combine(Label::malware, r.effective_n_pos));
    r.fpr = Proportion(combine(Label::benign, r.effective_n_neg));
    return r;
}

struct ProfileOutcome {
    std::string profile_name;
    std::optional<AggregateResult> result;
    std::string error;  // set when result is empty
};

// One row per profile; a failing profile does not stop the others.
inline std::vector<ProfileOutcome> compare_profiles(const std::vector<CategoryStats>& stats,
                                                    const std::vector<WeightProfile>& profiles) {
    std::vector<ProfileOutcome> out;
    out.reserve(profiles.size());
    for (const auto& p : profiles) {
        try {
            out.push_back({p.name, aggregate(stats, p), {}});
        } catch (const DomainError& e) {
            out.push_back({p.name, std::nullopt, e.what()});
        }
    }
    return out;
}

}  // namespace evalplan
