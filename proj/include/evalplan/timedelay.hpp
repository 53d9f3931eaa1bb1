#pragma once

// Time-delayed evaluation over a recorded manifest: freeze the detector,
// wait out a lag, then score only files first seen after the lag.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "evalplan/date.hpp"
#include "evalplan/error.hpp"
#include "evalplan/planner.hpp"
#include "evalplan/roc.hpp"
#include "evalplan/types.hpp"

namespace evalplan {

struct ManifestEntry {
    std::string sample_id;
    Date first_seen;
    Label label = Label::benign;
    std::optional<Date> label_date;  // when the label became trustworthy
    std::optional<std::string> category;
    std::optional<double> score;

    void validate() const {
        if (label_date && *label_date < first_seen) {
            throw DomainError("sample '" + sample_id + "': label_date precedes first_seen");
        }
        if (score && !std::isfinite(*score)) throw DomainError("sample '" + sample_id + "': score must be finite");
    }
};

struct DelayProtocolConfig {
    Date freeze_date;
    std::int64_t lag_days = 100;
    std::int64_t label_maturity_days = 30;  // 0 disables the maturity check
    std::int64_t evaluation_window_days = 0;  // required, no default

    void validate() const {
        if (lag_days < 1) throw DomainError("lag_days must be >= 1");
        if (label_maturity_days < 0) throw DomainError("label_maturity_days must be >= 0");
        if (evaluation_window_days < 1) throw DomainError("evaluation_window_days must be >= 1");
    }

    // Last day a frozen product could have seen.
    Date cutoff() const { return freeze_date.plus_days(lag_days); }
    Date window_end() const { return cutoff().plus_days(evaluation_window_days); }
};

inline bool label_mature(const ManifestEntry& e, std::int64_t maturity_days) {
    if (maturity_days == 0) return true;
    return e.label_date && *e.label_date >= e.first_seen.plus_days(maturity_days);
}

struct Selection {
    std::vector<ManifestEntry> eligible;
    std::vector<ManifestEntry> excluded_immature;  // in the window, label not yet usable
};

inline Selection select_eligible(const std::vector<ManifestEntry>& manifest, const DelayProtocolConfig& cfg) {
    cfg.validate();
    if (manifest.empty()) throw DomainError("manifest is empty");
    const Date cutoff = cfg.cutoff();
    const Date end = cfg.window_end();
    Selection out;
    for (const auto& e : manifest) {
        e.validate();
        if (!(e.first_seen > cutoff && e.first_seen <= end)) continue;
        (label_mature(e, cfg.label_maturity_days) ? out.eligible : out.excluded_immature).push_back(e);
    }
    return out;
}

// Fraction of a naive feed selection that a frozen product could already have seen.
inline Proportion contamination_rate(const std::vector<ManifestEntry>& manifest, const DelayProtocolConfig& cfg,
                                     const std::vector<ManifestEntry>& naive_selection) {
    if (naive_selection.empty()) throw DomainError("naive selection is empty");
    std::unordered_set<std::string> ids;
    for (const auto& e : manifest) ids.insert(e.sample_id);
    const Date cutoff = cfg.cutoff();
    std::int64_t seen = 0;
    for (const auto& e : naive_selection) {
        if (!ids.contains(e.sample_id)) {
            throw DomainError("naive selection entry '" + e.sample_id + "' is not in the manifest");
        }
        seen += e.first_seen <= cutoff;
    }
    return Proportion(static_cast<double>(seen) / static_cast<double>(naive_selection.size()));
}

struct AdequacyOptions {
    double alpha_tpr = 0.01;  // relative tolerance for the TPR
    double alpha_fpr = 0.5;   // FPRs are small, so a looser relative window
    double confidence = 0.95;
};

struct RateAdequacy {
    std::string metric;  // "tpr" or "fpr"
    double rate = 0.0;
    std::int64_t n = 0;
    double alpha = 0.0;
    std::optional<double> coverage;  // empty when the observed rate is 0 or 1
    bool adequate = false;
};

struct DelayRunReport {
    Date cutoff;
    Date window_end;
    std::vector<std::string> eligible_ids;
    std::int64_t excluded_immature_labels = 0;
    std::optional<Proportion> contamination_rate_naive;  // empty when the feed window holds nothing
    std::int64_t naive_size = 0;
    std::optional<Proportion> tpr;
    std::optional<Proportion> fpr;
    std::int64_t n_pos = 0;
    std::int64_t n_neg = 0;
    std::int64_t true_positives = 0;
    std::int64_t false_positives = 0;
    std::vector<RateAdequacy> adequacy;
    std::vector<std::string> warnings;
};

namespace detail {

inline RateAdequacy assess(const char* metric, std::int64_t hits, std::int64_t n, double alpha, double confidence,
                           std::vector<std::string>& warnings) {
    RateAdequacy a;
    a.metric = metric;
    a.n = n;
    a.alpha = alpha;
    a.rate = static_cast<double>(hits) / static_cast<double>(n);
    const Proportion p(a.rate);
    if (p.degenerate()) {
        warnings.push_back(std::string("observed ") + metric + " is " + format_double(a.rate) + " on n=" +
                           std::to_string(n) + "; a relative tolerance cannot be assessed at a degenerate rate");
        return a;
    }
    a.coverage = coverage(p, SampleSize(n), ToleranceSpec::relative(alpha)).value();
    a.adequate = *a.coverage >= confidence;
    if (!a.adequate) {
        warnings.push_back(std::string(metric) + " estimate on n=" + std::to_string(n) + " has coverage " +
                           format_double(*a.coverage) + " < " + format_double(confidence) + " for +-" +
                           format_double(alpha) + " relative error at rate " + format_double(a.rate));
    }
    return a;
}

}  // namespace detail

// Score >= threshold is flagged malicious. The naive selection compared
// against is every manifest entry first seen up to the end of the window.
inline DelayRunReport run_delay_protocol(const std::vector<ManifestEntry>& manifest, const DelayProtocolConfig& cfg,
                                         double threshold, const AdequacyOptions& adequacy = {}) {
    if (std::isnan(threshold)) throw DomainError("threshold must not be NaN");
    (void)ConfidenceLevel(adequacy.confidence);
    (void)ToleranceSpec::relative(adequacy.alpha_tpr);
    (void)ToleranceSpec::relative(adequacy.alpha_fpr);

    const Selection sel = select_eligible(manifest, cfg);
    DelayRunReport r;
    r.cutoff = cfg.cutoff();
    r.window_end = cfg.window_end();
    r.excluded_immature_labels = static_cast<std::int64_t>(sel.excluded_immature.size());

    std::vector<ManifestEntry> naive;
    for (const auto& e : manifest) {
        if (e.first_seen <= r.window_end) naive.push_back(e);
    }
    r.naive_size = static_cast<std::int64_t>(naive.size());
    if (!naive.empty()) r.contamination_rate_naive = contamination_rate(manifest, cfg, naive);

    for (const auto& e : sel.eligible) {
        if (!e.score) throw DomainError("eligible sample '" + e.sample_id + "' has no score");
        r.eligible_ids.push_back(e.sample_id);
        const bool flagged = *e.score >= threshold;
        if (e.label == Label::malware) {
            ++r.n_pos;
            r.true_positives += flagged;
        } else {
            ++r.n_neg;
            r.false_positives += flagged;
        }
    }

    if (r.eligible_ids.empty()) r.warnings.push_back("no eligible samples");
    if (r.n_pos > 0) {
        r.tpr = Proportion(static_cast<double>(r.true_positives) / static_cast<double>(r.n_pos));
        r.adequacy.push_back(
            detail::assess("tpr", r.true_positives, r.n_pos, adequacy.alpha_tpr, adequacy.confidence, r.warnings));
    } else {
        r.warnings.push_back("no eligible malware samples; tpr unavailable");
    }
    if (r.n_neg > 0) {
        r.fpr = Proportion(static_cast<double>(r.false_positives) / static_cast<double>(r.n_neg));
        r.adequacy.push_back(
            detail::assess("fpr", r.false_positives, r.n_neg, adequacy.alpha_fpr, adequacy.confidence, r.warnings));
    } else {
        r.warnings.push_back("no eligible benign samples; fpr unavailable");
    }
    return r;
}

}  // namespace evalplan
