// evalplan command-line front end. Data goes to --out (stdout by default),
// diagnostics to stderr. Exit 0 on success, 2 on any input or domain error.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "evalplan/evalplan.hpp"

using namespace evalplan;
using nlohmann::ordered_json;

namespace {

struct Null {};
using Cell = std::variant<Null, double, std::int64_t, bool, std::string>;

// One table feeds both encoders, so CSV and JSON always carry the same data.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

std::string csv_cell(const Cell& c) {
    struct {
        std::string operator()(Null) const { return ""; }
        std::string operator()(double v) const { return format_double(v); }
        std::string operator()(std::int64_t v) const { return std::to_string(v); }
        std::string operator()(bool v) const { return v ? "true" : "false"; }
        std::string operator()(const std::string& v) const { return csv::quote(v); }
    } visit;
    return std::visit(visit, c);
}

ordered_json json_cell(const Cell& c) {
    struct {
        ordered_json operator()(Null) const { return nullptr; }
        ordered_json operator()(double v) const {
            if (!std::isfinite(v)) return format_double(v);  // JSON has no infinity
            return v;
        }
        ordered_json operator()(std::int64_t v) const { return v; }
        ordered_json operator()(bool v) const { return v; }
        ordered_json operator()(const std::string& v) const { return v; }
    } visit;
    return std::visit(visit, c);
}

ordered_json table_json(const Table& t) {
    ordered_json rows = ordered_json::array();
    for (const auto& r : t.rows) {
        ordered_json obj = ordered_json::object();
        for (std::size_t i = 0; i < t.columns.size(); ++i) obj[t.columns[i]] = json_cell(r[i]);
        rows.push_back(std::move(obj));
    }
    return rows;
}

struct Output {
    std::string format = "csv";
    std::string path = "-";

    void emit(const std::string& text) const {
        if (path == "-") {
            std::cout << text << std::flush;
            return;
        }
        std::ofstream f(path, std::ios::binary);
        if (!f) throw DomainError("cannot write '" + path + "'");
        f << text;
    }

    void write(const Table& t) const {
        if (format == "json") {
            emit(table_json(t).dump(2) + "\n");
            return;
        }
        std::string out = csv::join(t.columns) + "\n";
        for (const auto& r : t.rows) {
            for (std::size_t i = 0; i < r.size(); ++i) {
                if (i) out += ',';
                out += csv_cell(r[i]);
            }
            out += '\n';
        }
        emit(out);
    }
};

void add_output_options(CLI::App* cmd, Output& out) {
    cmd->add_option("--format", out.format, "Output encoding")->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    cmd->add_option("--out", out.path, "Output file, - for stdout")->capture_default_str();
}

// Rounds to 12 significant digits so that decimal grids print cleanly.
double tidy(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return std::strtod(buf, nullptr);
}

// "lo:hi:logN" or "lo:hi:linN", endpoints included.
std::vector<double> parse_grid(const std::string& spec) {
    const auto bad = [&] { return DomainError("bad grid '" + spec + "'; expected lo:hi:logN or lo:hi:linN"); };
    const auto a = spec.find(':');
    const auto b = a == std::string::npos ? a : spec.find(':', a + 1);
    if (b == std::string::npos) throw bad();
    double lo = 0, hi = 0;
    std::int64_t n = 0;
    const std::string kind = spec.substr(b + 1, 3);
    try {
        std::size_t used = 0;
        lo = std::stod(spec.substr(0, a), &used);
        if (used != a) throw bad();
        hi = std::stod(spec.substr(a + 1, b - a - 1), &used);
        if (used != b - a - 1) throw bad();
        const std::string count = spec.substr(b + 4);
        n = std::stoll(count, &used);
        if (used != count.size()) throw bad();
    } catch (const std::logic_error&) {
        throw bad();
    }
    if ((kind != "log" && kind != "lin") || n < 1 || !(lo <= hi)) throw bad();
    if (kind == "log" && !(lo > 0)) throw DomainError("log grid needs lo > 0");
    if (n == 1) return {lo};
    std::vector<double> out;
    for (std::int64_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n - 1);
        const double v = kind == "log" ? std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo))) : lo + t * (hi - lo);
        out.push_back(i == 0 ? lo : i == n - 1 ? hi : tidy(v));
    }
    return out;
}

std::vector<Proportion> proportions(const std::vector<double>& v) {
    std::vector<Proportion> out;
    for (const double x : v) out.emplace_back(x);
    return out;
}

std::vector<double> percent_grid(int from, int to, int step) {
    std::vector<double> out;
    for (int i = from; i <= to; i += step) out.push_back(i / 100.0);
    return out;
}

// ---------------------------------------------------------------- plan

struct PlanArgs {
    std::vector<double> p;
    std::string grid, preset;
    std::optional<double> alpha, sigma;
    double c = 0.95;
    std::int64_t n_max = 100'000'000;
    std::int64_t stable_window = 0;
    Output out;
};

void run_plan(const PlanArgs& a) {
    std::vector<double> grid = a.p;
    double default_alpha = 0.5;
    if (!a.grid.empty()) grid = parse_grid(a.grid);
    if (a.preset == "fig1a") {
        grid = parse_grid("1e-5:1e-3:log25");
    } else if (a.preset == "fig1b") {
        grid = percent_grid(50, 95, 5);
        default_alpha = 0.01;
    }
    if (grid.empty()) throw DomainError("one of --p, --p-grid or --preset is required");
    const auto tol = a.sigma ? ToleranceSpec::absolute(*a.sigma) : ToleranceSpec::relative(a.alpha.value_or(default_alpha));
    const auto pts = plan_curve(proportions(grid), tol, ConfidenceLevel(a.c), {a.n_max, a.stable_window},
                                default_thread_count());
    Table t{{"p", "n_required", "coverage", "stable"}, {}};
    for (const auto& pt : pts) {
        t.rows.push_back({pt.p.value(), pt.result.n_required.value(), pt.result.coverage_at_n.value(), pt.result.stable});
    }
    a.out.write(t);
}

// ---------------------------------------------------------------- bias

struct BiasArgs {
    std::vector<double> p;
    std::string grid, preset;
    std::vector<std::int64_t> n;
    double fraction = 0.5;
    Output out;
};

void run_bias(const BiasArgs& a) {
    std::vector<double> grid = a.p;
    std::vector<std::int64_t> ns = a.n;
    if (!a.grid.empty()) grid = parse_grid(a.grid);
    if (a.preset == "fig2") {
        grid = percent_grid(1, 99, 1);
        if (ns.empty()) ns = {30, 100, 300, 1000, 3000};
    }
    if (grid.empty()) throw DomainError("one of --p, --p-grid or --preset is required");
    if (ns.empty()) throw DomainError("--n is required");
    std::vector<SampleSize> sizes;
    for (const auto n : ns) sizes.emplace_back(n);
    Table t{{"p", "n", "skew", "p_under", "p_over", "p_exact", "severe"}, {}};
    for (const auto& r : bias_curves(proportions(grid), sizes, a.fraction)) {
        t.rows.push_back({r.p.value(), r.n.value(), r.skew.skew, r.skew.p_under.value(), r.skew.p_over.value(),
                          r.skew.p_exact.value(), r.severe.value()});
    }
    a.out.write(t);
}

// ---------------------------------------------------------------- roc

struct RocArgs {
    std::string scores;
    bool negate = false;
    bool synthetic = false;
    double separation = 2.0;
    std::optional<std::int64_t> n, n_pos, n_neg;
    std::uint64_t seed = 0;
    std::vector<double> targets;
    std::optional<std::int64_t> trials, sub_pos, sub_neg;
    Output out;
};

void run_roc(const RocArgs& a) {
    std::vector<ScoredSample> samples;
    if (a.synthetic) {
        const std::int64_t pos = a.n_pos.value_or(a.n.value_or(0));
        const std::int64_t neg = a.n_neg.value_or(a.n.value_or(0));
        if (pos == 0 || neg == 0) throw DomainError("--synthetic needs --n or both --n-pos and --n-neg");
        samples = synth_scores(SampleSize(pos), SampleSize(neg), a.separation, a.seed);
    } else {
        if (a.scores.empty()) throw DomainError("one of --scores or --synthetic is required");
        samples = parse_scores(std::filesystem::path(a.scores), {a.negate});
    }

    std::optional<std::vector<double>> truth;
    if (a.synthetic) {
        truth.emplace();
        for (const double f : a.targets) truth->push_back(analytic_tpr_at_fpr(f, a.separation));
    }

    if (a.trials) {
        if (a.targets.empty() || !a.sub_pos || !a.sub_neg) {
            throw DomainError("--trials needs --targets, --sub-pos and --sub-neg");
        }
        SubsampleOptions opts;
        opts.sub_n_pos = SampleSize(*a.sub_pos);
        opts.sub_n_neg = SampleSize(*a.sub_neg);
        opts.fpr_targets = a.targets;
        opts.trials = *a.trials;
        opts.seed = a.seed;
        opts.tpr_truth = truth;
        const auto rep = subsample_bias_experiment(samples, opts, default_thread_count());
        Table t{{"fpr_target", "tpr_full", "tpr_truth", "mean_tpr_sub", "optimism", "trials", "trials_above",
                 "trials_below", "sign_test_p"},
                {}};
        for (std::size_t j = 0; j < rep.fpr_targets.size(); ++j) {
            t.rows.push_back({rep.fpr_targets[j], rep.tpr_full[j], rep.tpr_truth ? Cell{(*rep.tpr_truth)[j]} : Cell{Null{}},
                              rep.mean_tpr_sub[j], rep.optimism[j], rep.trials, rep.trials_above[j],
                              rep.trials_below[j], rep.sign_test_p[j]});
        }
        a.out.write(t);
        return;
    }

    const RocCurve curve = roc_from_samples(samples);
    if (!a.targets.empty()) {
        Table t{{"fpr_target", "tpr", "tpr_truth"}, {}};
        for (std::size_t j = 0; j < a.targets.size(); ++j) {
            t.rows.push_back({a.targets[j], tpr_at_fpr(curve, Proportion(a.targets[j])).value(),
                              truth ? Cell{(*truth)[j]} : Cell{Null{}}});
        }
        a.out.write(t);
        return;
    }
    Table t{{"threshold", "fpr", "tpr"}, {}};
    for (const auto& pt : curve.points) t.rows.push_back({pt.threshold, pt.fpr, pt.tpr});
    a.out.write(t);
}

// ---------------------------------------------------------------- aggregate

struct AggregateArgs {
    std::string stats;
    std::vector<std::string> profiles;
    bool normalize = false;
    Output out;
};

bool run_aggregate(const AggregateArgs& a) {
    const auto stats = parse_category_stats(std::filesystem::path(a.stats));
    Table t{{"profile", "tpr", "fpr", "effective_n_pos", "effective_n_neg", "error"}, {}};
    bool ok = true;
    for (const auto& path : a.profiles) {
        std::vector<ProfileOutcome> outcome;
        try {
            outcome = compare_profiles(stats, {parse_profile(std::filesystem::path(path), {a.normalize})});
        } catch (const DomainError& e) {
            outcome.push_back({std::filesystem::path(path).stem().string(), std::nullopt, e.what()});
        }
        const auto& o = outcome.front();
        if (o.result) {
            t.rows.push_back({o.profile_name, o.result->tpr.value(), o.result->fpr.value(), o.result->effective_n_pos,
                              o.result->effective_n_neg, Null{}});
        } else {
            ok = false;
            std::cerr << "evalplan: profile '" << o.profile_name << "': " << o.error << '\n';
            t.rows.push_back({o.profile_name, Null{}, Null{}, Null{}, Null{}, o.error});
        }
    }
    a.out.write(t);
    return ok;
}

// ---------------------------------------------------------------- timedelay

struct DelayArgs {
    std::string manifest, freeze;
    std::int64_t lag = 100, maturity = 30, window = 0;
    double threshold = 0.0;
    AdequacyOptions adequacy;
    Output out;
};

Date parse_date_flag(const std::string& s, const char* flag) {
    const auto d = Date::parse(s);
    if (!d) throw DomainError(std::string(flag) + " must be YYYY-MM-DD, got '" + s + "'");
    return *d;
}

ordered_json optional_json(const std::optional<Proportion>& p) {
    return p ? ordered_json(p->value()) : ordered_json(nullptr);
}

void run_timedelay(const DelayArgs& a) {
    if (a.out.format != "json") throw DomainError("timedelay writes a JSON report; use --format json");
    const auto manifest = parse_manifest(std::filesystem::path(a.manifest));
    const DelayProtocolConfig cfg{parse_date_flag(a.freeze, "--freeze"), a.lag, a.maturity, a.window};
    const auto r = run_delay_protocol(manifest, cfg, a.threshold, a.adequacy);

    ordered_json adequacy = ordered_json::array();
    for (const auto& x : r.adequacy) {
        adequacy.push_back({{"metric", x.metric},
                            {"rate", x.rate},
                            {"n", x.n},
                            {"alpha", x.alpha},
                            {"coverage", x.coverage ? ordered_json(*x.coverage) : ordered_json(nullptr)},
                            {"confidence", a.adequacy.confidence},
                            {"adequate", x.adequate}});
    }
    ordered_json doc{
        {"freeze_date", cfg.freeze_date.to_string()},
        {"lag_days", cfg.lag_days},
        {"label_maturity_days", cfg.label_maturity_days},
        {"evaluation_window_days", cfg.evaluation_window_days},
        {"cutoff", r.cutoff.to_string()},
        {"window_end", r.window_end.to_string()},
        {"threshold", std::isfinite(a.threshold) ? ordered_json(a.threshold) : ordered_json(format_double(a.threshold))},
        {"n_eligible", r.eligible_ids.size()},
        {"n_pos", r.n_pos},
        {"n_neg", r.n_neg},
        {"true_positives", r.true_positives},
        {"false_positives", r.false_positives},
        {"tpr", optional_json(r.tpr)},
        {"fpr", optional_json(r.fpr)},
        {"excluded_immature_labels", r.excluded_immature_labels},
        {"naive_size", r.naive_size},
        {"contamination_rate_naive", optional_json(r.contamination_rate_naive)},
        {"adequacy", adequacy},
        {"warnings", r.warnings},
        {"eligible_ids", r.eligible_ids},
    };
    for (const auto& w : r.warnings) std::cerr << "evalplan: warning: " << w << '\n';
    a.out.emit(doc.dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sample-size planning, estimator bias, ROC and time-delay evaluation for binary detectors"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "evalplan " EVALPLAN_VERSION);

    PlanArgs plan;
    auto* plan_cmd = app.add_subcommand("plan", "Smallest N whose coverage reaches c");
    auto* plan_p = plan_cmd->add_option("--p", plan.p, "True rate(s), comma separated")->delimiter(',');
    auto* plan_grid = plan_cmd->add_option("--p-grid", plan.grid, "lo:hi:logN or lo:hi:linN");
    auto* plan_preset = plan_cmd->add_option("--preset", plan.preset, "fig1a (FPR log grid, alpha 0.5) or "
                                                                      "fig1b (TPR 0.5..0.95, alpha 0.01)")
                            ->check(CLI::IsMember({"fig1a", "fig1b"}));
    plan_p->excludes(plan_grid, plan_preset);
    plan_grid->excludes(plan_preset);
    auto* alpha = plan_cmd->add_option("--alpha", plan.alpha, "Relative tolerance: window p +- alpha*p (default 0.5)");
    auto* sigma = plan_cmd->add_option("--sigma", plan.sigma, "Absolute tolerance: window p +- sigma");
    alpha->excludes(sigma);
    plan_cmd->add_option("--c", plan.c, "Confidence level")->capture_default_str();
    plan_cmd->add_option("--n-max", plan.n_max, "Search limit")->capture_default_str();
    plan_cmd->add_option("--stable-window", plan.stable_window, "Also require coverage on N+1..N+W")
        ->capture_default_str();
    add_output_options(plan_cmd, plan.out);

    BiasArgs bias;
    auto* bias_cmd = app.add_subcommand("bias", "Underestimation skew and severe-underestimation probability");
    auto* bias_p = bias_cmd->add_option("--p", bias.p, "True rate(s), comma separated")->delimiter(',');
    auto* bias_grid = bias_cmd->add_option("--p-grid", bias.grid, "lo:hi:logN or lo:hi:linN");
    auto* bias_preset = bias_cmd->add_option("--preset", bias.preset, "fig2 (p 0.01..0.99, n 30,100,300,1000,3000)")
                            ->check(CLI::IsMember({"fig2"}));
    bias_p->excludes(bias_grid, bias_preset);
    bias_grid->excludes(bias_preset);
    bias_cmd->add_option("--n", bias.n, "Sample size(s), comma separated")->delimiter(',');
    bias_cmd->add_option("--fraction", bias.fraction, "Severe means k/n < (1 - fraction) * p")->capture_default_str();
    add_output_options(bias_cmd, bias.out);

    RocArgs roc;
    auto* roc_cmd = app.add_subcommand("roc", "ROC curve, TPR read-off, or the subsampling optimism experiment");
    auto* scores = roc_cmd->add_option("--scores", roc.scores, "Score file (sample_id,label,score[,...])");
    auto* synth = roc_cmd->add_flag("--synthetic", roc.synthetic, "Gaussian scores: benign N(0,1), malware N(sep,1)");
    scores->excludes(synth);
    roc_cmd->add_flag("--negate", roc.negate, "Lower scores are more malicious")->needs(scores);
    roc_cmd->add_option("--separation", roc.separation, "Synthetic class separation")->capture_default_str();
    roc_cmd->add_option("--n", roc.n, "Synthetic samples per class");
    roc_cmd->add_option("--n-pos", roc.n_pos, "Synthetic malware samples");
    roc_cmd->add_option("--n-neg", roc.n_neg, "Synthetic benign samples");
    roc_cmd->add_option("--seed", roc.seed, "RNG seed")->capture_default_str();
    roc_cmd->add_option("--targets", roc.targets, "FPR targets, comma separated")->delimiter(',');
    roc_cmd->add_option("--trials", roc.trials, "Subsampling trials");
    roc_cmd->add_option("--sub-pos", roc.sub_pos, "Malware per subsample");
    roc_cmd->add_option("--sub-neg", roc.sub_neg, "Benign per subsample");
    add_output_options(roc_cmd, roc.out);

    AggregateArgs agg;
    auto* agg_cmd = app.add_subcommand("aggregate", "Category-weighted TPR/FPR under one or more profiles");
    agg_cmd->add_option("--stats", agg.stats, "Category stats file (category,class,n,detected)")->required();
    agg_cmd->add_option("--profile", agg.profiles, "Weight profile JSON (repeatable)")->required();
    agg_cmd->add_flag("--normalize", agg.normalize, "Rescale each weight map to sum 1");
    add_output_options(agg_cmd, agg.out);

    DelayArgs delay;
    delay.out.format = "json";
    auto* delay_cmd = app.add_subcommand("timedelay", "Time-delayed evaluation over a manifest");
    delay_cmd->add_option("--manifest", delay.manifest, "Manifest file")->required();
    delay_cmd->add_option("--freeze", delay.freeze, "Freeze date YYYY-MM-DD")->required();
    delay_cmd->add_option("--lag", delay.lag, "Days between freeze and cutoff")->capture_default_str();
    delay_cmd->add_option("--window", delay.window, "Evaluation window after the cutoff, days")->required();
    delay_cmd->add_option("--maturity", delay.maturity, "Label maturity days, 0 disables")->capture_default_str();
    delay_cmd->add_option("--threshold", delay.threshold, "score >= threshold is flagged")->required();
    delay_cmd->add_option("--alpha-tpr", delay.adequacy.alpha_tpr, "Relative tolerance for TPR adequacy")
        ->capture_default_str();
    delay_cmd->add_option("--alpha-fpr", delay.adequacy.alpha_fpr, "Relative tolerance for FPR adequacy")
        ->capture_default_str();
    delay_cmd->add_option("--c", delay.adequacy.confidence, "Confidence for adequacy")->capture_default_str();
    add_output_options(delay_cmd, delay.out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*plan_cmd) run_plan(plan);
        if (*bias_cmd) run_bias(bias);
        if (*roc_cmd) run_roc(roc);
        if (*agg_cmd && !run_aggregate(agg)) return 2;
        if (*delay_cmd) run_timedelay(delay);
    } catch (const DomainError& e) {
        std::cerr << "evalplan: " << e.what() << '\n';
        return 2;
    } catch (const UnsatisfiableError& e) {
        std::cerr << "evalplan: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "evalplan: internal error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
