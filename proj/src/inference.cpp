#include "smartnie/inference.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "smartnie/error.hpp"
#include "smartnie/normal.hpp"

namespace smartnie {

void validate(const TrialRecord& record)
{
    if (!std::isfinite(record.outcome)) {
        fail(ErrorCode::parse_error, "outcome must be a finite number");
    }
    if (record.responder) {
        if (record.stage2 != continuation(record.stage1)) {
            fail(ErrorCode::parse_error, "responder stage2 must equal stage1");
        }
    } else if (record.stage2 != Stage2::m && record.stage2 != Stage2::v) {
        fail(ErrorCode::parse_error, "non-responder stage2 must be m or v");
    }
}

bool consistent_with(const TrialRecord& record, AiId ai) noexcept
{
    auto d = EmbeddedAI::of(ai);
    if (record.stage1 != d.stage1) {
        return false;
    }
    return record.responder ? record.stage2 == continuation(d.stage1) : record.stage2 == as_stage2(d.nonresponder);
}

double ipw_weight(const TrialRecord& record, const RandomizationProbs& probs)
{
    validate(record);
    probs.validate();
    double w = 1.0 / probs.stage1(record.stage1);
    if (!record.responder) {
        w /= probs.stage2(record.stage1, record.stage2 == Stage2::v ? Tactic::v : Tactic::m);
    }
    return w;
}

std::string_view to_string(Cell cell) noexcept
{
    switch (cell) {
    case Cell::a_a: return "(a,a)";
    case Cell::a_v: return "(a,v)";
    case Cell::a_m: return "(a,m)";
    case Cell::ac_ac: return "(ac,ac)";
    case Cell::ac_v: return "(ac,v)";
    case Cell::ac_m: return "(ac,m)";
    }
    return "(?)";
}

Cell cell_of(Arm stage1, Stage2 stage2)
{
    switch (stage2) {
    case Stage2::a:
        require(stage1 == Arm::a, "stage2 'a' requires stage1 'a'");
        return Cell::a_a;
    case Stage2::ac:
        require(stage1 == Arm::ac, "stage2 'ac' requires stage1 'ac'");
        return Cell::ac_ac;
    case Stage2::m: return stage1 == Arm::a ? Cell::a_m : Cell::ac_m;
    case Stage2::v: return stage1 == Arm::a ? Cell::a_v : Cell::ac_v;
    }
    return Cell::a_a;
}

Arm arm_of(Cell cell) noexcept
{
    return (cell == Cell::a_a || cell == Cell::a_v || cell == Cell::a_m) ? Arm::a : Arm::ac;
}

Stage2 stage2_of(Cell cell) noexcept
{
    switch (cell) {
    case Cell::a_a: return Stage2::a;
    case Cell::ac_ac: return Stage2::ac;
    case Cell::a_v:
    case Cell::ac_v: return Stage2::v;
    case Cell::a_m:
    case Cell::ac_m: return Stage2::m;
    }
    return Stage2::a;
}

bool is_responder_cell(Cell cell) noexcept { return cell == Cell::a_a || cell == Cell::ac_ac; }

double CellStats::mean(Cell c) const noexcept
{
    auto i = static_cast<std::size_t>(c);
    return count[i] == 0 ? 0.0 : sum[i] / static_cast<double>(count[i]);
}

std::size_t CellStats::total() const noexcept
{
    std::size_t t = 0;
    for (auto c : count) {
        t += c;
    }
    return t;
}

CellStats summarize(std::span<const TrialRecord> records)
{
    CellStats stats;
    std::array<double, 6> running_mean {};
    for (const auto& r : records) {
        validate(r);
        auto i = static_cast<std::size_t>(cell_of(r.stage1, r.stage2));
        // Welford update
        ++stats.count[i];
        double delta = r.outcome - running_mean[i];
        running_mean[i] += delta / static_cast<double>(stats.count[i]);
        stats.sum_sq_dev[i] += delta * (r.outcome - running_mean[i]);
        stats.sum[i] += r.outcome;
    }
    return stats;
}

RandomizationProbs empirical_probs(const CellStats& stats)
{
    auto n = [&](Cell c) { return static_cast<double>(stats.n(c)); };
    const double n_a = n(Cell::a_a) + n(Cell::a_v) + n(Cell::a_m);
    const double n_ac = n(Cell::ac_ac) + n(Cell::ac_v) + n(Cell::ac_m);
    const double nr_a = n(Cell::a_v) + n(Cell::a_m);
    const double nr_ac = n(Cell::ac_v) + n(Cell::ac_m);
    if (n_a == 0.0 || n_ac == 0.0 || nr_a == 0.0 || nr_ac == 0.0) {
        fail(ErrorCode::positivity_violation, "empirical randomization fractions need participants in every stratum");
    }
    RandomizationProbs p { n_a / (n_a + n_ac), n(Cell::a_v) / nr_a, n(Cell::ac_v) / nr_ac };
    if (p.pi_a_v == 0.0 || p.pi_a_v == 1.0 || p.pi_ac_v == 0.0 || p.pi_ac_v == 1.0) {
        fail(ErrorCode::positivity_violation, "empirical randomization fractions hit 0 or 1");
    }
    return p;
}

namespace {

    struct AiCells {
        Cell responder;
        Cell nonresponder;
    };

    AiCells cells_of(AiId ai)
    {
        auto d = EmbeddedAI::of(ai);
        return { cell_of(d.stage1, continuation(d.stage1)), cell_of(d.stage1, as_stage2(d.nonresponder)) };
    }

    struct WeightedSums {
        double weighted_outcome = 0.0;
        double weight = 0.0;
    };

    WeightedSums weighted_sums(const CellStats& stats, AiId ai, const RandomizationProbs& probs)
    {
        probs.validate();
        auto d = EmbeddedAI::of(ai);
        auto cells = cells_of(ai);
        if (stats.n(cells.responder) + stats.n(cells.nonresponder) == 0) {
            fail(ErrorCode::positivity_violation,
                "positivity violation: no records consistent with " + std::string(to_string(ai)) + " (cells "
                    + std::string(to_string(cells.responder)) + " and " + std::string(to_string(cells.nonresponder))
                    + " are empty)");
        }
        const double w_r = 1.0 / probs.stage1(d.stage1);
        const double w_nr = w_r / probs.stage2(d.stage1, d.nonresponder);
        auto i_r = static_cast<std::size_t>(cells.responder);
        auto i_nr = static_cast<std::size_t>(cells.nonresponder);
        return { w_r * stats.sum[i_r] + w_nr * stats.sum[i_nr],
            w_r * static_cast<double>(stats.count[i_r]) + w_nr * static_cast<double>(stats.count[i_nr]) };
    }

    double z_ratio(double numerator, double variance)
    {
        if (variance > 0.0) {
            return numerator / std::sqrt(variance);
        }
        if (numerator == 0.0) {
            return 0.0;
        }
        return numerator > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    }

    double lower_tail(double z)
    {
        if (std::isinf(z)) {
            return z < 0.0 ? 0.0 : 1.0;
        }
        return normal_cdf(z);
    }

    void check_alpha(double alpha) { require(alpha > 0.0 && alpha < 1.0, "alpha must lie strictly inside (0, 1)"); }

    std::optional<double> bound_or_none(double p)
    {
        if (p > 0.0 && p < 1.0) {
            return bf_upper_bound(p).value;
        }
        return std::nullopt;
    }

} // namespace

double estimate_ai_mean(const CellStats& stats, AiId ai, const RandomizationProbs& probs)
{
    auto s = weighted_sums(stats, ai, probs);
    return s.weighted_outcome / s.weight;
}

double estimate_ai_mean(std::span<const TrialRecord> records, AiId ai, const RandomizationProbs& probs)
{
    return estimate_ai_mean(summarize(records), ai, probs);
}

double estimate_ai_mean_ht(const CellStats& stats, AiId ai, const RandomizationProbs& probs)
{
    auto s = weighted_sums(stats, ai, probs);
    return s.weighted_outcome / static_cast<double>(stats.total());
}

SmartDesign estimate_design(const CellStats& stats, const RandomizationProbs& probs)
{
    probs.validate();
    for (Cell c : all_cells) {
        if (stats.n(c) == 0) {
            fail(ErrorCode::positivity_violation,
                "positivity violation: cell " + std::string(to_string(c)) + " has no participants");
        }
    }
    const std::size_t total = stats.total();
    if (total < all_cells.size() + 1) {
        fail(ErrorCode::invalid_argument, "need more participants than cells to estimate the pooled variance");
    }

    auto n = [&](Cell c) { return static_cast<double>(stats.n(c)); };
    SmartDesign design;
    design.gamma_a = n(Cell::a_a) / (n(Cell::a_a) + n(Cell::a_v) + n(Cell::a_m));
    design.gamma_ac = n(Cell::ac_ac) / (n(Cell::ac_ac) + n(Cell::ac_v) + n(Cell::ac_m));
    design.means = { stats.mean(Cell::a_a), stats.mean(Cell::a_m), stats.mean(Cell::a_v), stats.mean(Cell::ac_ac),
        stats.mean(Cell::ac_m), stats.mean(Cell::ac_v) };
    double ss = 0.0;
    for (double s : stats.sum_sq_dev) {
        ss += s;
    }
    const double pooled = ss / static_cast<double>(total - all_cells.size());
    // A zero pooled variance (all outcomes identical within cells) is legal
    // data; keep sigma strictly positive so the design stays valid.
    design.sigma = std::sqrt(pooled > 0.0 ? pooled : std::numeric_limits<double>::min());
    design.probs = probs;
    return design;
}

SmartDesign estimate_design(std::span<const TrialRecord> records, const RandomizationProbs& probs)
{
    return estimate_design(summarize(records), probs);
}

DifferenceEstimate estimate_difference(const CellStats& stats, const AiPair& pair, const RandomizationProbs& probs)
{
    SmartDesign design = estimate_design(stats, probs);
    DifferenceEstimate est;
    est.control_mean = estimate_ai_mean(stats, pair.control(), probs);
    est.candidate_mean = estimate_ai_mean(stats, pair.candidate(), probs);
    est.n = stats.total();
    est.variance = diff_variance(design, pair, est.n);
    return est;
}

OneSidedResult non_inferiority_subtest(const DifferenceEstimate& est, double theta, double alpha)
{
    check_alpha(alpha);
    OneSidedResult r;
    r.z = z_ratio(est.diff() - theta, est.variance);
    r.p = lower_tail(r.z);
    r.reject = r.z < -z_upper(alpha);
    return r;
}

OneSidedResult non_superiority_subtest(const DifferenceEstimate& est, double theta, double alpha)
{
    check_alpha(alpha);
    OneSidedResult r;
    r.z = z_ratio(est.diff() + theta, est.variance);
    r.p = lower_tail(-r.z);
    r.reject = r.z > z_upper(alpha);
    return r;
}

bool equivalence_rejects(const DifferenceEstimate& est, double theta, double alpha)
{
    return non_inferiority_subtest(est, theta, alpha).reject && non_superiority_subtest(est, theta, alpha).reject;
}

std::string_view to_string(TestKind kind) noexcept
{
    return kind == TestKind::non_inferiority ? "non_inferiority" : "equivalence";
}

std::string_view to_string(Decision decision) noexcept
{
    return decision == Decision::reject_null ? "reject_null" : "fail_to_reject";
}

BayesFactorBound bf_upper_bound(double p)
{
    require(p > 0.0 && p < 1.0, "bf_upper_bound: p must lie strictly inside (0, 1)");
    if (p > 1.0 / std::numbers::e) {
        return { 1.0, false };
    }
    return { 1.0 / (-std::numbers::e * p * std::log(p)), true };
}

namespace {

    TestReport run_test(TestKind kind, std::span<const TrialRecord> records, const AiPair& pair, double theta,
        double alpha, const AnalysisOptions& options)
    {
        check_alpha(alpha);
        CellStats stats = summarize(records);
        RandomizationProbs probs = options.empirical_probs ? empirical_probs(stats) : options.probs;
        probs.validate();
        DifferenceEstimate est = estimate_difference(stats, pair, probs);

        TestReport report;
        report.kind = kind;
        report.pair = pair;
        report.n = est.n;
        report.mean_control = est.control_mean;
        report.mean_candidate = est.candidate_mean;
        report.variance = est.variance;
        report.theta = theta;
        report.alpha = alpha;

        auto ni = non_inferiority_subtest(est, theta, alpha);
        report.z_ni = ni.z;
        report.p_ni = ni.p;
        report.bf_bound_ni = bound_or_none(ni.p);
        bool reject = ni.reject;

        if (kind == TestKind::equivalence) {
            auto ns = non_superiority_subtest(est, theta, alpha);
            report.z_ns = ns.z;
            report.p_ns = ns.p;
            report.bf_bound_ns = bound_or_none(ns.p);
            reject = reject && ns.reject;
        }
        report.decision = reject ? Decision::reject_null : Decision::fail_to_reject;

        if (est.n < small_trial_threshold) {
            report.warnings.push_back("only " + std::to_string(est.n) + " participants; below "
                + std::to_string(small_trial_threshold) + " some treatment sequences are very sparse");
        }
        if (options.empirical_probs) {
            report.warnings.push_back("weights use empirical randomization fractions");
        }
        return report;
    }

} // namespace

TestReport ni_test(std::span<const TrialRecord> records, const AiPair& pair, double theta, double alpha,
    const AnalysisOptions& options)
{
    require(std::isfinite(theta) && theta >= 0.0, "non-inferiority margin theta must be >= 0");
    return run_test(TestKind::non_inferiority, records, pair, theta, alpha, options);
}

TestReport equivalence_test(std::span<const TrialRecord> records, const AiPair& pair, double theta, double alpha,
    const AnalysisOptions& options)
{
    require(std::isfinite(theta) && theta > 0.0, "equivalence margin theta must be > 0");
    return run_test(TestKind::equivalence, records, pair, theta, alpha, options);
}

} // namespace smartnie
