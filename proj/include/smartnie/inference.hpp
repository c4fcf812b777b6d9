#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smartnie/design.hpp"

namespace smartnie {

// One participant's observed trajectory (T1, R, T2, Y).
struct TrialRecord {
    std::string id;
    Arm stage1 = Arm::a;
    bool responder = false;
    Stage2 stage2 = Stage2::m;
    double outcome = 0.0;

    friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

/// Throws Error(parse_error) naming the violated invariant.
void validate(const TrialRecord& record);

/// Whether the record's trajectory is consistent with the AI.
bool consistent_with(const TrialRecord& record, AiId ai) noexcept;

/// Inverse-probability weight 1 / (pi_T1 * pi_{T1,T2}^(1-R)).
double ipw_weight(const TrialRecord& record, const RandomizationProbs& probs);

// The six treatment sequences, in a fixed order used for summaries and
// simulated output.
enum class Cell { a_a, a_v, a_m, ac_ac, ac_v, ac_m };

constexpr std::array<Cell, 6> all_cells { Cell::a_a, Cell::a_v, Cell::a_m, Cell::ac_ac, Cell::ac_v, Cell::ac_m };

std::string_view to_string(Cell cell) noexcept;
Cell cell_of(Arm stage1, Stage2 stage2);
Arm arm_of(Cell cell) noexcept;
Stage2 stage2_of(Cell cell) noexcept;
bool is_responder_cell(Cell cell) noexcept;

// Per-cell sufficient statistics. Every estimator below is a function of
// these, so one pass over the records serves the whole analysis.
struct CellStats {
    std::array<std::size_t, 6> count {};
    std::array<double, 6> sum {};
    std::array<double, 6> sum_sq_dev {}; // about the cell mean

    std::size_t n(Cell c) const noexcept { return count[static_cast<std::size_t>(c)]; }
    double mean(Cell c) const noexcept;
    std::size_t total() const noexcept;
};

/// Validates every record and accumulates per-cell statistics.
CellStats summarize(std::span<const TrialRecord> records);

/// Randomization fractions observed in the data.
RandomizationProbs empirical_probs(const CellStats& stats);

/// Weighted AI mean: sum(W Y) / sum(W) over records consistent with the AI.
/// Throws Error(positivity_violation) naming the empty cell.
double estimate_ai_mean(std::span<const TrialRecord> records, AiId ai, const RandomizationProbs& probs);
double estimate_ai_mean(const CellStats& stats, AiId ai, const RandomizationProbs& probs);

/// Horvitz-Thompson form sum(W Y) / N. Coincides with estimate_ai_mean when
/// the weight sum equals N; its sampling variance is exactly
/// ai_variance_coeff / N under per-participant randomization.
double estimate_ai_mean_ht(const CellStats& stats, AiId ai, const RandomizationProbs& probs);

/// Plug-in design: responder proportions, cell means and pooled
/// within-cell variance. Throws Error(positivity_violation) on an empty cell.
SmartDesign estimate_design(std::span<const TrialRecord> records, const RandomizationProbs& probs);
SmartDesign estimate_design(const CellStats& stats, const RandomizationProbs& probs);

// Estimated control-minus-candidate difference with its plug-in variance.
struct DifferenceEstimate {
    double control_mean = 0.0;
    double candidate_mean = 0.0;
    double variance = 0.0;
    std::size_t n = 0;

    double diff() const noexcept { return control_mean - candidate_mean; }
};

DifferenceEstimate estimate_difference(const CellStats& stats, const AiPair& pair, const RandomizationProbs& probs);

struct OneSidedResult {
    double z = 0.0;
    double p = 1.0;
    bool reject = false;
};

/// H0: diff >= theta. Z = (diff - theta) / sqrt(v), reject when Z < -z_alpha.
OneSidedResult non_inferiority_subtest(const DifferenceEstimate& est, double theta, double alpha);

/// H0: diff <= -theta. Z* = (diff + theta) / sqrt(v), reject when Z* > z_alpha.
OneSidedResult non_superiority_subtest(const DifferenceEstimate& est, double theta, double alpha);

/// TOST decision: both one-sided sub-tests reject.
bool equivalence_rejects(const DifferenceEstimate& est, double theta, double alpha);

enum class TestKind { non_inferiority, equivalence };
enum class Decision { reject_null, fail_to_reject };

std::string_view to_string(TestKind kind) noexcept;
std::string_view to_string(Decision decision) noexcept;

struct BayesFactorBound {
    double value = 1.0;
    bool informative = false; // false when p > 1/e and the bound collapses to 1
};

/// Upper bound 1 / (-e p ln p) on the Bayes factor implied by a p-value.
BayesFactorBound bf_upper_bound(double p);

struct TestReport {
    TestKind kind = TestKind::non_inferiority;
    AiPair pair { AiId::d3, AiId::d1 };
    std::size_t n = 0;
    double mean_control = 0.0;
    double mean_candidate = 0.0;
    double variance = 0.0;
    double theta = 0.0;
    double alpha = 0.05;
    double z_ni = 0.0;
    double p_ni = 1.0;
    std::optional<double> z_ns;
    std::optional<double> p_ns;
    std::optional<double> bf_bound_ni;
    std::optional<double> bf_bound_ns;
    Decision decision = Decision::fail_to_reject;
    std::vector<std::string> warnings;

    friend bool operator==(const TestReport&, const TestReport&) = default;
};

struct AnalysisOptions {
    RandomizationProbs probs;
    // Weight with observed randomization fractions instead of the declared ones.
    bool empirical_probs = false;
};

// Below this many participants some treatment sequences hold very few people
// and the normal approximation gets shaky.
inline constexpr std::size_t small_trial_threshold = 80;

/// Non-inferiority of pair.candidate() relative to pair.control(). theta = 0
/// gives a one-sided superiority test.
TestReport ni_test(std::span<const TrialRecord> records, const AiPair& pair, double theta, double alpha,
    const AnalysisOptions& options = {});

/// Two one-sided tests at level alpha each against the band (-theta, theta).
TestReport equivalence_test(std::span<const TrialRecord> records, const AiPair& pair, double theta, double alpha,
    const AnalysisOptions& options = {});

} // namespace smartnie
