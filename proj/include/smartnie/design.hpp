#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace smartnie {

// First-stage intervention options.
enum class Arm { a, ac };

// Observed second-stage label. Responders continue their first-stage arm
// (stage2 == stage1); non-responders are re-randomized to m or v.
enum class Stage2 { a, ac, m, v };

// Second-stage tactic an adaptive intervention assigns to non-responders.
enum class Tactic { m, v };

enum class AiId { d1, d2, d3, d4 };

enum class PathKind { distinct, shared };

std::string_view to_string(Arm arm) noexcept;
std::string_view to_string(Stage2 stage2) noexcept;
std::string_view to_string(Tactic tactic) noexcept;
std::string_view to_string(AiId id) noexcept;
std::string_view to_string(PathKind path) noexcept;

Arm parse_arm(std::string_view text);
Stage2 parse_stage2(std::string_view text);
AiId parse_ai(std::string_view text);
PathKind parse_path(std::string_view text);

constexpr Stage2 continuation(Arm arm) noexcept { return arm == Arm::a ? Stage2::a : Stage2::ac; }
constexpr Stage2 as_stage2(Tactic tactic) noexcept { return tactic == Tactic::m ? Stage2::m : Stage2::v; }

// One of the four embedded adaptive interventions:
//   d1 = (a, a^R v^(1-R))    d2 = (a, a^R m^(1-R))
//   d3 = (ac, ac^R v^(1-R))  d4 = (ac, ac^R m^(1-R))
struct EmbeddedAI {
    AiId id;
    Arm stage1;
    Tactic nonresponder;

    static constexpr EmbeddedAI of(AiId id) noexcept
    {
        switch (id) {
        case AiId::d1: return { id, Arm::a, Tactic::v };
        case AiId::d2: return { id, Arm::a, Tactic::m };
        case AiId::d3: return { id, Arm::ac, Tactic::v };
        case AiId::d4: return { id, Arm::ac, Tactic::m };
        }
        return { id, Arm::a, Tactic::v };
    }
};

constexpr std::array<AiId, 4> all_ais { AiId::d1, AiId::d2, AiId::d3, AiId::d4 };

// Ordered pair of embedded AIs. `control` is the active-control AI whose
// advantage the margin bounds; `candidate` is the new AI. The path relation
// is always derived from the first-stage arms.
class AiPair {
public:
    AiPair(AiId control, AiId candidate);

    AiId control() const noexcept { return control_; }
    AiId candidate() const noexcept { return candidate_; }
    PathKind path() const noexcept { return path_; }

    friend bool operator==(const AiPair&, const AiPair&) = default;

private:
    AiId control_;
    AiId candidate_;
    PathKind path_;
};

// Randomization probabilities of the prototypical two-stage SMART. The
// complements (pi_ac = 1 - pi_a, pi_{a,m} = 1 - pi_{a,v}, ...) are implied.
struct RandomizationProbs {
    double pi_a = 0.5;
    double pi_a_v = 0.5;
    double pi_ac_v = 0.5;

    void validate() const;

    double stage1(Arm arm) const noexcept { return arm == Arm::a ? pi_a : 1.0 - pi_a; }
    double stage2(Arm arm, Tactic tactic) const noexcept
    {
        double pv = arm == Arm::a ? pi_a_v : pi_ac_v;
        return tactic == Tactic::v ? pv : 1.0 - pv;
    }

    friend bool operator==(const RandomizationProbs&, const RandomizationProbs&) = default;
};

// Mean outcome of each of the six treatment sequences.
struct CellMeans {
    double a_a = 0.0;
    double a_m = 0.0;
    double a_v = 0.0;
    double ac_ac = 0.0;
    double ac_m = 0.0;
    double ac_v = 0.0;

    double responder(Arm arm) const noexcept { return arm == Arm::a ? a_a : ac_ac; }
    double nonresponder(Arm arm, Tactic tactic) const noexcept
    {
        if (arm == Arm::a) {
            return tactic == Tactic::m ? a_m : a_v;
        }
        return tactic == Tactic::m ? ac_m : ac_v;
    }

    friend bool operator==(const CellMeans&, const CellMeans&) = default;
};

// Population-level description of a two-stage SMART under the working model
// E(Y_{T1,T2}) = mu_{T1,T2}, Var(Y_{T1,T2}) = sigma^2.
struct SmartDesign {
    CellMeans means;
    double sigma = 1.0;
    double gamma_a = 0.5;
    double gamma_ac = 0.5;
    RandomizationProbs probs;

    // Throws Error(invalid_argument) on sigma <= 0, gamma outside [0, 1],
    // non-finite means or probabilities not strictly inside (0, 1).
    void validate() const;

    // Non-fatal diagnostics, e.g. a response rate of exactly 0 or 1.
    std::vector<std::string> warnings() const;

    double gamma(Arm arm) const noexcept { return arm == Arm::a ? gamma_a : gamma_ac; }
};

/// Population mean of an embedded AI: gamma mu_{T1,T1} + (1 - gamma) mu_{T1,T2}.
double ai_mean(const SmartDesign& design, AiId ai);

/// N * Var(mean estimate) for one embedded AI, general randomization probabilities.
double ai_variance_coeff(const SmartDesign& design, AiId ai);

/// N * Cov between the two mean estimates of a shared-path pair.
/// Throws for a distinct-path pair.
double shared_cov_coeff(const SmartDesign& design, const AiPair& pair);

/// N * Var(control mean - candidate mean); covariance enters only for shared paths.
double diff_variance_coeff(const SmartDesign& design, const AiPair& pair);

/// Var(control mean - candidate mean) for a trial of n participants.
double diff_variance(const SmartDesign& design, const AiPair& pair, std::size_t n);

struct StandardizedEffect {
    double eta_theta = 0.0; // standardized margin
    double eta_delta = 0.0; // standardized true difference
    double eta = 0.0;       // eta_theta - eta_delta
};

/// Standardizes theta and delta by sqrt(diff_variance_coeff / 2).
/// Throws if that scale is not strictly positive.
StandardizedEffect standardized_quantities(const SmartDesign& design, const AiPair& pair, double theta, double delta);

} // namespace smartnie
