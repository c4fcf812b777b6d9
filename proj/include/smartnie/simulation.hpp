#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smartnie/design.hpp"
#include "smartnie/inference.hpp"
#include "smartnie/planning.hpp"
#include "smartnie/rng.hpp"

namespace smartnie {

// Data-generation parameters: latent response model plus the linear maps
// from latent means to the six cell means.
struct ScenarioParams {
    double sigma = 1.0;
    double gamma_a = 0.5;
    double gamma_ac = 0.5;
    double mu_La = 2.0;
    double sigma_L = 0.2;
    double zeta0 = 0.0;
    double zeta1a = 0.0;
    double zeta1ac = 0.0;
    double xi0 = 0.0;
    double xi1a = 0.0;
    double xi1ac = 0.0;
    double xi2_a_m = 0.0;
    double xi2_a_v = 0.0;
    double xi2_ac_m = 0.0;
    double xi2_ac_v = 0.0;
    double alpha = 0.05;
    double beta = 0.20;
    double theta = 1.0;

    void validate() const;

    friend bool operator==(const ScenarioParams&, const ScenarioParams&) = default;
};

struct SimScenario {
    ScenarioParams params;
    double latent_cutoff = 0.0;
    double mu_Lac = 0.0;
    double mu_La_NR = 0.0;
    double mu_Lac_NR = 0.0;
    SmartDesign design; // randomization 0.5 / 0.5 / 0.5
    std::array<double, 4> ai_means {};
    double delta_dp = 0.0; // mu_d3 - mu_d1
    double delta_sp = 0.0; // mu_d3 - mu_d4
    StandardizedEffect eta_dp;
    StandardizedEffect eta_sp;

    double ai_mean(AiId id) const noexcept { return ai_means[static_cast<std::size_t>(id)]; }
};

/// Throws Error(invalid_argument) when a response rate is 0 or 1.
SimScenario build_scenario(const ScenarioParams& params);

/// Per-cell counts in Cell order: N_a = ceil(n/2), N_ac = n - N_a, then
/// ceil(N_a gamma_a), ceil(N_a (1 - gamma_a) / 2), ... The total may exceed n.
std::array<std::size_t, 6> cell_counts(std::size_t n, double gamma_a, double gamma_ac);

struct GenerateOptions {
    bool ids = true;                                // fill TrialRecord::id as p1, p2, ...
    std::optional<std::array<double, 6>> cell_sd;  // per-cell outcome SD; default sigma
};

/// Fixed-count trial: participants laid out cell by cell in Cell order,
/// outcomes Normal(mu_cell, sd_cell^2). Requires n >= 4.
std::vector<TrialRecord> generate_trial(const SimScenario& scenario, std::size_t n, SeedSpec seed,
    const GenerateOptions& options = {});

/// Same draws as generate_trial, accumulated straight into per-cell statistics.
CellStats generate_cell_stats(const SimScenario& scenario, std::size_t n, SeedSpec seed,
    const std::optional<std::array<double, 6>>& cell_sd = std::nullopt);

/// Per-cell SDs for the unequal-variance check: U(max(0.5, sigma - 1), sigma + 1).
std::array<double, 6> draw_cell_sds(double sigma, Rng& rng);

/// Participant-level randomization: each person draws T1 ~ pi_a, R ~ gamma,
/// T2 ~ pi_{T1,v}, Y ~ Normal(mu_cell, sigma^2). Cells may be empty.
CellStats generate_trial_randomized(const SmartDesign& design, std::size_t n, SeedSpec seed);

/// n latent progress draws for arm a (or ac), Normal(mu_L, sigma_L^2).
std::vector<double> draw_latent(const SimScenario& scenario, Arm arm, std::size_t n, SeedSpec seed);

struct TestSpec {
    TestMode mode = TestMode::ni;
    AiPair pair { AiId::d3, AiId::d1 };
    double theta = 1.0;
    double alpha = 0.05;
};

/// Whether one simulated trial's test rejects H0 (weights 0.5 / 0.5 / 0.5).
bool rejects(const CellStats& stats, const TestSpec& spec);

struct McEstimate {
    double estimate = 0.0;
    double se = 0.0;
    std::size_t reps = 0;
    std::uint64_t seed = 0;
    std::size_t n = 0;
    std::size_t realized_n = 0; // after ceiling cell counts

    friend bool operator==(const McEstimate&, const McEstimate&) = default;
};

struct McOptions {
    unsigned threads = 1;
    bool robust = false;
};

/// Rejection fraction over reps simulated trials of size n; replication r
/// uses stream (seed, r) so the answer does not depend on threads.
McEstimate mc_power(const SimScenario& scenario, const TestSpec& spec, std::size_t n, std::size_t reps,
    std::uint64_t seed, const McOptions& options = {});

McEstimate mc_power_robust(const SimScenario& scenario, const TestSpec& spec, std::size_t n, std::size_t reps,
    std::uint64_t seed, unsigned threads = 1);

/// Equivalence rejection rate for a scenario whose true difference sits at
/// the margin.
McEstimate type1_rate(const SimScenario& scenario, const TestSpec& spec, std::size_t n, std::size_t reps,
    std::uint64_t seed, unsigned threads = 1);

// One published configuration.
struct PresetRow {
    std::string label;
    ScenarioParams params;
    std::size_t n = 0; // 0 when N is chosen by the caller (power curves)
    std::optional<double> published_eta;
    std::optional<double> published_power; // power, or Type-I rate for type1 presets
    std::optional<double> published_robust;
};

enum class PresetKind { curve, power, type1 };

struct Preset {
    std::string name;
    std::string description;
    PresetKind kind = PresetKind::power;
    TestMode mode = TestMode::ni;
    PathKind path = PathKind::distinct;
    std::vector<std::size_t> curve_ns; // power-curve presets only
    std::vector<PresetRow> rows;

    /// Control d3 against d1 (distinct) or d4 (shared).
    AiPair pair() const { return default_pair(path); }
    TestSpec test_spec(const PresetRow& row) const { return { mode, pair(), row.params.theta, row.params.alpha }; }

    static AiPair default_pair(PathKind path)
    {
        return path == PathKind::distinct ? AiPair(AiId::d3, AiId::d1) : AiPair(AiId::d3, AiId::d4);
    }
};

std::string_view to_string(PresetKind kind) noexcept;

const std::vector<Preset>& presets();

/// Throws Error(invalid_argument) listing the known names.
const Preset& find_preset(std::string_view name);

/// 1-based row lookup. Throws Error(invalid_argument) when out of range.
const PresetRow& preset_row(const Preset& preset, std::size_t row);

/// Runs the Monte Carlo study a preset row describes: power (or robust power)
/// for power and curve presets, the Type-I rate for type1 presets. n defaults
/// to the row's published N; curve presets need it explicitly.
McEstimate simulate_preset(const Preset& preset, std::size_t row, std::optional<std::size_t> n, std::size_t reps,
    std::uint64_t seed, bool robust = false, unsigned threads = 1);

/// The scenario's standardized effect for a path.
const StandardizedEffect& effect_for(const SimScenario& scenario, PathKind path) noexcept;

} // namespace smartnie
