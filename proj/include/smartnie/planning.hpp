#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "smartnie/design.hpp"

namespace smartnie {

enum class TestMode { ni, eq };

std::string_view to_string(TestMode mode) noexcept;
TestMode parse_mode(std::string_view text);

// Standardized planning inputs. For ni only eta_theta - eta_delta matters;
// for eq both enter the power function separately.
struct PlanInput {
    TestMode mode = TestMode::ni;
    PathKind path = PathKind::distinct;
    double eta_theta = 0.0;
    double eta_delta = 0.0;
    double alpha = 0.05;
    double beta = 0.20;

    double eta() const noexcept { return eta_theta - eta_delta; }

    friend bool operator==(const PlanInput&, const PlanInput&) = default;
};

/// Builds a PlanInput from raw margin/difference and a design; the path
/// comes from the pair and the standardization from design-core.
PlanInput plan_input_from_design(TestMode mode, const SmartDesign& design, const AiPair& pair, double theta,
    double delta, double alpha = 0.05, double beta = 0.20);

struct PlanResult {
    std::size_t n = 0;
    double achieved_power = 0.0;
    PlanInput input;
};

/// N = ceil(2 (z_alpha + z_beta)^2 / eta^2). Throws Error(eta_nonpositive)
/// when the margin does not exceed the true difference.
PlanResult ni_sample_size(const PlanInput& input);

/// Closed form for equivalence at zero true difference:
/// N = ceil(2 (z_alpha + z_{beta/2})^2 / eta_theta^2).
PlanResult eq_sample_size_delta0(double eta_theta, double alpha, double beta);

/// Phi(-z_alpha + eta sqrt(N/2)).
double ni_power(std::size_t n, double eta, double alpha);

/// Phi(-z_alpha + (eta_theta - eta_delta) sqrt(N/2)) - Phi(z_alpha - (eta_theta + eta_delta) sqrt(N/2)),
/// clamped to [0, 1].
double eq_power(std::size_t n, double eta_theta, double eta_delta, double alpha);

/// Smallest N in [2, max_equivalence_n] with eq_power(N) >= 1 - beta, by bisection.
PlanResult eq_sample_size_search(double eta_theta, double eta_delta, double alpha, double beta);

inline constexpr std::size_t max_equivalence_n = 10'000'000;

/// Dispatches on mode (and, for eq, on whether eta_delta is zero).
PlanResult plan(const PlanInput& input);

/// ceil(n / (1 - dropout)).
std::size_t attrition_inflate(std::size_t n, double dropout);

// One grid point of a power curve.
struct CurvePoint {
    double eta_theta = 0.0;
    double eta_delta = 0.0;
};

struct McPoint {
    double power = 0.0;
    double se = 0.0;
};

// Optional Monte Carlo companion: called with (n, grid index).
using McHook = std::function<McPoint(std::size_t n, std::size_t point)>;

struct CurveRow {
    std::size_t n = 0;
    double eta = 0.0; // eta_theta - eta_delta
    double eta_theta = 0.0;
    double eta_delta = 0.0;
    double analytic_power = 0.0;
    std::optional<double> mc_power;
    std::optional<double> se;
};

/// One row per (n, grid point), n-major. Analytic power from ni_power/eq_power;
/// equivalence points outside the band get the clamped formula value.
std::vector<CurveRow> power_curve(TestMode mode, PathKind path, std::span<const std::size_t> ns,
    std::span<const CurvePoint> grid, double alpha, const McHook& mc = {});

} // namespace smartnie
