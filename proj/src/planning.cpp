#include "smartnie/planning.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "smartnie/error.hpp"
#include "smartnie/normal.hpp"

namespace smartnie {

std::string_view to_string(TestMode mode) noexcept { return mode == TestMode::ni ? "ni" : "eq"; }

TestMode parse_mode(std::string_view text)
{
    if (text == "ni") {
        return TestMode::ni;
    }
    if (text == "eq") {
        return TestMode::eq;
    }
    fail(ErrorCode::parse_error, "invalid mode '" + std::string(text) + "' (expected ni or eq)");
}

namespace {

    void check_rates(double alpha, double beta)
    {
        require(alpha > 0.0 && alpha < 1.0, "alpha must lie strictly inside (0, 1)");
        require(beta > 0.0 && beta < 1.0, "beta must lie strictly inside (0, 1)");
    }

    double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

    double eq_power_formula(std::size_t n, double eta_theta, double eta_delta, double alpha)
    {
        const double z = z_upper(alpha);
        const double root = std::sqrt(static_cast<double>(n) / 2.0);
        const double upper = normal_cdf(-z + (eta_theta - eta_delta) * root);
        const double lower = normal_cdf(z - (eta_theta + eta_delta) * root);
        return clamp01(upper - lower);
    }

    std::size_t ceil_count(double x)
    {
        if (!(x < 1e15)) {
            fail(ErrorCode::target_unreachable, "required sample size is not finite");
        }
        return static_cast<std::size_t>(std::ceil(x));
    }

} // namespace

PlanInput plan_input_from_design(TestMode mode, const SmartDesign& design, const AiPair& pair, double theta,
    double delta, double alpha, double beta)
{
    auto effect = standardized_quantities(design, pair, theta, delta);
    return { mode, pair.path(), effect.eta_theta, effect.eta_delta, alpha, beta };
}

double ni_power(std::size_t n, double eta, double alpha)
{
    require(n >= 1, "n must be at least 1");
    require(std::isfinite(eta), "eta must be finite");
    require(alpha > 0.0 && alpha < 1.0, "alpha must lie strictly inside (0, 1)");
    return clamp01(normal_cdf(-z_upper(alpha) + eta * std::sqrt(static_cast<double>(n) / 2.0)));
}

double eq_power(std::size_t n, double eta_theta, double eta_delta, double alpha)
{
    require(n >= 1, "n must be at least 1");
    require(alpha > 0.0 && alpha < 1.0, "alpha must lie strictly inside (0, 1)");
    if (!(std::fabs(eta_delta) < eta_theta)) {
        fail(ErrorCode::eta_nonpositive, "equivalence needs |eta_delta| < eta_theta");
    }
    return eq_power_formula(n, eta_theta, eta_delta, alpha);
}

PlanResult ni_sample_size(const PlanInput& input)
{
    require(input.mode == TestMode::ni, "ni_sample_size needs mode ni");
    check_rates(input.alpha, input.beta);
    const double eta = input.eta();
    require(std::isfinite(eta), "eta must be finite");
    if (!(eta > 0.0)) {
        fail(ErrorCode::eta_nonpositive, "margin does not exceed true difference (eta <= 0); N would be infinite");
    }
    const double zsum = z_upper(input.alpha) + z_upper(input.beta);
    PlanResult r;
    r.n = ceil_count(2.0 * zsum * zsum / (eta * eta));
    r.achieved_power = ni_power(r.n, eta, input.alpha);
    r.input = input;
    return r;
}

PlanResult eq_sample_size_delta0(double eta_theta, double alpha, double beta)
{
    check_rates(alpha, beta);
    require(std::isfinite(eta_theta), "eta_theta must be finite");
    if (!(eta_theta > 0.0)) {
        fail(ErrorCode::eta_nonpositive, "equivalence margin must be positive (eta_theta <= 0)");
    }
    const double zsum = z_upper(alpha) + z_upper(beta / 2.0);
    PlanResult r;
    r.n = ceil_count(2.0 * zsum * zsum / (eta_theta * eta_theta));
    r.achieved_power = eq_power(r.n, eta_theta, 0.0, alpha);
    r.input = { TestMode::eq, PathKind::distinct, eta_theta, 0.0, alpha, beta };
    return r;
}

PlanResult eq_sample_size_search(double eta_theta, double eta_delta, double alpha, double beta)
{
    check_rates(alpha, beta);
    require(std::isfinite(eta_theta) && std::isfinite(eta_delta), "standardized inputs must be finite");
    if (!(std::fabs(eta_delta) < eta_theta)) {
        fail(ErrorCode::eta_nonpositive, "margin must exceed the true difference (|eta_delta| < eta_theta)");
    }
    const double target = 1.0 - beta;
    auto enough = [&](std::size_t n) { return eq_power(n, eta_theta, eta_delta, alpha) >= target; };

    std::size_t lo = 2;
    std::size_t hi = max_equivalence_n;
    if (!enough(hi)) {
        fail(ErrorCode::target_unreachable,
            "target power is unreachable below N = " + std::to_string(max_equivalence_n));
    }
    if (enough(lo)) {
        hi = lo;
    }
    // Invariant: enough(hi), and lo == hi or !enough(lo).
    while (hi - lo > 1) {
        std::size_t mid = lo + (hi - lo) / 2;
        if (enough(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    PlanResult r;
    r.n = hi;
    r.achieved_power = eq_power(hi, eta_theta, eta_delta, alpha);
    r.input = { TestMode::eq, PathKind::distinct, eta_theta, eta_delta, alpha, beta };
    return r;
}

PlanResult plan(const PlanInput& input)
{
    PlanResult r;
    if (input.mode == TestMode::ni) {
        r = ni_sample_size(input);
    } else if (input.eta_delta == 0.0) {
        r = eq_sample_size_delta0(input.eta_theta, input.alpha, input.beta);
    } else {
        r = eq_sample_size_search(input.eta_theta, input.eta_delta, input.alpha, input.beta);
    }
    r.input = input;
    return r;
}

std::size_t attrition_inflate(std::size_t n, double dropout)
{
    require(dropout >= 0.0 && dropout < 1.0, "dropout must lie in [0, 1)");
    // Exact rational ceiling when dropout has few decimals; avoids 244/0.8 = 305.00000000000006.
    const double raw = static_cast<double>(n) / (1.0 - dropout);
    const double rounded = std::round(raw);
    if (std::fabs(raw - rounded) <= 1e-9 * std::max(1.0, raw)) {
        return static_cast<std::size_t>(rounded);
    }
    return ceil_count(raw);
}

std::vector<CurveRow> power_curve(TestMode mode, PathKind path, std::span<const std::size_t> ns,
    std::span<const CurvePoint> grid, double alpha, const McHook& mc)
{
    (void)path; // the standardized grid already encodes the path
    require(!ns.empty(), "power_curve: the list of sample sizes is empty");
    require(!grid.empty(), "power_curve: the effect-size grid is empty");
    std::vector<CurveRow> rows;
    rows.reserve(ns.size() * grid.size());
    for (std::size_t n : ns) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const auto& pt = grid[i];
            CurveRow row;
            row.n = n;
            row.eta_theta = pt.eta_theta;
            row.eta_delta = pt.eta_delta;
            row.eta = pt.eta_theta - pt.eta_delta;
            if (mode == TestMode::ni) {
                row.analytic_power = ni_power(n, row.eta, alpha);
            } else {
                // Curves cross the margin; outside the band the formula is evaluated as is.
                require(n >= 1 && alpha > 0.0 && alpha < 1.0, "power_curve: invalid n or alpha");
                require(std::isfinite(pt.eta_theta) && std::isfinite(pt.eta_delta), "power_curve: eta must be finite");
                row.analytic_power = eq_power_formula(n, pt.eta_theta, pt.eta_delta, alpha);
            }
            if (mc) {
                auto est = mc(n, i);
                row.mc_power = est.power;
                row.se = est.se;
            }
            rows.push_back(row);
        }
    }
    return rows;
}

} // namespace smartnie
