#include "smartnie/design.hpp"

#include <cmath>
#include <string>

#include "smartnie/error.hpp"

namespace smartnie {

std::string_view to_string(Arm arm) noexcept { return arm == Arm::a ? "a" : "ac"; }

std::string_view to_string(Stage2 stage2) noexcept
{
    switch (stage2) {
    case Stage2::a: return "a";
    case Stage2::ac: return "ac";
    case Stage2::m: return "m";
    case Stage2::v: return "v";
    }
    return "?";
}

std::string_view to_string(Tactic tactic) noexcept { return tactic == Tactic::m ? "m" : "v"; }

std::string_view to_string(AiId id) noexcept
{
    switch (id) {
    case AiId::d1: return "d1";
    case AiId::d2: return "d2";
    case AiId::d3: return "d3";
    case AiId::d4: return "d4";
    }
    return "?";
}

std::string_view to_string(PathKind path) noexcept { return path == PathKind::distinct ? "distinct" : "shared"; }

Arm parse_arm(std::string_view text)
{
    if (text == "a") {
        return Arm::a;
    }
    if (text == "ac") {
        return Arm::ac;
    }
    fail(ErrorCode::parse_error, "invalid stage1 '" + std::string(text) + "' (expected a or ac)");
}

Stage2 parse_stage2(std::string_view text)
{
    if (text == "a") {
        return Stage2::a;
    }
    if (text == "ac") {
        return Stage2::ac;
    }
    if (text == "m") {
        return Stage2::m;
    }
    if (text == "v") {
        return Stage2::v;
    }
    fail(ErrorCode::parse_error, "invalid stage2 '" + std::string(text) + "' (expected a, ac, m or v)");
}

AiId parse_ai(std::string_view text)
{
    for (AiId id : all_ais) {
        if (text == to_string(id)) {
            return id;
        }
    }
    fail(ErrorCode::parse_error, "invalid adaptive intervention '" + std::string(text) + "' (expected d1..d4)");
}

PathKind parse_path(std::string_view text)
{
    if (text == "distinct") {
        return PathKind::distinct;
    }
    if (text == "shared") {
        return PathKind::shared;
    }
    fail(ErrorCode::parse_error, "invalid path '" + std::string(text) + "' (expected distinct or shared)");
}

AiPair::AiPair(AiId control, AiId candidate)
    : control_(control)
    , candidate_(candidate)
{
    require(control != candidate, "an AI pair needs two different adaptive interventions");
    path_ = EmbeddedAI::of(control).stage1 == EmbeddedAI::of(candidate).stage1 ? PathKind::shared : PathKind::distinct;
}

namespace {

    bool interior(double p) { return p > 0.0 && p < 1.0; }

} // namespace

void RandomizationProbs::validate() const
{
    require(interior(pi_a), "pi_a must lie strictly inside (0, 1)");
    require(interior(pi_a_v), "pi_a_v must lie strictly inside (0, 1)");
    require(interior(pi_ac_v), "pi_ac_v must lie strictly inside (0, 1)");
}

void SmartDesign::validate() const
{
    require(std::isfinite(sigma) && sigma > 0.0, "sigma must be positive");
    require(gamma_a >= 0.0 && gamma_a <= 1.0, "gamma_a must lie in [0, 1]");
    require(gamma_ac >= 0.0 && gamma_ac <= 1.0, "gamma_ac must lie in [0, 1]");
    for (double mu : { means.a_a, means.a_m, means.a_v, means.ac_ac, means.ac_m, means.ac_v }) {
        require(std::isfinite(mu), "cell means must be finite");
    }
    probs.validate();
}

std::vector<std::string> SmartDesign::warnings() const
{
    std::vector<std::string> out;
    auto check = [&out](double gamma, std::string_view name) {
        if (gamma == 0.0 || gamma == 1.0) {
            out.push_back(std::string(name) + " is degenerate (" + (gamma == 0.0 ? "0" : "1")
                + "); one stratum of that arm is empty");
        }
    };
    check(gamma_a, "gamma_a");
    check(gamma_ac, "gamma_ac");
    return out;
}

double ai_mean(const SmartDesign& design, AiId ai)
{
    design.validate();
    auto d = EmbeddedAI::of(ai);
    double g = design.gamma(d.stage1);
    return g * design.means.responder(d.stage1) + (1.0 - g) * design.means.nonresponder(d.stage1, d.nonresponder);
}

double ai_variance_coeff(const SmartDesign& design, AiId ai)
{
    design.validate();
    auto d = EmbeddedAI::of(ai);
    const double g = design.gamma(d.stage1);
    const double p1 = design.probs.stage1(d.stage1);
    const double p2 = design.probs.stage2(d.stage1, d.nonresponder);
    const double s2 = design.sigma * design.sigma;
    const double m11 = design.means.responder(d.stage1);
    const double m12 = design.means.nonresponder(d.stage1, d.nonresponder);

    double value = (1.0 - g + g * p2) / (p1 * p2) * s2
        + g * (1.0 - g * p1) / p1 * m11 * m11
        + (1.0 - g) * (1.0 - (1.0 - g) * p1 * p2) / (p1 * p2) * m12 * m12
        - 2.0 * g * (1.0 - g) * m11 * m12;
    // Exact value is E[W^2 Y^2] - E[WY]^2 >= 0; clamp rounding noise only.
    return value < 0.0 ? 0.0 : value;
}

double shared_cov_coeff(const SmartDesign& design, const AiPair& pair)
{
    if (pair.path() != PathKind::shared) {
        fail(ErrorCode::invalid_argument, "shared_cov_coeff requires a shared-path pair");
    }
    design.validate();
    const Arm arm = EmbeddedAI::of(pair.control()).stage1;
    const double g = design.gamma(arm);
    const double p1 = design.probs.stage1(arm);
    const double m11 = design.means.responder(arm);
    return g / p1 * (design.sigma * design.sigma + m11 * m11)
        - ai_mean(design, pair.control()) * ai_mean(design, pair.candidate());
}

double diff_variance_coeff(const SmartDesign& design, const AiPair& pair)
{
    double sum = ai_variance_coeff(design, pair.control()) + ai_variance_coeff(design, pair.candidate());
    if (pair.path() == PathKind::shared) {
        sum -= 2.0 * shared_cov_coeff(design, pair);
    }
    return sum < 0.0 ? 0.0 : sum;
}

double diff_variance(const SmartDesign& design, const AiPair& pair, std::size_t n)
{
    require(n >= 1, "diff_variance: n must be at least 1");
    return diff_variance_coeff(design, pair) / static_cast<double>(n);
}

StandardizedEffect standardized_quantities(const SmartDesign& design, const AiPair& pair, double theta, double delta)
{
    require(std::isfinite(theta) && std::isfinite(delta), "theta and delta must be finite");
    const double half = diff_variance_coeff(design, pair) / 2.0;
    if (!(half > 0.0)) {
        fail(ErrorCode::invalid_argument, "standardization scale is zero; the two AIs cannot be distinguished");
    }
    const double scale = std::sqrt(half);
    StandardizedEffect out;
    out.eta_theta = theta / scale;
    out.eta_delta = delta / scale;
    out.eta = out.eta_theta - out.eta_delta;
    return out;
}

} // namespace smartnie
