#include "smartnie/json_io.hpp"

#include <cmath>
#include <limits>

#include "smartnie/error.hpp"

namespace smartnie {

Json number(double value)
{
    if (std::isfinite(value)) {
        return value;
    }
    if (std::isnan(value)) {
        return "nan";
    }
    return value > 0 ? "inf" : "-inf";
}

double read_number(const Json& value)
{
    if (value.is_number()) {
        return value.get<double>();
    }
    if (value.is_string()) {
        const auto& s = value.get_ref<const std::string&>();
        if (s == "inf") {
            return std::numeric_limits<double>::infinity();
        }
        if (s == "-inf") {
            return -std::numeric_limits<double>::infinity();
        }
        if (s == "nan") {
            return std::numeric_limits<double>::quiet_NaN();
        }
    }
    fail(ErrorCode::parse_error, "expected a number, got " + value.dump());
}

namespace {

    Json optional_number(const std::optional<double>& v) { return v ? number(*v) : Json(nullptr); }

    std::optional<double> read_optional(const Json& doc, const char* key)
    {
        if (!doc.contains(key) || doc.at(key).is_null()) {
            return std::nullopt;
        }
        return read_number(doc.at(key));
    }

    const Json& field(const Json& doc, const char* key)
    {
        if (!doc.is_object() || !doc.contains(key)) {
            fail(ErrorCode::parse_error, std::string("missing field '") + key + "'");
        }
        return doc.at(key);
    }

    std::string read_string(const Json& doc, const char* key)
    {
        const Json& v = field(doc, key);
        if (!v.is_string()) {
            fail(ErrorCode::parse_error, std::string("field '") + key + "' must be a string");
        }
        return v.get<std::string>();
    }

    TestKind parse_kind(std::string_view s)
    {
        if (s == "non_inferiority") {
            return TestKind::non_inferiority;
        }
        if (s == "equivalence") {
            return TestKind::equivalence;
        }
        fail(ErrorCode::parse_error, "invalid test kind '" + std::string(s) + "'");
    }

    Decision parse_decision(std::string_view s)
    {
        if (s == "reject_null") {
            return Decision::reject_null;
        }
        if (s == "fail_to_reject") {
            return Decision::fail_to_reject;
        }
        fail(ErrorCode::parse_error, "invalid decision '" + std::string(s) + "'");
    }

} // namespace

Json to_json(const TestReport& r)
{
    Json j;
    j["kind"] = to_string(r.kind);
    j["control"] = to_string(r.pair.control());
    j["new"] = to_string(r.pair.candidate());
    j["path"] = to_string(r.pair.path());
    j["n"] = r.n;
    j["mean_control"] = number(r.mean_control);
    j["mean_new"] = number(r.mean_candidate);
    j["difference"] = number(r.mean_control - r.mean_candidate);
    j["variance"] = number(r.variance);
    j["theta"] = number(r.theta);
    j["alpha"] = number(r.alpha);
    j["z_ni"] = number(r.z_ni);
    j["p_ni"] = number(r.p_ni);
    j["bf_bound_ni"] = optional_number(r.bf_bound_ni);
    j["z_ns"] = optional_number(r.z_ns);
    j["p_ns"] = optional_number(r.p_ns);
    j["bf_bound_ns"] = optional_number(r.bf_bound_ns);
    j["decision"] = to_string(r.decision);
    j["warnings"] = r.warnings;
    return j;
}

TestReport report_from_json(const Json& doc)
{
    try {
        TestReport r;
        r.kind = parse_kind(read_string(doc, "kind"));
        r.pair = AiPair(parse_ai(read_string(doc, "control")), parse_ai(read_string(doc, "new")));
        r.n = field(doc, "n").get<std::size_t>();
        r.mean_control = read_number(field(doc, "mean_control"));
        r.mean_candidate = read_number(field(doc, "mean_new"));
        r.variance = read_number(field(doc, "variance"));
        r.theta = read_number(field(doc, "theta"));
        r.alpha = read_number(field(doc, "alpha"));
        r.z_ni = read_number(field(doc, "z_ni"));
        r.p_ni = read_number(field(doc, "p_ni"));
        r.bf_bound_ni = read_optional(doc, "bf_bound_ni");
        r.z_ns = read_optional(doc, "z_ns");
        r.p_ns = read_optional(doc, "p_ns");
        r.bf_bound_ns = read_optional(doc, "bf_bound_ns");
        r.decision = parse_decision(read_string(doc, "decision"));
        r.warnings = field(doc, "warnings").get<std::vector<std::string>>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::parse_error, std::string("malformed report: ") + e.what());
    }
}

Json to_json(const TrialRecord& r)
{
    return Json { { "id", r.id }, { "stage1", to_string(r.stage1) }, { "response", r.responder ? 1 : 0 },
        { "stage2", to_string(r.stage2) }, { "outcome", number(r.outcome) } };
}

TrialRecord record_from_json(const Json& doc)
{
    TrialRecord r;
    if (doc.contains("id")) {
        const Json& id = doc.at("id");
        r.id = id.is_string() ? id.get<std::string>() : id.dump();
    }
    r.stage1 = parse_arm(read_string(doc, "stage1"));
    const Json& resp = field(doc, "response");
    if (resp.is_boolean()) {
        r.responder = resp.get<bool>();
    } else if (resp.is_number_integer() && (resp.get<long long>() == 0 || resp.get<long long>() == 1)) {
        r.responder = resp.get<long long>() == 1;
    } else {
        fail(ErrorCode::parse_error, "response must be 0 or 1");
    }
    r.stage2 = parse_stage2(read_string(doc, "stage2"));
    r.outcome = read_number(field(doc, "outcome"));
    validate(r);
    return r;
}

Json to_json(const PlanResult& r)
{
    return Json { { "n", r.n }, { "achieved_power", number(r.achieved_power) } };
}

Json to_json(const McEstimate& e)
{
    return Json { { "estimate", number(e.estimate) }, { "se", number(e.se) }, { "reps", e.reps }, { "seed", e.seed },
        { "n", e.n }, { "realized_n", e.realized_n } };
}

Json to_json(const ScenarioParams& p)
{
    return Json { { "sigma", p.sigma }, { "gamma_a", p.gamma_a }, { "gamma_ac", p.gamma_ac }, { "mu_La", p.mu_La },
        { "sigma_L", p.sigma_L }, { "zeta0", p.zeta0 }, { "zeta1a", p.zeta1a }, { "zeta1ac", p.zeta1ac },
        { "xi0", p.xi0 }, { "xi1a", p.xi1a }, { "xi1ac", p.xi1ac }, { "xi2_a_m", p.xi2_a_m },
        { "xi2_a_v", p.xi2_a_v }, { "xi2_ac_m", p.xi2_ac_m }, { "xi2_ac_v", p.xi2_ac_v }, { "alpha", p.alpha },
        { "beta", p.beta }, { "theta", p.theta } };
}

Json to_json(const Preset& p)
{
    Json rows = Json::array();
    for (std::size_t i = 0; i < p.rows.size(); ++i) {
        const auto& row = p.rows[i];
        SimScenario s = build_scenario(row.params);
        const auto& eff = effect_for(s, p.path);
        rows.push_back(Json { { "row", i + 1 }, { "label", row.label }, { "n", row.n },
            { "published_eta", optional_number(row.published_eta) },
            { "published_power", optional_number(row.published_power) },
            { "published_robust", optional_number(row.published_robust) },
            { "delta", number(p.path == PathKind::distinct ? s.delta_dp : s.delta_sp) },
            { "eta_theta", number(eff.eta_theta) }, { "eta_delta", number(eff.eta_delta) },
            { "eta", number(eff.eta) }, { "params", to_json(row.params) } });
    }
    return Json { { "name", p.name }, { "description", p.description }, { "kind", to_string(p.kind) },
        { "mode", to_string(p.mode) }, { "path", to_string(p.path) },
        { "control", to_string(p.pair().control()) }, { "new", to_string(p.pair().candidate()) },
        { "curve_ns", p.curve_ns }, { "rows", rows } };
}

Json to_json(const RandomizationProbs& p)
{
    return Json { { "pi_a", p.pi_a }, { "pi_a_v", p.pi_a_v }, { "pi_ac_v", p.pi_ac_v } };
}

Json to_json(const SmartDesign& d)
{
    Json j { { "means",
                 Json { { "a_a", d.means.a_a }, { "a_m", d.means.a_m }, { "a_v", d.means.a_v },
                     { "ac_ac", d.means.ac_ac }, { "ac_m", d.means.ac_m }, { "ac_v", d.means.ac_v } } },
        { "sigma", d.sigma }, { "gamma_a", d.gamma_a }, { "gamma_ac", d.gamma_ac } };
    for (auto& [k, v] : to_json(d.probs).items()) {
        j[k] = v;
    }
    return j;
}

SmartDesign design_from_json(const Json& doc)
{
    SmartDesign d;
    const Json& m = field(doc, "means");
    d.means.a_a = read_number(field(m, "a_a"));
    d.means.a_m = read_number(field(m, "a_m"));
    d.means.a_v = read_number(field(m, "a_v"));
    d.means.ac_ac = read_number(field(m, "ac_ac"));
    d.means.ac_m = read_number(field(m, "ac_m"));
    d.means.ac_v = read_number(field(m, "ac_v"));
    d.sigma = read_number(field(doc, "sigma"));
    d.gamma_a = read_number(field(doc, "gamma_a"));
    d.gamma_ac = read_number(field(doc, "gamma_ac"));
    d.probs.pi_a = doc.contains("pi_a") ? read_number(doc.at("pi_a")) : 0.5;
    d.probs.pi_a_v = doc.contains("pi_a_v") ? read_number(doc.at("pi_a_v")) : 0.5;
    d.probs.pi_ac_v = doc.contains("pi_ac_v") ? read_number(doc.at("pi_ac_v")) : 0.5;
    d.validate();
    return d;
}

double get_number(const Json& doc, const char* key, double fallback)
{
    return doc.contains(key) && !doc.at(key).is_null() ? read_number(doc.at(key)) : fallback;
}

std::optional<double> get_optional(const Json& doc, const char* key)
{
    if (doc.contains(key) && !doc.at(key).is_null()) {
        return read_number(doc.at(key));
    }
    return std::nullopt;
}

std::string get_string(const Json& doc, const char* key, std::string fallback)
{
    if (!doc.contains(key) || doc.at(key).is_null()) {
        return fallback;
    }
    if (!doc.at(key).is_string()) {
        fail(ErrorCode::parse_error, std::string("field '") + key + "' must be a string");
    }
    return doc.at(key).get<std::string>();
}

std::size_t get_count(const Json& doc, const char* key, std::size_t fallback)
{
    if (!doc.contains(key) || doc.at(key).is_null()) {
        return fallback;
    }
    const Json& v = doc.at(key);
    if (v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0)) {
        return v.get<std::size_t>();
    }
    if (v.is_number_float() && v.get<double>() >= 0 && std::floor(v.get<double>()) == v.get<double>()
        && v.get<double>() < 1e18) {
        return static_cast<std::size_t>(v.get<double>());
    }
    fail(ErrorCode::invalid_argument, std::string("field '") + key + "' must be a non-negative integer");
}

PlanInput plan_input_from_json(const Json& doc)
{
    PlanInput in;
    in.mode = parse_mode(get_string(doc, "mode", "ni"));
    in.alpha = get_number(doc, "alpha", 0.05);
    in.beta = get_number(doc, "beta", 0.20);
    if (doc.contains("design")) {
        SmartDesign design = design_from_json(doc.at("design"));
        AiPair pair(parse_ai(get_string(doc, "control", "d3")), parse_ai(get_string(doc, "new", "d1")));
        if (!doc.contains("theta")) {
            fail(ErrorCode::invalid_argument, "raw planning needs theta");
        }
        return plan_input_from_design(in.mode, design, pair, read_number(doc.at("theta")),
            get_number(doc, "delta", 0.0), in.alpha, in.beta);
    }
    in.path = parse_path(get_string(doc, "path", "distinct"));
    auto eta = get_optional(doc, "eta");
    auto eta_theta = get_optional(doc, "eta_theta");
    if (in.mode == TestMode::ni) {
        if (eta && eta_theta) {
            fail(ErrorCode::invalid_argument, "give either eta or eta_theta/eta_delta, not both");
        }
        if (!eta && !eta_theta) {
            fail(ErrorCode::invalid_argument, "non-inferiority planning needs eta (or eta_theta and eta_delta)");
        }
        in.eta_theta = eta ? *eta : *eta_theta;
        in.eta_delta = eta ? 0.0 : get_number(doc, "eta_delta", 0.0);
    } else {
        if (!eta_theta) {
            fail(ErrorCode::invalid_argument, "equivalence planning needs eta_theta (and optionally eta_delta)");
        }
        in.eta_theta = *eta_theta;
        in.eta_delta = get_number(doc, "eta_delta", 0.0);
    }
    return in;
}

} // namespace smartnie
