#pragma once

// JSON views of the library types, shared by the report renderer, the CLI
// and the HTTP service.

#include <json.hpp>

#include "smartnie/inference.hpp"
#include "smartnie/planning.hpp"
#include "smartnie/simulation.hpp"

namespace smartnie {

using Json = nlohmann::ordered_json;

/// Non-finite values become the strings "inf", "-inf" or "nan".
Json number(double value);
double read_number(const Json& value);

Json to_json(const TestReport& report);
TestReport report_from_json(const Json& doc);

Json to_json(const TrialRecord& record);
TrialRecord record_from_json(const Json& doc);

Json to_json(const PlanResult& result);
Json to_json(const McEstimate& estimate);
Json to_json(const ScenarioParams& params);
Json to_json(const Preset& preset);
Json to_json(const RandomizationProbs& probs);
Json to_json(const SmartDesign& design);

/// Reads {means: {a_a, a_m, a_v, ac_ac, ac_m, ac_v}, sigma, gamma_a, gamma_ac, pi_a, pi_a_v, pi_ac_v}.
SmartDesign design_from_json(const Json& doc);

// Request-field readers: absent or null fields take the fallback.
double get_number(const Json& doc, const char* key, double fallback);
std::optional<double> get_optional(const Json& doc, const char* key);
std::string get_string(const Json& doc, const char* key, std::string fallback);
/// Throws Error(invalid_argument) unless the field is a non-negative integer.
std::size_t get_count(const Json& doc, const char* key, std::size_t fallback);

/// PlanInput from {mode, path, eta | eta_theta + eta_delta, alpha, beta}, or
/// from {mode, design, control, new, theta, delta, alpha, beta}.
PlanInput plan_input_from_json(const Json& doc);

} // namespace smartnie
