#pragma once

#include <string>
#include <string_view>

#include "smartnie/inference.hpp"

namespace smartnie {

enum class ReportFormat { text, json };

ReportFormat parse_report_format(std::string_view text);

/// Text: one "label: value" line per field, p-values to 4 decimals and
/// Bayes-factor bounds to 2. JSON: full precision, parse_report inverts it.
std::string render_report(const TestReport& report, ReportFormat format);

TestReport parse_report(std::string_view json_text);

} // namespace smartnie
