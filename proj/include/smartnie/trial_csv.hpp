#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smartnie/inference.hpp"

namespace smartnie {

inline constexpr std::string_view trial_csv_header = "id,stage1,response,stage2,outcome";

/// All-or-nothing parse. Errors are Error(parse_error) prefixed with the
/// 1-based line number, e.g. "line 2: responder stage2 must equal stage1".
std::vector<TrialRecord> parse_trial_csv(std::istream& in);
std::vector<TrialRecord> parse_trial_csv(std::string_view text);
std::vector<TrialRecord> read_trial_csv(const std::filesystem::path& path);

std::string write_trial_csv(std::span<const TrialRecord> records);

} // namespace smartnie
