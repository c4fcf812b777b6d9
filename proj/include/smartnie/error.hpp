#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace smartnie {

// Machine-readable classification of every failure the library reports.
// The service maps these onto HTTP status codes and the CLI onto exit codes.
enum class ErrorCode {
    invalid_argument,
    eta_nonpositive,
    positivity_violation,
    target_unreachable,
    parse_error,
};

constexpr std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::eta_nonpositive: return "eta_nonpositive";
    case ErrorCode::positivity_violation: return "positivity_violation";
    case ErrorCode::target_unreachable: return "target_unreachable";
    case ErrorCode::parse_error: return "parse_error";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message)
        , code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

inline void require(bool condition, const std::string& message)
{
    if (!condition) {
        fail(ErrorCode::invalid_argument, message);
    }
}

} // namespace smartnie
