#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace oldroyd {

enum class ErrorCode {
    NonPositiveCoupling,
    NoDissipation,
    OutOfRange,
    ZeroFrequency,
    GridTooCoarse,
    QuadratureNotConverged,
    WindowTooNarrow,
    HypothesisViolated,
    CflViolation,
    BlowUp,
    NotSPD,
    ConfigError,
    IoError,
};

std::string_view to_string(ErrorCode code);

// Every recoverable failure in the library is reported through this type; the
// code lets callers (and the CLI exit path) branch without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace oldroyd
