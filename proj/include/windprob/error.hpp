#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace windprob {

enum class ErrorCode {
    InvalidArgument,
    MissingMedian,
    ZeroCapacity,
    DegenerateResultant,
    MisalignedTarget,
    EmptyData,
    NonFiniteGradient,
    SchemaMismatch,
    CrossedInterval,
    InfeasibleLevel,
    MissingLevel,
    NonFiniteInput,
    DegenerateVariance,
    TooFewSamples,
    InvalidThrust,
    ZeroSpeed,
    DegenerateData,
    LengthMismatch,
    Misalignment,
    Parse,
    Config,
    Io,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::MissingMedian: return "missing-median";
    case ErrorCode::ZeroCapacity: return "zero-capacity";
    case ErrorCode::DegenerateResultant: return "degenerate-resultant";
    case ErrorCode::MisalignedTarget: return "misaligned-target";
    case ErrorCode::EmptyData: return "empty-data";
    case ErrorCode::NonFiniteGradient: return "non-finite-gradient";
    case ErrorCode::SchemaMismatch: return "schema-mismatch";
    case ErrorCode::CrossedInterval: return "crossed-interval";
    case ErrorCode::InfeasibleLevel: return "infeasible-level";
    case ErrorCode::MissingLevel: return "missing-level";
    case ErrorCode::NonFiniteInput: return "non-finite-input";
    case ErrorCode::DegenerateVariance: return "degenerate-variance";
    case ErrorCode::TooFewSamples: return "too-few-samples";
    case ErrorCode::InvalidThrust: return "invalid-ct";
    case ErrorCode::ZeroSpeed: return "zero-speed";
    case ErrorCode::DegenerateData: return "degenerate-data";
    case ErrorCode::LengthMismatch: return "length-mismatch";
    case ErrorCode::Misalignment: return "misalignment";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Config: return "config";
    case ErrorCode::Io: return "io";
    }
    return "unknown";
}

/// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, ErrorCode code, const std::string& what) {
    if (!condition) {
        fail(code, what);
    }
}

} // namespace windprob
