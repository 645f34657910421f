#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace weaktomo {

enum class ErrorCode {
    NonHermitianInput,
    InvalidRank,
    ShapeMismatch,
    DimensionMismatch,
    InvalidDimension,
    NotPrime,
    NotOrthonormal,
    NonHermitianObservable,
    PostSelectionImpossible,
    VanishingOverlap,
    IncompletePostSelectionFamily,
    DivisorUnderflow,
    InconsistentRatios,
    InvalidState,
    ConfigError,
};

constexpr std::string_view error_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::NonHermitianInput: return "NonHermitianInput";
        case ErrorCode::InvalidRank: return "InvalidRank";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::InvalidDimension: return "InvalidDimension";
        case ErrorCode::NotPrime: return "NotPrime";
        case ErrorCode::NotOrthonormal: return "NotOrthonormal";
        case ErrorCode::NonHermitianObservable: return "NonHermitianObservable";
        case ErrorCode::PostSelectionImpossible: return "PostSelectionImpossible";
        case ErrorCode::VanishingOverlap: return "VanishingOverlap";
        case ErrorCode::IncompletePostSelectionFamily: return "IncompletePostSelectionFamily";
        case ErrorCode::DivisorUnderflow: return "DivisorUnderflow";
        case ErrorCode::InconsistentRatios: return "InconsistentRatios";
        case ErrorCode::InvalidState: return "InvalidState";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

/// Single exception type for the library; `code()` identifies the failure.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string &what)
        : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string &what) {
    throw Error(code, what);
}

}  // namespace weaktomo
