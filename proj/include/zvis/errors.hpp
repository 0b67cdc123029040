#pragma once

#include <stdexcept>
#include <string>

namespace zvis {

enum class ErrorCode {
    InvalidArgument,
    NumericalBlowup,
    NoValidSamples,
    SingularPoint,
    NonpositiveValue,
    DomainError,
    DegenerateEstimate,
};

/// Library error carrying a machine-checkable code next to the message.
/// `index` carries the step or iteration the failure occurred at, when known.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what, long index = -1)
        : std::runtime_error(what), code_(code), index_(index) {}

    ErrorCode code() const { return code_; }
    long index() const { return index_; }

private:
    ErrorCode code_;
    long index_;
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
        case ErrorCode::NumericalBlowup: return "NUMERICAL_BLOWUP";
        case ErrorCode::NoValidSamples: return "NO_VALID_SAMPLES";
        case ErrorCode::SingularPoint: return "SINGULAR_POINT";
        case ErrorCode::NonpositiveValue: return "NONPOSITIVE_VALUE";
        case ErrorCode::DomainError: return "DOMAIN_ERROR";
        case ErrorCode::DegenerateEstimate: return "DEGENERATE_ESTIMATE";
    }
    return "UNKNOWN";
}

} // namespace zvis
