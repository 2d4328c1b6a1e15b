#pragma once

#include <stdexcept>
#include <string>

namespace ncindex {

// Every failure raised by the library carries one of these tags so callers
// (and tests) can branch on the kind rather than on message text.
enum class ErrorKind {
    NonHermitianInput,
    NonConvergence,
    DomainError,
    InvalidExponent,
    PoleError,
    ShapeMismatch,
    DegenerateWindow,
    SingularResolvent,
    DegreeOverflow,
    InvalidDimension,
    InvalidTheta,
    InvalidMu,
    SingularPhase,
    ArityUnderflow,
    NotAnInvolution,
    ParityMismatch,
    NotIdempotent,
    NotUnitary,
    UnfitModel,
    IllConditionedFit,
    AmbiguousGap,
    MissingZetaModel,
    ContourViolation,
    ConfigParseError,
    UnknownModel,
    UnknownClass,
    IoError,
    ValidationFailure,
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace ncindex
