#pragma once

#include <stdexcept>
#include <string>

namespace darkstate {

enum class ErrorKind {
    DegenerateSpan,
    UnexpectedDimension,
    SingularSystem,
    UnstableSpectrum,
    TraceMismatch,
    NegativeRadicand,
    StepSizeUnderflow,
    PositivityViolation,
    InvalidTarget,
    InvalidArgument,
    Config,
};

inline const char *to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::DegenerateSpan: return "DegenerateSpan";
        case ErrorKind::UnexpectedDimension: return "UnexpectedDimension";
        case ErrorKind::SingularSystem: return "SingularSystem";
        case ErrorKind::UnstableSpectrum: return "UnstableSpectrum";
        case ErrorKind::TraceMismatch: return "TraceMismatch";
        case ErrorKind::NegativeRadicand: return "NegativeRadicand";
        case ErrorKind::StepSizeUnderflow: return "StepSizeUnderflow";
        case ErrorKind::PositivityViolation: return "PositivityViolation";
        case ErrorKind::InvalidTarget: return "InvalidTarget";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::Config: return "Config";
    }
    return "Unknown";
}

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it onto an exit code without parsing messages.
class Error : public std::runtime_error {
   public:
    Error(ErrorKind kind, const std::string &message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

   private:
    ErrorKind kind_;
};

}  // namespace darkstate
