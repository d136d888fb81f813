#ifndef ODEGRAD_ERRORS_HPP
#define ODEGRAD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace odegrad {

enum class ErrorCode {
    InvalidArgument,
    DimensionMismatch,
    NonfiniteState,
    CollinearSingularity,
    StepUnderflow,
    MaxStepsExceeded,
    MaxRejectsExceeded,
    CacheMismatch,
    TapeOverflow,
    UnknownMethod,
    DegenerateFit,
    NonfiniteLoss,
    Diverged,
};

const char* error_code_name(ErrorCode code);

/// Exception carrying a machine-checkable error code alongside the message.
class OdeError : public std::runtime_error {
public:
    OdeError(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace odegrad

#endif
