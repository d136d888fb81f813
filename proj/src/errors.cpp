#include "odegrad/errors.hpp"

namespace odegrad {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
        case ErrorCode::DimensionMismatch: return "DIMENSION_MISMATCH";
        case ErrorCode::NonfiniteState: return "NONFINITE_STATE";
        case ErrorCode::CollinearSingularity: return "COLLINEAR_SINGULARITY";
        case ErrorCode::StepUnderflow: return "STEP_UNDERFLOW";
        case ErrorCode::MaxStepsExceeded: return "MAX_STEPS_EXCEEDED";
        case ErrorCode::MaxRejectsExceeded: return "MAX_REJECTS_EXCEEDED";
        case ErrorCode::CacheMismatch: return "CACHE_MISMATCH";
        case ErrorCode::TapeOverflow: return "TAPE_OVERFLOW";
        case ErrorCode::UnknownMethod: return "UNKNOWN_METHOD";
        case ErrorCode::DegenerateFit: return "DEGENERATE_FIT";
        case ErrorCode::NonfiniteLoss: return "NONFINITE_LOSS";
        case ErrorCode::Diverged: return "DIVERGED";
    }
    return "UNKNOWN";
}

} // namespace odegrad
