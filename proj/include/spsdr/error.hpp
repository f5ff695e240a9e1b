#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spsdr {

enum class ErrorCode {
    InvalidArgument,
    DuplicatePoints,
    NonPositiveLambda,
    NearSingularH,
    IsolatedPoint,
    SingularWTheta,
    RankDeficientF,
    ConstantResponse,
    SingularFF,
    SingularDeltaLS,
    RankOutOfRange,
    EigenFailure,
    NonFiniteLoglik,
    SingularDeltaHat,
    EmptyGrid,
    NonMonotoneLogliks,
    CvFailed,
    EmptyReference,
    DegenerateGrid,
    CovarianceNotPD,
    ParseError,
    IoError,
    MethodUnstable,
};

std::string_view to_string(ErrorCode code) noexcept;

/// True for failures caused by malformed or inconsistent input (CLI exit 2);
/// everything else is a numerical failure (CLI exit 3).
bool is_input_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace spsdr
