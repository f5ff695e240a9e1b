#include "spsdr/types.hpp"

#include "spsdr/error.hpp"

namespace spsdr {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::DuplicatePoints: return "DuplicatePoints";
        case ErrorCode::NonPositiveLambda: return "NonPositiveLambda";
        case ErrorCode::NearSingularH: return "NearSingularH";
        case ErrorCode::IsolatedPoint: return "IsolatedPoint";
        case ErrorCode::SingularWTheta: return "SingularWTheta";
        case ErrorCode::RankDeficientF: return "RankDeficientF";
        case ErrorCode::ConstantResponse: return "ConstantResponse";
        case ErrorCode::SingularFF: return "SingularFF";
        case ErrorCode::SingularDeltaLS: return "SingularDeltaLS";
        case ErrorCode::RankOutOfRange: return "RankOutOfRange";
        case ErrorCode::EigenFailure: return "EigenFailure";
        case ErrorCode::NonFiniteLoglik: return "NonFiniteLoglik";
        case ErrorCode::SingularDeltaHat: return "SingularDeltaHat";
        case ErrorCode::EmptyGrid: return "EmptyGrid";
        case ErrorCode::NonMonotoneLogliks: return "NonMonotoneLogliks";
        case ErrorCode::CvFailed: return "CvFailed";
        case ErrorCode::EmptyReference: return "EmptyReference";
        case ErrorCode::DegenerateGrid: return "DegenerateGrid";
        case ErrorCode::CovarianceNotPD: return "CovarianceNotPD";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::MethodUnstable: return "MethodUnstable";
    }
    return "Unknown";
}

bool is_input_error(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument:
        case ErrorCode::DuplicatePoints:
        case ErrorCode::NonPositiveLambda:
        case ErrorCode::IsolatedPoint:
        case ErrorCode::ConstantResponse:
        case ErrorCode::RankOutOfRange:
        case ErrorCode::EmptyGrid:
        case ErrorCode::EmptyReference:
        case ErrorCode::DegenerateGrid:
        case ErrorCode::ParseError:
        case ErrorCode::IoError:
            return true;
        default:
            return false;
    }
}

void SpatialSample::validate() const {
    const Index n = x.rows();
    if (n == 0) {
        throw Error(ErrorCode::InvalidArgument, "sample has no rows");
    }
    if (coords.rows() != n || coords.cols() != 2) {
        throw Error(ErrorCode::InvalidArgument, "coordinates must be n x 2 with n matching predictors");
    }
    if (y.size() != n) {
        throw Error(ErrorCode::InvalidArgument, "response length does not match predictor rows");
    }
    if (!x.allFinite() || !y.allFinite() || !coords.allFinite()) {
        throw Error(ErrorCode::InvalidArgument, "sample contains non-finite values");
    }
}

SpatialSample SpatialSample::subset(const std::vector<Index>& rows) const {
    SpatialSample out;
    const auto m = static_cast<Index>(rows.size());
    out.coords.resize(m, coords.cols());
    out.x.resize(m, x.cols());
    out.y.resize(m);
    for (Index i = 0; i < m; ++i) {
        const Index r = rows[static_cast<std::size_t>(i)];
        out.coords.row(i) = coords.row(r);
        out.x.row(i) = x.row(r);
        out.y(i) = y(r);
    }
    return out;
}

}  // namespace spsdr
