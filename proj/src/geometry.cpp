#include "spsdr/geometry.hpp"

#include "spsdr/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace spsdr {

void Coordinates::validate() const {
    if (points.cols() != 2) {
        throw Error(ErrorCode::InvalidArgument, "coordinates must have two columns");
    }
    if (points.rows() < 2) {
        throw Error(ErrorCode::InvalidArgument, "at least two sites are required");
    }
    if (!points.allFinite()) {
        throw Error(ErrorCode::InvalidArgument, "coordinates contain non-finite values");
    }
}

double DistanceMatrix::median() const {
    const Index n = dist.rows();
    std::vector<double> upper;
    upper.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Index j = 1; j < n; ++j) {
        for (Index i = 0; i < j; ++i) {
            upper.push_back(dist(i, j));
        }
    }
    if (upper.empty()) {
        return 0.0;
    }
    const auto mid = upper.begin() + static_cast<std::ptrdiff_t>(upper.size() / 2);
    std::nth_element(upper.begin(), mid, upper.end());
    if (upper.size() % 2 == 1) {
        return *mid;
    }
    const double hi = *mid;
    const double lo = *std::max_element(upper.begin(), mid);
    return 0.5 * (lo + hi);
}

DistanceMatrix pairwise_distances(const Coordinates& coords) {
    coords.validate();
    const Index n = coords.size();
    DistanceMatrix out;
    out.dist = Matrix::Zero(n, n);
    for (Index j = 1; j < n; ++j) {
        for (Index i = 0; i < j; ++i) {
            const double d = (coords.points.row(i) - coords.points.row(j)).norm();
            if (d == 0.0) {
                throw Error(ErrorCode::DuplicatePoints,
                            "sites " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
            }
            out.dist(i, j) = d;
            out.dist(j, i) = d;
        }
    }
    return out;
}

CorrelationH build_h(const DistanceMatrix& dist, double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw Error(ErrorCode::NonPositiveLambda, "lambda must be positive, got " + std::to_string(lambda));
    }
    CorrelationH out;
    out.lambda = lambda;
    out.h = (-lambda * dist.dist.array()).exp().matrix();
    out.h.diagonal().setOnes();
    out.factor = linalg::factor_spd(out.h, ErrorCode::NearSingularH);
    return out;
}

double max_min_distance(const DistanceMatrix& dist) {
    const Index n = dist.size();
    if (n < 2) {
        throw Error(ErrorCode::InvalidArgument, "need at least two sites");
    }
    double worst = 0.0;
    for (Index j = 0; j < n; ++j) {
        double nearest = std::numeric_limits<double>::infinity();
        for (Index i = 0; i < n; ++i) {
            if (i != j) {
                nearest = std::min(nearest, dist.dist(i, j));
            }
        }
        worst = std::max(worst, nearest);
    }
    return worst;
}

NeighborWeights build_w(const DistanceMatrix& dist, double d_max) {
    if (!(d_max > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "d_max must be positive");
    }
    const Index n = dist.size();
    NeighborWeights out;
    out.d_max = d_max;
    out.w = Matrix::Zero(n, n);
    for (Index j = 0; j < n; ++j) {
        Index count = 0;
        for (Index i = 0; i < n; ++i) {
            if (i != j && dist.dist(i, j) <= d_max) {
                out.w(i, j) = 1.0;
                ++count;
            }
        }
        if (count == 0) {
            throw Error(ErrorCode::IsolatedPoint,
                        "site " + std::to_string(j) + " has no neighbor within d_max");
        }
        out.w.col(j) /= static_cast<double>(count);
    }
    return out;
}

LaggedWeights build_w_theta(const NeighborWeights& w, double theta) {
    if (!std::isfinite(theta)) {
        throw Error(ErrorCode::InvalidArgument, "theta must be finite");
    }
    const Index n = w.w.rows();
    LaggedWeights out;
    out.theta = theta;
    out.w_theta = Matrix::Identity(n, n) - theta * w.w;
    if (theta == 0.0) {
        out.log_abs_det = 0.0;
        return out;
    }
    Eigen::PartialPivLU<Matrix> lu(out.w_theta);
    const Vector diag = lu.matrixLU().diagonal();
    const double max_pivot = diag.cwiseAbs().maxCoeff();
    const double min_pivot = diag.cwiseAbs().minCoeff();
    if (!(min_pivot > 1e-12 * max_pivot) || !(lu.rcond() > 1e-14)) {
        throw Error(ErrorCode::SingularWTheta, "I - theta W is numerically singular at theta = " +
                                                   std::to_string(theta));
    }
    out.log_abs_det = diag.cwiseAbs().array().log().sum();
    return out;
}

}  // namespace spsdr
