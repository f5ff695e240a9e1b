#include "spsdr/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace spsdr::linalg {

SymmetricEigen sym_eig_descending(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrize(a));
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorCode::EigenFailure, "symmetric eigensolver did not converge");
    }
    const Vector& vals = solver.eigenvalues();
    const Index k = vals.size();
    std::vector<Index> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index lhs, Index rhs) { return vals(lhs) > vals(rhs); });

    SymmetricEigen out;
    out.values.resize(k);
    out.vectors.resize(a.rows(), k);
    for (Index j = 0; j < k; ++j) {
        const Index src = order[static_cast<std::size_t>(j)];
        out.values(j) = vals(src);
        Vector v = solver.eigenvectors().col(src);
        Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) {
            v = -v;
        }
        out.vectors.col(j) = v;
    }
    return out;
}

Matrix SpdFactor::sqrt() const {
    return eigvecs * eigvals.cwiseSqrt().asDiagonal() * eigvecs.transpose();
}

Matrix SpdFactor::inv_sqrt() const {
    return eigvecs * eigvals.cwiseSqrt().cwiseInverse().asDiagonal() * eigvecs.transpose();
}

Matrix SpdFactor::inverse() const {
    return eigvecs * eigvals.cwiseInverse().asDiagonal() * eigvecs.transpose();
}

double SpdFactor::logdet() const { return eigvals.array().log().sum(); }

SpdFactor factor_spd(const Matrix& a, ErrorCode failure, double scale) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        throw Error(ErrorCode::InvalidArgument, "factor_spd needs a non-empty square matrix");
    }
    if (!a.allFinite()) {
        throw Error(failure, "matrix has non-finite entries");
    }
    const double floor = kEigenFloor * scale;
    Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrize(a));
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorCode::EigenFailure, "symmetric eigensolver did not converge");
    }
    SpdFactor f;
    f.eigvals = solver.eigenvalues();
    f.eigvecs = solver.eigenvectors();
    if (f.eigvals(0) >= floor) {
        return f;
    }
    // Adding c*I shifts eigenvalues without touching eigenvectors.
    const double jitter = kJitterScale * f.eigvals.mean();
    f.eigvals.array() += jitter;
    f.jitter = jitter;
    f.jittered = true;
    if (!(f.eigvals(0) >= floor)) {
        throw Error(failure, "smallest eigenvalue " + std::to_string(f.eigvals(0) - jitter) +
                                 " below floor " + std::to_string(floor) + " after jitter");
    }
    return f;
}

double logdet_spd(const Matrix& a) {
    Eigen::LDLT<Matrix> ldlt(symmetrize(a));
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const Vector diag = ldlt.vectorD();
    if ((diag.array() <= 0.0).any()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return diag.array().log().sum();
}

}  // namespace spsdr::linalg
