#pragma once

#include "spsdr/error.hpp"
#include "spsdr/types.hpp"

namespace spsdr::linalg {

/// Eigenpairs of a symmetric matrix, eigenvalues in descending order.
/// Equal eigenvalues keep the solver's original index order, and every
/// eigenvector has its largest-magnitude entry positive.
struct SymmetricEigen {
    Vector values;
    Matrix vectors;
};

SymmetricEigen sym_eig_descending(const Matrix& a);

/// Square root, inverse square root, inverse and log-determinant of a
/// symmetric positive-definite matrix obtained from one eigendecomposition.
struct SpdFactor {
    Vector eigvals;  ///< ascending, after jitter
    Matrix eigvecs;
    double jitter = 0.0;
    bool jittered = false;

    [[nodiscard]] Matrix sqrt() const;
    [[nodiscard]] Matrix inv_sqrt() const;
    [[nodiscard]] Matrix inverse() const;
    [[nodiscard]] double logdet() const;
};

/// Eigenvalue floor applied before any inverse root is taken.
inline constexpr double kEigenFloor = 1e-10;
/// Relative jitter added once when the floor is violated.
inline constexpr double kJitterScale = 1e-8;

/// Factor a symmetric PD matrix. The floor is `kEigenFloor * scale`; when the
/// smallest eigenvalue falls below it, `kJitterScale * mean(eig) * I` is added
/// once and the check repeated. Throws `failure` when the retry also fails.
SpdFactor factor_spd(const Matrix& a, ErrorCode failure, double scale = 1.0);

/// log|det A| of a symmetric PD matrix via LDLT; NaN if not PD.
double logdet_spd(const Matrix& a);

[[nodiscard]] inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

}  // namespace spsdr::linalg
