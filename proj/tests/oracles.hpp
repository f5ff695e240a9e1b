#pragma once

// Reference computations written from the model definitions, independent of
// the library's whitening and closed-form code paths.

#include "spsdr/types.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace spsdr::oracle {

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
    }
    return m;
}

inline Matrix random_spd(Index dim, std::mt19937_64& rng) {
    const Matrix g = random_matrix(dim, dim, rng);
    return g * g.transpose() + 0.5 * Matrix::Identity(dim, dim);
}

inline Matrix random_coords(Index n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Matrix c(n, 2);
    for (Index i = 0; i < n; ++i) {
        c(i, 0) = unit(rng);
        c(i, 1) = unit(rng);
    }
    return c;
}

/// Gaussian log-density of vec(X) with mean 1 mu' + F C' and covariance S (x) Delta,
/// given S^{-1} and log|S| directly.
inline double matrix_normal_loglik(const Matrix& x, const Matrix& f, const Vector& mu, const Matrix& c,
                                   const Matrix& delta, const Matrix& s_inv, double logdet_s) {
    const double n = static_cast<double>(x.rows());
    const double p = static_cast<double>(x.cols());
    const Matrix resid = (x - f * c.transpose()).rowwise() - mu.transpose();
    Eigen::LLT<Matrix> llt(delta);
    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    const Matrix l = llt.matrixL();
    const double logdet_delta = 2.0 * l.diagonal().array().log().sum();
    const double quad = (s_inv * resid * llt.solve(resid.transpose())).trace();
    return -0.5 * n * p * std::log(2.0 * std::numbers::pi) - 0.5 * p * logdet_s - 0.5 * n * logdet_delta -
           0.5 * quad;
}

/// P(chi2_q > x) from the power series of the lower regularized incomplete
/// gamma function (x < a + 1) or its Lentz continued fraction otherwise.
inline double chi2_tail_series(double x, double q) {
    const double a = 0.5 * q;
    const double z = 0.5 * x;
    if (z <= 0.0) return 1.0;
    const double log_prefix = a * std::log(z) - z - std::lgamma(a);
    if (z < a + 1.0) {
        double term = 1.0 / a;
        double sum = term;
        for (int k = 1; k < 10000; ++k) {
            term *= z / (a + k);
            sum += term;
            if (std::abs(term) < std::abs(sum) * 1e-16) break;
        }
        return 1.0 - std::exp(log_prefix) * sum;
    }
    const double tiny = 1e-300;
    double b = z + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(log_prefix) * h;
}

/// Orthogonal projection onto the column span of m.
inline Matrix projector(const Matrix& m) {
    return m * (m.transpose() * m).ldlt().solve(m.transpose());
}

}  // namespace spsdr::oracle
