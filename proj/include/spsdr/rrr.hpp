#pragma once

#include "spsdr/types.hpp"

#include <string>

namespace spsdr {

enum class TransformKind { identity_centering, sscm, sem };

struct TransformTag {
    TransformKind kind = TransformKind::identity_centering;
    double parameter = 0.0;  ///< lambda (sscm) or theta (sem)

    [[nodiscard]] std::string label() const;
};

/// Data after the spatial whitening transform: rows are i.i.d. under the model.
struct WhitenedData {
    Matrix x_bar;  ///< n x p
    Matrix f_bar;  ///< n x r
    TransformTag tag;

    [[nodiscard]] Index n() const { return x_bar.rows(); }
    [[nodiscard]] Index p() const { return x_bar.cols(); }
    [[nodiscard]] Index r() const { return f_bar.cols(); }
};

struct LsFit {
    Matrix c_ls;      ///< p x r, Sigma_XF Sigma_FF^{-1}
    Matrix delta_ls;  ///< p x p residual covariance
    Matrix sigma_xf;  ///< X'F / n
    Matrix sigma_ff;  ///< F'F / n
    bool jittered = false;
};

/// Reduced-rank maximum likelihood estimates for a fixed rank d.
struct RrrEstimate {
    Matrix a_hat;      ///< p x d
    Matrix b_hat;      ///< d x r
    Matrix delta_hat;  ///< p x p
    Matrix delta_ls;   ///< p x p
    Matrix c_ls;       ///< p x r
    Vector eigvals;    ///< min(p, r) leading eigenvalues of the whitened cross-covariance, descending
    int d = 0;

    [[nodiscard]] Matrix coefficient() const { return a_hat * b_hat; }
};

LsFit ls_fit(const WhitenedData& data);

/// Closed-form reduced-rank MLE for rank d (0 <= d <= min(p, r)).
RrrEstimate rrr_mle(const WhitenedData& data, int d);

/// Same as rrr_mle but reuses a precomputed least-squares fit; used when
/// several ranks are fitted on one transform.
RrrEstimate rrr_mle(const WhitenedData& data, const LsFit& ls, int d);

/// Full Gaussian log-likelihood at the estimate. `logdet_s_term` is the
/// quantity subtracted for the spatial structure: (p/2) log|H| for SSCM,
/// -p log|det W_theta| for SEM, 0 for independent sites.
double loglik(const WhitenedData& data, const RrrEstimate& est, double logdet_s_term);

/// Which covariance the reduction is weighted by.
enum class ReductionMetric { delta_hat, delta_ls };

/// A' M^{-1} (x_new - mu_hat), with M = delta_hat by default.
Vector reduce(const Vector& x_new, const Vector& mu_hat, const RrrEstimate& est,
              ReductionMetric metric = ReductionMetric::delta_hat);

/// Row-wise reduction of an m x p block; returns m x d.
Matrix reduce_rows(const Matrix& x, const Vector& mu_hat, const RrrEstimate& est,
                   ReductionMetric metric = ReductionMetric::delta_hat);

}  // namespace spsdr
