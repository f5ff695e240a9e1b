#pragma once

#include "spsdr/basis.hpp"
#include "spsdr/geometry.hpp"
#include "spsdr/rrr.hpp"
#include "spsdr/types.hpp"

#include <string_view>
#include <vector>

namespace spsdr {

/// Inverse-regression error structure: independent sites (PFC), separable
/// exponential covariance (SSCM) or spatial autoregressive errors (SEM).
enum class ModelKind { ind, sscm, sem };

std::string_view to_string(ModelKind kind) noexcept;
ModelKind parse_model_kind(std::string_view text);

struct GridPoint {
    double parameter = 0.0;
    double loglik = 0.0;
};

/// A fitted reduction. `spatial_param` is lambda-hat (sscm), theta-hat (sem)
/// or 0 (ind); an SSCM fit forced to H = I reports +infinity.
struct ReductionFit {
    ModelKind kind = ModelKind::ind;
    double spatial_param = 0.0;
    RrrEstimate est;
    Vector mu_hat;
    double loglik = 0.0;
    std::vector<GridPoint> grid;
    FMatrix basis;
    double d_max = 0.0;  ///< neighbor threshold used for W (sem only)

    [[nodiscard]] int d() const { return est.d; }
    [[nodiscard]] int r() const { return basis.spec.r; }
    [[nodiscard]] Index p() const { return mu_hat.size(); }
};

// Whitening transforms ------------------------------------------------------

/// Column centering (H = I).
WhitenedData centering_transform(const Matrix& x, const Matrix& f);

/// X_bar = H^{-1/2} H^c X, F_bar = H^{-1/2} H^c F, H^c = I - (1'H^{-1}1)^{-1} 1 1' H^{-1}.
WhitenedData sscm_transform(const Matrix& x, const Matrix& f, const CorrelationH& h);

/// X_bar = W_t W^c_t X, F_bar = W_t W^c_t F, W^c_t = I - (1'G1)^{-1} 1 1' G, G = W_t' W_t.
WhitenedData sem_transform(const Matrix& x, const Matrix& f, const LaggedWeights& wt);

// Fitters -------------------------------------------------------------------

struct SscmOptions {
    /// Use H = I instead of the exponential correlogram (independent-PFC limit).
    bool identity_h = false;
};

ReductionFit fit_independent(const SpatialSample& sample, const BasisSpec& spec, int d);

ReductionFit fit_sscm(const SpatialSample& sample, const BasisSpec& spec, int d,
                      const std::vector<double>& lambda_grid, SscmOptions options = {});

ReductionFit fit_sem(const SpatialSample& sample, const BasisSpec& spec, int d,
                     const std::vector<double>& theta_grid);

/// Dispatch on kind; `grid` is ignored for ind and, when empty, replaced by
/// the kind's default grid.
ReductionFit fit_model(const SpatialSample& sample, ModelKind kind, const BasisSpec& spec, int d,
                       const std::vector<double>& grid = {});

/// Maximized log-likelihood for every rank 0..min(r, p), each profiled over
/// the grid independently.
std::vector<double> rank_logliks(const SpatialSample& sample, ModelKind kind, const BasisSpec& spec,
                                 const std::vector<double>& grid = {});

/// Reduced predictors A' Delta^{-1} (x - mu) for one new observation.
Vector reduce_fit(const ReductionFit& fit, const Vector& x_new,
                  ReductionMetric metric = ReductionMetric::delta_hat);
Matrix reduce_fit_rows(const ReductionFit& fit, const Matrix& x,
                       ReductionMetric metric = ReductionMetric::delta_hat);

inline Vector reduce_sscm(const ReductionFit& fit, const Vector& x_new) { return reduce_fit(fit, x_new); }
inline Vector reduce_sem(const ReductionFit& fit, const Vector& x_new) { return reduce_fit(fit, x_new); }

// Default grids -------------------------------------------------------------

/// 20 geometric points on [0.1 / m, 10 / m], m the median pairwise distance.
std::vector<double> default_lambda_grid(const DistanceMatrix& dist);

/// -0.95, -0.90, ..., 0.95.
std::vector<double> default_theta_grid();

std::vector<double> geometric_grid(double lo, double hi, int count);
std::vector<double> linear_grid(double lo, double hi, int count);

}  // namespace spsdr
