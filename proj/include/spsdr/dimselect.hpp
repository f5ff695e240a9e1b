#pragma once

#include "spsdr/basis.hpp"
#include "spsdr/models.hpp"
#include "spsdr/predictor.hpp"
#include "spsdr/types.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace spsdr {

enum class Criterion { lr, aic, bic, cv_mpe };

std::string_view to_string(Criterion criterion) noexcept;
Criterion parse_criterion(std::string_view text);

/// One row of the selection trace. Entries not evaluated (e.g. delta = 0 in
/// cross-validation) carry NaN.
struct CriterionTrace {
    int delta = 0;
    double loglik = 0.0;
    double value = 0.0;    ///< LR statistic, AIC, BIC or CV mean squared error
    double p_value = 0.0;  ///< LR only
};

struct DimSelection {
    Criterion criterion = Criterion::lr;
    int d_star = 0;
    std::vector<CriterionTrace> trace;
    double alpha = 0.0;
};

/// Upper tail P(chi2_q > x) through the regularized incomplete gamma function.
double chi2_upper_tail(double x, double q);

/// p(p+3)/2 + r delta + delta (p - delta).
double parameter_count(int p, int r, int delta);

/// Sequential LR testing from delta = 0; picks the first delta whose p-value
/// reaches alpha, or min(r, p) if every test rejects.
DimSelection select_lr(const std::vector<double>& logliks, int p, int r, int n, double alpha = 0.05);

/// Minimizes AIC or BIC over delta; ties go to the smallest delta.
DimSelection select_ic(const std::vector<double>& logliks, int p, int r, int n, Criterion kind);

struct CvOptions {
    int folds = 5;         ///< folds >= n means leave-one-out
    std::uint64_t seed = 0;
    /// Fixed bandwidths; when absent they are tuned by LOOCV on each training fold.
    std::optional<double> h1;
    std::optional<double> h2;
};

/// K-fold cross-validated prediction error for each d in d_range with the
/// reduction of `model` and the given kernel count; argmin, ties to the smallest d.
DimSelection select_cv(const SpatialSample& sample, ModelKind model, const BasisSpec& spec, KernelCount kernels,
                       const std::vector<int>& d_range, const CvOptions& options = {},
                       const std::vector<double>& grid = {});

/// Seeded shuffle of 0..n-1 cut into `folds` contiguous blocks of near-equal size.
std::vector<std::vector<Index>> fold_assignment(Index n, int folds, std::uint64_t seed);

}  // namespace spsdr
