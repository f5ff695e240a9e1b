#pragma once

#include "spsdr/models.hpp"
#include "spsdr/types.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spsdr {

enum class KernelCount { one, two };

/// Where the predictor-space distances are measured: raw predictors (FULL)
/// or the reduction estimated under one of the inverse models.
enum class ReductionSource { full, ind, sscm, sem };

/// One of the eight named rules 1k.FULL ... 2k.SEM.
struct PredictorMode {
    KernelCount kernels = KernelCount::two;
    ReductionSource source = ReductionSource::full;

    [[nodiscard]] bool two_kernel() const { return kernels == KernelCount::two; }
    [[nodiscard]] std::string name() const;
    static PredictorMode parse(std::string_view text);
    static std::vector<PredictorMode> all();

    friend bool operator==(const PredictorMode&, const PredictorMode&) = default;
};

std::optional<ModelKind> model_kind(ReductionSource source) noexcept;

struct PredictorConfig {
    PredictorMode mode;
    double h1 = 1.0;
    std::optional<double> h2;  ///< present iff the mode is two-kernel
    std::vector<double> h1_grid;
    std::vector<double> h2_grid;

    void validate() const;
};

/// Training points in predictor space (reduced or raw) with responses and sites.
struct TrainingReference {
    Matrix points;  ///< n x dim
    Vector responses;
    Matrix coords;  ///< n x 2

    [[nodiscard]] Index size() const { return points.rows(); }
    void validate() const;
};

/// Reduced (or raw, when fit is null) training reference.
TrainingReference make_reference(const SpatialSample& train, const ReductionFit* fit);

struct KernelWeights {
    Vector weights;
    bool fallback = false;  ///< every kernel value underflowed; all mass on the nearest point
};

KernelWeights nw_weights_1k(const Vector& query, const TrainingReference& ref, double h1);

KernelWeights nw_weights_2k(const Vector& query, const Vector& s0, const TrainingReference& ref, double h1,
                            double h2);

struct Prediction {
    double y_hat = 0.0;
    bool fallback = false;
};

/// Nadaraya-Watson prediction at site s0 with predictors query_x. `fit` is
/// required unless the mode is FULL and maps query_x to the reduced space.
Prediction predict(const Vector& query_x, const Vector& s0, const ReductionFit* fit,
                   const PredictorConfig& config, const TrainingReference& ref);

std::vector<Prediction> predict_rows(const Matrix& query_x, const Matrix& sites, const ReductionFit* fit,
                                     const PredictorConfig& config, const TrainingReference& ref);

struct Bandwidths {
    double h1 = 0.0;
    std::optional<double> h2;
    double loo_mse = 0.0;
};

/// Leave-one-out bandwidth search over h1_grid (1k) or h1_grid x h2_grid (2k).
Bandwidths loocv_bandwidths(const TrainingReference& ref, const PredictorConfig& config);

/// LOO mean squared error at fixed bandwidths (h2 ignored for 1k).
double loo_error(const TrainingReference& ref, double h1, std::optional<double> h2);

/// 15 geometric points on [0.1 q, 2 q], q the median pairwise distance of the rows.
std::vector<double> default_bandwidth_grid(const Matrix& points);

/// Fills empty grids with defaults for the reference (h1 from points, h2 from coords).
PredictorConfig with_default_grids(PredictorConfig config, const TrainingReference& ref);

}  // namespace spsdr
