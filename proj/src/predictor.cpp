#include "spsdr/predictor.hpp"

#include "spsdr/error.hpp"
#include "spsdr/simd/kernels.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>

namespace spsdr {

namespace {

std::string_view source_label(ReductionSource source) {
    switch (source) {
        case ReductionSource::full: return "FULL";
        case ReductionSource::ind: return "Ind";
        case ReductionSource::sscm: return "SSCM";
        case ReductionSource::sem: return "SEM";
    }
    return "?";
}

std::string lower(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

double kernel_scale(double h) { return 0.5 / (h * h); }

void check_bandwidth(double h, const char* name) {
    if (!(h > 0.0) || !std::isfinite(h)) {
        throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be positive and finite");
    }
}

void check_grid(const std::vector<double>& grid, const char* name) {
    if (grid.empty()) {
        throw Error(ErrorCode::DegenerateGrid, std::string(name) + " grid is empty");
    }
    for (double h : grid) {
        if (!(h > 0.0) || !std::isfinite(h)) {
            throw Error(ErrorCode::DegenerateGrid, std::string(name) + " grid has a non-positive value");
        }
    }
}

void check_reference(const TrainingReference& ref) {
    if (ref.size() == 0) {
        throw Error(ErrorCode::EmptyReference, "training reference has no points");
    }
}

// Turns raw kernel values into normalized weights. When all of them
// underflowed, puts unit mass on the point with the smallest exponent.
KernelWeights normalize(Vector kernel, const Vector& exponent) {
    KernelWeights out;
    const double total = kernel.sum();
    if (total > 0.0) {
        out.weights = kernel / total;
        return out;
    }
    Index nearest = 0;
    exponent.minCoeff(&nearest);
    out.weights = Vector::Zero(kernel.size());
    out.weights(nearest) = 1.0;
    out.fallback = true;
    return out;
}

Vector squared_distances(const Matrix& points, const Vector& query) {
    if (query.size() != points.cols()) {
        throw Error(ErrorCode::InvalidArgument, "query dimension " + std::to_string(query.size()) +
                                                    " does not match reference dimension " +
                                                    std::to_string(points.cols()));
    }
    const auto& k = simd::active_kernels();
    Vector sq(points.rows());
    k.squared_distances(points.data(), static_cast<std::size_t>(points.rows()),
                        static_cast<std::size_t>(points.rows()), static_cast<std::size_t>(points.cols()),
                        query.data(), sq.data());
    return sq;
}

double median_pairwise_distance(const Matrix& points) {
    const Index n = points.rows();
    std::vector<double> dist;
    dist.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Index j = 1; j < n; ++j) {
        for (Index i = 0; i < j; ++i) {
            dist.push_back((points.row(i) - points.row(j)).norm());
        }
    }
    if (dist.empty()) {
        return 0.0;
    }
    const auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
    std::nth_element(dist.begin(), mid, dist.end());
    if (dist.size() % 2 == 1) {
        return *mid;
    }
    const double upper = *mid;
    const double lower_half = *std::max_element(dist.begin(), mid);
    return 0.5 * (upper + lower_half);
}

std::vector<double> sorted_copy(std::vector<double> grid) {
    std::sort(grid.begin(), grid.end());
    return grid;
}

}  // namespace

// Modes ---------------------------------------------------------------------

std::string PredictorMode::name() const {
    return std::string(two_kernel() ? "2k." : "1k.") + std::string(source_label(source));
}

PredictorMode PredictorMode::parse(std::string_view text) {
    const std::string t = lower(text);
    const auto dot = t.find('.');
    if (dot == std::string::npos) {
        throw Error(ErrorCode::InvalidArgument, "predictor mode '" + std::string(text) + "' is not of the form 1k.X");
    }
    PredictorMode mode;
    const std::string prefix = t.substr(0, dot);
    const std::string suffix = t.substr(dot + 1);
    if (prefix == "1k") {
        mode.kernels = KernelCount::one;
    } else if (prefix == "2k") {
        mode.kernels = KernelCount::two;
    } else {
        throw Error(ErrorCode::InvalidArgument, "unknown kernel count in '" + std::string(text) + "'");
    }
    if (suffix == "full") {
        mode.source = ReductionSource::full;
    } else if (suffix == "ind") {
        mode.source = ReductionSource::ind;
    } else if (suffix == "sscm") {
        mode.source = ReductionSource::sscm;
    } else if (suffix == "sem") {
        mode.source = ReductionSource::sem;
    } else {
        throw Error(ErrorCode::InvalidArgument, "unknown reduction in '" + std::string(text) + "'");
    }
    return mode;
}

std::vector<PredictorMode> PredictorMode::all() {
    std::vector<PredictorMode> modes;
    for (auto kernels : {KernelCount::one, KernelCount::two}) {
        for (auto source : {ReductionSource::full, ReductionSource::ind, ReductionSource::sscm, ReductionSource::sem}) {
            modes.push_back({kernels, source});
        }
    }
    return modes;
}

std::optional<ModelKind> model_kind(ReductionSource source) noexcept {
    switch (source) {
        case ReductionSource::full: return std::nullopt;
        case ReductionSource::ind: return ModelKind::ind;
        case ReductionSource::sscm: return ModelKind::sscm;
        case ReductionSource::sem: return ModelKind::sem;
    }
    return std::nullopt;
}

void PredictorConfig::validate() const {
    check_bandwidth(h1, "h1");
    if (mode.two_kernel()) {
        if (!h2) {
            throw Error(ErrorCode::InvalidArgument, mode.name() + " requires h2");
        }
        check_bandwidth(*h2, "h2");
    } else if (h2) {
        throw Error(ErrorCode::InvalidArgument, mode.name() + " takes no h2");
    }
}

void TrainingReference::validate() const {
    check_reference(*this);
    if (responses.size() != points.rows() || coords.rows() != points.rows() || coords.cols() != 2) {
        throw Error(ErrorCode::InvalidArgument, "training reference row counts disagree");
    }
}

TrainingReference make_reference(const SpatialSample& train, const ReductionFit* fit) {
    TrainingReference ref;
    ref.points = fit != nullptr ? reduce_fit_rows(*fit, train.x) : train.x;
    ref.responses = train.y;
    ref.coords = train.coords;
    ref.validate();
    return ref;
}

// Weights -------------------------------------------------------------------

KernelWeights nw_weights_1k(const Vector& query, const TrainingReference& ref, double h1) {
    check_reference(ref);
    check_bandwidth(h1, "h1");
    const Vector exponent = kernel_scale(h1) * squared_distances(ref.points, query);
    Vector kernel(ref.size());
    simd::active_kernels().gaussian(exponent.data(), static_cast<std::size_t>(exponent.size()), 1.0,
                                    kernel.data());
    return normalize(std::move(kernel), exponent);
}

KernelWeights nw_weights_2k(const Vector& query, const Vector& s0, const TrainingReference& ref, double h1,
                            double h2) {
    check_reference(ref);
    check_bandwidth(h1, "h1");
    check_bandwidth(h2, "h2");
    const Vector exponent = kernel_scale(h1) * squared_distances(ref.points, query) +
                            kernel_scale(h2) * squared_distances(ref.coords, s0);
    Vector kernel(ref.size());
    simd::active_kernels().gaussian(exponent.data(), static_cast<std::size_t>(exponent.size()), 1.0,
                                    kernel.data());
    return normalize(std::move(kernel), exponent);
}

// Prediction ----------------------------------------------------------------

namespace {

Prediction predict_reduced(const Vector& reduced, const Vector& s0, const PredictorConfig& config,
                           const TrainingReference& ref) {
    const KernelWeights w = config.mode.two_kernel() ? nw_weights_2k(reduced, s0, ref, config.h1, *config.h2)
                                                     : nw_weights_1k(reduced, ref, config.h1);
    return {w.weights.dot(ref.responses), w.fallback};
}

void check_fit(const ReductionFit* fit, const PredictorConfig& config) {
    if (config.mode.source != ReductionSource::full && fit == nullptr) {
        throw Error(ErrorCode::InvalidArgument, config.mode.name() + " requires a fitted reduction");
    }
}

}  // namespace

Prediction predict(const Vector& query_x, const Vector& s0, const ReductionFit* fit, const PredictorConfig& config,
                   const TrainingReference& ref) {
    config.validate();
    check_fit(fit, config);
    if (s0.size() != 2) {
        throw Error(ErrorCode::InvalidArgument, "site must have two coordinates");
    }
    const Vector reduced = config.mode.source == ReductionSource::full ? query_x : reduce_fit(*fit, query_x);
    return predict_reduced(reduced, s0, config, ref);
}

std::vector<Prediction> predict_rows(const Matrix& query_x, const Matrix& sites, const ReductionFit* fit,
                                     const PredictorConfig& config, const TrainingReference& ref) {
    config.validate();
    check_fit(fit, config);
    if (sites.rows() != query_x.rows() || sites.cols() != 2) {
        throw Error(ErrorCode::InvalidArgument, "query predictors and sites disagree in shape");
    }
    const Matrix reduced = config.mode.source == ReductionSource::full ? query_x : reduce_fit_rows(*fit, query_x);
    std::vector<Prediction> out;
    out.reserve(static_cast<std::size_t>(reduced.rows()));
    for (Index i = 0; i < reduced.rows(); ++i) {
        out.push_back(predict_reduced(reduced.row(i).transpose(), sites.row(i).transpose(), config, ref));
    }
    return out;
}

// Bandwidth selection -------------------------------------------------------

namespace {

// Sum of squared leave-one-out errors for every (h1, h2) pair, h1 major.
// With no spatial kernel, h2_grid is empty and one value per h1 is returned.
std::vector<double> loo_sse(const TrainingReference& ref, const std::vector<double>& h1_grid,
                            const std::vector<double>& h2_grid) {
    const auto& k = simd::active_kernels();
    const Index n = ref.size();
    const auto un = static_cast<std::size_t>(n);
    const bool spatial = !h2_grid.empty();
    const std::size_t n1 = h1_grid.size();
    const std::size_t n2 = spatial ? h2_grid.size() : 1;
    constexpr double inf = std::numeric_limits<double>::infinity();

    std::vector<double> sse(n1 * n2, 0.0);
    Vector sq1(n);
    Vector sq2(n);
    Matrix k1(n, static_cast<Index>(n1));
    Matrix k2(n, static_cast<Index>(n2));
    Vector ones = Vector::Ones(n);

    for (Index i = 0; i < n; ++i) {
        const Vector q1 = ref.points.row(i).transpose();
        k.squared_distances(ref.points.data(), un, un, static_cast<std::size_t>(ref.points.cols()), q1.data(),
                            sq1.data());
        sq1(i) = inf;
        for (std::size_t a = 0; a < n1; ++a) {
            k.gaussian(sq1.data(), un, kernel_scale(h1_grid[a]), k1.col(static_cast<Index>(a)).data());
        }
        if (spatial) {
            const Vector q2 = ref.coords.row(i).transpose();
            k.squared_distances(ref.coords.data(), un, un, 2, q2.data(), sq2.data());
            sq2(i) = inf;
            for (std::size_t b = 0; b < n2; ++b) {
                k.gaussian(sq2.data(), un, kernel_scale(h2_grid[b]), k2.col(static_cast<Index>(b)).data());
            }
        } else {
            sq2.setZero();
            k2.col(0) = ones;
        }

        const double yi = ref.responses(i);
        for (std::size_t a = 0; a < n1; ++a) {
            for (std::size_t b = 0; b < n2; ++b) {
                double num = 0.0;
                double den = 0.0;
                k.product_weighted_sums(k1.col(static_cast<Index>(a)).data(), k2.col(static_cast<Index>(b)).data(),
                                        ref.responses.data(), un, &num, &den);
                double y_hat = 0.0;
                if (den > 0.0) {
                    y_hat = num / den;
                } else {
                    // Every kernel value underflowed: nearest other point under
                    // the combined exponent.
                    const double s1 = kernel_scale(h1_grid[a]);
                    const double s2 = spatial ? kernel_scale(h2_grid[b]) : 0.0;
                    double best = inf;
                    for (Index j = 0; j < n; ++j) {
                        if (j == i) continue;
                        const double e = s1 * sq1(j) + (spatial ? s2 * sq2(j) : 0.0);
                        if (e < best) {
                            best = e;
                            y_hat = ref.responses(j);
                        }
                    }
                }
                const double err = yi - y_hat;
                sse[a * n2 + b] += err * err;
            }
        }
    }
    return sse;
}

}  // namespace

Bandwidths loocv_bandwidths(const TrainingReference& ref, const PredictorConfig& config) {
    ref.validate();
    if (ref.size() < 3) {
        throw Error(ErrorCode::InvalidArgument, "bandwidth search needs at least 3 training points");
    }
    const bool spatial = config.mode.two_kernel();
    check_grid(config.h1_grid, "h1");
    if (spatial) {
        check_grid(config.h2_grid, "h2");
    }
    const std::vector<double> h1_grid = sorted_copy(config.h1_grid);
    const std::vector<double> h2_grid = spatial ? sorted_copy(config.h2_grid) : std::vector<double>{};

    const std::vector<double> sse = loo_sse(ref, h1_grid, h2_grid);
    const std::size_t n2 = spatial ? h2_grid.size() : 1;
    std::size_t best = 0;
    for (std::size_t idx = 1; idx < sse.size(); ++idx) {
        if (sse[idx] < sse[best]) {
            best = idx;
        }
    }

    Bandwidths out;
    out.h1 = h1_grid[best / n2];
    if (spatial) {
        out.h2 = h2_grid[best % n2];
    }
    out.loo_mse = sse[best] / static_cast<double>(ref.size());
    return out;
}

double loo_error(const TrainingReference& ref, double h1, std::optional<double> h2) {
    ref.validate();
    if (ref.size() < 2) {
        throw Error(ErrorCode::InvalidArgument, "leave-one-out needs at least 2 training points");
    }
    check_bandwidth(h1, "h1");
    std::vector<double> h2_grid;
    if (h2) {
        check_bandwidth(*h2, "h2");
        h2_grid.push_back(*h2);
    }
    return loo_sse(ref, {h1}, h2_grid).front() / static_cast<double>(ref.size());
}

std::vector<double> default_bandwidth_grid(const Matrix& points) {
    const double q = median_pairwise_distance(points);
    if (!(q > 0.0) || !std::isfinite(q)) {
        throw Error(ErrorCode::DegenerateGrid, "median pairwise distance is zero; cannot scale a bandwidth grid");
    }
    return geometric_grid(0.1 * q, 2.0 * q, 15);
}

PredictorConfig with_default_grids(PredictorConfig config, const TrainingReference& ref) {
    if (config.h1_grid.empty()) {
        // A rank-0 reduction has a constant predictor kernel; any h1 will do.
        config.h1_grid = ref.points.cols() == 0 ? std::vector<double>{1.0} : default_bandwidth_grid(ref.points);
    }
    if (config.mode.two_kernel() && config.h2_grid.empty()) {
        config.h2_grid = default_bandwidth_grid(ref.coords);
    }
    return config;
}

}  // namespace spsdr
