#include "spsdr/models.hpp"

#include "spsdr/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace spsdr {

std::string_view to_string(ModelKind kind) noexcept {
    switch (kind) {
        case ModelKind::ind: return "ind";
        case ModelKind::sscm: return "sscm";
        case ModelKind::sem: return "sem";
    }
    return "unknown";
}

ModelKind parse_model_kind(std::string_view text) {
    if (text == "ind" || text == "Ind") return ModelKind::ind;
    if (text == "sscm" || text == "SSCM") return ModelKind::sscm;
    if (text == "sem" || text == "SEM") return ModelKind::sem;
    throw Error(ErrorCode::InvalidArgument, "unknown model kind '" + std::string(text) + "'");
}

// Transforms ----------------------------------------------------------------

namespace {

// I - (1'g)^{-1} 1 g' applied to the columns of m.
Matrix gls_center(const Matrix& m, const Vector& g) {
    const Eigen::RowVectorXd weighted_mean = (g.transpose() * m) / g.sum();
    return m.rowwise() - weighted_mean;
}

struct Transformed {
    WhitenedData data;
    double logdet_term = 0.0;  ///< subtracted from the log-likelihood
    Vector mean_weights;       ///< S^{-1} 1, used for mu-hat
};

Transformed identity_transformed(const Matrix& x, const Matrix& f) {
    Transformed t;
    t.data = centering_transform(x, f);
    t.mean_weights = Vector::Ones(x.rows());
    return t;
}

Transformed sscm_transformed(const Matrix& x, const Matrix& f, const CorrelationH& h) {
    Transformed t;
    t.data = sscm_transform(x, f, h);
    const auto& fac = h.factor;
    t.mean_weights = fac.eigvecs * (fac.eigvals.cwiseInverse().asDiagonal() *
                                    (fac.eigvecs.transpose() * Vector::Ones(x.rows())));
    t.logdet_term = 0.5 * static_cast<double>(x.cols()) * fac.logdet();
    return t;
}

Transformed sem_transformed(const Matrix& x, const Matrix& f, const LaggedWeights& wt) {
    Transformed t;
    t.data = sem_transform(x, f, wt);
    t.mean_weights = wt.w_theta.transpose() * (wt.w_theta * Vector::Ones(x.rows()));
    t.logdet_term = -static_cast<double>(x.cols()) * wt.log_abs_det;
    return t;
}

}  // namespace

WhitenedData centering_transform(const Matrix& x, const Matrix& f) {
    WhitenedData out;
    out.x_bar = x.rowwise() - x.colwise().mean();
    out.f_bar = f.rowwise() - f.colwise().mean();
    out.tag = {TransformKind::identity_centering, 0.0};
    return out;
}

WhitenedData sscm_transform(const Matrix& x, const Matrix& f, const CorrelationH& h) {
    const Index n = x.rows();
    if (h.h.rows() != n || f.rows() != n) {
        throw Error(ErrorCode::InvalidArgument, "H, X and F dimensions disagree");
    }
    const auto& fac = h.factor;
    const Vector g = fac.eigvecs * (fac.eigvals.cwiseInverse().asDiagonal() *
                                    (fac.eigvecs.transpose() * Vector::Ones(n)));
    const Vector inv_sqrt_vals = fac.eigvals.cwiseSqrt().cwiseInverse();
    auto whiten = [&](const Matrix& m) -> Matrix {
        const Matrix centered = gls_center(m, g);
        return fac.eigvecs * (inv_sqrt_vals.asDiagonal() * (fac.eigvecs.transpose() * centered));
    };
    WhitenedData out;
    out.x_bar = whiten(x);
    out.f_bar = whiten(f);
    out.tag = {TransformKind::sscm, h.lambda};
    return out;
}

WhitenedData sem_transform(const Matrix& x, const Matrix& f, const LaggedWeights& wt) {
    const Index n = x.rows();
    if (wt.w_theta.rows() != n || f.rows() != n) {
        throw Error(ErrorCode::InvalidArgument, "W_theta, X and F dimensions disagree");
    }
    const Vector g = wt.w_theta.transpose() * (wt.w_theta * Vector::Ones(n));
    if (!(std::abs(g.sum()) > 0.0)) {
        throw Error(ErrorCode::SingularWTheta, "1' W_theta' W_theta 1 vanishes");
    }
    WhitenedData out;
    out.x_bar = wt.w_theta * gls_center(x, g);
    out.f_bar = wt.w_theta * gls_center(f, g);
    out.tag = {TransformKind::sem, wt.theta};
    return out;
}

// Grids ---------------------------------------------------------------------

std::vector<double> geometric_grid(double lo, double hi, int count) {
    if (count < 1 || !(lo > 0.0) || !(hi >= lo)) {
        throw Error(ErrorCode::InvalidArgument, "geometric grid needs 0 < lo <= hi and count >= 1");
    }
    std::vector<double> out(static_cast<std::size_t>(count));
    if (count == 1) {
        out[0] = lo;
        return out;
    }
    const double step = std::log(hi / lo) / (count - 1);
    for (int k = 0; k < count; ++k) {
        out[static_cast<std::size_t>(k)] = lo * std::exp(step * k);
    }
    out.back() = hi;
    return out;
}

std::vector<double> linear_grid(double lo, double hi, int count) {
    if (count < 1 || !(hi >= lo)) {
        throw Error(ErrorCode::InvalidArgument, "linear grid needs lo <= hi and count >= 1");
    }
    std::vector<double> out(static_cast<std::size_t>(count));
    if (count == 1) {
        out[0] = lo;
        return out;
    }
    for (int k = 0; k < count; ++k) {
        out[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (count - 1);
    }
    return out;
}

std::vector<double> default_lambda_grid(const DistanceMatrix& dist) {
    const double m = dist.median();
    if (!(m > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "median pairwise distance must be positive");
    }
    return geometric_grid(0.1 / m, 10.0 / m, 20);
}

std::vector<double> default_theta_grid() {
    std::vector<double> out;
    for (int k = -19; k <= 19; ++k) {
        out.push_back(0.05 * k);
    }
    return out;
}

// Fitting -------------------------------------------------------------------

namespace {

struct SpatialSetup {
    ModelKind kind = ModelKind::ind;
    bool identity = false;
    std::optional<DistanceMatrix> dist;
    std::optional<NeighborWeights> w;
};

SpatialSetup make_setup(const SpatialSample& sample, ModelKind kind, bool identity) {
    SpatialSetup s;
    s.kind = kind;
    s.identity = identity || kind == ModelKind::ind;
    if (s.identity) {
        return s;
    }
    s.dist = pairwise_distances(Coordinates{sample.coords});
    if (kind == ModelKind::sem) {
        s.w = build_w(*s.dist, max_min_distance(*s.dist));
    }
    return s;
}

std::vector<double> resolve_grid(const SpatialSetup& setup, const std::vector<double>& grid) {
    if (setup.identity) {
        return {setup.kind == ModelKind::sscm ? std::numeric_limits<double>::infinity() : 0.0};
    }
    if (grid.empty()) {
        return setup.kind == ModelKind::sscm ? default_lambda_grid(*setup.dist) : default_theta_grid();
    }
    for (double v : grid) {
        if (setup.kind == ModelKind::sscm && !(v > 0.0 && std::isfinite(v))) {
            throw Error(ErrorCode::NonPositiveLambda, "lambda grid entries must be positive");
        }
        if (setup.kind == ModelKind::sem && !(std::abs(v) < 1.0)) {
            throw Error(ErrorCode::InvalidArgument, "theta grid entries must lie in (-1, 1)");
        }
    }
    return grid;
}

Transformed transform_at(const SpatialSetup& setup, const Matrix& x, const Matrix& f, double param) {
    if (setup.identity) {
        return identity_transformed(x, f);
    }
    if (setup.kind == ModelKind::sscm) {
        return sscm_transformed(x, f, build_h(*setup.dist, param));
    }
    return sem_transformed(x, f, build_w_theta(*setup.w, param));
}

// Grid argmax tie rules: lowest lambda; smallest |theta| (then smallest theta).
bool improves(ModelKind kind, double cand_param, double cand_ll, double best_param, double best_ll) {
    if (cand_ll != best_ll) {
        return cand_ll > best_ll;
    }
    if (kind == ModelKind::sem) {
        const double a = std::abs(cand_param);
        const double b = std::abs(best_param);
        return a < b || (a == b && cand_param < best_param);
    }
    return cand_param < best_param;
}

void check_sample(const SpatialSample& sample, const BasisSpec& spec) {
    sample.validate();
    if (sample.size() <= sample.predictors() + spec.r) {
        throw Error(ErrorCode::InvalidArgument, "need more observations than p + r");
    }
}

}  // namespace

namespace {

ReductionFit fit_impl(const SpatialSample& sample, ModelKind kind, bool identity, const BasisSpec& spec,
                      int d, const std::vector<double>& grid) {
    check_sample(sample, spec);
    const SpatialSetup setup = make_setup(sample, kind, identity);
    const std::vector<double> params = resolve_grid(setup, grid);

    ReductionFit fit;
    fit.kind = kind;
    fit.basis = build_f(sample.y, spec);
    const Matrix f = fit.basis.scaled();
    if (setup.w) {
        fit.d_max = setup.w->d_max;
    }

    std::optional<RrrEstimate> best_est;
    Vector best_weights;
    double best_param = 0.0;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (double param : params) {
        const Transformed t = transform_at(setup, sample.x, f, param);
        RrrEstimate est = rrr_mle(t.data, d);
        const double ll = loglik(t.data, est, t.logdet_term);
        fit.grid.push_back({param, ll});
        if (!best_est || improves(kind, param, ll, best_param, best_ll)) {
            best_est = std::move(est);
            best_weights = t.mean_weights;
            best_param = param;
            best_ll = ll;
        }
    }

    fit.est = std::move(*best_est);
    fit.spatial_param = best_param;
    fit.loglik = best_ll;
    // mu = (X' - A B F') g / (1' g), g = S^{-1} 1
    const Matrix resid = sample.x - f * fit.est.coefficient().transpose();
    fit.mu_hat = resid.transpose() * best_weights / best_weights.sum();
    if (!fit.mu_hat.allFinite()) {
        throw Error(ErrorCode::NonFiniteLoglik, "non-finite mean estimate");
    }
    return fit;
}

}  // namespace

ReductionFit fit_independent(const SpatialSample& sample, const BasisSpec& spec, int d) {
    return fit_impl(sample, ModelKind::ind, true, spec, d, {});
}

ReductionFit fit_sscm(const SpatialSample& sample, const BasisSpec& spec, int d,
                      const std::vector<double>& lambda_grid, SscmOptions options) {
    if (!options.identity_h && lambda_grid.empty()) {
        throw Error(ErrorCode::EmptyGrid, "lambda grid is empty");
    }
    return fit_impl(sample, ModelKind::sscm, options.identity_h, spec, d, lambda_grid);
}

ReductionFit fit_sem(const SpatialSample& sample, const BasisSpec& spec, int d,
                     const std::vector<double>& theta_grid) {
    if (theta_grid.empty()) {
        throw Error(ErrorCode::EmptyGrid, "theta grid is empty");
    }
    return fit_impl(sample, ModelKind::sem, false, spec, d, theta_grid);
}

ReductionFit fit_model(const SpatialSample& sample, ModelKind kind, const BasisSpec& spec, int d,
                       const std::vector<double>& grid) {
    return fit_impl(sample, kind, kind == ModelKind::ind, spec, d, grid);
}

std::vector<double> rank_logliks(const SpatialSample& sample, ModelKind kind, const BasisSpec& spec,
                                 const std::vector<double>& grid) {
    check_sample(sample, spec);
    const SpatialSetup setup = make_setup(sample, kind, kind == ModelKind::ind);
    const std::vector<double> params = resolve_grid(setup, grid);
    const Matrix f = build_f(sample.y, spec).scaled();
    const int max_rank = static_cast<int>(std::min<Index>(spec.r, sample.predictors()));

    std::vector<double> best(static_cast<std::size_t>(max_rank + 1), -std::numeric_limits<double>::infinity());
    for (double param : params) {
        const Transformed t = transform_at(setup, sample.x, f, param);
        const LsFit ls = ls_fit(t.data);
        for (int delta = 0; delta <= max_rank; ++delta) {
            const double ll = loglik(t.data, rrr_mle(t.data, ls, delta), t.logdet_term);
            auto& slot = best[static_cast<std::size_t>(delta)];
            slot = std::max(slot, ll);
        }
    }
    return best;
}

Vector reduce_fit(const ReductionFit& fit, const Vector& x_new, ReductionMetric metric) {
    return reduce(x_new, fit.mu_hat, fit.est, metric);
}

Matrix reduce_fit_rows(const ReductionFit& fit, const Matrix& x, ReductionMetric metric) {
    return reduce_rows(x, fit.mu_hat, fit.est, metric);
}

}  // namespace spsdr
