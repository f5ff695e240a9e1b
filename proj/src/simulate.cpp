#include "spsdr/simulate.hpp"

#include "spsdr/error.hpp"
#include "spsdr/parallel.hpp"
#include "spsdr/random.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

namespace spsdr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Matrix standard_normal(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    // Row-major fill so draws do not depend on Eigen's storage order.
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) {
            m(i, j) = normal(rng);
        }
    }
    return m;
}

Matrix full_rank_normal(Index rows, Index cols, std::mt19937_64& rng) {
    for (int attempt = 0; attempt < 100; ++attempt) {
        Matrix m = standard_normal(rows, cols, rng);
        Eigen::FullPivLU<Matrix> lu(m);
        if (lu.rank() == std::min(rows, cols)) {
            return m;
        }
    }
    throw Error(ErrorCode::InvalidArgument, "could not draw a full-rank coefficient matrix");
}

// Lower Cholesky factor of an SPD matrix with one jitter retry.
Matrix cholesky_lower(const Matrix& c) {
    Eigen::LLT<Matrix> llt(c);
    if (llt.info() == Eigen::Success) {
        return llt.matrixL();
    }
    const double jitter = linalg::kJitterScale * c.diagonal().mean();
    Matrix shifted = c;
    shifted.diagonal().array() += jitter;
    llt.compute(shifted);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::CovarianceNotPD, "covariance matrix is not positive definite after jitter");
    }
    return llt.matrixL();
}

int model_slot(ModelKind kind) { return static_cast<int>(kind); }

}  // namespace

// Configuration -------------------------------------------------------------

std::string_view to_string(LocationMode mode) noexcept { return mode == LocationMode::grid ? "grid" : "uniform"; }

LocationMode parse_location_mode(std::string_view text) {
    if (text == "uniform" || text == "random") return LocationMode::uniform;
    if (text == "grid" || text == "regular") return LocationMode::grid;
    throw Error(ErrorCode::InvalidArgument, "unknown location mode '" + std::string(text) + "'");
}

void GrfSpec::validate() const {
    if (!(sill > 0.0) || !(range > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "sill and range must be positive");
    }
}

double GrfSpec::covariance(double distance) const {
    if (distance >= range) {
        return 0.0;
    }
    const double u = distance / range;
    return sill * (1.0 - 1.5 * u + 0.5 * u * u * u);
}

double GrfSpec::trend(double s1, double s2) const { return intercept + slope_s1 * s1 + slope_s2 * s2; }

void SimConfig::validate() const {
    if (n < 4 || p < 1 || r < 1) {
        throw Error(ErrorCode::InvalidArgument, "simulation needs n >= 4, p >= 1, r >= 1");
    }
    if (d < 0 || d > std::min(r, p)) {
        throw Error(ErrorCode::RankOutOfRange, "true rank d must lie in 0..min(r, p)");
    }
    if (model != ModelKind::sscm && model != ModelKind::sem) {
        throw Error(ErrorCode::InvalidArgument, "data are generated under sscm or sem");
    }
    if (model == ModelKind::sscm && !(lambda > 0.0)) {
        throw Error(ErrorCode::NonPositiveLambda, "lambda must be positive");
    }
    if (model == ModelKind::sem && !(std::abs(theta) < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "|theta| must be below 1");
    }
    if (reps < 1) {
        throw Error(ErrorCode::InvalidArgument, "reps must be at least 1");
    }
    if (!(train_frac > 0.0 && train_frac < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "train_frac must lie in (0, 1)");
    }
    if (locations == LocationMode::grid) {
        const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
        if (side * side != n) {
            throw Error(ErrorCode::InvalidArgument, "grid locations need n to be a perfect square");
        }
    }
    grf.validate();
}

// Generators ----------------------------------------------------------------

std::mt19937_64 replication_rng(std::uint64_t seed, int rep, SimStream stream) {
    return make_rng(seed, {static_cast<std::uint64_t>(rep), static_cast<std::uint64_t>(stream)});
}

Coordinates sample_locations(int n, std::mt19937_64& rng) {
    if (n < 2) {
        throw Error(ErrorCode::InvalidArgument, "need at least 2 locations");
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Coordinates coords;
    coords.points.resize(n, 2);
    for (Index i = 0; i < n; ++i) {
        coords.points(i, 0) = unit(rng);
        coords.points(i, 1) = unit(rng);
    }
    return coords;
}

Coordinates sample_locations(int n, std::uint64_t seed) {
    auto rng = make_rng(seed);
    return sample_locations(n, rng);
}

Coordinates grid_locations(int n) {
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
    if (side < 2 || side * side != n) {
        throw Error(ErrorCode::InvalidArgument, "grid locations need n to be a perfect square >= 4");
    }
    Coordinates coords;
    coords.points.resize(n, 2);
    for (int i = 0; i < side; ++i) {
        for (int j = 0; j < side; ++j) {
            coords.points(i * side + j, 0) = static_cast<double>(i) / (side - 1);
            coords.points(i * side + j, 1) = static_cast<double>(j) / (side - 1);
        }
    }
    return coords;
}

Matrix spherical_covariance(const Coordinates& coords, const GrfSpec& grf) {
    grf.validate();
    const DistanceMatrix dist = pairwise_distances(coords);
    Matrix c = dist.dist.unaryExpr([&grf](double h) { return grf.covariance(h); });
    c.diagonal().setConstant(grf.sill);
    return c;
}

Vector simulate_y(const Coordinates& coords, const GrfSpec& grf, std::mt19937_64& rng) {
    coords.validate();
    const Matrix lower = cholesky_lower(spherical_covariance(coords, grf));
    const Vector z = standard_normal(coords.size(), 1, rng);
    Vector y = lower * z;
    for (Index i = 0; i < coords.size(); ++i) {
        y(i) += grf.trend(coords.points(i, 0), coords.points(i, 1));
    }
    return y;
}

Vector simulate_y(const Coordinates& coords, const GrfSpec& grf, std::uint64_t seed) {
    auto rng = make_rng(seed);
    return simulate_y(coords, grf, rng);
}

SimulatedX simulate_x(const Vector& y, const Coordinates& coords, const SimConfig& cfg, std::mt19937_64& rng) {
    cfg.validate();
    const Index n = y.size();
    if (coords.size() != n) {
        throw Error(ErrorCode::InvalidArgument, "response and coordinates disagree in length");
    }
    const Index p = cfg.p;

    SimulatedX out;
    out.truth.mu = standard_normal(p, 1, rng);
    out.truth.a = full_rank_normal(p, cfg.d, rng);
    out.truth.b = full_rank_normal(cfg.d, cfg.r, rng);
    const Matrix g = standard_normal(p, p, rng);
    out.truth.delta = g * g.transpose();
    out.truth.delta.diagonal().array() += 0.1;

    BasisSpec poly;
    poly.kind = BasisKind::polynomial;
    poly.r = cfg.r;
    const Matrix f = raw_basis(y, poly);

    // Rows carry the spatial covariance, columns carry Delta.
    const Matrix u = standard_normal(n, p, rng) * cholesky_lower(out.truth.delta).transpose();
    const DistanceMatrix dist = pairwise_distances(coords);
    Matrix e;
    if (cfg.model == ModelKind::sscm) {
        const CorrelationH h = build_h(dist, cfg.lambda);
        e = cholesky_lower(h.h) * u;
    } else {
        const NeighborWeights w = build_w(dist, max_min_distance(dist));
        const LaggedWeights wt = build_w_theta(w, cfg.theta);
        e = wt.w_theta.partialPivLu().solve(u);
    }

    out.x = (f * (out.truth.a * out.truth.b).transpose() + e).rowwise() + out.truth.mu.transpose();
    return out;
}

SimulatedX simulate_x(const Vector& y, const Coordinates& coords, const SimConfig& cfg, std::uint64_t seed) {
    auto rng = make_rng(seed);
    return simulate_x(y, coords, cfg, rng);
}

Replication make_replication(const SimConfig& cfg, int rep) {
    cfg.validate();
    Replication out;
    auto loc_rng = replication_rng(cfg.seed, rep, SimStream::locations);
    const Coordinates coords =
        cfg.locations == LocationMode::grid ? grid_locations(cfg.n) : sample_locations(cfg.n, loc_rng);
    auto y_rng = replication_rng(cfg.seed, rep, SimStream::response);
    const Vector y = simulate_y(coords, cfg.grf, y_rng);
    auto x_rng = replication_rng(cfg.seed, rep, SimStream::predictors);
    SimulatedX sim = simulate_x(y, coords, cfg, x_rng);

    out.full.coords = coords.points;
    out.full.x = std::move(sim.x);
    out.full.y = y;
    out.truth = std::move(sim.truth);

    std::vector<Index> order(static_cast<std::size_t>(cfg.n));
    std::iota(order.begin(), order.end(), Index{0});
    auto split_rng = replication_rng(cfg.seed, rep, SimStream::split);
    std::shuffle(order.begin(), order.end(), split_rng);
    const auto n_train = static_cast<std::size_t>(std::lround(cfg.train_frac * cfg.n));
    if (n_train < 2 || n_train >= order.size()) {
        throw Error(ErrorCode::InvalidArgument, "train_frac leaves an empty training or test sample");
    }
    out.train_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    std::sort(out.train_rows.begin(), out.train_rows.end());
    std::sort(out.test_rows.begin(), out.test_rows.end());
    out.train = out.full.subset(out.train_rows);
    out.test = out.full.subset(out.test_rows);
    return out;
}

// Experiment ----------------------------------------------------------------

DPolicy DPolicy::parse(std::string_view text) {
    DPolicy policy;
    if (text == "lr") {
        policy.kind = Kind::lr;
    } else if (text == "aic") {
        policy.kind = Kind::aic;
    } else if (text == "bic") {
        policy.kind = Kind::bic;
    } else if (text == "cv") {
        policy.kind = Kind::cv;
    } else {
        std::string_view digits = text;
        if (digits.rfind("fixed:", 0) == 0) {
            digits.remove_prefix(6);
        }
        try {
            std::size_t used = 0;
            const std::string s(digits);
            policy.d = std::stoi(s, &used);
            if (used != s.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidArgument, "d policy must be lr, aic, bic, cv or an integer rank");
        }
        policy.kind = Kind::fixed;
    }
    return policy;
}

std::string DPolicy::name() const {
    switch (kind) {
        case Kind::fixed: return "fixed:" + std::to_string(d);
        case Kind::lr: return "lr";
        case Kind::aic: return "aic";
        case Kind::bic: return "bic";
        case Kind::cv: return "cv";
    }
    return "unknown";
}

bool MetricsReport::any_unstable() const {
    return std::any_of(methods.begin(), methods.end(), [](const MethodResult& m) { return m.unstable; });
}

const MethodResult& MetricsReport::method(std::string_view name) const {
    for (const auto& m : methods) {
        if (m.method == name) {
            return m;
        }
    }
    throw Error(ErrorCode::InvalidArgument, "report has no method '" + std::string(name) + "'");
}

void summarize(MethodResult& result, int reps) {
    std::vector<double> ok;
    for (double v : result.mse) {
        if (std::isfinite(v)) ok.push_back(v);
    }
    result.failures = reps - static_cast<int>(ok.size());
    result.unstable = result.failures * 5 >= reps && result.failures > 0;
    if (ok.empty()) {
        result.mean = kNaN;
        result.sd = kNaN;
        return;
    }
    result.mean = std::accumulate(ok.begin(), ok.end(), 0.0) / static_cast<double>(ok.size());
    double ss = 0.0;
    for (double v : ok) ss += (v - result.mean) * (v - result.mean);
    result.sd = ok.size() > 1 ? std::sqrt(ss / static_cast<double>(ok.size() - 1)) : 0.0;
}

namespace {

struct MethodOutcome {
    double mse = kNaN;
    int d = -1;
    double h1 = kNaN;
    double h2 = kNaN;
};

struct RepOutcome {
    std::vector<MethodOutcome> methods;
    double params[3] = {kNaN, kNaN, kNaN};
};

const std::vector<double>& estimation_grid(const SimConfig& cfg, ModelKind kind) {
    static const std::vector<double> none;
    if (kind == ModelKind::sscm) return cfg.lambda_grid;
    if (kind == ModelKind::sem) return cfg.theta_grid;
    return none;
}

int choose_d(const SimConfig& cfg, const DPolicy& policy, const SpatialSample& train, ModelKind kind,
             const BasisSpec& spec, KernelCount kernels, int rep) {
    const int top = std::min(cfg.r, cfg.p);
    const auto& grid = estimation_grid(cfg, kind);
    switch (policy.kind) {
        case DPolicy::Kind::fixed: return policy.d;
        case DPolicy::Kind::lr:
        case DPolicy::Kind::aic:
        case DPolicy::Kind::bic: {
            const auto logliks = rank_logliks(train, kind, spec, grid);
            const int n = static_cast<int>(train.size());
            if (policy.kind == DPolicy::Kind::lr) return select_lr(logliks, cfg.p, cfg.r, n, policy.alpha).d_star;
            return select_ic(logliks, cfg.p, cfg.r, n,
                             policy.kind == DPolicy::Kind::aic ? Criterion::aic : Criterion::bic)
                .d_star;
        }
        case DPolicy::Kind::cv: {
            std::vector<int> range(static_cast<std::size_t>(top));
            std::iota(range.begin(), range.end(), 1);
            CvOptions options;
            options.folds = cfg.cv_folds;
            auto fold_rng = replication_rng(cfg.seed, rep, SimStream::folds);
            options.seed = fold_rng();
            return select_cv(train, kind, spec, kernels, range, options, grid).d_star;
        }
    }
    return policy.d;
}

RepOutcome run_replication(const SimConfig& cfg, const std::vector<PredictorMode>& methods, const DPolicy& policy,
                           int rep) {
    RepOutcome out;
    out.methods.resize(methods.size());
    Replication data;
    try {
        data = make_replication(cfg, rep);
    } catch (const Error&) {
        return out;
    }

    BasisSpec spec;
    spec.kind = BasisKind::polynomial;
    spec.r = cfg.r;

    // Fits are shared by every method using the same reduction and rank.
    std::map<std::pair<int, int>, std::optional<ReductionFit>> fits;
    std::map<std::pair<int, int>, int> chosen_d;

    for (std::size_t m = 0; m < methods.size(); ++m) {
        const PredictorMode mode = methods[m];
        MethodOutcome& result = out.methods[m];
        try {
            const ReductionFit* fit = nullptr;
            if (const auto kind = model_kind(mode.source)) {
                const bool per_kernel = policy.kind == DPolicy::Kind::cv;
                const auto d_key = std::make_pair(model_slot(*kind), per_kernel ? static_cast<int>(mode.kernels) : 0);
                auto found = chosen_d.find(d_key);
                if (found == chosen_d.end()) {
                    found = chosen_d.emplace(d_key, choose_d(cfg, policy, data.train, *kind, spec, mode.kernels, rep))
                                .first;
                }
                result.d = found->second;
                const auto fit_key = std::make_pair(model_slot(*kind), result.d);
                auto cached = fits.find(fit_key);
                if (cached == fits.end()) {
                    std::optional<ReductionFit> fitted;
                    try {
                        fitted = fit_model(data.train, *kind, spec, result.d, estimation_grid(cfg, *kind));
                    } catch (const Error&) {
                    }
                    cached = fits.emplace(fit_key, std::move(fitted)).first;
                }
                if (!cached->second) {
                    continue;
                }
                fit = &*cached->second;
                out.params[model_slot(*kind)] = fit->spatial_param;
            }

            const TrainingReference ref = make_reference(data.train, fit);
            PredictorConfig config;
            config.mode = mode;
            config = with_default_grids(config, ref);
            const Bandwidths bw = loocv_bandwidths(ref, config);
            config.h1 = bw.h1;
            config.h2 = bw.h2;
            const auto pred = predict_rows(data.test.x, data.test.coords, fit, config, ref);
            double sse = 0.0;
            for (std::size_t i = 0; i < pred.size(); ++i) {
                const double e = data.test.y(static_cast<Index>(i)) - pred[i].y_hat;
                sse += e * e;
            }
            result.mse = sse / static_cast<double>(pred.size());
            result.h1 = bw.h1;
            result.h2 = bw.h2 ? *bw.h2 : kNaN;
        } catch (const Error&) {
            result.mse = kNaN;
        }
    }
    return out;
}

}  // namespace

MetricsReport run_experiment(const SimConfig& cfg, const std::vector<PredictorMode>& methods, const DPolicy& policy,
                             std::size_t threads) {
    cfg.validate();
    if (methods.empty()) {
        throw Error(ErrorCode::InvalidArgument, "no methods requested");
    }
    if (policy.kind == DPolicy::Kind::fixed && (policy.d < 0 || policy.d > std::min(cfg.r, cfg.p))) {
        throw Error(ErrorCode::RankOutOfRange, "fixed d outside 0..min(r, p)");
    }

    std::vector<RepOutcome> outcomes(static_cast<std::size_t>(cfg.reps));
    parallel_for(
        outcomes.size(),
        [&](std::size_t rep) { outcomes[rep] = run_replication(cfg, methods, policy, static_cast<int>(rep)); },
        threads == 0 ? thread_count() : threads);

    MetricsReport report;
    report.config = cfg;
    report.d_policy = policy.name();
    for (int rep = 0; rep < cfg.reps; ++rep) {
        auto rng = replication_rng(cfg.seed, rep, SimStream::locations);
        report.replication_seeds.push_back(rng());
    }
    report.spatial_params.assign(3, std::vector<double>(static_cast<std::size_t>(cfg.reps), kNaN));
    for (std::size_t m = 0; m < methods.size(); ++m) {
        MethodResult result;
        result.method = methods[m].name();
        for (const auto& rep : outcomes) {
            result.mse.push_back(rep.methods[m].mse);
            result.d_selected.push_back(rep.methods[m].d);
            result.h1.push_back(rep.methods[m].h1);
            result.h2.push_back(rep.methods[m].h2);
        }
        summarize(result, cfg.reps);
        report.methods.push_back(std::move(result));
    }
    for (std::size_t rep = 0; rep < outcomes.size(); ++rep) {
        for (int k = 0; k < 3; ++k) {
            report.spatial_params[static_cast<std::size_t>(k)][rep] = outcomes[rep].params[k];
        }
    }
    return report;
}

}  // namespace spsdr
