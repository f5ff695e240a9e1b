#include "spsdr/dimselect.hpp"

#include "spsdr/error.hpp"
#include "spsdr/random.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace spsdr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_logliks(const std::vector<double>& logliks, int p, int r) {
    if (p < 1 || r < 1) {
        throw Error(ErrorCode::InvalidArgument, "p and r must be positive");
    }
    const auto expected = static_cast<std::size_t>(std::min(r, p)) + 1;
    if (logliks.size() != expected) {
        throw Error(ErrorCode::InvalidArgument, "expected " + std::to_string(expected) +
                                                    " log-likelihoods, got " + std::to_string(logliks.size()));
    }
    for (std::size_t k = 0; k < logliks.size(); ++k) {
        if (!std::isfinite(logliks[k])) {
            throw Error(ErrorCode::NonMonotoneLogliks, "log-likelihood at rank " + std::to_string(k) + " is not finite");
        }
        if (k > 0) {
            const double slack = 1e-9 * std::max(1.0, std::abs(logliks[k]));
            if (logliks[k] < logliks[k - 1] - slack) {
                throw Error(ErrorCode::NonMonotoneLogliks,
                            "log-likelihood decreases from rank " + std::to_string(k - 1) + " to " + std::to_string(k));
            }
        }
    }
}

}  // namespace

std::string_view to_string(Criterion criterion) noexcept {
    switch (criterion) {
        case Criterion::lr: return "lr";
        case Criterion::aic: return "aic";
        case Criterion::bic: return "bic";
        case Criterion::cv_mpe: return "cv";
    }
    return "unknown";
}

Criterion parse_criterion(std::string_view text) {
    if (text == "lr") return Criterion::lr;
    if (text == "aic") return Criterion::aic;
    if (text == "bic") return Criterion::bic;
    if (text == "cv" || text == "cv_mpe") return Criterion::cv_mpe;
    throw Error(ErrorCode::InvalidArgument, "unknown selection criterion '" + std::string(text) + "'");
}

double chi2_upper_tail(double x, double q) {
    if (!(q > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "chi-square degrees of freedom must be positive");
    }
    if (x <= 0.0) {
        return 1.0;
    }
    return boost::math::gamma_q(0.5 * q, 0.5 * x);
}

double parameter_count(int p, int r, int delta) {
    return 0.5 * p * (p + 3) + static_cast<double>(r) * delta + static_cast<double>(delta) * (p - delta);
}

DimSelection select_lr(const std::vector<double>& logliks, int p, int r, int /*n*/, double alpha) {
    check_logliks(logliks, p, r);
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
    }
    const int top = std::min(r, p);
    DimSelection out;
    out.criterion = Criterion::lr;
    out.alpha = alpha;
    out.d_star = top;
    bool chosen = false;
    for (int delta = 0; delta <= top; ++delta) {
        CriterionTrace row;
        row.delta = delta;
        row.loglik = logliks[static_cast<std::size_t>(delta)];
        row.value = std::max(0.0, 2.0 * (logliks[static_cast<std::size_t>(top)] - row.loglik));
        const int q = (r - delta) * (p - delta);
        row.p_value = q > 0 ? chi2_upper_tail(row.value, q) : 1.0;
        if (!chosen && row.p_value >= alpha) {
            out.d_star = delta;
            chosen = true;
        }
        out.trace.push_back(row);
    }
    return out;
}

DimSelection select_ic(const std::vector<double>& logliks, int p, int r, int n, Criterion kind) {
    check_logliks(logliks, p, r);
    if (kind != Criterion::aic && kind != Criterion::bic) {
        throw Error(ErrorCode::InvalidArgument, "select_ic takes aic or bic");
    }
    if (kind == Criterion::bic && n < 1) {
        throw Error(ErrorCode::InvalidArgument, "BIC needs a positive sample size");
    }
    const double weight = kind == Criterion::aic ? 2.0 : std::log(static_cast<double>(n));
    DimSelection out;
    out.criterion = kind;
    const int top = std::min(r, p);
    double best = std::numeric_limits<double>::infinity();
    for (int delta = 0; delta <= top; ++delta) {
        CriterionTrace row;
        row.delta = delta;
        row.loglik = logliks[static_cast<std::size_t>(delta)];
        row.value = -2.0 * row.loglik + weight * parameter_count(p, r, delta);
        row.p_value = kNaN;
        if (row.value < best) {
            best = row.value;
            out.d_star = delta;
        }
        out.trace.push_back(row);
    }
    return out;
}

std::vector<std::vector<Index>> fold_assignment(Index n, int folds, std::uint64_t seed) {
    if (folds < 2 || n < 2) {
        throw Error(ErrorCode::InvalidArgument, "cross-validation needs at least 2 folds and 2 observations");
    }
    const Index k = std::min<Index>(folds, n);
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    auto rng = make_rng(seed, {0x63765f666f6c6473ULL});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<Index>> out(static_cast<std::size_t>(k));
    for (Index f = 0; f < k; ++f) {
        const Index lo = f * n / k;
        const Index hi = (f + 1) * n / k;
        out[static_cast<std::size_t>(f)].assign(order.begin() + lo, order.begin() + hi);
        std::sort(out[static_cast<std::size_t>(f)].begin(), out[static_cast<std::size_t>(f)].end());
    }
    return out;
}

DimSelection select_cv(const SpatialSample& sample, ModelKind model, const BasisSpec& spec, KernelCount kernels,
                       const std::vector<int>& d_range, const CvOptions& options, const std::vector<double>& grid) {
    sample.validate();
    const int top = std::min<int>(spec.r, static_cast<int>(sample.predictors()));
    if (d_range.empty()) {
        throw Error(ErrorCode::InvalidArgument, "d_range is empty");
    }
    for (int d : d_range) {
        if (d < 1 || d > top) {
            throw Error(ErrorCode::RankOutOfRange, "d = " + std::to_string(d) + " outside 1.." + std::to_string(top));
        }
    }

    const auto folds = fold_assignment(sample.size(), options.folds, options.seed);
    PredictorMode mode;
    mode.kernels = kernels;
    switch (model) {
        case ModelKind::ind: mode.source = ReductionSource::ind; break;
        case ModelKind::sscm: mode.source = ReductionSource::sscm; break;
        case ModelKind::sem: mode.source = ReductionSource::sem; break;
    }

    std::vector<double> error(static_cast<std::size_t>(top) + 1, kNaN);
    for (int d : d_range) {
        double sse = 0.0;
        bool failed = false;
        for (const auto& held : folds) {
            std::vector<Index> train_rows;
            train_rows.reserve(static_cast<std::size_t>(sample.size()) - held.size());
            for (Index i = 0, h = 0; i < sample.size(); ++i) {
                if (h < static_cast<Index>(held.size()) && held[static_cast<std::size_t>(h)] == i) {
                    ++h;
                } else {
                    train_rows.push_back(i);
                }
            }
            try {
                const SpatialSample train = sample.subset(train_rows);
                const SpatialSample test = sample.subset(held);
                const ReductionFit fit = fit_model(train, model, spec, d, grid);
                const TrainingReference ref = make_reference(train, &fit);
                PredictorConfig config;
                config.mode = mode;
                if (options.h1 && (!mode.two_kernel() || options.h2)) {
                    config.h1 = *options.h1;
                    if (mode.two_kernel()) config.h2 = options.h2;
                } else {
                    config = with_default_grids(config, ref);
                    const Bandwidths bw = loocv_bandwidths(ref, config);
                    config.h1 = bw.h1;
                    config.h2 = bw.h2;
                }
                const auto pred = predict_rows(test.x, test.coords, &fit, config, ref);
                for (std::size_t i = 0; i < pred.size(); ++i) {
                    const double e = test.y(static_cast<Index>(i)) - pred[i].y_hat;
                    sse += e * e;
                }
            } catch (const Error&) {
                failed = true;
                break;
            }
        }
        if (!failed) {
            error[static_cast<std::size_t>(d)] = sse / static_cast<double>(sample.size());
        }
    }

    DimSelection out;
    out.criterion = Criterion::cv_mpe;
    double best = std::numeric_limits<double>::infinity();
    bool any = false;
    for (int delta = 0; delta <= top; ++delta) {
        CriterionTrace row;
        row.delta = delta;
        row.loglik = kNaN;
        row.value = error[static_cast<std::size_t>(delta)];
        row.p_value = kNaN;
        if (std::isfinite(row.value) && row.value < best) {
            best = row.value;
            out.d_star = delta;
            any = true;
        }
        out.trace.push_back(row);
    }
    if (!any) {
        throw Error(ErrorCode::CvFailed, "every candidate dimension failed in cross-validation");
    }
    return out;
}

}  // namespace spsdr
