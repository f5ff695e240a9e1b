#include "spsdr/rrr.hpp"

#include "spsdr/error.hpp"
#include "spsdr/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace spsdr {

std::string TransformTag::label() const {
    switch (kind) {
        case TransformKind::identity_centering: return "identity-centering";
        case TransformKind::sscm: return "sscm(" + std::to_string(parameter) + ")";
        case TransformKind::sem: return "sem(" + std::to_string(parameter) + ")";
    }
    return "unknown";
}

namespace {

double data_scale(const Matrix& x_bar) {
    const double s = x_bar.squaredNorm() / static_cast<double>(x_bar.rows() * x_bar.cols());
    return s > 0.0 ? s : 1.0;
}

void check_shapes(const WhitenedData& data) {
    if (data.f_bar.rows() != data.x_bar.rows()) {
        throw Error(ErrorCode::InvalidArgument, "x_bar and f_bar row counts differ");
    }
    if (data.r() < 1 || data.p() < 1) {
        throw Error(ErrorCode::InvalidArgument, "need at least one predictor and one basis column");
    }
    if (data.n() <= data.p() + data.r()) {
        throw Error(ErrorCode::InvalidArgument,
                    "need n > p + r (n = " + std::to_string(data.n()) + ", p = " +
                        std::to_string(data.p()) + ", r = " + std::to_string(data.r()) + ")");
    }
}

Matrix llt_solve_spd(const Matrix& a, const Matrix& rhs, ErrorCode failure) {
    Eigen::LLT<Matrix> llt(linalg::symmetrize(a));
    if (llt.info() != Eigen::Success) {
        throw Error(failure, "matrix is not positive definite");
    }
    return llt.solve(rhs);
}

}  // namespace

LsFit ls_fit(const WhitenedData& data) {
    check_shapes(data);
    const double n = static_cast<double>(data.n());
    LsFit out;
    out.sigma_xf = data.x_bar.transpose() * data.f_bar / n;
    out.sigma_ff = linalg::symmetrize(data.f_bar.transpose() * data.f_bar / n);

    Eigen::SelfAdjointEigenSolver<Matrix> ff(out.sigma_ff, Eigen::EigenvaluesOnly);
    const double ff_max = ff.eigenvalues().maxCoeff();
    if (!(ff_max > 0.0) || !(ff.eigenvalues().minCoeff() > 1e-12 * ff_max)) {
        throw Error(ErrorCode::SingularFF, "basis cross-product is singular");
    }
    // C_LS' = Sigma_FF^{-1} Sigma_FX
    out.c_ls = llt_solve_spd(out.sigma_ff, out.sigma_xf.transpose(), ErrorCode::SingularFF).transpose();

    const Matrix resid = data.x_bar - data.f_bar * out.c_ls.transpose();
    out.delta_ls = linalg::symmetrize(resid.transpose() * resid / n);
    const auto factor = linalg::factor_spd(out.delta_ls, ErrorCode::SingularDeltaLS, data_scale(data.x_bar));
    out.jittered = factor.jittered;
    if (factor.jittered) {
        out.delta_ls.diagonal().array() += factor.jitter;
    }
    return out;
}

RrrEstimate rrr_mle(const WhitenedData& data, int d) { return rrr_mle(data, ls_fit(data), d); }

RrrEstimate rrr_mle(const WhitenedData& data, const LsFit& ls, int d) {
    check_shapes(data);
    const Index p = data.p();
    const Index r = data.r();
    const Index max_rank = std::min(p, r);
    if (d < 0 || d > max_rank) {
        throw Error(ErrorCode::RankOutOfRange,
                    "rank " + std::to_string(d) + " outside [0, " + std::to_string(max_rank) + "]");
    }
    const double n = static_cast<double>(data.n());

    const auto delta_factor = linalg::factor_spd(ls.delta_ls, ErrorCode::SingularDeltaLS, data_scale(data.x_bar));
    const Matrix dls_inv_sqrt = delta_factor.inv_sqrt();
    const Matrix dls_sqrt = delta_factor.sqrt();

    // Sigma = D^{-1/2} Sigma_XF Sigma_FF^{-1} Sigma_FX D^{-1/2} = (D^{-1/2} C_LS) Sigma_FX D^{-1/2}
    const Matrix left = dls_inv_sqrt * ls.c_ls;
    const Matrix sigma = linalg::symmetrize(left * ls.sigma_xf.transpose() * dls_inv_sqrt);
    const auto eig = linalg::sym_eig_descending(sigma);

    RrrEstimate est;
    est.d = d;
    est.delta_ls = ls.delta_ls;
    est.c_ls = ls.c_ls;
    est.eigvals = eig.values.head(max_rank).cwiseMax(0.0);

    // V_d spans D^{-1/2} C_LS, so A = D^{1/2} V_d and B = V_d' D^{-1/2} C_LS
    // give A B = C_LS at full rank.
    const Matrix v_d = eig.vectors.leftCols(d);
    est.a_hat = dls_sqrt * v_d;
    est.b_hat = v_d.transpose() * left;

    const Matrix resid = data.x_bar - data.f_bar * (est.a_hat * est.b_hat).transpose();
    est.delta_hat = linalg::symmetrize(resid.transpose() * resid / n);
    if (!est.a_hat.allFinite() || !est.b_hat.allFinite() || !est.delta_hat.allFinite()) {
        throw Error(ErrorCode::EigenFailure, "non-finite reduced-rank estimate");
    }
    return est;
}

double loglik(const WhitenedData& data, const RrrEstimate& est, double logdet_s_term) {
    const double n = static_cast<double>(data.n());
    const double p = static_cast<double>(data.p());
    const Matrix resid = data.x_bar - data.f_bar * (est.a_hat * est.b_hat).transpose();

    Eigen::LDLT<Matrix> ldlt(est.delta_hat);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        throw Error(ErrorCode::NonFiniteLoglik, "residual covariance is not positive definite");
    }
    const double logdet_delta = ldlt.vectorD().array().log().sum();
    // tr(R D^{-1} R') = sum_ij (R D^{-1})_ij R_ij
    const Matrix solved = ldlt.solve(resid.transpose());
    const double quad = (solved.transpose().array() * resid.array()).sum();

    const double value = -0.5 * n * p * std::log(2.0 * std::numbers::pi) - logdet_s_term -
                         0.5 * n * logdet_delta - 0.5 * quad;
    if (!std::isfinite(value)) {
        throw Error(ErrorCode::NonFiniteLoglik, "log-likelihood is not finite");
    }
    return value;
}

Matrix reduce_rows(const Matrix& x, const Vector& mu_hat, const RrrEstimate& est, ReductionMetric metric) {
    if (x.cols() != mu_hat.size() || mu_hat.size() != est.a_hat.rows()) {
        throw Error(ErrorCode::InvalidArgument, "predictor dimension does not match the fit");
    }
    const Matrix& m = metric == ReductionMetric::delta_hat ? est.delta_hat : est.delta_ls;
    // (x - mu) M^{-1} A
    const Matrix weights = llt_solve_spd(m, est.a_hat, ErrorCode::SingularDeltaHat);
    return (x.rowwise() - mu_hat.transpose()) * weights;
}

Vector reduce(const Vector& x_new, const Vector& mu_hat, const RrrEstimate& est, ReductionMetric metric) {
    return reduce_rows(x_new.transpose(), mu_hat, est, metric).transpose();
}

}  // namespace spsdr
