#include "spsdr/error.hpp"
#include "spsdr/rrr.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace spsdr;

namespace {

WhitenedData make_data(const Matrix& x, const Matrix& f) {
    WhitenedData data;
    data.x_bar = x;
    data.f_bar = f;
    return data;
}

WhitenedData noisy_whitened(Index n, Index p, Index r, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const Matrix f = oracle::random_matrix(n, r, rng);
    const Matrix c = oracle::random_matrix(p, r, rng);
    const Matrix x = f * c.transpose() + oracle::random_matrix(n, p, rng) * oracle::random_spd(p, rng);
    return make_data(x, f);
}

}  // namespace

TEST(LeastSquares, MatchesGenericSolver) {
    std::mt19937_64 rng(1);
    const Matrix x = oracle::random_matrix(8, 3, rng);
    const Matrix f = oracle::random_matrix(8, 2, rng);
    const LsFit ls = ls_fit(make_data(x, f));
    const Matrix c_oracle = f.colPivHouseholderQr().solve(x).transpose();
    EXPECT_LT((ls.c_ls - c_oracle).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(LeastSquares, OrthonormalBasis) {
    std::mt19937_64 rng(2);
    const Index n = 40;
    const Matrix q = oracle::random_matrix(n, 2, rng).householderQr().householderQ() * Matrix::Identity(n, 2);
    const Matrix f = std::sqrt(static_cast<double>(n)) * q;
    const Matrix x = oracle::random_matrix(n, 3, rng);
    const LsFit ls = ls_fit(make_data(x, f));
    EXPECT_LT((ls.c_ls - x.transpose() * f / static_cast<double>(n)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LeastSquares, NoiselessFitUsesJitter) {
    std::mt19937_64 rng(3);
    const Matrix f = oracle::random_matrix(20, 2, rng);
    const Matrix c = oracle::random_matrix(3, 2, rng);
    try {
        const LsFit ls = ls_fit(make_data(f * c.transpose(), f));
        EXPECT_TRUE(ls.jittered);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SingularDeltaLS);
    }
}

TEST(ReducedRank, FullRankCollapsesToLeastSquares) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const WhitenedData data = noisy_whitened(60, 5, 3, seed);
        const RrrEstimate est = rrr_mle(data, 3);
        EXPECT_LT((est.coefficient() - est.c_ls).cwiseAbs().maxCoeff(), 1e-8);
        EXPECT_LT((est.delta_hat - est.delta_ls).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(ReducedRank, FullRankLoglikIdentity) {
    const WhitenedData data = noisy_whitened(50, 4, 2, 7);
    const RrrEstimate est = rrr_mle(data, 2);
    const double n = 50.0;
    const double p = 4.0;
    const double logdet_s = 1.7;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(est.delta_ls);
    const double expected = -0.5 * n * p * std::log(2.0 * std::numbers::pi) - logdet_s -
                            0.5 * n * eig.eigenvalues().array().log().sum() - 0.5 * n * p;
    EXPECT_NEAR(loglik(data, est, logdet_s), expected, 1e-9 * std::abs(expected));
}

TEST(ReducedRank, ScalarHandInstance) {
    Matrix x(4, 1);
    x << 1.0, 2.5, 2.0, 4.5;
    Matrix f(4, 1);
    f << -1.5, -0.5, 0.5, 1.5;
    const WhitenedData data = make_data(x, f);
    const RrrEstimate est = rrr_mle(data, 1);
    // Scalar least squares through the origin, then the Gaussian density.
    const double c = (x.col(0).dot(f.col(0))) / f.col(0).squaredNorm();
    const Vector resid = x.col(0) - c * f.col(0);
    const double sigma2 = resid.squaredNorm() / 4.0;
    double expected = 0.0;
    for (Index i = 0; i < 4; ++i) {
        expected += -0.5 * std::log(2.0 * std::numbers::pi * sigma2) - 0.5 * resid(i) * resid(i) / sigma2;
    }
    EXPECT_NEAR(est.coefficient()(0, 0), c, 1e-12);
    EXPECT_NEAR(loglik(data, est, 0.0), expected, 1e-10);
}

TEST(ReducedRank, LoglikNondecreasingInRank) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const WhitenedData data = noisy_whitened(80, 6, 3, 100 + seed);
        const LsFit ls = ls_fit(data);
        double previous = -std::numeric_limits<double>::infinity();
        for (int d = 0; d <= 3; ++d) {
            const double ll = loglik(data, rrr_mle(data, ls, d), 0.0);
            EXPECT_GE(ll, previous - 1e-10);
            previous = ll;
        }
    }
}

TEST(ReducedRank, MatchesDirectLikelihoodAtEstimate) {
    const WhitenedData data = noisy_whitened(40, 3, 2, 11);
    const RrrEstimate est = rrr_mle(data, 1);
    const double direct = oracle::matrix_normal_loglik(data.x_bar, data.f_bar, Vector::Zero(3), est.coefficient(),
                                                      est.delta_hat, Matrix::Identity(40, 40), 0.0);
    EXPECT_NEAR(loglik(data, est, 0.0), direct, 1e-9 * std::abs(direct));
}

TEST(ReducedRank, SpanInvariance) {
    const WhitenedData data = noisy_whitened(70, 5, 3, 13);
    const RrrEstimate est = rrr_mle(data, 2);
    std::mt19937_64 rng(14);
    const Matrix g = oracle::random_matrix(2, 2, rng) + 2.0 * Matrix::Identity(2, 2);
    RrrEstimate moved = est;
    moved.a_hat = est.a_hat * g;
    moved.b_hat = g.inverse() * est.b_hat;
    EXPECT_LT((moved.coefficient() - est.coefficient()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(loglik(data, moved, 0.0), loglik(data, est, 0.0), 1e-8);
    // Reductions move by G', which the orthogonal case turns into an isometry.
    const Vector mu = Vector::Zero(5);
    const Matrix red = reduce_rows(data.x_bar, mu, est);
    const Matrix red_moved = reduce_rows(data.x_bar, mu, moved);
    EXPECT_LT((red_moved - red * g).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(ReducedRank, DeltaEstimatesPositiveDefinite) {
    const WhitenedData data = noisy_whitened(60, 4, 2, 17);
    for (int d = 0; d <= 2; ++d) {
        const RrrEstimate est = rrr_mle(data, d);
        Eigen::SelfAdjointEigenSolver<Matrix> a(est.delta_hat);
        Eigen::SelfAdjointEigenSolver<Matrix> b(est.delta_ls);
        EXPECT_GT(a.eigenvalues().minCoeff(), 0.0);
        EXPECT_GT(b.eigenvalues().minCoeff(), 0.0);
        EXPECT_LT((est.delta_hat - est.delta_hat.transpose()).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(ReducedRank, IndependentDataHasSmallEigenvalues) {
    std::mt19937_64 rng(19);
    const Index n = 3000;
    const Matrix f = oracle::random_matrix(n, 2, rng);
    const Matrix x = oracle::random_matrix(n, 3, rng);
    const RrrEstimate est = rrr_mle(make_data(x, f), 0);
    // n * sum of eigenvalues is the asymptotic chi2_6 statistic; 0.999 quantile is 22.46.
    EXPECT_LT(static_cast<double>(n) * est.eigvals.sum(), 22.46);
}

TEST(ReducedRank, RankOutOfRange) {
    const WhitenedData data = noisy_whitened(30, 3, 2, 23);
    for (int d : {-1, 3}) {
        try {
            rrr_mle(data, d);
            FAIL() << "expected RankOutOfRange";
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::RankOutOfRange);
        }
    }
}

TEST(Reduction, AtMeanIsZero) {
    const WhitenedData data = noisy_whitened(40, 4, 2, 29);
    const RrrEstimate est = rrr_mle(data, 2);
    std::mt19937_64 rng(30);
    const Vector mu = oracle::random_matrix(4, 1, rng);
    EXPECT_LT(reduce(mu, mu, est).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Reduction, MatchesExplicitProduct) {
    const WhitenedData data = noisy_whitened(40, 4, 2, 31);
    const RrrEstimate est = rrr_mle(data, 2);
    const Vector mu = Vector::Constant(4, 0.3);
    const Matrix red = reduce_rows(data.x_bar, mu, est);
    const Matrix dinv = est.delta_hat.inverse();
    for (Index i = 0; i < 40; ++i) {
        const Vector expected = est.a_hat.transpose() * dinv * (data.x_bar.row(i).transpose() - mu);
        EXPECT_LT((red.row(i).transpose() - expected).cwiseAbs().maxCoeff(), 1e-10);
    }
}
