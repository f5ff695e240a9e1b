#include "spsdr/error.hpp"
#include "spsdr/predictor.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace spsdr;

namespace {

TrainingReference reference(const Matrix& points, const Vector& y, const Matrix& coords) {
    TrainingReference ref;
    ref.points = points;
    ref.responses = y;
    ref.coords = coords;
    return ref;
}

TrainingReference random_reference(Index n, Index dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const Matrix pts = oracle::random_matrix(n, dim, rng);
    const Vector y = pts.col(0).array().sin() + 0.1 * oracle::random_matrix(n, 1, rng).col(0).array();
    return reference(pts, y, oracle::random_coords(n, rng));
}

PredictorConfig config(KernelCount k, double h1, std::optional<double> h2 = std::nullopt) {
    PredictorConfig c;
    c.mode.kernels = k;
    c.mode.source = ReductionSource::full;
    c.h1 = h1;
    c.h2 = h2;
    return c;
}

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Index>(v.size()));
    Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

}  // namespace

TEST(Weights, SinglePoint) {
    const auto ref = reference(Matrix::Constant(1, 1, 2.0), vec({3.0}), Matrix::Zero(1, 2));
    const KernelWeights w = nw_weights_1k(vec({0.0}), ref, 1.0);
    EXPECT_DOUBLE_EQ(w.weights(0), 1.0);
}

TEST(Weights, Equidistant) {
    Matrix pts(2, 1);
    pts << -1.0, 1.0;
    const auto ref = reference(pts, vec({0.0, 1.0}), Matrix::Zero(2, 2));
    const KernelWeights w = nw_weights_1k(vec({0.0}), ref, 0.7);
    EXPECT_NEAR(w.weights(0), 0.5, 1e-15);
    EXPECT_NEAR(w.weights(1), 0.5, 1e-15);
}

TEST(Weights, ThreePointOneKernel) {
    Matrix pts(3, 1);
    pts << 0.0, 1.0, 2.0;
    const auto ref = reference(pts, vec({0, 0, 0}), Matrix::Zero(3, 2));
    const KernelWeights w = nw_weights_1k(vec({0.0}), ref, 1.0);
    // Proportional to (1, e^{-0.5}, e^{-2}); normalized that is (0.5741, 0.3482, 0.0777).
    EXPECT_NEAR(w.weights(0) / w.weights(1), 0.5207 / 0.3158, 1e-3);
    EXPECT_NEAR(w.weights(1) / w.weights(2), 0.3158 / 0.0705, 1e-2);
    const double z = 1.0 + std::exp(-0.5) + std::exp(-2.0);
    EXPECT_NEAR(w.weights(0), 1.0 / z, 1e-14);
    EXPECT_NEAR(w.weights(1), std::exp(-0.5) / z, 1e-14);
    EXPECT_NEAR(w.weights(2), std::exp(-2.0) / z, 1e-14);
    EXPECT_NEAR(w.weights(0), 0.5741, 1e-4);
    EXPECT_NEAR(w.weights(1), 0.3482, 1e-4);
    EXPECT_NEAR(w.weights(2), 0.0777, 1e-4);
}

TEST(Weights, TwoPointTwoKernel) {
    Matrix pts(2, 1);
    pts << 1.0, -1.0;
    Matrix coords(2, 2);
    coords << 1.0, 0.0, 0.0, 2.0;
    const auto ref = reference(pts, vec({0, 0}), coords);
    const KernelWeights w = nw_weights_2k(vec({0.0}), vec({0.0, 0.0}), ref, 1.0, 1.0);
    EXPECT_NEAR(w.weights(0), 0.8176, 1e-4);
    EXPECT_NEAR(w.weights(1), 0.1824, 1e-4);
}

TEST(Weights, FlatSpatialKernelReproducesOneKernel) {
    const auto ref = random_reference(50, 2, 1);
    std::mt19937_64 rng(2);
    for (int t = 0; t < 20; ++t) {
        const Vector q = oracle::random_matrix(2, 1, rng);
        const Vector s0 = oracle::random_coords(1, rng).transpose();
        const Vector a = nw_weights_1k(q, ref, 0.8).weights;
        const Vector b = nw_weights_2k(q, s0, ref, 0.8, 1e12).weights;
        EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(Weights, Concentration) {
    const auto ref = random_reference(30, 2, 3);
    const Vector q = ref.points.row(7).transpose();
    const Vector s0 = ref.coords.row(7).transpose();
    const KernelWeights w = nw_weights_2k(q, s0, ref, 1e-3, 1e-3);
    EXPECT_NEAR(w.weights(7), 1.0, 1e-12);
}

TEST(Weights, UnderflowFallsBackToNearest) {
    Matrix pts(3, 1);
    pts << 0.0, 5.0, 9.0;
    const auto ref = reference(pts, vec({1, 2, 3}), Matrix::Zero(3, 2));
    const KernelWeights w = nw_weights_1k(vec({1000.0}), ref, 1e-3);
    EXPECT_TRUE(w.fallback);
    EXPECT_EQ(w.weights(2), 1.0);
    EXPECT_EQ(w.weights(0) + w.weights(1), 0.0);
}

TEST(Weights, SumToOneAndNonnegative) {
    const auto ref = random_reference(80, 3, 4);
    std::mt19937_64 rng(5);
    for (int t = 0; t < 200; ++t) {
        const Vector q = 2.0 * oracle::random_matrix(3, 1, rng);
        const Vector s0 = oracle::random_coords(1, rng).transpose();
        for (const Vector& w : {nw_weights_1k(q, ref, 0.3).weights, nw_weights_2k(q, s0, ref, 0.3, 0.1).weights}) {
            EXPECT_NEAR(w.sum(), 1.0, 1e-12);
            EXPECT_GE(w.minCoeff(), 0.0);
        }
    }
}

TEST(Prediction, ConstantResponse) {
    auto ref = random_reference(40, 2, 6);
    ref.responses.setConstant(4.25);
    std::mt19937_64 rng(7);
    const Vector q = oracle::random_matrix(2, 1, rng);
    const Prediction p = predict(q, Vector::Zero(2), nullptr, config(KernelCount::two, 0.5, 0.2), ref);
    EXPECT_NEAR(p.y_hat, 4.25, 1e-12);
}

TEST(Prediction, WithinResponseRange) {
    const auto ref = random_reference(60, 2, 8);
    std::mt19937_64 rng(9);
    for (int t = 0; t < 100; ++t) {
        const Vector q = 3.0 * oracle::random_matrix(2, 1, rng);
        const Vector s0 = oracle::random_coords(1, rng).transpose();
        const double y = predict(q, s0, nullptr, config(KernelCount::two, 0.4, 0.3), ref).y_hat;
        EXPECT_GE(y, ref.responses.minCoeff() - 1e-12);
        EXPECT_LE(y, ref.responses.maxCoeff() + 1e-12);
    }
}

TEST(Prediction, DeskInstance) {
    Matrix pts(5, 1);
    pts << -1.0, -0.5, 0.0, 0.5, 1.5;
    const Vector y = vec({2.0, 1.0, 0.0, 3.0, 5.0});
    const auto ref = reference(pts, y, Matrix::Zero(5, 2));
    // h1 = 1, query 0.2: kernel exp(-(x - 0.2)^2 / 2).
    double num = 0.0;
    double den = 0.0;
    for (Index i = 0; i < 5; ++i) {
        const double k = std::exp(-0.5 * (pts(i, 0) - 0.2) * (pts(i, 0) - 0.2));
        num += k * y(i);
        den += k;
    }
    const Prediction p = predict(vec({0.2}), Vector::Zero(2), nullptr, config(KernelCount::one, 1.0), ref);
    EXPECT_NEAR(p.y_hat, num / den, 1e-14);
}

TEST(Prediction, OrthogonalRebasingInvariant) {
    const auto ref = random_reference(70, 3, 10);
    std::mt19937_64 rng(11);
    const Matrix g = oracle::random_matrix(3, 3, rng).householderQr().householderQ();
    const auto rotated = reference(ref.points * g, ref.responses, ref.coords);
    for (int t = 0; t < 50; ++t) {
        const Vector q = oracle::random_matrix(3, 1, rng);
        const Vector s0 = oracle::random_coords(1, rng).transpose();
        const auto cfg = config(KernelCount::two, 0.6, 0.25);
        const double a = predict(q, s0, nullptr, cfg, ref).y_hat;
        const double b = predict(g.transpose() * q, s0, nullptr, cfg, rotated).y_hat;
        EXPECT_NEAR(a, b, 1e-9);
    }
}

TEST(Prediction, RowsMatchSingleCalls) {
    const auto ref = random_reference(40, 2, 12);
    std::mt19937_64 rng(13);
    const Matrix qx = oracle::random_matrix(9, 2, rng);
    const Matrix sites = oracle::random_coords(9, rng);
    const auto cfg = config(KernelCount::two, 0.5, 0.3);
    const auto rows = predict_rows(qx, sites, nullptr, cfg, ref);
    ASSERT_EQ(rows.size(), 9u);
    for (Index i = 0; i < 9; ++i) {
        EXPECT_EQ(rows[static_cast<std::size_t>(i)].y_hat,
                  predict(qx.row(i).transpose(), sites.row(i).transpose(), nullptr, cfg, ref).y_hat);
    }
}

TEST(Bandwidths, SingletonGrids) {
    const auto ref = random_reference(30, 2, 14);
    auto cfg = config(KernelCount::two, 1.0, 1.0);
    cfg.h1_grid = {0.37};
    cfg.h2_grid = {0.21};
    const Bandwidths bw = loocv_bandwidths(ref, cfg);
    EXPECT_EQ(bw.h1, 0.37);
    EXPECT_EQ(*bw.h2, 0.21);
    EXPECT_NEAR(bw.loo_mse, loo_error(ref, 0.37, 0.21), 1e-12);
}

TEST(Bandwidths, SmoothCurveHasInteriorMinimum) {
    const Index n = 120;
    Matrix pts(n, 1);
    Vector y(n);
    for (Index i = 0; i < n; ++i) {
        pts(i, 0) = -3.0 + 6.0 * static_cast<double>(i) / static_cast<double>(n - 1);
        y(i) = std::sin(pts(i, 0));
    }
    std::mt19937_64 rng(15);
    y += 0.2 * oracle::random_matrix(n, 1, rng).col(0);
    const auto ref = reference(pts, y, oracle::random_coords(n, rng));
    auto cfg = config(KernelCount::one, 1.0);
    for (int k = 0; k < 30; ++k) cfg.h1_grid.push_back(0.01 * std::pow(1.25, k));
    const Bandwidths bw = loocv_bandwidths(ref, cfg);
    for (double h : cfg.h1_grid) EXPECT_TRUE(std::isfinite(loo_error(ref, h, std::nullopt)));
    EXPECT_GT(bw.h1, cfg.h1_grid.front());
    EXPECT_LT(bw.h1, cfg.h1_grid.back());
    EXPECT_LT(bw.loo_mse, loo_error(ref, cfg.h1_grid.front(), std::nullopt));
    EXPECT_LT(bw.loo_mse, loo_error(ref, cfg.h1_grid.back(), std::nullopt));
}

TEST(Bandwidths, DuplicatedDataShrinksBandwidth) {
    const auto ref = random_reference(60, 1, 16);
    TrainingReference twice;
    twice.points.resize(120, 1);
    twice.responses.resize(120);
    twice.coords.resize(120, 2);
    twice.points << ref.points, ref.points;
    twice.responses << ref.responses, ref.responses;
    twice.coords << ref.coords, ref.coords;
    auto cfg = config(KernelCount::one, 1.0);
    for (int k = 0; k < 20; ++k) cfg.h1_grid.push_back(0.02 * std::pow(1.3, k));
    EXPECT_LT(loocv_bandwidths(twice, cfg).h1, loocv_bandwidths(ref, cfg).h1);
}

TEST(Bandwidths, DefaultGrid) {
    Matrix pts(3, 1);
    pts << 0.0, 4.0, 10.0;  // pairwise distances 4, 6, 10
    const auto grid = default_bandwidth_grid(pts);
    ASSERT_EQ(grid.size(), 15u);
    EXPECT_NEAR(grid.front(), 0.6, 1e-12);
    EXPECT_NEAR(grid.back(), 12.0, 1e-12);
    EXPECT_THROW(default_bandwidth_grid(Matrix::Zero(3, 1)), Error);
}

TEST(Bandwidths, DegenerateInputs) {
    const auto ref = random_reference(30, 2, 17);
    auto cfg = config(KernelCount::one, 1.0);
    cfg.h1_grid = {};
    try {
        loocv_bandwidths(ref, cfg);
        FAIL() << "expected DegenerateGrid";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateGrid);
    }
    cfg.h1_grid = {0.5};
    EXPECT_THROW(loocv_bandwidths(random_reference(2, 2, 18), cfg), Error);
}

TEST(Modes, NamesAndParsing) {
    const auto all = PredictorMode::all();
    ASSERT_EQ(all.size(), 8u);
    EXPECT_EQ(all.front().name(), "1k.FULL");
    EXPECT_EQ(all.back().name(), "2k.SEM");
    for (const auto& m : all) EXPECT_EQ(PredictorMode::parse(m.name()), m);
    EXPECT_EQ(PredictorMode::parse("2k.sscm").name(), "2k.SSCM");
    EXPECT_THROW(PredictorMode::parse("3k.SEM"), Error);
    EXPECT_FALSE(model_kind(ReductionSource::full).has_value());
    EXPECT_EQ(*model_kind(ReductionSource::sem), ModelKind::sem);
}
