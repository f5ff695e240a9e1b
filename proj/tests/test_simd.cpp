#include "spsdr/simd/kernels.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace spsdr::simd;

namespace {

std::vector<double> draw(std::size_t n, double lo, double hi, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

const std::size_t kSizes[] = {0, 1, 2, 3, 4, 5, 7, 8, 9, 16, 31, 100, 1001};

}  // namespace

class SimdEquivalence : public ::testing::Test {
protected:
    void SetUp() override {
        if (!avx2_available()) GTEST_SKIP() << "AVX2 not available";
    }
    const KernelTable& ref = scalar_kernels();
    const KernelTable& vec() { return avx2_kernels(); }
};

TEST_F(SimdEquivalence, SquaredDistances) {
    std::mt19937_64 rng(1);
    for (std::size_t n : kSizes) {
        for (std::size_t dim : {1u, 2u, 3u, 5u}) {
            const std::size_t ld = n + 3;
            const auto cols = draw(ld * dim, -2.0, 2.0, rng);
            const auto query = draw(dim, -2.0, 2.0, rng);
            std::vector<double> a(n), b(n);
            ref.squared_distances(cols.data(), ld, n, dim, query.data(), a.data());
            vec().squared_distances(cols.data(), ld, n, dim, query.data(), b.data());
            for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(a[i], b[i], 1e-14 * std::max(1.0, a[i]));
        }
    }
}

TEST_F(SimdEquivalence, Gaussian) {
    std::mt19937_64 rng(2);
    for (std::size_t n : kSizes) {
        for (double scale : {0.01, 0.5, 3.0, 250.0}) {
            const auto sq = draw(n, 0.0, 10.0, rng);
            std::vector<double> a(n), b(n);
            ref.gaussian(sq.data(), n, scale, a.data());
            vec().gaussian(sq.data(), n, scale, b.data());
            for (std::size_t i = 0; i < n; ++i) {
                EXPECT_NEAR(a[i], b[i], 1e-14 * a[i] + 1e-300) << "sq=" << sq[i] << " scale=" << scale;
            }
        }
    }
}

TEST_F(SimdEquivalence, GaussianUnderflowBoundary) {
    const double edge = -kExpUnderflow;
    std::vector<double> sq{0.0, 1.0, edge * (1.0 - 1e-12), edge * (1.0 + 1e-12), 1e6, 1e300};
    std::vector<double> a(sq.size()), b(sq.size());
    ref.gaussian(sq.data(), sq.size(), 1.0, a.data());
    vec().gaussian(sq.data(), sq.size(), 1.0, b.data());
    EXPECT_EQ(a[0], 1.0);
    EXPECT_EQ(b[0], 1.0);
    EXPECT_GT(a[2], 0.0);
    EXPECT_GT(b[2], 0.0);
    for (std::size_t i = 3; i < sq.size(); ++i) {
        EXPECT_EQ(a[i], 0.0);
        EXPECT_EQ(b[i], 0.0);
    }
}

TEST_F(SimdEquivalence, Multiply) {
    std::mt19937_64 rng(3);
    for (std::size_t n : kSizes) {
        const auto x = draw(n, -3.0, 3.0, rng);
        const auto y = draw(n, -3.0, 3.0, rng);
        std::vector<double> a(n), b(n);
        ref.multiply(x.data(), y.data(), n, a.data());
        vec().multiply(x.data(), y.data(), n, b.data());
        EXPECT_EQ(a, b);
    }
}

TEST_F(SimdEquivalence, WeightedSums) {
    std::mt19937_64 rng(4);
    for (std::size_t n : kSizes) {
        const auto w = draw(n, 0.0, 1.0, rng);
        const auto y = draw(n, -5.0, 5.0, rng);
        double n1 = 0, d1 = 0, n2 = 0, d2 = 0;
        ref.weighted_sums(w.data(), y.data(), n, &n1, &d1);
        vec().weighted_sums(w.data(), y.data(), n, &n2, &d2);
        EXPECT_NEAR(n1, n2, 1e-12 * std::max(1.0, std::abs(n1)));
        EXPECT_NEAR(d1, d2, 1e-12 * std::max(1.0, d1));
    }
}

TEST_F(SimdEquivalence, ProductWeightedSums) {
    std::mt19937_64 rng(5);
    for (std::size_t n : kSizes) {
        const auto a = draw(n, 0.0, 1.0, rng);
        const auto b = draw(n, 0.0, 1.0, rng);
        const auto y = draw(n, -5.0, 5.0, rng);
        double n1 = 0, d1 = 0, n2 = 0, d2 = 0;
        ref.product_weighted_sums(a.data(), b.data(), y.data(), n, &n1, &d1);
        vec().product_weighted_sums(a.data(), b.data(), y.data(), n, &n2, &d2);
        EXPECT_NEAR(n1, n2, 1e-12 * std::max(1.0, std::abs(n1)));
        EXPECT_NEAR(d1, d2, 1e-12 * std::max(1.0, d1));
    }
}

TEST(SimdDispatch, ScalarTableIsComplete) {
    const KernelTable& t = scalar_kernels();
    EXPECT_EQ(t.isa, Isa::scalar);
    EXPECT_NE(t.squared_distances, nullptr);
    EXPECT_NE(t.gaussian, nullptr);
    EXPECT_NE(t.multiply, nullptr);
    EXPECT_NE(t.weighted_sums, nullptr);
    EXPECT_NE(t.product_weighted_sums, nullptr);
    EXPECT_EQ(to_string(Isa::avx2), "avx2");
}

TEST(SimdDispatch, ActiveTableHonoursAvailability) {
    const KernelTable& t = active_kernels();
    if (!avx2_available()) {
        EXPECT_EQ(t.isa, Isa::scalar);
    }
}
