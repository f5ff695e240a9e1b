#include "spsdr/simd/kernels.hpp"

#include <cmath>

namespace spsdr::simd {
namespace {

void squared_distances(const double* cols, std::size_t ld, std::size_t n, std::size_t dim,
                       const double* query, double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = 0.0;
    }
    for (std::size_t k = 0; k < dim; ++k) {
        const double* col = cols + k * ld;
        const double q = query[k];
        for (std::size_t i = 0; i < n; ++i) {
            const double diff = col[i] - q;
            out[i] += diff * diff;
        }
    }
}

void gaussian(const double* sq, std::size_t n, double scale, double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        const double e = -scale * sq[i];
        out[i] = e < kExpUnderflow ? 0.0 : std::exp(e);
    }
}

void multiply(const double* a, const double* b, std::size_t n, double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = a[i] * b[i];
    }
}

void weighted_sums(const double* w, const double* y, std::size_t n, double* num, double* den) {
    double s_num = 0.0;
    double s_den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s_num += w[i] * y[i];
        s_den += w[i];
    }
    *num = s_num;
    *den = s_den;
}

void product_weighted_sums(const double* a, const double* b, const double* y, std::size_t n, double* num,
                           double* den) {
    double s_num = 0.0;
    double s_den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = a[i] * b[i];
        s_num += w * y[i];
        s_den += w;
    }
    *num = s_num;
    *den = s_den;
}

}  // namespace

const KernelTable& scalar_kernels() noexcept {
    static const KernelTable table{Isa::scalar, squared_distances, gaussian, multiply, weighted_sums,
                                   product_weighted_sums};
    return table;
}

}  // namespace spsdr::simd
