#include "spsdr/simd/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <cstring>

namespace spsdr::simd {
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d pair = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

// Cephes-style exp: x = n ln2 + r, |r| <= ln2 / 2, e^r from a (2,3) Pade
// form, then scaled by 2^n through the exponent bits.
inline __m256d exp_pd(__m256d x) {
    const __m256d lo_limit = _mm256_set1_pd(kExpUnderflow);
    const __m256d underflow = _mm256_cmp_pd(x, lo_limit, _CMP_LT_OQ);
    x = _mm256_max_pd(x, lo_limit);
    x = _mm256_min_pd(x, _mm256_set1_pd(709.0));

    const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634073599)),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93145751953125E-1), x);
    r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.42860682030941723212E-6), r);
    const __m256d rr = _mm256_mul_pd(r, r);

    __m256d p = _mm256_set1_pd(1.26177193074810590878E-4);
    p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(3.02994407707441961300E-2));
    p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(9.99999999999999999910E-1));
    p = _mm256_mul_pd(p, r);

    __m256d q = _mm256_set1_pd(3.00198505138664455042E-6);
    q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.52448340349684104192E-3));
    q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.27265548208155028766E-1));
    q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.00000000000000000009E0));

    __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
    e = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, _mm256_set1_pd(1.0));

    // 2^n: n + 1.5 * 2^52 leaves n in the low mantissa bits.
    const __m256d magic = _mm256_set1_pd(6755399441055744.0);
    __m256i bits = _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(n, magic)), _mm256_castpd_si256(magic));
    bits = _mm256_slli_epi64(_mm256_add_epi64(bits, _mm256_set1_epi64x(1023)), 52);
    e = _mm256_mul_pd(e, _mm256_castsi256_pd(bits));

    return _mm256_andnot_pd(underflow, e);
}

void squared_distances(const double* cols, std::size_t ld, std::size_t n, std::size_t dim,
                       const double* query, double* out) {
    const std::size_t body = n - n % 4;
    for (std::size_t i = 0; i < body; i += 4) {
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t k = 0; k < dim; ++k) {
            const __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(cols + k * ld + i), _mm256_set1_pd(query[k]));
            acc = _mm256_fmadd_pd(diff, diff, acc);
        }
        _mm256_storeu_pd(out + i, acc);
    }
    for (std::size_t i = body; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
            const double diff = cols[k * ld + i] - query[k];
            acc = std::fma(diff, diff, acc);
        }
        out[i] = acc;
    }
}

void gaussian(const double* sq, std::size_t n, double scale, double* out) {
    const __m256d neg_scale = _mm256_set1_pd(-scale);
    const std::size_t body = n - n % 4;
    for (std::size_t i = 0; i < body; i += 4) {
        _mm256_storeu_pd(out + i, exp_pd(_mm256_mul_pd(neg_scale, _mm256_loadu_pd(sq + i))));
    }
    if (body < n) {
        alignas(32) double tail[4] = {0.0, 0.0, 0.0, 0.0};
        std::memcpy(tail, sq + body, (n - body) * sizeof(double));
        alignas(32) double res[4];
        _mm256_store_pd(res, exp_pd(_mm256_mul_pd(neg_scale, _mm256_load_pd(tail))));
        std::memcpy(out + body, res, (n - body) * sizeof(double));
    }
}

void multiply(const double* a, const double* b, std::size_t n, double* out) {
    const std::size_t body = n - n % 4;
    for (std::size_t i = 0; i < body; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (std::size_t i = body; i < n; ++i) {
        out[i] = a[i] * b[i];
    }
}

void weighted_sums(const double* w, const double* y, std::size_t n, double* num, double* den) {
    __m256d acc_num = _mm256_setzero_pd();
    __m256d acc_den = _mm256_setzero_pd();
    const std::size_t body = n - n % 4;
    for (std::size_t i = 0; i < body; i += 4) {
        const __m256d wv = _mm256_loadu_pd(w + i);
        acc_num = _mm256_fmadd_pd(wv, _mm256_loadu_pd(y + i), acc_num);
        acc_den = _mm256_add_pd(acc_den, wv);
    }
    double s_num = hsum(acc_num);
    double s_den = hsum(acc_den);
    for (std::size_t i = body; i < n; ++i) {
        s_num = std::fma(w[i], y[i], s_num);
        s_den += w[i];
    }
    *num = s_num;
    *den = s_den;
}

void product_weighted_sums(const double* a, const double* b, const double* y, std::size_t n, double* num,
                           double* den) {
    __m256d acc_num = _mm256_setzero_pd();
    __m256d acc_den = _mm256_setzero_pd();
    const std::size_t body = n - n % 4;
    for (std::size_t i = 0; i < body; i += 4) {
        const __m256d wv = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc_num = _mm256_fmadd_pd(wv, _mm256_loadu_pd(y + i), acc_num);
        acc_den = _mm256_add_pd(acc_den, wv);
    }
    double s_num = hsum(acc_num);
    double s_den = hsum(acc_den);
    for (std::size_t i = body; i < n; ++i) {
        const double wv = a[i] * b[i];
        s_num = std::fma(wv, y[i], s_num);
        s_den += wv;
    }
    *num = s_num;
    *den = s_den;
}

}  // namespace

const KernelTable& avx2_kernels_unchecked() noexcept {
    static const KernelTable table{Isa::avx2, squared_distances, gaussian, multiply, weighted_sums,
                                   product_weighted_sums};
    return table;
}

}  // namespace spsdr::simd
