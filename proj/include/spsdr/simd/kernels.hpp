#pragma once

// Data-parallel inner loops of the kernel predictor. Every kernel has a
// scalar reference implementation; an AVX2+FMA variant is compiled when the
// toolchain supports it and selected at runtime when the CPU does.
//
// Set SPSDR_SIMD=scalar in the environment to force the reference path.

#include <cstddef>
#include <string_view>

namespace spsdr::simd {

enum class Isa { scalar, avx2 };

std::string_view to_string(Isa isa) noexcept;

/// Inputs below this exponent flush the Gaussian kernel to exactly zero in
/// every variant (the scalar path included), so all variants agree on where
/// kernel weights underflow.
inline constexpr double kExpUnderflow = -708.39641853226408;

struct KernelTable {
    Isa isa;

    /// out[i] = sum_k (cols[k * ld + i] - query[k])^2 for i < n.
    /// `cols` is column-major n x dim with leading dimension ld >= n.
    void (*squared_distances)(const double* cols, std::size_t ld, std::size_t n, std::size_t dim,
                              const double* query, double* out);

    /// out[i] = exp(-scale * sq[i]), flushed to 0 below kExpUnderflow.
    void (*gaussian)(const double* sq, std::size_t n, double scale, double* out);

    /// out[i] = a[i] * b[i].
    void (*multiply)(const double* a, const double* b, std::size_t n, double* out);

    /// num = sum_i w[i] * y[i], den = sum_i w[i].
    void (*weighted_sums)(const double* w, const double* y, std::size_t n, double* num, double* den);

    /// num = sum_i a[i] * b[i] * y[i], den = sum_i a[i] * b[i].
    void (*product_weighted_sums)(const double* a, const double* b, const double* y, std::size_t n,
                                  double* num, double* den);
};

const KernelTable& scalar_kernels() noexcept;

/// True when the AVX2 variants were compiled in and the CPU supports AVX2 and FMA.
bool avx2_available() noexcept;

/// Throws std::runtime_error if !avx2_available().
const KernelTable& avx2_kernels();

/// Kernel table chosen once per process: AVX2 when available, unless
/// SPSDR_SIMD=scalar.
const KernelTable& active_kernels() noexcept;

}  // namespace spsdr::simd
