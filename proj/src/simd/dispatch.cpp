#include "spsdr/simd/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string_view>

namespace spsdr::simd {

#ifdef SPSDR_HAVE_AVX2
const KernelTable& avx2_kernels_unchecked() noexcept;
#endif

std::string_view to_string(Isa isa) noexcept { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool avx2_available() noexcept {
#if defined(SPSDR_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported;
#else
    return false;
#endif
}

const KernelTable& avx2_kernels() {
#ifdef SPSDR_HAVE_AVX2
    if (avx2_available()) {
        return avx2_kernels_unchecked();
    }
#endif
    throw std::runtime_error("AVX2 kernels are not available on this build or CPU");
}

const KernelTable& active_kernels() noexcept {
    static const KernelTable& table = []() -> const KernelTable& {
        const char* forced = std::getenv("SPSDR_SIMD");
        if (forced != nullptr && std::string_view(forced) == "scalar") {
            return scalar_kernels();
        }
#ifdef SPSDR_HAVE_AVX2
        if (avx2_available()) {
            return avx2_kernels_unchecked();
        }
#endif
        return scalar_kernels();
    }();
    return table;
}

}  // namespace spsdr::simd
