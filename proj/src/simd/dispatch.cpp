#include <cstdlib>
#include <string_view>

#include "oldroyd/simd/kernels.hpp"

namespace oldroyd::simd {

#if defined(OLDROYD_BUILD_AVX2)
const KernelTable& avx2_table();
#endif

const KernelTable* avx2_kernels() {
#if defined(OLDROYD_BUILD_AVX2) && (defined(__GNUC__) || defined(__clang__))
    static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? &avx2_table() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active_kernels() {
    static const KernelTable* chosen = [] {
        const char* env = std::getenv("OLDROYD_SIMD");
        if (env && std::string_view(env) == "scalar") return &scalar_kernels();
        const KernelTable* fast = avx2_kernels();
        return fast ? fast : &scalar_kernels();
    }();
    return *chosen;
}

}  // namespace oldroyd::simd
