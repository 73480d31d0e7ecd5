#pragma once

// Data-parallel inner loops with a scalar reference and an AVX2 variant.
// The active table is chosen once at startup from the CPU features; set
// OLDROYD_SIMD=scalar to force the reference path.

#include <complex>
#include <cstddef>

namespace oldroyd::simd {

/// Structure-of-arrays views over `count` grid points.
struct NonlinearInputs {
    const double* u[3];
    const double* grad_u[9];    // 3 i + j -> d_j u_i
    const double* tau[6];       // xx, xy, xz, yy, yz, zz
    const double* grad_tau[18]; // 3 a + j -> d_j tau_a
};

struct NonlinearOutputs {
    double* m1[3];  // -(u . grad) u
    double* m2[6];  // -(u . grad) tau + Q(grad u, tau)
};

struct KernelTable {
    const char* name;
    void (*nonlinear)(const NonlinearInputs& in, const NonlinearOutputs& out, std::size_t count, double b);
    /// out[k] = sum_i w_i^k |a_i|^2 for k = 0..3.
    void (*power_moments)(const double* w, const std::complex<double>* a, std::size_t count, double out[4]);
};

const KernelTable& scalar_kernels();
/// nullptr when the AVX2 unit was not built or the CPU lacks AVX2/FMA.
const KernelTable* avx2_kernels();
const KernelTable& active_kernels();

}  // namespace oldroyd::simd
