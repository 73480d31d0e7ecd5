#include "oldroyd/simd/kernels.hpp"

#include "pointwise.hpp"

namespace oldroyd::simd {

namespace {

void nonlinear_scalar(const NonlinearInputs& in, const NonlinearOutputs& out, std::size_t count, double b) {
    for (std::size_t p = 0; p < count; ++p) {
        double u[3], g[9], t[6], dt[18], m1[3], m2[6];
        for (int i = 0; i < 3; ++i) u[i] = in.u[i][p];
        for (int i = 0; i < 9; ++i) g[i] = in.grad_u[i][p];
        for (int i = 0; i < 6; ++i) t[i] = in.tau[i][p];
        for (int i = 0; i < 18; ++i) dt[i] = in.grad_tau[i][p];
        nonlinear_point(u, g, t, dt, b, m1, m2);
        for (int i = 0; i < 3; ++i) out.m1[i][p] = m1[i];
        for (int i = 0; i < 6; ++i) out.m2[i][p] = m2[i];
    }
}

void power_moments_scalar(const double* w, const std::complex<double>* a, std::size_t count, double out[4]) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double p = a[i].real() * a[i].real() + a[i].imag() * a[i].imag();
        const double x = w[i];
        s0 += p;
        s1 += p * x;
        s2 += p * x * x;
        s3 += p * x * x * x;
    }
    out[0] = s0;
    out[1] = s1;
    out[2] = s2;
    out[3] = s3;
}

}  // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{"scalar", nonlinear_scalar, power_moments_scalar};
    return table;
}

}  // namespace oldroyd::simd
