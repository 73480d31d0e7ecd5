#include <immintrin.h>

#include "oldroyd/simd/kernels.hpp"
#include "pointwise.hpp"

namespace oldroyd::simd {

namespace {

// Q is evaluated as M tau + tau M^T with M = Omega + b D
//   = (1+b)/2 G + (b-1)/2 G^T,
// four points per iteration.
void nonlinear_avx2(const NonlinearInputs& in, const NonlinearOutputs& out, std::size_t count, double b) {
    const __m256d cp = _mm256_set1_pd(0.5 * (1.0 + b));
    const __m256d cm = _mm256_set1_pd(0.5 * (b - 1.0));
    std::size_t p = 0;
    for (; p + 4 <= count; p += 4) {
        __m256d u[3], g[9], t[3][3];
        for (int i = 0; i < 3; ++i) u[i] = _mm256_loadu_pd(in.u[i] + p);
        for (int i = 0; i < 9; ++i) g[i] = _mm256_loadu_pd(in.grad_u[i] + p);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) t[i][j] = _mm256_loadu_pd(in.tau[kSym[i][j]] + p);

        for (int i = 0; i < 3; ++i) {
            __m256d acc = _mm256_mul_pd(u[0], g[3 * i]);
            acc = _mm256_fmadd_pd(u[1], g[3 * i + 1], acc);
            acc = _mm256_fmadd_pd(u[2], g[3 * i + 2], acc);
            _mm256_storeu_pd(out.m1[i] + p, _mm256_sub_pd(_mm256_setzero_pd(), acc));
        }

        __m256d m[3][3];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) m[i][j] = _mm256_fmadd_pd(cp, g[3 * i + j], _mm256_mul_pd(cm, g[3 * j + i]));

        for (int i = 0; i < 3; ++i) {
            for (int j = i; j < 3; ++j) {
                __m256d q = _mm256_setzero_pd();
                for (int k = 0; k < 3; ++k) {
                    q = _mm256_fmadd_pd(m[i][k], t[k][j], q);
                    q = _mm256_fmadd_pd(t[i][k], m[j][k], q);
                }
                const int a = kSym[i][j];
                __m256d adv = _mm256_mul_pd(u[0], _mm256_loadu_pd(in.grad_tau[3 * a] + p));
                adv = _mm256_fmadd_pd(u[1], _mm256_loadu_pd(in.grad_tau[3 * a + 1] + p), adv);
                adv = _mm256_fmadd_pd(u[2], _mm256_loadu_pd(in.grad_tau[3 * a + 2] + p), adv);
                _mm256_storeu_pd(out.m2[a] + p, _mm256_sub_pd(q, adv));
            }
        }
    }
    for (; p < count; ++p) {
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

double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void power_moments_avx2(const double* w, const std::complex<double>* a, std::size_t count, double out[4]) {
    const double* ad = reinterpret_cast<const double*>(a);
    __m256d s0 = _mm256_setzero_pd(), s1 = s0, s2 = s0, s3 = s0;
    std::size_t i = 0;
    for (; i + 4 <= count; i += 4) {
        // two complex values per register: (re0, im0, re1, im1)
        const __m256d v01 = _mm256_loadu_pd(ad + 2 * i);
        const __m256d v23 = _mm256_loadu_pd(ad + 2 * i + 4);
        const __m256d sq01 = _mm256_mul_pd(v01, v01);
        const __m256d sq23 = _mm256_mul_pd(v23, v23);
        // hadd gives (p0, p2, p1, p3); permute back to (p0, p1, p2, p3)
        const __m256d mixed = _mm256_hadd_pd(sq01, sq23);
        const __m256d pw = _mm256_permute4x64_pd(mixed, 0xD8);
        const __m256d x = _mm256_loadu_pd(w + i);
        s0 = _mm256_add_pd(s0, pw);
        __m256d t = _mm256_mul_pd(pw, x);
        s1 = _mm256_add_pd(s1, t);
        t = _mm256_mul_pd(t, x);
        s2 = _mm256_add_pd(s2, t);
        t = _mm256_mul_pd(t, x);
        s3 = _mm256_add_pd(s3, t);
    }
    double r0 = hsum(s0), r1 = hsum(s1), r2 = hsum(s2), r3 = hsum(s3);
    for (; i < count; ++i) {
        const double p = a[i].real() * a[i].real() + a[i].imag() * a[i].imag();
        const double x = w[i];
        r0 += p;
        r1 += p * x;
        r2 += p * x * x;
        r3 += p * x * x * x;
    }
    out[0] = r0;
    out[1] = r1;
    out[2] = r2;
    out[3] = r3;
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable table{"avx2", nonlinear_avx2, power_moments_avx2};
    return table;
}

}  // namespace oldroyd::simd
