#pragma once

// Single-point arithmetic shared by the scalar kernel and the AVX2 tail loop.

namespace oldroyd::simd {

inline constexpr int kSym[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};

/// q = Omega tau - tau Omega + b (D tau + tau D) with g[3 i + j] = d_j u_i.
inline void q_point(const double g[9], const double t[6], double b, double q[6]) {
    double w[3][3], d[3][3], tm[3][3];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            w[i][j] = 0.5 * (g[3 * i + j] - g[3 * j + i]);
            d[i][j] = 0.5 * (g[3 * i + j] + g[3 * j + i]);
            tm[i][j] = t[kSym[i][j]];
        }
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            double comm = 0.0, anti = 0.0;
            for (int k = 0; k < 3; ++k) {
                comm += w[i][k] * tm[k][j] - tm[i][k] * w[k][j];
                anti += d[i][k] * tm[k][j] + tm[i][k] * d[k][j];
            }
            q[kSym[i][j]] = comm + b * anti;
        }
}

inline void nonlinear_point(const double u[3], const double g[9], const double t[6], const double dt[18], double b,
                            double m1[3], double m2[6]) {
    for (int i = 0; i < 3; ++i) m1[i] = -(u[0] * g[3 * i] + u[1] * g[3 * i + 1] + u[2] * g[3 * i + 2]);
    q_point(g, t, b, m2);
    for (int a = 0; a < 6; ++a) m2[a] -= u[0] * dt[3 * a] + u[1] * dt[3 * a + 1] + u[2] * dt[3 * a + 2];
}

}  // namespace oldroyd::simd
