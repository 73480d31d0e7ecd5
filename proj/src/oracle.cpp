// Direct RK4 integration of the per-mode linear systems. Deliberately shares no
// code with the closed-form kernels in symbols.cpp.

#include <algorithm>
#include <cmath>

#include "oldroyd/symbols.hpp"

namespace oldroyd {

namespace {

constexpr cplx I{0.0, 1.0};

// Velocity is carried as its transverse part plus the scalar l = (xi/r) . u.
// The exact flow keeps the two apart (xi . P v = 0), and integrating them
// separately stops round-off in P(xi . tau) from seeding a longitudinal
// component that would decay only at the slow rate eps r^2.
struct ModeVector {
    std::array<cplx, 10> y{};  // u_T (3), tau (xx, xy, xz, yy, yz, zz), l

    ModeVector operator+(const ModeVector& o) const {
        ModeVector r;
        for (int i = 0; i < 10; ++i) r.y[i] = y[i] + o.y[i];
        return r;
    }
    ModeVector operator*(double s) const {
        ModeVector r;
        for (int i = 0; i < 10; ++i) r.y[i] = y[i] * s;
        return r;
    }
};

constexpr int kEll = 9;

cplx tau_at(const ModeVector& m, int j, int k) { return m.y[3 + SymTensor::index(j, k)]; }

// du_T/dt = -eps r^2 u_T + i kappa P(xi) (xi . tau)
// dl/dt   = -eps r^2 l
// dtau/dt = -(beta + mu r^2) tau + i alpha/2 (xi (x) u + u (x) xi),  u = u_T + (xi/r) l
ModeVector rhs(const Vec3& xi, const ModelParams& p, const ModeVector& m) {
    const double r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    const double inv_r = r2 > 0.0 ? 1.0 / std::sqrt(r2) : 0.0;
    ModeVector d;

    std::array<cplx, 3> div{};
    for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) div[k] += xi[l] * tau_at(m, l, k);
    cplx radial = 0.0;
    if (r2 > 0.0) radial = (xi[0] * div[0] + xi[1] * div[1] + xi[2] * div[2]) / r2;
    for (int j = 0; j < 3; ++j) {
        const cplx proj = r2 > 0.0 ? div[j] - xi[j] * radial : cplx(0.0);
        d.y[j] = -p.epsilon * r2 * m.y[j] + I * p.kappa * proj;
    }
    d.y[kEll] = -p.epsilon * r2 * m.y[kEll];

    std::array<cplx, 3> u;
    for (int j = 0; j < 3; ++j) u[j] = m.y[j] + xi[j] * inv_r * m.y[kEll];
    for (int j = 0; j < 3; ++j) {
        for (int k = j; k < 3; ++k) {
            d.y[3 + SymTensor::index(j, k)] =
                -(p.beta + p.mu * r2) * tau_at(m, j, k) + I * (0.5 * p.alpha) * (xi[k] * u[j] + xi[j] * u[k]);
        }
    }
    return d;
}

template <class State, class Rhs, class After>
State rk4(State y, double t, int steps, Rhs&& f, After&& after) {
    if (t == 0.0 || steps <= 0) return y;
    const double h = t / steps;
    for (int s = 0; s < steps; ++s) {
        const State k1 = f(y);
        const State k2 = f(y + k1 * (0.5 * h));
        const State k3 = f(y + k2 * (0.5 * h));
        const State k4 = f(y + k3 * h);
        y = y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        after(y);
    }
    return y;
}

struct PairVector {
    std::array<cplx, 6> y{};  // u (3), sigma (3)

    PairVector operator+(const PairVector& o) const {
        PairVector r;
        for (int i = 0; i < 6; ++i) r.y[i] = y[i] + o.y[i];
        return r;
    }
    PairVector operator*(double s) const {
        PairVector r;
        for (int i = 0; i < 6; ++i) r.y[i] = y[i] * s;
        return r;
    }
};

}  // namespace

int oracle_steps(double r, double t, const ModelParams& p, double h_rate) {
    const double r2 = r * r;
    const double rate = std::max({p.beta + p.mu * r2, p.epsilon * r2,
                                  std::sqrt(2.0 * p.alpha * p.kappa) * r, 1.0});
    return std::max(16, static_cast<int>(std::ceil(rate * t / h_rate)));
}

ModeState ode_oracle(const ModeState& mode, double t, const ModelParams& p, int step_count) {
    const Vec3& xi = mode.xi;
    const double r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    const double inv_r = r2 > 0.0 ? 1.0 / std::sqrt(r2) : 0.0;
    auto remove_longitudinal = [&](ModeVector& m) {
        const cplx l = (xi[0] * m.y[0] + xi[1] * m.y[1] + xi[2] * m.y[2]) * inv_r;
        for (int j = 0; j < 3; ++j) m.y[j] -= xi[j] * inv_r * l;
        return l;
    };

    ModeVector y0;
    for (int j = 0; j < 3; ++j) y0.y[j] = mode.u_hat[j];
    for (int i = 0; i < 6; ++i) y0.y[3 + i] = mode.tau_hat.v[i];
    y0.y[kEll] = remove_longitudinal(y0);

    const ModeVector y = rk4(
        y0, t, step_count, [&](const ModeVector& m) { return rhs(xi, p, m); },
        [&](ModeVector& m) { remove_longitudinal(m); });

    ModeState out;
    out.xi = xi;
    for (int j = 0; j < 3; ++j) out.u_hat[j] = y.y[j] + xi[j] * inv_r * y.y[kEll];
    for (int i = 0; i < 6; ++i) out.tau_hat.v[i] = y.y[3 + i];
    return out;
}

std::pair<CVec3, CVec3> ode_oracle_usigma(const Vec3& xi, double t, const CVec3& u0, const CVec3& sigma0,
                                          const ModelParams& p, int step_count) {
    const double r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    const double r = std::sqrt(r2);
    PairVector y0;
    for (int j = 0; j < 3; ++j) {
        y0.y[j] = u0[j];
        y0.y[3 + j] = sigma0[j];
    }
    // du/dt = -eps r^2 u + kappa r sigma ; dsigma/dt = -(mu r^2 + beta) sigma - alpha/2 r u
    auto f = [&](const PairVector& m) {
        PairVector d;
        for (int j = 0; j < 3; ++j) {
            d.y[j] = -p.epsilon * r2 * m.y[j] + p.kappa * r * m.y[3 + j];
            d.y[3 + j] = -(p.mu * r2 + p.beta) * m.y[3 + j] - 0.5 * p.alpha * r * m.y[j];
        }
        return d;
    };
    const PairVector y = rk4(y0, t, step_count, f, [](PairVector&) {});
    std::pair<CVec3, CVec3> out;
    for (int j = 0; j < 3; ++j) {
        out.first[j] = y.y[j];
        out.second[j] = y.y[3 + j];
    }
    return out;
}

}  // namespace oldroyd
