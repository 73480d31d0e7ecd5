#pragma once

// Seeded random inputs shared by the unit and acceptance tests.
//
// All draws come from std::mt19937_64 seeded by the caller. Wave vectors and
// velocities are dyadic (few mantissa bits) so that u = xi x w is exactly
// divergence-free in floating point: the propagator assumes xi . u = 0, and a
// rounding-level longitudinal part would decay only at the viscous rate and
// dominate the relative error once the transverse part has decayed.

#include <cmath>
#include <cstdint>
#include <random>

#include "oldroyd/model.hpp"
#include "oldroyd/symbols.hpp"

namespace oldroyd::testing {

class Draw {
public:
    explicit Draw(std::uint64_t seed) : g_(seed) {}

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
    double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
    int integer(int lo, int hi) { return lo + static_cast<int>(g_() % static_cast<std::uint64_t>(hi - lo + 1)); }
    /// Multiple of 2^-bits in [lo, hi].
    double dyadic(double lo, double hi, int bits) { return std::ldexp(std::round(std::ldexp(uniform(lo, hi), bits)), -bits); }
    cplx complex_unit() { return {uniform(-1.0, 1.0), uniform(-1.0, 1.0)}; }

    std::mt19937_64& engine() { return g_; }

private:
    double unit() { return static_cast<double>(g_() >> 11) * 0x1.0p-53; }
    std::mt19937_64 g_;
};

/// eps, mu in [0, 1] with at least one above 0.05; couplings in [0.5, 1.5].
inline ModelParams random_params(Draw& d) {
    ModelParams p;
    const int pick = d.integer(0, 2);
    p.epsilon = pick == 1 ? 0.0 : d.uniform(0.05, 1.0);
    p.mu = pick == 0 ? 0.0 : d.uniform(0.05, 1.0);
    p.kappa = d.uniform(0.5, 1.5);
    p.beta = d.uniform(0.5, 1.5);
    p.alpha = d.uniform(0.5, 1.5);
    p.b = d.uniform(-1.0, 1.0);
    return p;
}

inline double norm2(const Vec3& v) { return v[0] * v[0] + v[1] * v[1] + v[2] * v[2]; }

/// Dyadic direction scaled by a power of two so that |xi| lands near `radius`.
inline Vec3 dyadic_xi(Draw& d, double radius) {
    Vec3 xi;
    do {
        for (auto& c : xi) c = d.dyadic(-1.0, 1.0, 10);
    } while (norm2(xi) < 0.0625);
    const int shift = static_cast<int>(std::lround(std::log2(radius / std::sqrt(norm2(xi)))));
    for (auto& c : xi) c = std::ldexp(c, shift);
    return xi;
}

/// u = xi x w with dyadic w: exactly orthogonal to xi.
inline CVec3 transverse_velocity(Draw& d, const Vec3& xi) {
    CVec3 u;
    Vec3 wr, wi;
    for (int c = 0; c < 3; ++c) {
        wr[c] = d.dyadic(-1.0, 1.0, 20);
        wi[c] = d.dyadic(-1.0, 1.0, 20);
    }
    for (int c = 0; c < 3; ++c) {
        const int a = (c + 1) % 3, b = (c + 2) % 3;
        u[c] = {xi[a] * wr[b] - xi[b] * wr[a], xi[a] * wi[b] - xi[b] * wi[a]};
    }
    return u;
}

inline ModeState random_mode(Draw& d, double radius) {
    ModeState m;
    m.xi = dyadic_xi(d, radius);
    m.u_hat = transverse_velocity(d, m.xi);
    for (auto& v : m.tau_hat.v) v = d.complex_unit();
    return m;
}

/// Resets beta so that the discriminant vanishes at |xi| (double root);
/// returns false when that would need beta outside [0.05, 5].
inline bool tune_to_double_root(ModelParams& p, double r) {
    const double beta = std::sqrt(2.0 * p.alpha * p.kappa) * r - (p.mu - p.epsilon) * r * r;
    if (!(beta >= 0.05 && beta <= 5.0)) return false;
    p.beta = beta;
    return true;
}

inline double relative_error(const ModeState& a, const ModeState& b) {
    double num = 0.0, den = 0.0;
    for (int c = 0; c < 3; ++c) {
        num += std::norm(a.u_hat[c] - b.u_hat[c]);
        den += std::norm(b.u_hat[c]);
    }
    for (int c = 0; c < 6; ++c) {
        num += std::norm(a.tau_hat.v[c] - b.tau_hat.v[c]);
        den += std::norm(b.tau_hat.v[c]);
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

inline double relative_error(const CVec3& au, const CVec3& as, const CVec3& bu, const CVec3& bs) {
    double num = 0.0, den = 0.0;
    for (int c = 0; c < 3; ++c) {
        num += std::norm(au[c] - bu[c]) + std::norm(as[c] - bs[c]);
        den += std::norm(bu[c]) + std::norm(bs[c]);
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace oldroyd::testing
