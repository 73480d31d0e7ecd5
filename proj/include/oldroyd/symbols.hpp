#pragma once

// Closed-form per-frequency propagators of the linearized system
//
//   d/dt u   - eps Lap u   = kappa P div tau
//   d/dt tau - mu Lap tau + beta tau = alpha D u
//
// and of the auxiliary (u, sigma) system with sigma = Lambda^{-1} P div tau.
// Everything here acts on a single wave vector and is a pure function.

#include <array>
#include <complex>
#include <utility>

#include "oldroyd/model.hpp"

namespace oldroyd {

using cplx = std::complex<double>;
using Vec3 = std::array<double, 3>;
using CVec3 = std::array<cplx, 3>;

/// Symmetric 3x3 complex tensor stored as its six independent entries
/// (xx, xy, xz, yy, yz, zz). Symmetry holds by construction.
class SymTensor {
public:
    static constexpr int index(int j, int k) noexcept {
        constexpr int map[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
        return map[j][k];
    }

    cplx& operator()(int j, int k) noexcept { return v[index(j, k)]; }
    const cplx& operator()(int j, int k) const noexcept { return v[index(j, k)]; }

    static SymTensor identity(cplx c = 1.0) {
        SymTensor t;
        t(0, 0) = t(1, 1) = t(2, 2) = c;
        return t;
    }

    std::array<cplx, 6> v{};
};

enum class Regime { DistinctReal, NearDegenerate, Oscillatory };

const char* to_string(Regime r);

struct EigenPair {
    cplx lambda_plus;
    cplx lambda_minus;
    double discriminant;
    Regime regime;
};

struct GKernels {
    double g1;
    double g2;
    double g3;
};

struct ModeState {
    Vec3 xi{};
    CVec3 u_hat{};
    SymTensor tau_hat{};
};

/// Relative size of sqrt|D| against the damping sum below which a
/// non-negative discriminant is tagged near-degenerate.
inline constexpr double kNearDegenerateRatio = 1e-8;
/// |lambda_+ - lambda_-| t below which the Taylor branch is used.
inline constexpr double kTaylorThreshold = 1e-6;

EigenPair eigenvalues(double r, const ModelParams& p);

GKernels g_kernels(double r, double t, const ModelParams& p);

/// The raw closed form evaluated in complex arithmetic, without branch
/// selection. Returned unreduced so callers can inspect the imaginary part.
/// Invalid exactly at a double root (falls back to the Taylor branch there).
std::array<cplx, 3> g_kernels_complex(double r, double t, const ModelParams& p);

/// Linear (u, sigma) propagator: applies the 2x2 block to every component.
std::pair<CVec3, CVec3> propagate_usigma(const Vec3& xi, double t, const CVec3& u0, const CVec3& sigma0,
                                         const ModelParams& p);

/// Linear (u, tau) propagator for xi != 0. Throws Error{ZeroFrequency}.
ModeState propagate_utau(const ModeState& mode, double t, const ModelParams& p);

/// xi = 0: velocity is conserved, stress is damped by beta.
std::pair<CVec3, SymTensor> propagate_zero_mode(const CVec3& u0, const SymTensor& tau0, double t,
                                                const ModelParams& p);

/// sigma_hat_j = i (delta_jk - xi_j xi_k / r^2) (xi_l / r) tau_hat^{lk}.
CVec3 tau_to_sigma(const ModeState& mode);

/// Scalar coefficients of the (u, tau) propagator at fixed (|xi|, t); lets a
/// lattice of modes sharing one step size reuse them.
struct UTauCoefficients {
    double uu;       // g3 - eps r^2 g1
    double ut;       // kappa g1
    double decay;    // exp(-(beta + mu r^2) t)
    double tu;       // alpha/2 g1
    double tt;       // decay - g2 - eps r^2 g1
};

UTauCoefficients utau_coefficients(double r, double t, const ModelParams& p);

/// Applies precomputed coefficients to (u, tau) at wave vector xi != 0, in place.
void apply_utau(const Vec3& xi, const UTauCoefficients& c, CVec3& u, SymTensor& tau);

/// Integrates the 9-component per-mode linear system with classical RK4.
/// Independent of the closed forms above; used as a verification oracle.
ModeState ode_oracle(const ModeState& mode, double t, const ModelParams& p, int step_count);

/// Same for the 6-component (u, sigma) system.
std::pair<CVec3, CVec3> ode_oracle_usigma(const Vec3& xi, double t, const CVec3& u0, const CVec3& sigma0,
                                          const ModelParams& p, int step_count);

/// Smallest RK4 step count keeping |rate| h below `h_rate` for this mode.
int oracle_steps(double r, double t, const ModelParams& p, double h_rate = 0.003);

}  // namespace oldroyd
