#pragma once

#include <array>

#include <nlohmann/json_fwd.hpp>

#include "oldroyd/model.hpp"
#include "oldroyd/spectral.hpp"

namespace oldroyd {

struct SobolevNorms {
    std::array<double, 4> u{};    // ||grad^k u||, k = 0..3
    std::array<double, 4> tau{};  // ||grad^k tau||, k = 0..3

    /// ||(u, tau)||_{H^3}^2 = sum_k ||grad^k u||^2 + ||grad^k tau||^2
    double h3_total() const;
};

SobolevNorms sobolev_norms(const SpectralState& s);

/// min(alpha, kappa) / 8
double default_eps2(const ModelParams& p);

/// 1/2 (alpha ||u||_{H^3}^2 + kappa ||tau||_{H^3}^2) + eps2 sum_{k=1..3} <Lambda^{k-1} sigma, Lambda^k u>
double energy_E(const SpectralState& s, const ModelParams& p, double eps2);

/// Box integral of tr(A - log A - I) with A = tau + I. Throws Error{NotSPD}.
double entropy(const std::array<RealField, 6>& tau, const SpectralGrid& g);

/// Eigenvalues of a real symmetric 3x3 matrix (xx, xy, xz, yy, yz, zz), ascending.
std::array<double, 3> symmetric_eigenvalues(const double t[6]);

struct InequalitySlack {
    double lhs;
    double rhs;
    double slack() const { return rhs - lhs; }
    /// rhs - lhs >= -1e-12 rhs (summation round-off only).
    bool holds() const { return slack() >= -1e-12 * rhs; }
};

struct InequalityReport {
    InequalitySlack transport_u;    // ||u.grad u||_1 <= ||u|| ||grad u||
    InequalitySlack transport_tau;  // ||u.grad tau||_1 <= ||u|| ||grad tau||
    InequalitySlack bilinear_q;     // ||Q||_1 <= 2 (1 + |b|) ||grad u|| ||tau||
    InequalitySlack projected_u;    // ||P(u.grad u)||_1 vs ||u|| ||grad u|| (reported only)

    bool holds() const { return transport_u.holds() && transport_tau.holds() && bilinear_q.holds(); }
};

InequalityReport inequality_checks(const SpectralState& s, const Fft3& fft, double b);

struct MonitorRecord {
    double time = 0.0;
    SobolevNorms sobolev;
    double h3_total = 0.0;
    double energy_E = 0.0;
    double entropy = 0.0;
    bool entropy_defined = true;
    InequalityReport inequalities{};
};

MonitorRecord monitor(const SpectralState& s, const Fft3& fft, const ModelParams& p);

void to_json(nlohmann::json& j, const InequalityReport& r);
void to_json(nlohmann::json& j, const MonitorRecord& r);

}  // namespace oldroyd
