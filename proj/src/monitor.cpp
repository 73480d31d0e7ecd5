#include "oldroyd/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <nlohmann/json.hpp>

#include "oldroyd/error.hpp"
#include "oldroyd/simd/kernels.hpp"
#include "oldroyd/solver.hpp"

namespace oldroyd {

namespace {

constexpr bool kOffDiagonal[6] = {false, true, true, false, true, false};

std::vector<double> shell_weights(const SpectralGrid& g) {
    std::vector<double> w(g.size());
    const double inv_l2 = 1.0 / (g.box_scale() * g.box_scale());
    for (std::size_t f = 0; f < g.size(); ++f) w[f] = g.m2(f) * inv_l2;
    return w;
}

// x - log(1 + x), accurate for small |x|.
double entropy_density(double x) {
    if (std::abs(x) < 1e-3) {
        const double x2 = x * x;
        return x2 * (0.5 - x / 3.0 + x2 / 4.0 - x2 * x / 5.0 + x2 * x2 / 6.0);
    }
    return x - std::log1p(x);
}

double sym_norm2(const double t[6]) {
    return t[0] * t[0] + t[3] * t[3] + t[5] * t[5] + 2.0 * (t[1] * t[1] + t[2] * t[2] + t[4] * t[4]);
}

}  // namespace

double SobolevNorms::h3_total() const {
    double s = 0.0;
    for (int k = 0; k < 4; ++k) s += u[k] * u[k] + tau[k] * tau[k];
    return s;
}

SobolevNorms sobolev_norms(const SpectralState& s) {
    const auto& kernels = simd::active_kernels();
    const std::vector<double> w = shell_weights(s.grid);
    const double V = s.grid.volume();
    std::array<double, 4> su{}, st{};
    double m[4];
    for (int c = 0; c < 3; ++c) {
        kernels.power_moments(w.data(), s.u[c].data(), w.size(), m);
        for (int k = 0; k < 4; ++k) su[k] += m[k];
    }
    for (int a = 0; a < 6; ++a) {
        kernels.power_moments(w.data(), s.tau[a].data(), w.size(), m);
        const double mult = kOffDiagonal[a] ? 2.0 : 1.0;
        for (int k = 0; k < 4; ++k) st[k] += mult * m[k];
    }
    SobolevNorms out;
    for (int k = 0; k < 4; ++k) {
        out.u[k] = std::sqrt(V * su[k]);
        out.tau[k] = std::sqrt(V * st[k]);
    }
    return out;
}

double default_eps2(const ModelParams& p) { return std::min(p.alpha, p.kappa) / 8.0; }

double energy_E(const SpectralState& s, const ModelParams& p, double eps2) {
    const SobolevNorms n = sobolev_norms(s);
    double hu = 0.0, ht = 0.0;
    for (int k = 0; k < 4; ++k) {
        hu += n.u[k] * n.u[k];
        ht += n.tau[k] * n.tau[k];
    }
    double cross = 0.0;
    for (std::size_t f = 0; f < s.grid.size(); ++f) {
        ModeState mode;
        mode.xi = s.grid.xi(f);
        const double r2 = mode.xi[0] * mode.xi[0] + mode.xi[1] * mode.xi[1] + mode.xi[2] * mode.xi[2];
        if (r2 == 0.0) continue;
        for (int a = 0; a < 6; ++a) mode.tau_hat.v[a] = s.tau[a][f];
        const CVec3 sigma = tau_to_sigma(mode);
        double dotp = 0.0;
        for (int c = 0; c < 3; ++c) dotp += (std::conj(sigma[c]) * s.u[c][f]).real();
        if (dotp == 0.0) continue;
        const double r = std::sqrt(r2);
        cross += (1.0 + r2 + r2 * r2) * r * dotp;  // r^{2k-1}, k = 1..3
    }
    return 0.5 * (p.alpha * hu + p.kappa * ht) + eps2 * s.grid.volume() * cross;
}

std::array<double, 3> symmetric_eigenvalues(const double t[6]) {
    const double a00 = t[0], a01 = t[1], a02 = t[2], a11 = t[3], a12 = t[4], a22 = t[5];
    const double p1 = a01 * a01 + a02 * a02 + a12 * a12;
    std::array<double, 3> e;
    const double q = (a00 + a11 + a22) / 3.0;
    const double d0 = a00 - q, d1 = a11 - q, d2 = a22 - q;
    const double p2 = d0 * d0 + d1 * d1 + d2 * d2 + 2.0 * p1;
    if (p1 == 0.0) {
        e = {a00, a11, a22};
        std::sort(e.begin(), e.end());
        return e;
    }
    const double p = std::sqrt(p2 / 6.0);
    const double b00 = d0 / p, b11 = d1 / p, b22 = d2 / p, b01 = a01 / p, b02 = a02 / p, b12 = a12 / p;
    const double det = b00 * (b11 * b22 - b12 * b12) - b01 * (b01 * b22 - b12 * b02) + b02 * (b01 * b12 - b11 * b02);
    const double r = std::clamp(0.5 * det, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double hi = q + 2.0 * p * std::cos(phi);
    const double lo = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
    e = {lo, 3.0 * q - hi - lo, hi};
    std::sort(e.begin(), e.end());
    return e;
}

double entropy(const std::array<RealField, 6>& tau, const SpectralGrid& g) {
    double sum = 0.0;
    for (std::size_t f = 0; f < g.size(); ++f) {
        const double t[6] = {tau[0][f], tau[1][f], tau[2][f], tau[3][f], tau[4][f], tau[5][f]};
        for (double x : symmetric_eigenvalues(t)) {
            if (!(1.0 + x > 0.0)) throw Error(ErrorCode::NotSPD, "tau + I has a non-positive eigenvalue");
            sum += entropy_density(x);
        }
    }
    return sum * g.volume() / static_cast<double>(g.size());
}

InequalityReport inequality_checks(const SpectralState& s, const Fft3& fft, double b) {
    const SpectralGrid& g = s.grid;
    const PhysicalFields pf = to_physical(s, fft);
    const std::array<RealField, 6> q = q_bilinear(pf.grad_u, pf.tau, b);
    const std::size_t N = g.size();
    const double cell = g.volume() / static_cast<double>(N);

    double u2 = 0.0, gu2 = 0.0, t2 = 0.0, gt2 = 0.0, l1_uu = 0.0, l1_ut = 0.0, l1_q = 0.0;
    std::array<RealField, 3> adv;
    for (auto& c : adv) c.resize(N);
    for (std::size_t f = 0; f < N; ++f) {
        const double u[3] = {pf.u[0][f], pf.u[1][f], pf.u[2][f]};
        u2 += u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
        double a2 = 0.0;
        for (int i = 0; i < 3; ++i) {
            double a = 0.0;
            for (int j = 0; j < 3; ++j) {
                const double gij = pf.grad_u[3 * i + j][f];
                gu2 += gij * gij;
                a += u[j] * gij;
            }
            adv[i][f] = a;
            a2 += a * a;
        }
        l1_uu += std::sqrt(a2);

        const double tv[6] = {pf.tau[0][f], pf.tau[1][f], pf.tau[2][f], pf.tau[3][f], pf.tau[4][f], pf.tau[5][f]};
        t2 += sym_norm2(tv);
        double ut[6], qv[6];
        for (int a = 0; a < 6; ++a) {
            double d = 0.0;
            for (int j = 0; j < 3; ++j) {
                const double gaj = pf.grad_tau[3 * a + j][f];
                gt2 += (kOffDiagonal[a] ? 2.0 : 1.0) * gaj * gaj;
                d += u[j] * gaj;
            }
            ut[a] = d;
            qv[a] = q[a][f];
        }
        l1_ut += std::sqrt(sym_norm2(ut));
        l1_q += std::sqrt(sym_norm2(qv));
    }
    const double nu = std::sqrt(cell * u2), ngu = std::sqrt(cell * gu2);
    const double nt = std::sqrt(cell * t2), ngt = std::sqrt(cell * gt2);

    InequalityReport rep;
    rep.transport_u = {cell * l1_uu, nu * ngu};
    rep.transport_tau = {cell * l1_ut, nu * ngt};
    rep.bilinear_q = {cell * l1_q, 2.0 * (1.0 + std::abs(b)) * ngu * nt};

    // Projected variant: P(u . grad u) through the spectral side.
    std::array<Lattice, 3> spec;
    real_fields_to_spectral(g, fft, {&adv[0], &adv[1], &adv[2]}, {&spec[0], &spec[1], &spec[2]});
    leray_project(g, spec);
    SpectralState tmp(g);
    tmp.u = spec;
    const PhysicalFields pp = to_physical(tmp, fft);
    double l1_p = 0.0;
    for (std::size_t f = 0; f < N; ++f)
        l1_p += std::sqrt(pp.u[0][f] * pp.u[0][f] + pp.u[1][f] * pp.u[1][f] + pp.u[2][f] * pp.u[2][f]);
    rep.projected_u = {cell * l1_p, nu * ngu};
    return rep;
}

MonitorRecord monitor(const SpectralState& s, const Fft3& fft, const ModelParams& p) {
    MonitorRecord r;
    r.time = s.time;
    r.sobolev = sobolev_norms(s);
    r.h3_total = r.sobolev.h3_total();
    r.energy_E = energy_E(s, p, default_eps2(p));
    try {
        r.entropy = entropy(tau_to_physical(s, fft), s.grid);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NotSPD) throw;
        r.entropy = std::numeric_limits<double>::quiet_NaN();
        r.entropy_defined = false;
    }
    r.inequalities = inequality_checks(s, fft, p.b);
    return r;
}

void to_json(nlohmann::json& j, const InequalityReport& r) {
    auto one = [](const InequalitySlack& s, bool asserted) {
        return nlohmann::json{{"lhs", s.lhs}, {"rhs", s.rhs}, {"slack", s.slack()}, {"asserted", asserted}};
    };
    j = nlohmann::json{{"transport_u", one(r.transport_u, true)},
                       {"transport_tau", one(r.transport_tau, true)},
                       {"bilinear_q", one(r.bilinear_q, true)},
                       {"projected_u", one(r.projected_u, false)}};
}

void to_json(nlohmann::json& j, const MonitorRecord& r) {
    j = nlohmann::json{{"time", r.time},
                       {"u_norms", r.sobolev.u},
                       {"tau_norms", r.sobolev.tau},
                       {"h3_total", r.h3_total},
                       {"energy_E", r.energy_E},
                       {"entropy", r.entropy_defined ? nlohmann::json(r.entropy) : nlohmann::json(nullptr)},
                       {"inequalities", r.inequalities}};
}

}  // namespace oldroyd
