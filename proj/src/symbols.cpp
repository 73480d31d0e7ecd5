#include "oldroyd/symbols.hpp"

#include <cmath>

#include "oldroyd/error.hpp"

namespace oldroyd {

namespace {

double norm2(const Vec3& v) { return v[0] * v[0] + v[1] * v[1] + v[2] * v[2]; }

// w_k = xi_l tau^{lk}
CVec3 contract(const Vec3& xi, const SymTensor& tau) {
    CVec3 w{};
    for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) w[k] += xi[l] * tau(l, k);
    return w;
}

CVec3 project(const Vec3& xi, double r2, const CVec3& w) {
    const cplx dot = xi[0] * w[0] + xi[1] * w[1] + xi[2] * w[2];
    CVec3 out;
    for (int j = 0; j < 3; ++j) out[j] = w[j] - xi[j] * dot / r2;
    return out;
}

constexpr cplx I{0.0, 1.0};

}  // namespace

const char* to_string(Regime r) {
    switch (r) {
        case Regime::DistinctReal: return "distinct-real";
        case Regime::NearDegenerate: return "near-degenerate";
        case Regime::Oscillatory: return "oscillatory";
    }
    return "?";
}

EigenPair eigenvalues(double r, const ModelParams& p) {
    const double r2 = r * r;
    const double sum = (p.mu + p.epsilon) * r2 + p.beta;  // -(lambda_+ + lambda_-)
    const double prod = r2 * (p.epsilon * (p.mu * r2 + p.beta) + 0.5 * p.alpha * p.kappa);
    const double d = discriminant(p, r);

    EigenPair e{};
    e.discriminant = d;
    if (d >= 0.0) {
        const double sq = std::sqrt(d);
        // lambda_+ = -2 prod / (sum + sqrt D) avoids the subtraction -sum + sqrt D.
        e.lambda_plus = -2.0 * prod / (sum + sq);
        e.lambda_minus = -0.5 * (sum + sq);
        e.regime = sq <= kNearDegenerateRatio * sum ? Regime::NearDegenerate : Regime::DistinctReal;
    } else {
        const double w = 0.5 * std::sqrt(-d);
        e.lambda_plus = {-0.5 * sum, w};
        e.lambda_minus = {-0.5 * sum, -w};
        e.regime = Regime::Oscillatory;
    }
    return e;
}

GKernels g_kernels(double r, double t, const ModelParams& p) {
    if (t == 0.0) return {0.0, 1.0, 1.0};

    const double r2 = r * r;
    const double sum = (p.mu + p.epsilon) * r2 + p.beta;
    const double d = discriminant(p, r);
    const double gap = std::sqrt(std::abs(d));  // |lambda_+ - lambda_-|

    if (gap * t < kTaylorThreshold) {
        // Series in x^2 = D t^2 / 4 about the double root lambda_bar = -sum/2.
        const double x2 = 0.25 * d * t * t;
        const double shx = 1.0 + x2 / 6.0 + x2 * x2 / 120.0;  // sinh(x)/x
        const double chx = 1.0 + x2 / 2.0 + x2 * x2 / 24.0;   // cosh(x)
        const double lbar_t = -0.5 * sum * t;
        const double e = std::exp(lbar_t);
        return {t * e * shx, e * (chx + lbar_t * shx), e * (chx - lbar_t * shx)};
    }

    if (d > 0.0) {
        const double prod = r2 * (p.epsilon * (p.mu * r2 + p.beta) + 0.5 * p.alpha * p.kappa);
        const double lp = -2.0 * prod / (sum + gap);
        const double lm = -0.5 * (sum + gap);
        const double ep = std::exp(lp * t);
        const double g1 = ep * (-std::expm1(-gap * t)) / gap;
        return {g1, lp * g1 + std::exp(lm * t), -lp * g1 + ep};
    }

    const double a = -0.5 * sum;
    const double w = 0.5 * gap;
    const double e = std::exp(a * t);
    const double s = std::sin(w * t);
    const double c = std::cos(w * t);
    return {e * s / w, e * (c + a / w * s), e * (c - a / w * s)};
}

std::array<cplx, 3> g_kernels_complex(double r, double t, const ModelParams& p) {
    const EigenPair e = eigenvalues(r, p);
    const cplx delta = e.lambda_plus - e.lambda_minus;
    if (std::abs(delta) == 0.0) {
        const GKernels g = g_kernels(r, t, p);
        return {cplx(g.g1), cplx(g.g2), cplx(g.g3)};
    }
    const cplx ep = std::exp(e.lambda_plus * t);
    const cplx em = std::exp(e.lambda_minus * t);
    return {(ep - em) / delta, (e.lambda_plus * ep - e.lambda_minus * em) / delta,
            (e.lambda_plus * em - e.lambda_minus * ep) / delta};
}

std::pair<CVec3, CVec3> propagate_usigma(const Vec3& xi, double t, const CVec3& u0, const CVec3& sigma0,
                                         const ModelParams& p) {
    const double r2 = norm2(xi);
    const double r = std::sqrt(r2);
    const GKernels g = g_kernels(r, t, p);
    const double uu = g.g3 - p.epsilon * r2 * g.g1;
    const double us = p.kappa * r * g.g1;
    const double su = -0.5 * p.alpha * r * g.g1;
    const double ss = g.g2 + p.epsilon * r2 * g.g1;

    std::pair<CVec3, CVec3> out;
    for (int j = 0; j < 3; ++j) {
        out.first[j] = uu * u0[j] + us * sigma0[j];
        out.second[j] = su * u0[j] + ss * sigma0[j];
    }
    return out;
}

UTauCoefficients utau_coefficients(double r, double t, const ModelParams& p) {
    const double r2 = r * r;
    const GKernels g = g_kernels(r, t, p);
    const double decay = std::exp(-(p.beta + p.mu * r2) * t);
    return {g.g3 - p.epsilon * r2 * g.g1, p.kappa * g.g1, decay, 0.5 * p.alpha * g.g1,
            decay - g.g2 - p.epsilon * r2 * g.g1};
}

void apply_utau(const Vec3& xi, const UTauCoefficients& c, CVec3& u, SymTensor& tau) {
    const double r2 = norm2(xi);
    const CVec3 pw = project(xi, r2, contract(xi, tau));
    const CVec3 u0 = u;

    for (int j = 0; j < 3; ++j) u[j] = c.uu * u0[j] + I * c.ut * pw[j];

    const double inv_r2 = 1.0 / r2;
    for (int j = 0; j < 3; ++j) {
        for (int k = j; k < 3; ++k) {
            tau(j, k) = c.decay * tau(j, k) + I * c.tu * (xi[k] * u0[j] + xi[j] * u0[k]) -
                        c.tt * (xi[k] * pw[j] + xi[j] * pw[k]) * inv_r2;
        }
    }
}

ModeState propagate_utau(const ModeState& mode, double t, const ModelParams& p) {
    const double r2 = norm2(mode.xi);
    if (r2 == 0.0) throw Error(ErrorCode::ZeroFrequency, "propagate_utau requires xi != 0");
    ModeState out = mode;
    apply_utau(mode.xi, utau_coefficients(std::sqrt(r2), t, p), out.u_hat, out.tau_hat);
    return out;
}

std::pair<CVec3, SymTensor> propagate_zero_mode(const CVec3& u0, const SymTensor& tau0, double t,
                                                const ModelParams& p) {
    const double decay = std::exp(-p.beta * t);
    SymTensor tau = tau0;
    for (auto& v : tau.v) v *= decay;
    return {u0, tau};
}

CVec3 tau_to_sigma(const ModeState& mode) {
    const double r2 = norm2(mode.xi);
    if (r2 == 0.0) throw Error(ErrorCode::ZeroFrequency, "tau_to_sigma requires xi != 0");
    const CVec3 pw = project(mode.xi, r2, contract(mode.xi, mode.tau_hat));
    const double inv_r = 1.0 / std::sqrt(r2);
    CVec3 s;
    for (int j = 0; j < 3; ++j) s[j] = I * pw[j] * inv_r;
    return s;
}

}  // namespace oldroyd
