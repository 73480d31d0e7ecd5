#include <doctest.h>

#include <cmath>

#include "oldroyd/error.hpp"
#include "oldroyd/symbols.hpp"
#include "support.hpp"

using namespace oldroyd;
using doctest::Approx;

namespace {

ModelParams unit_params(double eps, double mu, double ak = 1.0) {
    ModelParams p;
    p.epsilon = eps;
    p.mu = mu;
    p.kappa = ak;
    return p;
}

constexpr cplx I{0.0, 1.0};

double max_abs_diff(const GKernels& a, const GKernels& b) {
    return std::max({std::abs(a.g1 - b.g1), std::abs(a.g2 - b.g2), std::abs(a.g3 - b.g3)});
}

// Radius of the double root for params with mu != eps (smaller positive root).
double double_root(const ModelParams& p) {
    const double a = p.mu - p.epsilon, s = std::sqrt(2.0 * p.alpha * p.kappa);
    if (a == 0.0) return p.beta / s;
    return (s - std::sqrt(s * s - 4.0 * a * p.beta)) / (2.0 * a);
}

}  // namespace

TEST_CASE("eigenvalues at r = 0") {
    const EigenPair e = eigenvalues(0.0, unit_params(0.3, 0.2));
    CHECK(std::abs(e.lambda_plus) == 0.0);
    CHECK(e.lambda_minus.real() == Approx(-1.0));
    CHECK(e.regime == Regime::DistinctReal);
}

TEST_CASE("eigenvalues, real pair") {
    ModelParams p = unit_params(0.0, 0.0);
    const EigenPair e = eigenvalues(0.1, p);
    CHECK(e.discriminant == Approx(0.98).epsilon(1e-14));
    // roots of l^2 + l + 0.005 = 0
    CHECK(e.lambda_plus.real() == Approx((-1.0 + std::sqrt(0.98)) / 2.0).epsilon(1e-12));
    CHECK(e.lambda_minus.real() == Approx((-1.0 - std::sqrt(0.98)) / 2.0).epsilon(1e-12));
    CHECK(e.lambda_plus.real() == Approx(-0.00502525).epsilon(1e-6));
    CHECK(e.lambda_minus.real() == Approx(-0.99497475).epsilon(1e-7));
    CHECK(e.lambda_plus.imag() == 0.0);
}

TEST_CASE("eigenvalues, oscillatory pair") {
    const ModelParams p = unit_params(0.0, 0.0, 2.0);
    const EigenPair e = eigenvalues(10.0, p);
    CHECK(e.regime == Regime::Oscillatory);
    CHECK(e.discriminant == Approx(-399.0));
    CHECK(e.lambda_plus.real() == Approx(-0.5));
    CHECK(std::abs(e.lambda_plus.imag()) == Approx(std::sqrt(399.0) / 2.0));
    CHECK(std::abs(e.lambda_minus - std::conj(e.lambda_plus)) < 1e-14);
}

TEST_CASE("eigenvalue sum and product identities") {
    testing::Draw d(11);
    for (int i = 0; i < 2000; ++i) {
        const ModelParams p = testing::random_params(d);
        const double r = d.log_uniform(1e-4, 50.0);
        const EigenPair e = eigenvalues(r, p);
        const double sum = -((p.mu + p.epsilon) * r * r + p.beta);
        const double prod = r * r * (p.epsilon * (p.mu * r * r + p.beta) + p.alpha * p.kappa / 2.0);
        CHECK(std::abs(e.lambda_plus + e.lambda_minus - sum) <= 1e-12 * std::abs(sum));
        CHECK(std::abs(e.lambda_plus * e.lambda_minus - prod) <= 1e-12 * prod);
        CHECK(e.lambda_plus.real() <= 0.0);
        CHECK(e.lambda_minus.real() <= 0.0);
        CHECK((e.regime == Regime::Oscillatory) == (e.discriminant < 0.0));
        if (e.regime == Regime::Oscillatory) CHECK(std::abs(e.lambda_minus - std::conj(e.lambda_plus)) < 1e-12 * std::abs(sum));
    }
}

TEST_CASE("g kernels at t = 0") {
    testing::Draw d(12);
    for (int i = 0; i < 100; ++i) {
        const GKernels g = g_kernels(d.log_uniform(1e-3, 20.0), 0.0, testing::random_params(d));
        CHECK(g.g1 == 0.0);
        CHECK(g.g2 == Approx(1.0).epsilon(1e-15));
        CHECK(g.g3 == Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("g kernel identities and real outputs") {
    testing::Draw d(13);
    for (int i = 0; i < 2000; ++i) {
        const ModelParams p = testing::random_params(d);
        const double r = d.log_uniform(1e-3, 20.0);
        const double t = d.uniform(0.0, 10.0);
        const EigenPair e = eigenvalues(r, p);
        if (e.regime == Regime::NearDegenerate) continue;
        const GKernels g = g_kernels(r, t, p);
        const cplx ep = std::exp(e.lambda_plus * t), em = std::exp(e.lambda_minus * t);
        const double sum = (ep + em).real();
        const double scale = std::abs(ep) + std::abs(em);
        CHECK(std::abs(g.g2 + g.g3 - sum) <= 1e-10 * scale);
        const double lsum = (e.lambda_plus + e.lambda_minus).real();
        CHECK(std::abs(g.g2 - g.g3 - lsum * g.g1) <= 1e-10 * (std::abs(g.g2) + std::abs(g.g3) + scale) + 1e-300);

        if (std::abs(e.lambda_plus - e.lambda_minus) * t > 1e-3) {
            const auto c = g_kernels_complex(r, t, p);
            for (const cplx& v : c) CHECK(std::abs(v.imag()) <= 1e-12 * std::max(std::abs(v), 1e-300) + 1e-300);
        }
    }
}

TEST_CASE("exactly degenerate kernels") {
    // dyadic values: S^2 = 4P = 1.265625 exactly at r = 1/2
    ModelParams p = unit_params(0.25, 0.25);
    p.alpha = 2.0;
    const double r = 0.5;
    CHECK(discriminant(p, r) == 0.0);
    const EigenPair e = eigenvalues(r, p);
    CHECK(e.regime == Regime::NearDegenerate);
    const double lam = -((p.mu + p.epsilon) * r * r + p.beta) / 2.0;
    for (double t : {0.1, 1.0, 7.5}) {
        const GKernels g = g_kernels(r, t, p);
        const double ex = std::exp(lam * t);
        CHECK(g.g1 == Approx(t * ex).epsilon(1e-12));
        CHECK(g.g2 == Approx((1.0 + lam * t) * ex).epsilon(1e-12));
        CHECK(g.g3 == Approx((1.0 - lam * t) * ex).epsilon(1e-12));
    }
}

TEST_CASE("branch continuity across the regime thresholds") {
    testing::Draw d(14);
    for (int i = 0; i < 200; ++i) {
        ModelParams p = testing::random_params(d);
        const double rs = double_root(p);
        if (!(rs > 0.0) || !std::isfinite(rs)) continue;
        const double t = d.uniform(0.1, 10.0);
        // discriminant sign change
        for (double delta : {1e-12, 1e-10}) {
            const GKernels lo = g_kernels(rs * (1.0 - delta), t, p), hi = g_kernels(rs * (1.0 + delta), t, p);
            CHECK(max_abs_diff(lo, hi) < 1e-9);
        }
        // near-degenerate tag boundary sqrt|D| / S = kNearDegenerateRatio, and a
        // second crossing further out
        for (double target : {kNearDegenerateRatio, 1e-4}) {
            auto ratio = [&](double r) {
                return std::sqrt(std::abs(discriminant(p, r))) / ((p.mu + p.epsilon) * r * r + p.beta);
            };
            double lo = rs, hi = rs * 1.01;
            if (!(ratio(hi) > target)) continue;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                (ratio(mid) < target ? lo : hi) = mid;
            }
            const GKernels a = g_kernels(lo * (1.0 - 1e-13), t, p), b = g_kernels(hi * (1.0 + 1e-13), t, p);
            CHECK(max_abs_diff(a, b) < 1e-9);
        }
    }
    // time direction at a fixed separated pair
    ModelParams p = unit_params(0.0, 0.5);
    const double r = 0.3;
    const EigenPair e = eigenvalues(r, p);
    const double gap = std::abs(e.lambda_plus - e.lambda_minus);
    const double t_switch = kTaylorThreshold / gap;
    const GKernels lo = g_kernels(r, t_switch * (1.0 - 1e-9), p), hi = g_kernels(r, t_switch * (1.0 + 1e-9), p);
    CHECK(max_abs_diff(lo, hi) < 1e-9);
}

TEST_CASE("usigma propagator examples") {
    const ModelParams p = unit_params(0.0, 0.5);
    const Vec3 xi{0.3, -0.4, 1.2};
    const CVec3 u0{cplx(1, 2), cplx(-0.5, 0.1), cplx(0.2, 0)}, s0{cplx(0.3, -1), cplx(2, 0), cplx(0, 1)};
    const auto [u_id, s_id] = propagate_usigma(xi, 0.0, u0, s0, p);
    for (int c = 0; c < 3; ++c) {
        CHECK(std::abs(u_id[c] - u0[c]) < 1e-15);
        CHECK(std::abs(s_id[c] - s0[c]) < 1e-15);
    }
    const double r = std::sqrt(testing::norm2(xi)), t = 2.5;
    const GKernels g = g_kernels(r, t, p);
    const auto [u, s] = propagate_usigma(xi, t, u0, CVec3{}, p);
    for (int c = 0; c < 3; ++c) {
        CHECK(std::abs(u[c] - g.g3 * u0[c]) < 1e-14);
        CHECK(std::abs(s[c] + 0.5 * p.alpha * r * g.g1 * u0[c]) < 1e-14);
    }
}

TEST_CASE("g kernels match the oracle for the unit example") {
    const ModelParams p = unit_params(0.0, 0.0);
    const Vec3 xi{0.1, 0.0, 0.0};
    const CVec3 u0{cplx(0), cplx(1), cplx(0)};
    const auto [u, s] = propagate_usigma(xi, 1.0, u0, CVec3{}, p);
    const auto [uo, so] = ode_oracle_usigma(xi, 1.0, u0, CVec3{}, p, 4000);
    CHECK(testing::relative_error(u, s, uo, so) <= 1e-10);
}

TEST_CASE("utau propagator examples") {
    const ModelParams p = unit_params(0.0, 0.5);
    ModeState m;
    m.xi = {1.0, 0.0, 0.0};
    m.u_hat = {cplx(0), cplx(1), cplx(0)};
    const double t = 1.7;
    const GKernels g = g_kernels(1.0, t, p);
    const ModeState out = propagate_utau(m, t, p);
    CHECK(std::abs(out.u_hat[0]) < 1e-15);
    CHECK(std::abs(out.u_hat[1] - g.g3) < 1e-14);
    CHECK(std::abs(out.u_hat[2]) < 1e-15);
    for (int a = 0; a < 6; ++a) {
        if (a == SymTensor::index(0, 1)) CHECK(std::abs(out.tau_hat.v[a] - I * 0.5 * p.alpha * g.g1) < 1e-14);
        else CHECK(std::abs(out.tau_hat.v[a]) < 1e-15);
    }

    ModeState q;
    q.xi = {0.0, 0.0, 2.0};
    q.tau_hat(0, 0) = cplx(1, 1);
    q.tau_hat(0, 1) = cplx(-0.5, 0.2);
    q.tau_hat(1, 1) = cplx(0.3, 0);
    const ModeState qo = propagate_utau(q, t, p);
    const double decay = std::exp(-(p.beta + p.mu * 4.0) * t);
    for (int c = 0; c < 3; ++c) CHECK(std::abs(qo.u_hat[c]) < 1e-15);
    for (int a = 0; a < 6; ++a) CHECK(std::abs(qo.tau_hat.v[a] - decay * q.tau_hat.v[a]) < 1e-15);

    ModeState z;
    CHECK_THROWS_AS(propagate_utau(z, 1.0, p), Error);
    CHECK_THROWS_AS(tau_to_sigma(z), Error);
}

TEST_CASE("zero mode") {
    ModelParams p = unit_params(0.0, 0.5);
    const CVec3 u0{cplx(1, 0), cplx(0, 2), cplx(3, 3)};
    const SymTensor t0 = SymTensor::identity(cplx(0.5, 0.25));
    const auto [u_a, t_a] = propagate_zero_mode(u0, t0, 0.0, p);
    const auto [u_b, t_b] = propagate_zero_mode(u0, t0, std::log(2.0), p);
    const auto [u_c, t_c] = propagate_zero_mode(u0, t0, 1e4, p);
    for (int c = 0; c < 3; ++c) {
        CHECK(u_a[c] == u0[c]);
        CHECK(u_b[c] == u0[c]);
        CHECK(u_c[c] == u0[c]);
    }
    for (int a = 0; a < 6; ++a) {
        CHECK(t_a.v[a] == t0.v[a]);
        CHECK(std::abs(t_b.v[a] - 0.5 * t0.v[a]) < 1e-15);
        CHECK(std::abs(t_c.v[a]) < 1e-300);
    }
}

TEST_CASE("tau_to_sigma") {
    ModeState m;
    m.xi = {2.5, 0.0, 0.0};
    for (int a = 0; a < 6; ++a) m.tau_hat.v[a] = cplx(a + 1.0, -0.5 * a);
    const CVec3 s = tau_to_sigma(m);
    CHECK(std::abs(s[0]) < 1e-15);
    CHECK(std::abs(s[1] - I * m.tau_hat(0, 1)) < 1e-15);
    CHECK(std::abs(s[2] - I * m.tau_hat(0, 2)) < 1e-15);

    m.xi = {0.3, -1.1, 0.7};
    m.tau_hat = SymTensor::identity(cplx(2.0, -1.0));
    for (const cplx& v : tau_to_sigma(m)) CHECK(std::abs(v) < 1e-15);

    testing::Draw d(15);
    for (int i = 0; i < 200; ++i) {
        const ModeState q = testing::random_mode(d, d.log_uniform(0.01, 10.0));
        const CVec3 sq = tau_to_sigma(q);
        cplx dot = 0.0;
        for (int c = 0; c < 3; ++c) dot += q.xi[c] * sq[c];
        double mag = 0.0;
        for (const cplx& v : sq) mag += std::norm(v);
        CHECK(std::abs(dot) <= 1e-14 * std::sqrt(testing::norm2(q.xi) * mag));
    }
}

TEST_CASE("oracle is identity at t = 0 and fourth order") {
    const ModelParams p = unit_params(0.1, 0.4);
    testing::Draw d(16);
    const ModeState m = testing::random_mode(d, 1.3);
    CHECK(testing::relative_error(ode_oracle(m, 0.0, p, 100), m) == 0.0);

    const double t = 2.0;
    const ModeState exact = propagate_utau(m, t, p);
    const double e1 = testing::relative_error(ode_oracle(m, t, p, 20), exact);
    const double e2 = testing::relative_error(ode_oracle(m, t, p, 40), exact);
    const double e3 = testing::relative_error(ode_oracle(m, t, p, 80), exact);
    CHECK(e1 / e2 == Approx(16.0).epsilon(0.25));
    CHECK(e2 / e3 == Approx(16.0).epsilon(0.25));
}

TEST_CASE("closed forms match the oracle across regimes") {
    testing::Draw d(17);
    int seen[3] = {0, 0, 0};
    for (int i = 0; i < 150; ++i) {
        const Regime want = static_cast<Regime>(i % 3);
        ModelParams p;
        ModeState m;
        for (;;) {
            p = testing::random_params(d);
            m = testing::random_mode(d, d.log_uniform(0.05, 3.0));
            const double r = std::sqrt(testing::norm2(m.xi));
            if (want == Regime::NearDegenerate && !testing::tune_to_double_root(p, r)) continue;
            if (eigenvalues(r, p).regime == want) break;
        }
        const double r = std::sqrt(testing::norm2(m.xi));
        const double t = d.uniform(0.0, 10.0);
        ++seen[static_cast<int>(want)];
        const int steps = oracle_steps(r, t, p);
        CHECK(testing::relative_error(propagate_utau(m, t, p), ode_oracle(m, t, p, steps)) <= 1e-8);
        CVec3 s0;
        for (auto& c : s0) c = d.complex_unit();
        const auto [u1, s1] = propagate_usigma(m.xi, t, m.u_hat, s0, p);
        const auto [u2, s2] = ode_oracle_usigma(m.xi, t, m.u_hat, s0, p, steps);
        CHECK(testing::relative_error(u1, s1, u2, s2) <= 1e-8);
    }
    CHECK(seen[0] == 50);
    CHECK(seen[1] == 50);
    CHECK(seen[2] == 50);
}

TEST_CASE("semigroup, divergence and the commuting diagram") {
    testing::Draw d(18);
    for (int i = 0; i < 300; ++i) {
        const ModelParams p = testing::random_params(d);
        const ModeState m = testing::random_mode(d, d.log_uniform(0.02, 5.0));
        const double s = d.uniform(0.0, 10.0), t = d.uniform(0.0, 10.0);
        const ModeState a = propagate_utau(propagate_utau(m, s, p), t, p);
        const ModeState b = propagate_utau(m, s + t, p);
        CHECK(testing::relative_error(a, b) <= 1e-9);

        cplx dot = 0.0;
        double mag = 0.0;
        for (int c = 0; c < 3; ++c) {
            dot += b.xi[c] * b.u_hat[c];
            mag += std::norm(b.u_hat[c]);
        }
        CHECK(std::abs(dot) <= 1e-12 * std::sqrt(testing::norm2(b.xi) * mag) + 1e-300);

        const ModeState mt = propagate_utau(m, t, p);
        const auto [u, sg] = propagate_usigma(m.xi, t, m.u_hat, tau_to_sigma(m), p);
        CHECK(testing::relative_error(mt.u_hat, tau_to_sigma(mt), u, sg) <= 1e-9);
    }
}

TEST_CASE("cached coefficients reproduce propagate_utau") {
    testing::Draw d(19);
    for (int i = 0; i < 200; ++i) {
        const ModelParams p = testing::random_params(d);
        ModeState m = testing::random_mode(d, d.log_uniform(0.02, 5.0));
        const double r = std::sqrt(testing::norm2(m.xi)), t = d.uniform(0.0, 5.0);
        const ModeState ref = propagate_utau(m, t, p);
        apply_utau(m.xi, utau_coefficients(r, t, p), m.u_hat, m.tau_hat);
        CHECK(testing::relative_error(m, ref) <= 1e-14);
    }
}
