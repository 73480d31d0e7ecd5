#include <doctest.h>

#include <cmath>
#include <cstring>

#include <nlohmann/json.hpp>

#include "oldroyd/error.hpp"
#include "oldroyd/model.hpp"

using namespace oldroyd;
using doctest::Approx;

namespace {

ModelParams make(double eps, double mu, double kappa = 1.0, double beta = 1.0, double alpha = 1.0, double b = 0.0) {
    return {eps, mu, kappa, beta, alpha, b};
}

ErrorCode code_of(const ModelParams& p) {
    try {
        validate(p);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("validate accepted invalid parameters");
    return ErrorCode::ConfigError;
}

}  // namespace

TEST_CASE("validate tags the dissipation case") {
    CHECK(validate(make(0.0, 0.5)).dissipation == DissipationCase::CaseI);
    CHECK(validate(make(0.5, 0.0)).dissipation == DissipationCase::CaseII);
    CHECK(validate(make(0.5, 0.5, 1, 1, 1, 1.0)).dissipation == DissipationCase::Both);
}

TEST_CASE("validate rejects each broken rule with its own code") {
    CHECK(code_of(make(0.0, 0.0)) == ErrorCode::NoDissipation);
    CHECK(code_of(make(0.1, 0.1, 0.0)) == ErrorCode::NonPositiveCoupling);
    CHECK(code_of(make(0.1, 0.1, 1.0, -1.0)) == ErrorCode::NonPositiveCoupling);
    CHECK(code_of(make(0.1, 0.1, 1.0, 1.0, 0.0)) == ErrorCode::NonPositiveCoupling);
    CHECK(code_of(make(0.1, 0.1, 1, 1, 1, 1.5)) == ErrorCode::OutOfRange);
    CHECK(code_of(make(1.5, 0.1)) == ErrorCode::OutOfRange);
    CHECK(code_of(make(0.1, -0.1)) == ErrorCode::OutOfRange);
    CHECK(code_of(make(NAN, 0.1)) == ErrorCode::OutOfRange);
}

TEST_CASE("derived constants for unit couplings") {
    const DerivedConstants c = derive_constants(make(0.0, 0.5));
    CHECK(c.R == Approx(1.0 / (2.0 * std::sqrt(5.0))).epsilon(1e-12));
    CHECK(c.R == Approx(0.2236068).epsilon(1e-7));
    CHECK(c.theta == Approx(1.0 / 2.1).epsilon(1e-12));
    CHECK(c.eta == Approx(3.1).epsilon(1e-12));
    CHECK(c.t1 == Approx(std::log(2.0) / 1.1).epsilon(1e-12));
    CHECK(c.t1 == Approx(0.6301338).epsilon(1e-7));
    CHECK(c.c1 == Approx(1.0 / 2.2).epsilon(1e-12));
    CHECK(c.c1_tilde == Approx(2.0 * std::sqrt(2.0) * 2.1).epsilon(1e-12));
    CHECK(c.c1_tilde == Approx(5.9397).epsilon(1e-4));
    CHECK(c.t1_safe == Approx(std::sqrt(2.0) * std::log(2.0)).epsilon(1e-12));
    CHECK(c.t1_safe >= c.t1);
}

TEST_CASE("K follows the analytic composition") {
    const ModelParams p = make(0.3, 0.3, 1.2, 0.8, 0.7);
    const DerivedConstants c = derive_constants(p);
    const double R = c.R;
    const double k1 = 2.0 * std::sqrt(2.0) / p.beta;
    const double lam = 2.0 * R * R * (R * R + p.beta + p.alpha * p.kappa / 2.0) / p.beta;
    const double k23 = 1.0 + lam * k1;
    const double K = (1.0 + p.epsilon * R * R + p.kappa * R + p.alpha * R / 2.0) * std::max(k1, k23);
    CHECK(c.K == Approx(K).epsilon(1e-14));
    CHECK(c.K >= 1.0);
}

TEST_CASE("derived constants satisfy their invariants across a parameter scan") {
    for (double eps : {0.0, 0.2, 1.0})
        for (double mu : {0.0, 0.4, 1.0})
            for (double ak : {0.1, 1.0, 10.0})
                for (double beta : {0.1, 1.0, 5.0}) {
                    if (eps == 0.0 && mu == 0.0) continue;
                    const ModelParams p = make(eps, mu, ak, beta, 1.0);
                    const DerivedConstants c = derive_constants(p);
                    CHECK(c.R > 0.0);
                    CHECK(c.R <= 1.0);
                    CHECK(c.theta > 0.0);
                    CHECK(c.K >= 1.0);
                    CHECK(c.eta >= c.theta);
                    CHECK(c.c1 > 0.0);
                    CHECK(c.c1 <= 1.0);
                    CHECK(c.t1 > 0.0);
                    CHECK(c.t1_safe >= c.t1);
                    // discriminant lower bound on (0, R]
                    CHECK(4.0 * c.R * c.R * (1.0 + beta + ak / 2.0) <= beta * beta / 2.0 * (1.0 + 1e-12));
                    for (int i = 1; i <= 500; ++i)
                        CHECK(discriminant(p, c.R * i / 500.0) >= beta * beta / 2.0 * (1.0 - 1e-12));
                }
}

TEST_CASE("derive_constants is bit-reproducible") {
    const ModelParams p = make(0.3, 0.3);
    const DerivedConstants a = derive_constants(p), b = derive_constants(p);
    CHECK(std::memcmp(&a, &b, sizeof a) == 0);
}

TEST_CASE("nondimensional mapping") {
    const ModelParams a = from_nondimensional(1.0, 1.0, 0.5);
    CHECK(a == make(0.5, 0.0, 1.0, 1.0, 1.0, 1.0));
    const ModelParams b = from_nondimensional(2.0, 4.0, 0.25);
    CHECK(b.epsilon == Approx(0.375));
    CHECK(b.kappa == Approx(0.5));
    CHECK(b.beta == Approx(0.25));
    CHECK(b.alpha == Approx(0.125));
    CHECK(b.mu == 0.0);
    CHECK(b.b == 1.0);
    CHECK(validate(b).dissipation == DissipationCase::CaseII);

    CHECK_THROWS_AS(from_nondimensional(1.0, 1.0, 1.0), Error);
    CHECK_THROWS_AS(from_nondimensional(1.0, 1.0, 0.0), Error);
    CHECK_THROWS_AS(from_nondimensional(-1.0, 1.0, 0.5), Error);
    // omega -> 1 leaves no viscosity and no diffusion
    CHECK(code_of(make(0.0, 0.0, 1.0, 1.0, 2.0, 1.0)) == ErrorCode::NoDissipation);
}

TEST_CASE("params json round trip") {
    const ModelParams p = make(0.1, 0.2, 0.3, 0.4, 0.5, -0.6);
    const nlohmann::json j = p;
    CHECK(j.get<ModelParams>() == p);
    nlohmann::json missing = j;
    missing.erase("beta");
    CHECK_THROWS_AS(missing.get<ModelParams>(), Error);
}
