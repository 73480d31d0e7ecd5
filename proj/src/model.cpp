#include "oldroyd/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

#include "oldroyd/error.hpp"

namespace oldroyd {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::NonPositiveCoupling: return "NonPositiveCoupling";
        case ErrorCode::NoDissipation: return "NoDissipation";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::ZeroFrequency: return "ZeroFrequency";
        case ErrorCode::GridTooCoarse: return "GridTooCoarse";
        case ErrorCode::QuadratureNotConverged: return "QuadratureNotConverged";
        case ErrorCode::WindowTooNarrow: return "WindowTooNarrow";
        case ErrorCode::HypothesisViolated: return "HypothesisViolated";
        case ErrorCode::CflViolation: return "CflViolation";
        case ErrorCode::BlowUp: return "BlowUp";
        case ErrorCode::NotSPD: return "NotSPD";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

const char* to_string(DissipationCase c) {
    switch (c) {
        case DissipationCase::CaseI: return "I";
        case DissipationCase::CaseII: return "II";
        case DissipationCase::Both: return "both";
    }
    return "?";
}

ValidatedParams validate(const ModelParams& p) {
    auto fail = [](ErrorCode code, const std::string& msg) { throw Error(code, msg); };
    const double values[] = {p.epsilon, p.mu, p.kappa, p.beta, p.alpha, p.b};
    for (double v : values) {
        if (!std::isfinite(v)) fail(ErrorCode::OutOfRange, "parameters must be finite");
    }
    if (!(p.kappa > 0.0)) fail(ErrorCode::NonPositiveCoupling, "kappa must be > 0");
    if (!(p.beta > 0.0)) fail(ErrorCode::NonPositiveCoupling, "beta must be > 0");
    if (!(p.alpha > 0.0)) fail(ErrorCode::NonPositiveCoupling, "alpha must be > 0");
    if (p.epsilon < 0.0 || p.epsilon > 1.0) fail(ErrorCode::OutOfRange, "epsilon must lie in [0, 1]");
    if (p.mu < 0.0 || p.mu > 1.0) fail(ErrorCode::OutOfRange, "mu must lie in [0, 1]");
    if (p.b < -1.0 || p.b > 1.0) fail(ErrorCode::OutOfRange, "b must lie in [-1, 1]");
    if (p.epsilon == 0.0 && p.mu == 0.0)
        fail(ErrorCode::NoDissipation, "at least one of epsilon, mu must be > 0");

    DissipationCase c = DissipationCase::Both;
    if (p.mu > 0.0 && p.epsilon == 0.0) c = DissipationCase::CaseI;
    else if (p.epsilon > 0.0 && p.mu == 0.0) c = DissipationCase::CaseII;
    return {p, c};
}

double discriminant(const ModelParams& p, double r) {
    // [(mu+eps) r^2 + beta]^2 - 4 r^2 [eps (mu r^2 + beta) + alpha kappa / 2], regrouped
    const double r2 = r * r;
    const double shifted = p.beta + (p.mu - p.epsilon) * r2;
    return shifted * shifted - 2.0 * p.alpha * p.kappa * r2;
}

DerivedConstants derive_constants(const ModelParams& p) {
    validate(p);
    const double a = p.alpha, k = p.kappa, b = p.beta;
    const double ak = a * k;

    DerivedConstants c{};
    c.R = std::min(1.0, b / (2.0 * std::sqrt(2.0 + 2.0 * b + ak)));
    const double R2 = c.R * c.R;
    c.theta = ak / (2.0 * R2 + 2.0 * b);
    c.eta = (2.0 / b) * (R2 + b + 0.5 * ak);
    c.t1 = std::numbers::ln2 / (2.0 * R2 + b);
    c.t1_safe = std::max(c.t1, std::numbers::sqrt2 * std::numbers::ln2 / b);
    c.c1 = std::min(1.0 / (2.0 * (2.0 * R2 + b)), 1.0);
    c.c1_tilde = std::max(2.0 * std::numbers::sqrt2 * (2.0 * R2 + b + ak) / (b * b),
                          std::numbers::sqrt2 * (R2 + b) / b);

    // |G1| <= K1 e^{-theta r^2 t} because |lambda_+ - lambda_-| >= beta/sqrt(2);
    // G2, G3 = +-lambda_+ G1 + e^{lambda t} with |lambda_+| <= lambda_max.
    const double k1 = 2.0 * std::numbers::sqrt2 / b;
    const double lambda_max = 2.0 * R2 * (R2 + b + 0.5 * ak) / b;
    const double k23 = 1.0 + lambda_max * k1;
    c.K = (1.0 + p.epsilon * R2 + k * c.R + 0.5 * a * c.R) * std::max(k1, k23);
    return c;
}

ModelParams from_nondimensional(double reynolds, double weissenberg, double omega) {
    if (!(reynolds > 0.0) || !(weissenberg > 0.0))
        throw Error(ErrorCode::OutOfRange, "Re and We must be > 0");
    if (!(omega > 0.0 && omega < 1.0))
        throw Error(ErrorCode::OutOfRange, "omega must lie in (0, 1)");
    ModelParams p;
    p.epsilon = (1.0 - omega) / reynolds;
    p.kappa = 1.0 / reynolds;
    p.beta = 1.0 / weissenberg;
    p.alpha = 2.0 * omega / weissenberg;
    p.mu = 0.0;
    p.b = 1.0;
    return p;
}

void to_json(nlohmann::json& j, const ModelParams& p) {
    j = nlohmann::json{{"epsilon", p.epsilon}, {"mu", p.mu},       {"kappa", p.kappa},
                       {"beta", p.beta},       {"alpha", p.alpha}, {"b", p.b}};
}

void from_json(const nlohmann::json& j, ModelParams& p) {
    auto get = [&](const char* key, double& dst) {
        if (!j.contains(key)) throw Error(ErrorCode::ConfigError, std::string("missing parameter '") + key + "'");
        if (!j.at(key).is_number()) throw Error(ErrorCode::ConfigError, std::string("parameter '") + key + "' must be a number");
        dst = j.at(key).get<double>();
    };
    get("epsilon", p.epsilon);
    get("mu", p.mu);
    get("kappa", p.kappa);
    get("beta", p.beta);
    get("alpha", p.alpha);
    get("b", p.b);
}

void to_json(nlohmann::json& j, const DerivedConstants& c) {
    j = nlohmann::json{{"R", c.R},   {"theta", c.theta},       {"K", c.K},   {"eta", c.eta},
                       {"c1", c.c1}, {"c1_tilde", c.c1_tilde}, {"t1", c.t1}, {"t1_safe", c.t1_safe}};
}

}  // namespace oldroyd
