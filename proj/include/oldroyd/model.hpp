#pragma once

#include <nlohmann/json_fwd.hpp>

namespace oldroyd {

/// Which dissipation regime a parameter set belongs to.
///  - CaseI:  mu > 0, eps >= 0 (stress diffusion, possibly inviscid)
///  - CaseII: eps > 0, mu >= 0 (viscous, possibly non-diffusive)
enum class DissipationCase { CaseI, CaseII, Both };

const char* to_string(DissipationCase c);

struct ModelParams {
    double epsilon = 0.0;  // fluid viscosity
    double mu = 0.0;       // stress diffusion
    double kappa = 1.0;    // velocity <- stress coupling
    double beta = 1.0;     // stress damping
    double alpha = 1.0;    // stress <- deformation coupling
    double b = 0.0;        // bilinear (Gordon-Schowalter) slip coefficient

    bool operator==(const ModelParams&) const = default;
};

struct ValidatedParams {
    ModelParams params;
    DissipationCase dissipation;
};

/// Checks positivity, ranges and that at least one dissipation mechanism is on.
/// Throws Error{NonPositiveCoupling | NoDissipation | OutOfRange}.
ValidatedParams validate(const ModelParams& p);

/// Low-frequency constants of the Green matrix bounds.
struct DerivedConstants {
    double R;         // low-frequency radius
    double theta;     // Gaussian upper-bound rate
    double K;         // upper-bound amplitude
    double eta;       // Gaussian lower-bound rate
    double c1;        // lower-bound amplitude
    double c1_tilde;  // amplitude of the refined G2 bound
    double t1;        // onset time as published
    double t1_safe;   // onset time that also forces (lambda_+ - lambda_-) t >= ln 2
};

DerivedConstants derive_constants(const ModelParams& p);

/// Discriminant of lambda^2 + S lambda + P = 0 at radius r.
double discriminant(const ModelParams& p, double r);

/// Nondimensional (Re, We, omega) upper-convected model mapped onto the
/// general parameter set. Throws Error{OutOfRange} on invalid inputs.
ModelParams from_nondimensional(double reynolds, double weissenberg, double omega);

void to_json(nlohmann::json& j, const ModelParams& p);
void from_json(const nlohmann::json& j, ModelParams& p);
void to_json(nlohmann::json& j, const DerivedConstants& c);

}  // namespace oldroyd
