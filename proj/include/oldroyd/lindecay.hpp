#pragma once

// Whole-space L2 norms of the linear flow, computed by frequency quadrature,
// and log-log exponent fits against the optimal algebraic rates.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "oldroyd/model.hpp"
#include "oldroyd/symbols.hpp"

namespace oldroyd {

enum class Field { U, Tau };
enum class Components { UOnly, TauOnly, Both };

const char* to_string(Field f);
const char* to_string(Components c);

/// Radial Gaussian profile c0 exp(-r^2 / w^2) carried by a divergence-free
/// velocity direction (unit projection of `reference`) and a fixed symmetric
/// stress template.
struct InitialSpec {
    double amplitude = 1.0;
    double width = 1.0;
    Vec3 reference{0.0, 0.0, 1.0};
    std::array<double, 6> tau_template{0.70710678118654752, 0.0, 0.0, -0.70710678118654752, 0.0, 0.0};
    Components which = Components::Both;

    double profile(double r) const;
    /// u_hat_0(xi); zero on the singular ray xi || reference.
    CVec3 u0(const Vec3& xi) const;
    SymTensor tau0(const Vec3& xi) const;
    bool has_u() const { return which != Components::TauOnly && amplitude != 0.0; }
    bool has_tau() const { return which != Components::UOnly && amplitude != 0.0; }
};

struct QuadratureSpec {
    int radial_panels = 24;
    int nodes_per_panel = 32;
    int polar_nodes = 16;
    int azimuth_nodes = 32;
    double cutoff = 1e-18;          // relative integrand amplitude for truncation
    double convergence_tol = 1e-6;  // panel-doubling relative change
    bool check_convergence = true;
};

inline constexpr int kMaxUOrder = 3;
inline constexpr int kMaxTauOrder = 2;

/// ||grad^k u||, k = 0..3, then ||grad^k tau||, k = 0..2.
using NormRow = std::array<double, 7>;

inline constexpr int column(Field f, int k) { return f == Field::U ? k : 4 + k; }

/// All seven norms at time t. Throws Error{QuadratureNotConverged}.
NormRow linear_norms(double t, const InitialSpec& init, const ModelParams& p, const QuadratureSpec& q = {});

/// (int_{R^3} |xi|^{2k} |component of G(xi, t) U0(xi)|^2 dxi)^{1/2}
double linear_norm(int k, double t, Field field, const InitialSpec& init, const ModelParams& p,
                   const QuadratureSpec& q = {});

/// Same integral evaluated by pushing every quadrature node through the full
/// mode propagator. Slow; kept as an independent check of linear_norms.
NormRow linear_norms_direct(double t, const InitialSpec& init, const ModelParams& p, const QuadratureSpec& q = {});

struct DecaySeries {
    std::vector<double> times;
    std::vector<NormRow> norms;
    ModelParams params;
    InitialSpec init;
    QuadratureSpec quad;

    double at(std::size_t i, Field f, int k) const { return norms[i][column(f, k)]; }
};

struct TimeGrid {
    double t_min = 1.0;
    double t_max = 1e4;
    int count = 41;

    std::vector<double> points() const;
};

/// Evaluates `times` on up to `jobs` worker threads; row order follows `times`.
DecaySeries decay_series(const InitialSpec& init, const ModelParams& p, const std::vector<double>& times,
                         const QuadratureSpec& q = {}, int jobs = 1);

/// Theoretical exponent: u: -3/4 - k/2, tau: -5/4 - k/2.
double target_exponent(Field f, int k);

inline constexpr double kFitTolerance = 0.05;

struct LogLogFit {
    double slope;
    double stderr_;
    std::size_t samples;
};

/// OLS of log(value) against log(1+t) over positive samples with t in [t_a, t_b].
/// Throws Error{WindowTooNarrow} if t_b/t_a < 100 or fewer than 3 samples fall inside.
LogLogFit fit_loglog(const std::vector<double>& times, const std::vector<double>& values, double t_a, double t_b);

struct ExponentFit {
    Field field;
    int k;
    double slope;
    double stderr_;
    double t_a;
    double t_b;
    double target;
    bool pass;
};

/// fit_loglog on one column of the series.
ExponentFit fit_exponent(const DecaySeries& s, Field f, int k, double t_a, double t_b,
                         double tolerance = kFitTolerance);

struct LowerRateResult {
    Field field;
    int k;
    double target;
    double infimum;          // inf_t norm(t) (1+t)^{-target}
    double refined_infimum;  // same on the nested refined grid
    double t_stable;         // earliest grid time after which the envelope stays within 10% of its final value
    bool stable;
    bool pass;
};

inline constexpr double kLowerRefinementTol = 0.05;

/// Lower envelope check over the supplied times (clipped below at t1_safe).
/// Throws Error{HypothesisViolated} when the data carry no velocity.
std::vector<LowerRateResult> lower_rate_check(const InitialSpec& init, const ModelParams& p, const TimeGrid& grid,
                                              const QuadratureSpec& q = {}, int jobs = 1);

void to_json(nlohmann::json& j, const InitialSpec& s);
void from_json(const nlohmann::json& j, InitialSpec& s);
void from_json(const nlohmann::json& j, QuadratureSpec& q);
void to_json(nlohmann::json& j, const QuadratureSpec& q);
void from_json(const nlohmann::json& j, TimeGrid& g);
void to_json(nlohmann::json& j, const ExponentFit& f);
void to_json(nlohmann::json& j, const LowerRateResult& r);

/// CSV: header `t,u_k0,u_k1,u_k2,u_k3,tau_k0,tau_k1,tau_k2`, 17 significant digits.
std::string to_csv(const DecaySeries& s);

}  // namespace oldroyd
