#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "oldroyd/lindecay.hpp"
#include "oldroyd/model.hpp"
#include "oldroyd/monitor.hpp"
#include "oldroyd/spectral.hpp"

namespace oldroyd {

/// Random smooth data on the shells 1 <= |m|^2 <= k_max^2, zero mean,
/// divergence-free, real in physical space, scaled to ||(u, tau)||_{H^3} = delta.
struct InitialField {
    double delta = 1e-2;
    std::uint64_t seed = 1;
    int k_max = 2;
    Components which = Components::Both;
};

SpectralState make_initial_state(const SpectralGrid& g, const InitialField& init);

struct NonlinearTerms {
    std::array<Lattice, 3> m1;  // -P(u . grad u)
    std::array<Lattice, 6> m2;  // -u . grad tau + Q(grad u, tau)
    double max_speed = 0.0;     // max |u| on the physical grid
};

NonlinearTerms nonlinear_rhs(const SpectralState& s, const Fft3& fft, double b);

/// Pointwise Q(grad u, tau) on physical fields; grad_u[3 i + j] = d_j u_i.
std::array<RealField, 6> q_bilinear(const std::array<RealField, 9>& grad_u, const std::array<RealField, 6>& tau,
                                    double b);

/// 0.5 h / max|u|; infinite for u = 0.
double cfl_limit(const SpectralGrid& g, double max_speed);

/// Exact linear flow over a fixed dt, with coefficients cached per shell |m|^2.
class LinearStep {
public:
    LinearStep(const SpectralGrid& g, const ModelParams& p, double dt);

    double dt() const { return dt_; }
    void apply(std::array<Lattice, 3>& u, std::array<Lattice, 6>& tau) const;

private:
    const SpectralGrid* grid_;
    ModelParams params_;
    double dt_;
    std::vector<UTauCoefficients> by_shell_;  // indexed by |m|^2
};

/// Linear solution at time t from s (independent of LinearStep caching).
SpectralState propagate_linear(const SpectralState& s, double t, const ModelParams& p);

/// Exponential Heun: U* = G(U + dt N(U)), U' = G U + dt/2 [G N(U) + N(U*)].
class Stepper {
public:
    Stepper(const SpectralGrid& g, const ModelParams& p);

    /// Throws Error{CflViolation} when dt exceeds cfl_limit for the current state.
    void step(SpectralState& s, double dt);

    const Fft3& fft() const { return fft_; }
    const ModelParams& params() const { return params_; }

private:
    SpectralGrid grid_;
    ModelParams params_;
    Fft3 fft_;
    std::unique_ptr<LinearStep> linear_;
};

struct SolverConfig {
    int n = 32;
    double box_scale = 1.0;
    double delta = 1e-2;
    double t_end = 50.0;
    double dt_max = 0.05;
    int sample_count = 41;
    ModelParams params{0.0, 0.5, 1.0, 1.0, 1.0, 0.0};
    std::uint64_t seed = 1;
    int k_max = 2;
    Components which = Components::Both;
    double blowup_factor = 1e6;
};

/// Sample times: 0 followed by sample_count log-spaced points ending at t_end.
std::vector<double> sample_times(const SolverConfig& c);

struct RunDiagnostics {
    long steps = 0;
    double max_divergence = 0.0;
    double max_asymmetry = 0.0;
    double max_tau_asymmetry = 0.0;
    double max_energy_increase = 0.0;  // max_n (E_{n+1} - E_n) / E_0, clipped at 0
    double max_h3_ratio = 0.0;         // max_t sqrt(h3_total(t) / h3_total(0))
};

struct RunResult {
    std::vector<MonitorRecord> records;
    RunDiagnostics diagnostics;
    SpectralState initial;
    SpectralState final_state;
};

using SampleObserver = std::function<void(const SpectralState&)>;

/// Integrates to t_end. Throws Error{BlowUp | CflViolation}.
RunResult run(const SolverConfig& c, const SampleObserver& observer = {});

/// Same with explicit initial state (time taken from the state).
RunResult run_from(const SolverConfig& c, SpectralState initial, const SampleObserver& observer = {});

/// ||a - b|| / ||b|| over all nine components (L2 on the box).
double relative_difference(const SpectralState& a, const SpectralState& b);

/// Temporal self-convergence: errors of fixed-step runs with dt0, dt0/2, ...
/// against a run with dt0 / reference_factor, all to c.t_end on c's grid and data.
struct ConvergenceStudy {
    std::vector<double> dts;
    std::vector<double> errors;
    std::vector<double> ratios;  // errors[i - 1] / errors[i]
    double nonlinear_effect = 0.0;  // reference vs pure linear flow
};

ConvergenceStudy convergence_study(const SolverConfig& c, double dt0, int levels = 3, int reference_factor = 16);

/// Header: int64 n, float64 L, int64 component count; payload: for each
/// component the n^3 coefficients as interleaved (re, im) float64, little-endian.
void write_state_binary(const SpectralState& s, const std::string& path);
SpectralState read_state_binary(const std::string& path);

void from_json(const nlohmann::json& j, SolverConfig& c);
void to_json(nlohmann::json& j, const SolverConfig& c);
void to_json(nlohmann::json& j, const RunDiagnostics& d);
void to_json(nlohmann::json& j, const ConvergenceStudy& c);

/// Lindecay-style columns followed by H3_total,E_energy,entropy.
std::string to_csv(const std::vector<MonitorRecord>& records);

}  // namespace oldroyd
