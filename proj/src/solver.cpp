#include "oldroyd/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>

#include <nlohmann/json.hpp>

#include "oldroyd/error.hpp"
#include "oldroyd/simd/kernels.hpp"

namespace oldroyd {

namespace {

constexpr bool kOffDiagonal[6] = {false, true, true, false, true, false};

// Uniform in [-1, 1) from the top 53 bits; mt19937_64 output is specified
// by the standard, so this is reproducible across platforms.
double uniform_pm1(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-52 - 1.0; }

void zero_outside_band(const SpectralGrid& g, Lattice& f) {
    for (std::size_t p = 0; p < g.size(); ++p)
        if (!g.kept(p)) f[p] = 0.0;
}

void tidy(SpectralState& s) {
    leray_project(s.grid, s.u);
    for (auto& c : s.u) {
        zero_outside_band(s.grid, c);
        enforce_conjugate_symmetry(s.grid, c);
    }
    for (auto& c : s.tau) {
        zero_outside_band(s.grid, c);
        enforce_conjugate_symmetry(s.grid, c);
    }
}

// a <- a + s b, componentwise over nine lattices
void axpy(std::array<Lattice, 3>& au, std::array<Lattice, 6>& at, double s, const std::array<Lattice, 3>& bu,
          const std::array<Lattice, 6>& bt) {
    for (int c = 0; c < 3; ++c)
        for (std::size_t f = 0; f < au[c].size(); ++f) au[c][f] += s * bu[c][f];
    for (int c = 0; c < 6; ++c)
        for (std::size_t f = 0; f < at[c].size(); ++f) at[c][f] += s * bt[c][f];
}

void put_le(std::ofstream& out, std::uint64_t bits) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_le(std::ifstream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw Error(ErrorCode::IoError, "truncated state file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t bits_of(double x) {
    std::uint64_t v;
    std::memcpy(&v, &x, 8);
    return v;
}

double double_of(std::uint64_t v) {
    double x;
    std::memcpy(&x, &v, 8);
    return x;
}

}  // namespace

SpectralState make_initial_state(const SpectralGrid& g, const InitialField& init) {
    if (init.k_max < 1 || init.k_max > g.n() / 3)
        throw Error(ErrorCode::ConfigError, "initial k_max must lie in [1, n/3]");
    SpectralState s(g);
    std::mt19937_64 rng(init.seed);
    const int kmax2 = init.k_max * init.k_max;
    const bool with_u = init.which != Components::TauOnly;
    const bool with_tau = init.which != Components::UOnly;
    for (std::size_t f = 0; f < g.size(); ++f) {
        const int m2 = g.m2(f);
        const std::size_t q = g.mirror(f);
        if (m2 == 0 || m2 > kmax2 || q < f) continue;
        for (int c = 0; c < 3; ++c) {
            const cplx v(uniform_pm1(rng), uniform_pm1(rng));
            s.u[c][f] = with_u ? v : 0.0;
        }
        for (int a = 0; a < 6; ++a) {
            const cplx v(uniform_pm1(rng), uniform_pm1(rng));
            s.tau[a][f] = with_tau ? v : 0.0;
        }
        for (int c = 0; c < 3; ++c) s.u[c][q] = std::conj(s.u[c][f]);
        for (int a = 0; a < 6; ++a) s.tau[a][q] = std::conj(s.tau[a][f]);
    }
    tidy(s);
    const double h3 = sobolev_norms(s).h3_total();
    if (h3 > 0.0) {
        const double scale = init.delta / std::sqrt(h3);
        for (auto& c : s.u)
            for (auto& v : c) v *= scale;
        for (auto& c : s.tau)
            for (auto& v : c) v *= scale;
    }
    return s;
}

std::array<RealField, 6> q_bilinear(const std::array<RealField, 9>& grad_u, const std::array<RealField, 6>& tau,
                                    double b) {
    const std::size_t N = tau[0].size();
    RealField zero(N, 0.0);
    std::array<RealField, 3> dummy_m1;
    std::array<RealField, 6> q;
    for (auto& c : dummy_m1) c.resize(N);
    for (auto& c : q) c.resize(N);
    simd::NonlinearInputs in{};
    simd::NonlinearOutputs out{};
    for (int i = 0; i < 3; ++i) in.u[i] = zero.data();
    for (int i = 0; i < 9; ++i) in.grad_u[i] = grad_u[i].data();
    for (int i = 0; i < 6; ++i) in.tau[i] = tau[i].data();
    for (int i = 0; i < 18; ++i) in.grad_tau[i] = zero.data();
    for (int i = 0; i < 3; ++i) out.m1[i] = dummy_m1[i].data();
    for (int i = 0; i < 6; ++i) out.m2[i] = q[i].data();
    simd::active_kernels().nonlinear(in, out, N, b);
    return q;
}

NonlinearTerms nonlinear_rhs(const SpectralState& s, const Fft3& fft, double b) {
    const SpectralGrid& g = s.grid;
    const std::size_t N = g.size();
    const PhysicalFields pf = to_physical(s, fft);

    std::array<RealField, 9> prod;
    for (auto& c : prod) c.resize(N);
    simd::NonlinearInputs in{};
    simd::NonlinearOutputs out{};
    for (int i = 0; i < 3; ++i) in.u[i] = pf.u[i].data();
    for (int i = 0; i < 9; ++i) in.grad_u[i] = pf.grad_u[i].data();
    for (int i = 0; i < 6; ++i) in.tau[i] = pf.tau[i].data();
    for (int i = 0; i < 18; ++i) in.grad_tau[i] = pf.grad_tau[i].data();
    for (int i = 0; i < 3; ++i) out.m1[i] = prod[i].data();
    for (int i = 0; i < 6; ++i) out.m2[i] = prod[3 + i].data();
    simd::active_kernels().nonlinear(in, out, N, b);

    NonlinearTerms nt;
    double speed2 = 0.0;
    for (std::size_t f = 0; f < N; ++f)
        speed2 = std::max(speed2, pf.u[0][f] * pf.u[0][f] + pf.u[1][f] * pf.u[1][f] + pf.u[2][f] * pf.u[2][f]);
    nt.max_speed = std::sqrt(speed2);

    std::vector<const RealField*> src;
    std::vector<Lattice*> dst;
    for (int i = 0; i < 3; ++i) {
        src.push_back(&prod[i]);
        dst.push_back(&nt.m1[i]);
    }
    for (int a = 0; a < 6; ++a) {
        src.push_back(&prod[3 + a]);
        dst.push_back(&nt.m2[a]);
    }
    real_fields_to_spectral(g, fft, src, dst);
    for (auto& c : nt.m1) zero_outside_band(g, c);
    for (auto& c : nt.m2) zero_outside_band(g, c);
    leray_project(g, nt.m1);
    return nt;
}

double cfl_limit(const SpectralGrid& g, double max_speed) {
    if (max_speed == 0.0) return std::numeric_limits<double>::infinity();
    return 0.5 * g.spacing() / max_speed;
}

LinearStep::LinearStep(const SpectralGrid& g, const ModelParams& p, double dt) : grid_(&g), params_(p), dt_(dt) {
    by_shell_.resize(static_cast<std::size_t>(g.max_m2()) + 1);
    std::vector<unsigned char> seen(by_shell_.size(), 0);
    for (std::size_t f = 0; f < g.size(); ++f) {
        const int m2 = g.m2(f);
        if (m2 == 0 || !g.kept(f) || seen[m2]) continue;
        seen[m2] = 1;
        by_shell_[m2] = utau_coefficients(std::sqrt(static_cast<double>(m2)) / g.box_scale(), dt, p);
    }
}

void LinearStep::apply(std::array<Lattice, 3>& u, std::array<Lattice, 6>& tau) const {
    const SpectralGrid& g = *grid_;
    const double zero_decay = std::exp(-params_.beta * dt_);
    for (std::size_t f = 0; f < g.size(); ++f) {
        if (!g.kept(f)) continue;
        const int m2 = g.m2(f);
        if (m2 == 0) {
            for (auto& c : tau) c[f] *= zero_decay;
            continue;
        }
        CVec3 uv{u[0][f], u[1][f], u[2][f]};
        SymTensor tv;
        for (int a = 0; a < 6; ++a) tv.v[a] = tau[a][f];
        apply_utau(g.xi(f), by_shell_[m2], uv, tv);
        for (int c = 0; c < 3; ++c) u[c][f] = uv[c];
        for (int a = 0; a < 6; ++a) tau[a][f] = tv.v[a];
    }
}

SpectralState propagate_linear(const SpectralState& s, double t, const ModelParams& p) {
    SpectralState out = s;
    out.time = s.time + t;
    for (std::size_t f = 0; f < s.grid.size(); ++f) {
        ModeState mode;
        mode.xi = s.grid.xi(f);
        for (int c = 0; c < 3; ++c) mode.u_hat[c] = s.u[c][f];
        for (int a = 0; a < 6; ++a) mode.tau_hat.v[a] = s.tau[a][f];
        if (s.grid.m2(f) == 0) {
            const auto [u, tau] = propagate_zero_mode(mode.u_hat, mode.tau_hat, t, p);
            for (int c = 0; c < 3; ++c) out.u[c][f] = u[c];
            for (int a = 0; a < 6; ++a) out.tau[a][f] = tau.v[a];
            continue;
        }
        const ModeState next = propagate_utau(mode, t, p);
        for (int c = 0; c < 3; ++c) out.u[c][f] = next.u_hat[c];
        for (int a = 0; a < 6; ++a) out.tau[a][f] = next.tau_hat.v[a];
    }
    return out;
}

Stepper::Stepper(const SpectralGrid& g, const ModelParams& p) : grid_(g), params_(validate(p).params), fft_(g.n()) {}

void Stepper::step(SpectralState& s, double dt) {
    if (!(dt > 0.0)) throw Error(ErrorCode::ConfigError, "dt must be > 0");
    NonlinearTerms n0 = nonlinear_rhs(s, fft_, params_.b);
    const double limit = cfl_limit(grid_, n0.max_speed);
    if (dt > limit) {
        char msg[128];
        std::snprintf(msg, sizeof msg, "dt = %.6g exceeds the advective limit %.6g", dt, limit);
        throw Error(ErrorCode::CflViolation, msg);
    }
    if (!linear_ || linear_->dt() != dt) linear_ = std::make_unique<LinearStep>(grid_, params_, dt);

    linear_->apply(s.u, s.tau);          // G U
    linear_->apply(n0.m1, n0.m2);        // G N(U)

    SpectralState pred = s;
    pred.time = s.time + dt;
    axpy(pred.u, pred.tau, dt, n0.m1, n0.m2);
    const NonlinearTerms n1 = nonlinear_rhs(pred, fft_, params_.b);

    axpy(s.u, s.tau, 0.5 * dt, n0.m1, n0.m2);
    axpy(s.u, s.tau, 0.5 * dt, n1.m1, n1.m2);
    s.time += dt;
    tidy(s);
}

std::vector<double> sample_times(const SolverConfig& c) {
    if (c.sample_count < 2) throw Error(ErrorCode::ConfigError, "sample_count must be >= 2");
    if (!(c.t_end > 0.0)) throw Error(ErrorCode::ConfigError, "t_end must be > 0");
    std::vector<double> t{0.0};
    const double a = std::log(c.t_end * 1e-3), b = std::log(c.t_end);
    for (int i = 0; i < c.sample_count; ++i) t.push_back(std::exp(a + (b - a) * i / (c.sample_count - 1)));
    t.back() = c.t_end;
    return t;
}

double relative_difference(const SpectralState& a, const SpectralState& b) {
    double num = 0.0, den = 0.0;
    for (int c = 0; c < 3; ++c)
        for (std::size_t f = 0; f < a.grid.size(); ++f) {
            num += std::norm(a.u[c][f] - b.u[c][f]);
            den += std::norm(b.u[c][f]);
        }
    for (int c = 0; c < 6; ++c) {
        const double w = kOffDiagonal[c] ? 2.0 : 1.0;
        for (std::size_t f = 0; f < a.grid.size(); ++f) {
            num += w * std::norm(a.tau[c][f] - b.tau[c][f]);
            den += w * std::norm(b.tau[c][f]);
        }
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::sqrt(num / den);
}

RunResult run(const SolverConfig& c, const SampleObserver& observer) {
    const SpectralGrid g(c.n, c.box_scale);
    return run_from(c, make_initial_state(g, InitialField{c.delta, c.seed, c.k_max, c.which}), observer);
}

RunResult run_from(const SolverConfig& c, SpectralState initial, const SampleObserver& observer) {
    if (!(c.dt_max > 0.0)) throw Error(ErrorCode::ConfigError, "dt_max must be > 0");
    Stepper stepper(initial.grid, c.params);
    const ModelParams& p = stepper.params();
    const double eps2 = default_eps2(p);
    const std::vector<double> times = sample_times(c);

    RunResult res{{}, {}, initial, initial};
    SpectralState& s = res.final_state;
    s.time = 0.0;

    const double h3_0 = sobolev_norms(s).h3_total();
    const double e0 = energy_E(s, p, eps2);
    double e_prev = e0;
    RunDiagnostics& d = res.diagnostics;
    d.max_h3_ratio = h3_0 > 0.0 ? 1.0 : 0.0;

    auto sample = [&] {
        res.records.push_back(monitor(s, stepper.fft(), p));
        if (observer) observer(s);
    };
    sample();

    for (std::size_t i = 1; i < times.size(); ++i) {
        const double target = times[i];
        while (s.time < target * (1.0 - 1e-13)) {
            const double dt = std::min(c.dt_max, target - s.time);
            stepper.step(s, dt);
            if (target - s.time < 1e-12 * target) s.time = target;
            ++d.steps;

            d.max_divergence = std::max(d.max_divergence, divergence_residual(s));
            for (const auto& comp : s.u) d.max_asymmetry = std::max(d.max_asymmetry, conjugate_asymmetry(s.grid, comp));
            for (const auto& comp : s.tau)
                d.max_tau_asymmetry = std::max(d.max_tau_asymmetry, conjugate_asymmetry(s.grid, comp));

            const double h3 = sobolev_norms(s).h3_total();
            if (!std::isfinite(h3)) throw Error(ErrorCode::BlowUp, "non-finite state");
            if (h3_0 > 0.0) {
                const double ratio = std::sqrt(h3 / h3_0);
                d.max_h3_ratio = std::max(d.max_h3_ratio, ratio);
                if (ratio > c.blowup_factor) throw Error(ErrorCode::BlowUp, "H3 norm exceeded blowup_factor x initial");
            }
            const double e = energy_E(s, p, eps2);
            if (e0 > 0.0) d.max_energy_increase = std::max(d.max_energy_increase, (e - e_prev) / e0);
            e_prev = e;
        }
        sample();
    }
    return res;
}

void write_state_binary(const SpectralState& s, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
    put_le(out, static_cast<std::uint64_t>(s.grid.n()));
    put_le(out, bits_of(s.grid.box_scale()));
    put_le(out, 9);
    auto dump = [&](const Lattice& l) {
        for (const cplx& v : l) {
            put_le(out, bits_of(v.real()));
            put_le(out, bits_of(v.imag()));
        }
    };
    for (const auto& c : s.u) dump(c);
    for (const auto& c : s.tau) dump(c);
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

SpectralState read_state_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    const auto n = static_cast<int>(get_le(in));
    const double L = double_of(get_le(in));
    if (get_le(in) != 9) throw Error(ErrorCode::IoError, "unexpected component count");
    SpectralState s(SpectralGrid(n, L));
    auto load = [&](Lattice& l) {
        for (cplx& v : l) {
            const double re = double_of(get_le(in));
            const double im = double_of(get_le(in));
            v = {re, im};
        }
    };
    for (auto& c : s.u) load(c);
    for (auto& c : s.tau) load(c);
    return s;
}

ConvergenceStudy convergence_study(const SolverConfig& c, double dt0, int levels, int reference_factor) {
    if (!(dt0 > 0.0) || levels < 2 || reference_factor < 2)
        throw Error(ErrorCode::ConfigError, "convergence study needs dt0 > 0, levels >= 2, reference_factor >= 2");
    validate(c.params);
    const SpectralGrid g(c.n, c.box_scale);
    const SpectralState init = make_initial_state(g, {c.delta, c.seed, c.k_max, c.which});
    if (std::abs(c.t_end / (dt0 / reference_factor) - std::round(c.t_end / (dt0 / reference_factor))) > 1e-9)
        throw Error(ErrorCode::ConfigError, "t_end must be a whole number of reference steps");
    auto integrate = [&](double dt) {
        Stepper st(g, c.params);
        SpectralState s = init;
        const long steps = std::lround(c.t_end / dt);
        for (long i = 0; i < steps; ++i) st.step(s, dt);
        return s;
    };
    const SpectralState ref = integrate(dt0 / reference_factor);
    ConvergenceStudy out;
    double dt = dt0;
    for (int l = 0; l < levels; ++l, dt *= 0.5) {
        out.dts.push_back(dt);
        out.errors.push_back(relative_difference(integrate(dt), ref));
        if (l > 0) out.ratios.push_back(out.errors[l - 1] / out.errors[l]);
    }
    out.nonlinear_effect = relative_difference(ref, propagate_linear(init, c.t_end, c.params));
    return out;
}

void from_json(const nlohmann::json& j, SolverConfig& c) {
    c = SolverConfig{};
    if (j.contains("n")) c.n = j.at("n").get<int>();
    if (j.contains("box_scale")) c.box_scale = j.at("box_scale").get<double>();
    if (j.contains("delta")) c.delta = j.at("delta").get<double>();
    if (j.contains("t_end")) c.t_end = j.at("t_end").get<double>();
    if (j.contains("dt_max")) c.dt_max = j.at("dt_max").get<double>();
    if (j.contains("sample_count")) c.sample_count = j.at("sample_count").get<int>();
    if (j.contains("params")) c.params = j.at("params").get<ModelParams>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("k_max")) c.k_max = j.at("k_max").get<int>();
    if (j.contains("blowup_factor")) c.blowup_factor = j.at("blowup_factor").get<double>();
    if (j.contains("which")) {
        InitialSpec tmp;
        from_json(nlohmann::json{{"which", j.at("which")}}, tmp);
        c.which = tmp.which;
    }
    if (!(c.delta >= 0.0)) throw Error(ErrorCode::ConfigError, "delta must be >= 0");
}

void to_json(nlohmann::json& j, const SolverConfig& c) {
    j = nlohmann::json{{"n", c.n},           {"box_scale", c.box_scale},       {"delta", c.delta},
                       {"t_end", c.t_end},   {"dt_max", c.dt_max},             {"sample_count", c.sample_count},
                       {"params", c.params}, {"seed", c.seed},                 {"k_max", c.k_max},
                       {"which", to_string(c.which)}, {"blowup_factor", c.blowup_factor}};
}

void to_json(nlohmann::json& j, const RunDiagnostics& d) {
    j = nlohmann::json{{"steps", d.steps},
                       {"max_divergence", d.max_divergence},
                       {"max_u_asymmetry", d.max_asymmetry},
                       {"max_tau_asymmetry", d.max_tau_asymmetry},
                       {"max_energy_increase", d.max_energy_increase},
                       {"max_h3_ratio", d.max_h3_ratio}};
}

void to_json(nlohmann::json& j, const ConvergenceStudy& c) {
    j = nlohmann::json{{"dts", c.dts}, {"errors", c.errors}, {"ratios", c.ratios}, {"nonlinear_effect", c.nonlinear_effect}};
}

std::string to_csv(const std::vector<MonitorRecord>& records) {
    std::string out = "t,u_k0,u_k1,u_k2,u_k3,tau_k0,tau_k1,tau_k2,H3_total,E_energy,entropy\n";
    char buf[64];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof buf, "%.17g", r.time);
        out += buf;
        for (double v : r.sobolev.u) {
            std::snprintf(buf, sizeof buf, ",%.17g", v);
            out += buf;
        }
        for (int k = 0; k < 3; ++k) {
            std::snprintf(buf, sizeof buf, ",%.17g", r.sobolev.tau[k]);
            out += buf;
        }
        std::snprintf(buf, sizeof buf, ",%.17g,%.17g", r.h3_total, r.energy_E);
        out += buf;
        if (r.entropy_defined) {
            std::snprintf(buf, sizeof buf, ",%.17g", r.entropy);
            out += buf;
        } else {
            out += ",nan";
        }
        out += '\n';
    }
    return out;
}

}  // namespace oldroyd
