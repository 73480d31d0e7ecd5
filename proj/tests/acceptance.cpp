// Acceptance run: one PASS/FAIL line per primary criterion. Exit status is
// zero only if every criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "oldroyd/bounds.hpp"
#include "oldroyd/error.hpp"
#include "oldroyd/lindecay.hpp"
#include "oldroyd/model.hpp"
#include "oldroyd/monitor.hpp"
#include "oldroyd/solver.hpp"
#include "oldroyd/symbols.hpp"
#include "support.hpp"

using namespace oldroyd;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

ModelParams with(double eps, double mu) {
    ModelParams p;
    p.epsilon = eps;
    p.mu = mu;
    return p;
}

const std::vector<ModelParams> kSets = {with(0.0, 0.5), with(0.5, 0.0), with(0.3, 0.3)};

std::vector<ExponentFit> all_fits(const ModelParams& p) {
    const DecaySeries s = decay_series(InitialSpec{}, p, TimeGrid{}.points());
    std::vector<ExponentFit> fits;
    for (int k = 0; k <= kMaxUOrder; ++k) fits.push_back(fit_exponent(s, Field::U, k, 1e2, 1e4));
    for (int k = 0; k <= kMaxTauOrder; ++k) fits.push_back(fit_exponent(s, Field::Tau, k, 1e2, 1e4));
    return fits;
}

Outcome exponents() {
    double worst = 0.0;
    bool ok = true;
    for (const auto& p : kSets)
        for (const auto& f : all_fits(p)) {
            worst = std::max(worst, std::abs(f.slope - f.target));
            ok = ok && f.pass;
        }
    return {ok, "21 fits on [1e2, 1e4], max |slope - target| = " + fmt("%.4f", worst) + " (tol 0.05)"};
}

Outcome independence() {
    auto spread = [](const std::vector<ModelParams>& sweep) {
        std::vector<std::vector<ExponentFit>> fits;
        for (const auto& p : sweep) fits.push_back(all_fits(p));
        double s = 0.0;
        for (std::size_t c = 0; c < fits[0].size(); ++c)
            for (const auto& a : fits)
                for (const auto& b : fits) s = std::max(s, std::abs(a[c].slope - b[c].slope));
        return s;
    };
    const double se = spread({with(0.0, 0.5), with(0.1, 0.5), with(1.0, 0.5)});
    const double sm = spread({with(0.5, 0.0), with(0.5, 0.1), with(0.5, 1.0)});
    return {se <= 0.02 && sm <= 0.02,
            "max pairwise spread: eps sweep " + fmt("%.4f", se) + ", mu sweep " + fmt("%.4f", sm) + " (tol 0.02)"};
}

Outcome lower_envelopes() {
    bool ok = true;
    double smallest = INFINITY;
    for (const auto& p : kSets) {
        for (const auto& r : lower_rate_check(InitialSpec{}, p, TimeGrid{0.0, 1e4, 41})) {
            const bool claimed = r.field == Field::U ? r.k <= 2 : r.k <= 1;
            if (!claimed) continue;
            ok = ok && r.pass && r.stable && r.infimum > 0.0;
            smallest = std::min(smallest, r.infimum);
        }
    }
    return {ok, "15 envelopes from t1_safe to 1e4, smallest infimum " + fmt("%.4g", smallest) +
                    ", all refinement-stable"};
}

Outcome symbol_bounds() {
    bool ok = true;
    double worst_upper = 0.0, worst_lower = INFINITY;
    int falsified = 0;
    for (const auto& p : kSets) {
        for (const auto& r : verify_upper_bounds(p, GridSpec{})) {
            ok = ok && r.pass;
            worst_upper = std::max(worst_upper, r.worst_ratio);
        }
        for (const auto& r : verify_lower_bounds(p, GridSpec{})) {
            ok = ok && r.pass;
            if (r.kind == BoundKind::Lower) worst_lower = std::min(worst_lower, r.worst_ratio);
        }
        ok = ok && verify_discriminant_window(p, 200).pass;

        BoundOptions shrink;
        shrink.k_scale = 0.01;
        const auto up = verify_upper_bounds(p, GridSpec{}, shrink);
        BoundOptions grow;
        grow.c1_scale = 100.0;
        const auto lo = verify_lower_bounds(p, GridSpec{}, grow);
        const bool up_fails = std::any_of(up.begin(), up.end(), [](const BoundReport& r) { return !r.pass; });
        const bool lo_fails = std::any_of(lo.begin(), lo.end(), [](const BoundReport& r) { return !r.pass; });
        falsified += up_fails + lo_fails;
    }
    return {ok && falsified == 6, "200x200 grids: max upper ratio " + fmt("%.3f", worst_upper) +
                                      ", min lower ratio " + fmt("%.3f", worst_lower) + ", falsification runs failing " +
                                      std::to_string(falsified) + "/6"};
}

Outcome propagator() {
    testing::Draw d(20240611);
    int counts[3] = {0, 0, 0};
    double worst_utau = 0.0, worst_usigma = 0.0, worst_group = 0.0, worst_diagram = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Regime want = static_cast<Regime>(i % 3);
        ModelParams p;
        ModeState m;
        for (;;) {
            p = testing::random_params(d);
            m = testing::random_mode(d, d.log_uniform(want == Regime::DistinctReal ? 0.02 : 0.1, 5.0));
            const double r = std::sqrt(testing::norm2(m.xi));
            if (want == Regime::NearDegenerate && !testing::tune_to_double_root(p, r)) continue;
            if (eigenvalues(r, p).regime == want) break;
        }
        const double r = std::sqrt(testing::norm2(m.xi));
        const double t = d.uniform(0.0, 10.0);
        ++counts[static_cast<int>(eigenvalues(r, p).regime)];

        const int steps = oracle_steps(r, t, p);
        worst_utau = std::max(worst_utau, testing::relative_error(propagate_utau(m, t, p), ode_oracle(m, t, p, steps)));

        CVec3 s0;
        for (auto& c : s0) c = d.complex_unit();
        const auto [u1, s1] = propagate_usigma(m.xi, t, m.u_hat, s0, p);
        const auto [u2, s2] = ode_oracle_usigma(m.xi, t, m.u_hat, s0, p, steps);
        worst_usigma = std::max(worst_usigma, testing::relative_error(u1, s1, u2, s2));

        const double ta = d.uniform(0.0, 5.0), tb = d.uniform(0.0, 5.0);
        worst_group = std::max(worst_group, testing::relative_error(propagate_utau(propagate_utau(m, ta, p), tb, p),
                                                                    propagate_utau(m, ta + tb, p)));

        const ModeState mt = propagate_utau(m, t, p);
        const auto [ud, sd] = propagate_usigma(m.xi, t, m.u_hat, tau_to_sigma(m), p);
        worst_diagram = std::max(worst_diagram, testing::relative_error(mt.u_hat, tau_to_sigma(mt), ud, sd));
    }
    const bool spans = counts[0] > 0 && counts[1] > 0 && counts[2] > 0;
    const bool ok = spans && worst_utau <= 1e-8 && worst_usigma <= 1e-8 && worst_group <= 1e-9 && worst_diagram <= 1e-9;
    return {ok, "1000 triples (real/near-degenerate/oscillatory " + std::to_string(counts[0]) + "/" +
                    std::to_string(counts[1]) + "/" + std::to_string(counts[2]) + "): utau " +
                    fmt("%.2e", worst_utau) + ", usigma " + fmt("%.2e", worst_usigma) + ", semigroup " +
                    fmt("%.2e", worst_group) + ", diagram " + fmt("%.2e", worst_diagram)};
}

// Monitor records of every solver run, for the inequality criterion.
std::vector<MonitorRecord> g_snapshots;

double entropy_rate_gap(const RunResult& r, double t_a, double t_b) {
    std::vector<double> t, e, tau;
    for (const auto& rec : r.records) {
        if (!rec.entropy_defined) return INFINITY;
        t.push_back(rec.time);
        e.push_back(rec.entropy);
        tau.push_back(rec.sobolev.tau[0]);
    }
    return std::abs(fit_loglog(t, e, t_a, t_b).slope - 2.0 * fit_loglog(t, tau, t_a, t_b).slope);
}

Outcome solver_properties() {
    // (a) linear regime
    SolverConfig lin;
    lin.n = 16;
    lin.delta = 1e-6;
    lin.t_end = 10.0;
    lin.sample_count = 21;
    const SpectralGrid g16(lin.n, lin.box_scale);
    const SpectralState init = make_initial_state(g16, {lin.delta, lin.seed, lin.k_max, lin.which});
    double worst_linear = 0.0;
    const RunResult ra = run_from(lin, init, [&](const SpectralState& s) {
        worst_linear = std::max(worst_linear, relative_difference(s, propagate_linear(init, s.time, lin.params)));
    });
    g_snapshots.insert(g_snapshots.end(), ra.records.begin(), ra.records.end());

    // (b) 32^3 small-data run
    const SolverConfig big;
    const RunResult rb = run(big);
    g_snapshots.insert(g_snapshots.end(), rb.records.begin(), rb.records.end());
    const RunDiagnostics& db = rb.diagnostics;
    const bool bounded = db.max_h3_ratio <= 1.05;
    const bool monotone = db.max_energy_increase <= 1e-8;

    // (c) temporal order
    SolverConfig conv;
    conv.n = 16;
    conv.delta = 1.0;
    conv.t_end = 2.0;
    conv.seed = 7;
    conv.params.b = 0.5;
    const ConvergenceStudy study = convergence_study(conv, 0.2, 3, 16);
    const bool second_order = std::all_of(study.ratios.begin(), study.ratios.end(),
                                          [](double q) { return q >= 3.5 && q <= 4.5; });
    conv.dt_max = 0.05;
    conv.sample_count = 11;
    const RunResult rc = run(conv);
    g_snapshots.insert(g_snapshots.end(), rc.records.begin(), rc.records.end());

    // (d) entropy against ||tau||^2
    const double gap = entropy_rate_gap(rb, 0.5, 50.0);

    const bool ok = worst_linear <= 1e-6 && bounded && monotone && second_order && gap <= 0.1;
    return {ok, "(a) linear rel diff " + fmt("%.2e", worst_linear) + "; (b) max H3 ratio " +
                    fmt("%.4f", db.max_h3_ratio) + ", max energy rise " + fmt("%.1e", db.max_energy_increase) +
                    "/E0 over " + std::to_string(db.steps) + " steps; (c) ratios " + fmt("%.3f", study.ratios[0]) +
                    ", " + fmt("%.3f", study.ratios[1]) + "; (d) entropy slope gap " + fmt("%.2e", gap)};
}

Outcome inequality_slacks() {
    double min_rel = INFINITY;
    bool ok = !g_snapshots.empty();
    for (const auto& r : g_snapshots) {
        ok = ok && r.inequalities.holds();
        for (const InequalitySlack* s :
             {&r.inequalities.transport_u, &r.inequalities.transport_tau, &r.inequalities.bilinear_q})
            if (s->rhs > 0.0) min_rel = std::min(min_rel, s->slack() / s->rhs);
    }
    return {ok, std::to_string(g_snapshots.size()) + " snapshots, smallest relative slack " + fmt("%.3f", min_rel)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"exponent reproduction", exponents},
        {"viscosity/diffusivity independence", independence},
        {"lower-bound envelopes", lower_envelopes},
        {"symbol bound suites", symbol_bounds},
        {"propagator correctness", propagator},
        {"nonlinear solver properties", solver_properties},
        {"inequality slacks", inequality_slacks},
    };
    int failures = 0;
    for (const auto& [name, fn] : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s  %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
        std::fflush(stdout);
        failures += !o.pass;
    }
    return failures == 0 ? 0 : 1;
}
