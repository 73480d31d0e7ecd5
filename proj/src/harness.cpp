#include "oldroyd/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <initializer_list>
#include <limits>

#include "oldroyd/bounds.hpp"
#include "oldroyd/error.hpp"
#include "oldroyd/io.hpp"
#include "oldroyd/lindecay.hpp"
#include "oldroyd/monitor.hpp"
#include "oldroyd/parallel.hpp"
#include "oldroyd/solver.hpp"

namespace oldroyd {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr double kIndependenceTolerance = 0.02;
constexpr double kBoundedFactor = 1.05;
constexpr double kEnergySlack = 1e-8;
constexpr double kStructureTolerance = 1e-10;
constexpr double kLinearAgreement = 1e-6;
constexpr double kEntropyRateTolerance = 0.1;
constexpr double kConvergenceLow = 3.5;
constexpr double kConvergenceHigh = 4.5;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void require_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw Error(ErrorCode::ConfigError, where + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; });
        if (!known) throw Error(ErrorCode::ConfigError, "unknown key '" + it.key() + "' in " + where);
    }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("bad value for '") + key + "': " + e.what());
    }
}

// Runs a from_json conversion and maps library type errors onto ConfigError.
template <class T>
T parse_section(const json& j, const char* key) {
    if (!j.contains(key)) return T{};
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("bad section '") + key + "': " + e.what());
    }
}

std::string set_name(std::size_t i) { return "set" + std::to_string(i); }

std::string column_name(Field f, int k) { return std::string(f == Field::U ? "u" : "tau") + "_k" + std::to_string(k); }

struct Context {
    std::filesystem::path out;
    int jobs;
    std::uint64_t seed;
    RunReport& report;

    std::string write(const std::string& name, const std::string& content) const {
        const std::string path = (out / name).string();
        write_text_file(path, content);
        report.files.push_back(path);
        return path;
    }
    void check(std::string name, bool pass, bool asserted, json detail = json::object()) const {
        report.checks.push_back({std::move(name), pass, asserted, std::move(detail)});
    }
};

std::pair<double, double> parse_window(const json& cfg, const char* key, double a, double b) {
    if (!cfg.contains(key)) return {a, b};
    const auto w = get_or<std::vector<double>>(cfg, key, {});
    if (w.size() != 2) throw Error(ErrorCode::ConfigError, std::string(key) + " must be [t_a, t_b]");
    return {w[0], w[1]};
}

std::vector<double> parse_times(const json& cfg) {
    if (cfg.contains("times") && cfg.at("times").is_array()) {
        const auto t = get_or<std::vector<double>>(cfg, "times", {});
        if (t.empty()) throw Error(ErrorCode::ConfigError, "empty time grid");
        return t;
    }
    return parse_section<TimeGrid>(cfg, "times").points();
}

void cmd_constants(const json& cfg, const Context& ctx) {
    require_keys(cfg, {"params", "sweep", "seed", "output_dir"}, "constants config");
    const auto sweep = parse_sweep(cfg, default_sweep());
    json records = json::array();
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        const ValidatedParams v = validate(sweep[i]);
        const DerivedConstants c = derive_constants(v.params);
        records.push_back({{"params", v.params}, {"case", to_string(v.dissipation)}, {"constants", c}});
        const bool ok = c.R > 0.0 && c.R <= 1.0 && c.theta > 0.0 && c.K >= 1.0 && c.eta >= c.theta && c.c1 > 0.0 &&
                        c.c1 <= 1.0 && c.t1 > 0.0 && c.t1_safe >= c.t1;
        ctx.check(set_name(i) + "/constant_ranges", ok, true, {{"constants", c}});
    }
    ctx.report.results["records"] = records;
    ctx.report.config["sweep"] = sweep;
    ctx.write("constants.json", dump_json(records) + "\n");
}

void cmd_verify_bounds(const json& cfg, const Context& ctx) {
    require_keys(cfg, {"params", "sweep", "seed", "output_dir", "grid", "debug"}, "verify-bounds config");
    const auto sweep = parse_sweep(cfg, default_sweep());
    const GridSpec grid = parse_section<GridSpec>(cfg, "grid");
    BoundOptions opt;
    if (cfg.contains("debug")) {
        const json& d = cfg.at("debug");
        require_keys(d, {"k_scale", "c1_scale"}, "debug");
        opt.k_scale = get_or(d, "k_scale", 1.0);
        opt.c1_scale = get_or(d, "c1_scale", 1.0);
    }
    BoundOptions probe = opt;
    probe.use_published_t1 = true;

    struct Entry {
        std::vector<BoundReport> upper, lower, probe;
        BoundReport window;
        double seconds;
    };
    std::vector<Entry> entries(sweep.size());
    parallel_for(sweep.size(), ctx.jobs, [&](std::size_t i) {
        const auto t0 = Clock::now();
        Entry& e = entries[i];
        e.upper = verify_upper_bounds(sweep[i], grid, opt);
        e.lower = verify_lower_bounds(sweep[i], grid, opt);
        e.probe = verify_lower_bounds(sweep[i], grid, probe);
        e.window = verify_discriminant_window(sweep[i], grid.r_count);
        e.seconds = seconds_since(t0);
    });

    json records = json::array();
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        const Entry& e = entries[i];
        const std::string s = set_name(i);
        for (const auto& r : e.upper) ctx.check(s + "/" + r.bound_name, r.pass, true, r);
        for (const auto& r : e.lower) ctx.check(s + "/" + r.bound_name, r.pass, true, r);
        ctx.check(s + "/" + e.window.bound_name, e.window.pass, true, e.window);
        for (const auto& r : e.probe) ctx.check(s + "/published_t1/" + r.bound_name, r.pass, false, r);
        records.push_back({{"params", sweep[i]},
                           {"constants", derive_constants(sweep[i])},
                           {"upper", e.upper},
                           {"lower", e.lower},
                           {"discriminant_window", e.window},
                           {"published_t1_probe", e.probe}});
        ctx.report.timings[s] = e.seconds;
    }
    ctx.report.config["sweep"] = sweep;
    ctx.report.config["grid"] = grid;
    ctx.report.config["debug"] = {{"k_scale", opt.k_scale}, {"c1_scale", opt.c1_scale}};
    ctx.report.results["records"] = records;
    ctx.write("bounds.json", dump_json(records) + "\n");
}

void cmd_linear_decay(const json& cfg, const Context& ctx) {
    require_keys(cfg,
                 {"params", "sweep", "seed", "output_dir", "initial", "quadrature", "times", "window", "independence"},
                 "linear-decay config");
    const auto sweep = parse_sweep(cfg, default_sweep());
    const InitialSpec init = parse_section<InitialSpec>(cfg, "initial");
    const QuadratureSpec quad = parse_section<QuadratureSpec>(cfg, "quadrature");
    const std::vector<double> times = parse_times(cfg);
    const auto [t_a, t_b] = parse_window(cfg, "window", 1e2, 1e4);
    std::optional<double> independence;
    if (cfg.contains("independence")) {
        const json& ind = cfg.at("independence");
        if (ind.is_boolean()) {
            if (ind.get<bool>()) independence = kIndependenceTolerance;
        } else {
            require_keys(ind, {"tolerance"}, "independence");
            independence = get_or(ind, "tolerance", kIndependenceTolerance);
        }
    }

    std::vector<DecaySeries> series(sweep.size());
    std::vector<double> secs(sweep.size());
    parallel_for(sweep.size(), ctx.jobs, [&](std::size_t i) {
        const auto t0 = Clock::now();
        series[i] = decay_series(init, sweep[i], times, quad, 1);
        secs[i] = seconds_since(t0);
    });

    std::vector<std::vector<ExponentFit>> fits(sweep.size());
    json records = json::array();
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        const std::string s = set_name(i);
        const std::string csv = ctx.write("decay_" + s + ".csv", to_csv(series[i]));
        for (int k = 0; k <= kMaxUOrder; ++k) fits[i].push_back(fit_exponent(series[i], Field::U, k, t_a, t_b));
        for (int k = 0; k <= kMaxTauOrder; ++k) fits[i].push_back(fit_exponent(series[i], Field::Tau, k, t_a, t_b));
        for (const auto& f : fits[i]) ctx.check(s + "/fit/" + column_name(f.field, f.k), f.pass, true, f);

        // tau/u ratio should be decreasing over the fit window
        bool decreasing = true;
        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t n = 0; n < series[i].times.size(); ++n) {
            const double t = series[i].times[n];
            if (t < t_a || t > t_b) continue;
            const double ratio = series[i].at(n, Field::Tau, 0) / series[i].at(n, Field::U, 0);
            if (ratio > prev) decreasing = false;
            prev = ratio;
        }
        ctx.check(s + "/tau_over_u_decreasing", decreasing, false);
        records.push_back({{"params", sweep[i]}, {"fits", fits[i]}, {"csv", csv}});
        ctx.report.timings[s] = secs[i];
    }

    if (independence) {
        const std::size_t cols = fits.empty() ? 0 : fits[0].size();
        for (std::size_t c = 0; c < cols; ++c) {
            double spread = 0.0;
            for (const auto& a : fits)
                for (const auto& b : fits) spread = std::max(spread, std::abs(a[c].slope - b[c].slope));
            ctx.check("independence/" + column_name(fits[0][c].field, fits[0][c].k), spread <= *independence, true,
                      {{"max_pairwise_difference", spread}, {"tolerance", *independence}});
        }
    }
    ctx.report.config["sweep"] = sweep;
    ctx.report.config["initial"] = init;
    ctx.report.config["quadrature"] = quad;
    ctx.report.config["times"] = times;
    ctx.report.config["window"] = {t_a, t_b};
    if (independence) ctx.report.config["independence"] = {{"tolerance", *independence}};
    ctx.report.results["records"] = records;
}

void cmd_lower_bounds(const json& cfg, const Context& ctx) {
    require_keys(cfg, {"params", "sweep", "seed", "output_dir", "initial", "quadrature", "times"},
                 "lower-bounds config");
    const auto sweep = parse_sweep(cfg, default_sweep());
    const InitialSpec init = parse_section<InitialSpec>(cfg, "initial");
    const QuadratureSpec quad = parse_section<QuadratureSpec>(cfg, "quadrature");
    const TimeGrid grid = parse_section<TimeGrid>(cfg, "times");

    std::vector<std::vector<LowerRateResult>> results(sweep.size());
    std::vector<double> secs(sweep.size());
    parallel_for(sweep.size(), ctx.jobs, [&](std::size_t i) {
        const auto t0 = Clock::now();
        results[i] = lower_rate_check(init, sweep[i], grid, quad, 1);
        secs[i] = seconds_since(t0);
    });

    json records = json::array();
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        const std::string s = set_name(i);
        for (const auto& r : results[i]) {
            // the claimed lower rates cover u up to k = 2 and tau up to k = 1
            const bool asserted = r.field == Field::U ? r.k <= 2 : r.k <= 1;
            ctx.check(s + "/lower/" + column_name(r.field, r.k), r.pass, asserted, r);
        }
        records.push_back({{"params", sweep[i]}, {"t1_safe", derive_constants(sweep[i]).t1_safe}, {"results", results[i]}});
        ctx.report.timings[s] = secs[i];
    }
    ctx.report.config["sweep"] = sweep;
    ctx.report.config["initial"] = init;
    ctx.report.config["quadrature"] = quad;
    ctx.report.config["times"] = {{"t_min", grid.t_min}, {"t_max", grid.t_max}, {"count", grid.count}};
    ctx.report.results["records"] = records;
    ctx.write("lower_bounds.json", dump_json(records) + "\n");
}

SolverConfig parse_solver(const json& cfg, const char* key) {
    if (!cfg.contains(key)) return SolverConfig{};
    const json& j = cfg.at(key);
    require_keys(j, {"n", "box_scale", "delta", "t_end", "dt_max", "sample_count", "k_max", "which", "blowup_factor"},
                 key);
    try {
        return j.get<SolverConfig>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("bad section '") + key + "': " + e.what());
    }
}

void run_convergence(const json& cj, const ModelParams& fallback, const Context& ctx) {
    require_keys(cj,
                 {"n", "box_scale", "delta", "t_end", "k_max", "which", "params", "seed", "dt0", "levels",
                  "reference_factor"},
                 "convergence");
    SolverConfig c;
    try {
        json base = cj;
        for (const char* k : {"params", "seed", "dt0", "levels", "reference_factor"}) base.erase(k);
        c = base.get<SolverConfig>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("bad section 'convergence': ") + e.what());
    }
    c.params = cj.contains("params") ? parse_sweep(json{{"params", cj.at("params")}}, {})[0] : fallback;
    c.seed = get_or<std::uint64_t>(cj, "seed", ctx.seed);
    const double dt0 = get_or(cj, "dt0", 0.2);
    const int levels = get_or(cj, "levels", 3);
    const int ref = get_or(cj, "reference_factor", 16);

    const auto t0 = Clock::now();
    const ConvergenceStudy study = convergence_study(c, dt0, levels, ref);
    ctx.report.timings["convergence"] = seconds_since(t0);
    const bool ok = std::all_of(study.ratios.begin(), study.ratios.end(),
                                [](double r) { return r >= kConvergenceLow && r <= kConvergenceHigh; });
    ctx.check("convergence/second_order", ok, true, study);
    json echo = c;
    echo["dt0"] = dt0;
    echo["levels"] = levels;
    echo["reference_factor"] = ref;
    ctx.report.config["convergence"] = echo;
    ctx.report.results["convergence"] = study;
}

void cmd_simulate(const json& cfg, const Context& ctx) {
    require_keys(cfg,
                 {"params", "sweep", "seed", "output_dir", "solver", "linear_check", "entropy_window", "convergence"},
                 "simulate config");
    const auto sweep = parse_sweep(cfg, {SolverConfig{}.params});
    SolverConfig base = parse_solver(cfg, "solver");
    base.seed = ctx.seed;
    const auto [w_a, w_b] = parse_window(cfg, "entropy_window", base.t_end / 100.0, base.t_end);
    std::optional<double> linear_tol;
    if (cfg.contains("linear_check")) {
        const json& lc = cfg.at("linear_check");
        if (lc.is_boolean()) {
            if (lc.get<bool>()) linear_tol = kLinearAgreement;
        } else {
            require_keys(lc, {"tolerance"}, "linear_check");
            linear_tol = get_or(lc, "tolerance", kLinearAgreement);
        }
    }

    json records = json::array();
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        const std::string s = set_name(i);
        SolverConfig c = base;
        c.params = sweep[i];
        const SpectralGrid grid(c.n, c.box_scale);
        const SpectralState initial = make_initial_state(grid, {c.delta, c.seed, c.k_max, c.which});

        double worst_linear = 0.0;
        SampleObserver observer;
        if (linear_tol) {
            observer = [&](const SpectralState& st) {
                const SpectralState lin = propagate_linear(initial, st.time, c.params);
                const double d = relative_difference(st, lin);
                worst_linear = std::max(worst_linear, std::isfinite(d) ? d : 0.0);
            };
        }
        const auto t0 = Clock::now();
        const RunResult res = run_from(c, initial, observer);
        ctx.report.timings[s] = seconds_since(t0);

        const RunDiagnostics& d = res.diagnostics;
        ctx.check(s + "/bounded", d.max_h3_ratio <= kBoundedFactor, true,
                  {{"max_h3_ratio", d.max_h3_ratio}, {"limit", kBoundedFactor}});
        ctx.check(s + "/energy_nonincreasing", d.max_energy_increase <= kEnergySlack, true,
                  {{"max_energy_increase", d.max_energy_increase}, {"slack", kEnergySlack}});
        ctx.check(s + "/structure",
                  d.max_divergence <= kStructureTolerance && d.max_asymmetry <= kStructureTolerance &&
                      d.max_tau_asymmetry <= kStructureTolerance,
                  true, d);

        json slacks = json::array();
        bool all_hold = true;
        for (const auto& r : res.records) {
            all_hold = all_hold && r.inequalities.holds();
            slacks.push_back({{"time", r.time},
                              {"transport_u", r.inequalities.transport_u.slack()},
                              {"transport_tau", r.inequalities.transport_tau.slack()},
                              {"bilinear_q", r.inequalities.bilinear_q.slack()}});
        }
        ctx.check(s + "/inequality_slacks", all_hold, true, {{"snapshots", res.records.size()}});

        std::vector<double> ts, ent, tau0;
        bool entropy_defined = true;
        for (const auto& r : res.records) {
            entropy_defined = entropy_defined && r.entropy_defined;
            ts.push_back(r.time);
            ent.push_back(r.entropy);
            tau0.push_back(r.sobolev.tau[0]);
        }
        if (entropy_defined && tau0.back() > 0.0) {
            const LogLogFit fe = fit_loglog(ts, ent, w_a, w_b);
            const LogLogFit ft = fit_loglog(ts, tau0, w_a, w_b);
            const double gap = std::abs(fe.slope - 2.0 * ft.slope);
            ctx.check(s + "/entropy_rate", gap <= kEntropyRateTolerance, true,
                      {{"entropy_slope", fe.slope},
                       {"tau_l2_slope", ft.slope},
                       {"difference", gap},
                       {"window", {w_a, w_b}},
                       {"tolerance", kEntropyRateTolerance}});
        } else {
            ctx.check(s + "/entropy_rate", false, false, {{"reason", "entropy undefined or zero stress"}});
        }
        const MonitorRecord& last = res.records.back();
        ctx.check(s + "/tau_below_u_at_end", last.sobolev.tau[0] < last.sobolev.u[0], false,
                  {{"u_l2", last.sobolev.u[0]}, {"tau_l2", last.sobolev.tau[0]}});
        if (linear_tol)
            ctx.check(s + "/linear_agreement", worst_linear <= *linear_tol, true,
                      {{"max_relative_difference", worst_linear}, {"tolerance", *linear_tol}});

        const std::string csv = ctx.write("simulate_" + s + ".csv", to_csv(res.records));
        const std::string mon = ctx.write("monitor_" + s + ".json", dump_json(json(res.records)) + "\n");
        const std::string bin = (ctx.out / ("state_" + s + ".bin")).string();
        write_state_binary(res.final_state, bin);
        ctx.report.files.push_back(bin);
        records.push_back({{"params", c.params},
                           {"diagnostics", d},
                           {"slacks", slacks},
                           {"final", last},
                           {"csv", csv},
                           {"monitor", mon}});
    }
    json echo = base;
    echo.erase("params");
    ctx.report.config["sweep"] = sweep;
    ctx.report.config["solver"] = echo;
    ctx.report.config["entropy_window"] = {w_a, w_b};
    if (linear_tol) ctx.report.config["linear_check"] = {{"tolerance", *linear_tol}};
    ctx.report.results["records"] = records;

    if (cfg.contains("convergence")) run_convergence(cfg.at("convergence"), sweep.front(), ctx);
}

}  // namespace

const char* to_string(Command c) {
    switch (c) {
        case Command::Constants: return "constants";
        case Command::VerifyBounds: return "verify-bounds";
        case Command::LinearDecay: return "linear-decay";
        case Command::LowerBounds: return "lower-bounds";
        case Command::Simulate: return "simulate";
    }
    return "?";
}

Command parse_command(std::string_view name) {
    for (Command c : {Command::Constants, Command::VerifyBounds, Command::LinearDecay, Command::LowerBounds,
                      Command::Simulate})
        if (name == to_string(c)) return c;
    throw Error(ErrorCode::ConfigError, "unknown command '" + std::string(name) + "'");
}

bool RunReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return !c.asserted || c.pass; });
}

std::vector<ModelParams> default_sweep() {
    return {{0.0, 0.5, 1.0, 1.0, 1.0, 0.0}, {0.5, 0.0, 1.0, 1.0, 1.0, 0.0}, {0.3, 0.3, 1.0, 1.0, 1.0, 0.0}};
}

std::vector<ModelParams> parse_sweep(const json& config, const std::vector<ModelParams>& fallback) {
    if (config.contains("params") && config.contains("sweep"))
        throw Error(ErrorCode::ConfigError, "give either 'params' or 'sweep', not both");
    std::vector<ModelParams> out;
    if (config.contains("params")) {
        out.push_back(config.at("params").get<ModelParams>());
    } else if (config.contains("sweep")) {
        const json& s = config.at("sweep");
        if (!s.is_array()) throw Error(ErrorCode::ConfigError, "'sweep' must be an array of parameter sets");
        for (const auto& e : s) out.push_back(e.get<ModelParams>());
        if (out.empty()) throw Error(ErrorCode::ConfigError, "'sweep' is empty");
    } else {
        out = fallback;
    }
    for (auto& p : out) p = validate(p).params;
    return out;
}

RunReport run_command(Command cmd, const json& config, const RunOptions& opt) {
    const auto t0 = Clock::now();
    if (!config.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
    RunReport report;
    report.command = cmd;
    report.timings = json::object();
    report.results = json::object();

    std::string out = opt.output_dir;
    if (out.empty()) out = get_or<std::string>(config, "output_dir", "out");
    if (out.empty()) throw Error(ErrorCode::ConfigError, "output_dir is empty");
    const std::uint64_t seed = opt.seed ? *opt.seed : get_or<std::uint64_t>(config, "seed", 1);
    ensure_directory(out);

    report.config = {{"command", to_string(cmd)}, {"output_dir", out}, {"seed", seed}, {"jobs", opt.jobs}};
    const Context ctx{out, std::max(1, opt.jobs), seed, report};
    switch (cmd) {
        case Command::Constants: cmd_constants(config, ctx); break;
        case Command::VerifyBounds: cmd_verify_bounds(config, ctx); break;
        case Command::LinearDecay: cmd_linear_decay(config, ctx); break;
        case Command::LowerBounds: cmd_lower_bounds(config, ctx); break;
        case Command::Simulate: cmd_simulate(config, ctx); break;
    }
    report.timings["total"] = seconds_since(t0);
    const std::string path = (std::filesystem::path(out) / "report.json").string();
    report.files.push_back(path);
    write_text_file(path, dump_json(json(report)) + "\n");
    return report;
}

void to_json(json& j, const RunReport& r) {
    json checks = json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"name", c.name}, {"pass", c.pass}, {"asserted", c.asserted}, {"detail", c.detail}});
    j = json{{"command", to_string(r.command)}, {"config", r.config},   {"passed", r.passed()},
             {"checks", checks},                {"results", r.results}, {"files", r.files},
             {"timings", r.timings}};
}

std::string format_checks(const RunReport& r) {
    std::string out;
    for (const auto& c : r.checks) {
        const char* tag = c.asserted ? (c.pass ? "PASS" : "FAIL") : (c.pass ? "pass" : "fail");
        out += std::string(tag) + "  " + c.name + (c.asserted ? "" : "  (informational)") + "\n";
    }
    return out;
}

}  // namespace oldroyd
