#include "oldroyd/lindecay.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include <nlohmann/json.hpp>

#include "oldroyd/error.hpp"
#include "oldroyd/parallel.hpp"
#include "oldroyd/quadrature.hpp"

namespace oldroyd {

namespace {

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

// Unit projection of `a` onto the plane orthogonal to unit n; zero on the ray.
Vec3 transverse_unit(const Vec3& n, const Vec3& a) {
    const double an = dot(a, n);
    Vec3 v{a[0] - an * n[0], a[1] - an * n[1], a[2] - an * n[2]};
    const double len = std::sqrt(dot(v, v));
    if (len == 0.0) return {0.0, 0.0, 0.0};
    for (double& x : v) x /= len;
    return v;
}

double sym_entry(const std::array<double, 6>& t, int j, int k) { return t[SymTensor::index(j, k)]; }

// Direction-only angular moments; the radial/time dependence factors out of
// |u_hat|^2 and |tau_hat|_F^2 exactly (real and imaginary parts separate).
struct AngularMoments {
    double u_dir = 0.0;      // int |a_perp|^2
    double v_dir = 0.0;      // int |P(n) T n|^2
    double t_self = 0.0;     // int |T|^2
    double t_cross = 0.0;    // int <T, n (x) v + v (x) n>
    double s_tau = 0.0;      // int |n (x) v + v (x) n|^2
    double s_u = 0.0;        // int |n (x) a_perp + a_perp (x) n|^2
};

AngularMoments angular_moments(const InitialSpec& init, const QuadratureSpec& q) {
    const quad::SphereRule sphere = quad::sphere_product(q.polar_nodes, q.azimuth_nodes);
    const auto& T = init.tau_template;
    AngularMoments m;
    for (std::size_t i = 0; i < sphere.weights.size(); ++i) {
        const Vec3& n = sphere.directions[i];
        const double w = sphere.weights[i];
        const Vec3 a = transverse_unit(n, init.reference);

        Vec3 tn{};
        for (int j = 0; j < 3; ++j)
            for (int l = 0; l < 3; ++l) tn[j] += sym_entry(T, j, l) * n[l];
        const double ntn = dot(n, tn);
        const Vec3 v{tn[0] - ntn * n[0], tn[1] - ntn * n[1], tn[2] - ntn * n[2]};

        double t_self = 0.0, t_cross = 0.0, s_tau = 0.0, s_u = 0.0;
        for (int j = 0; j < 3; ++j) {
            for (int k = 0; k < 3; ++k) {
                const double tjk = sym_entry(T, j, k);
                const double sv = n[j] * v[k] + v[j] * n[k];
                const double sa = n[j] * a[k] + a[j] * n[k];
                t_self += tjk * tjk;
                t_cross += tjk * sv;
                s_tau += sv * sv;
                s_u += sa * sa;
            }
        }
        m.u_dir += w * dot(a, a);
        m.v_dir += w * dot(v, v);
        m.t_self += w * t_self;
        m.t_cross += w * t_cross;
        m.s_tau += w * s_tau;
        m.s_u += w * s_u;
    }
    return m;
}

// Angular integrals of |u_hat|^2 and |tau_hat|^2 on the shell |xi| = r.
std::array<double, 2> shell_power(double r, double t, const InitialSpec& init, const ModelParams& p,
                                  const AngularMoments& m) {
    const UTauCoefficients c = utau_coefficients(r, t, p);
    const double phi = init.profile(r);
    const double phi2 = phi * phi;
    const double hu = init.has_u() ? 1.0 : 0.0;
    const double ht = init.has_tau() ? 1.0 : 0.0;
    const double r2 = r * r;
    const double pu = hu * c.uu * c.uu * m.u_dir + ht * c.ut * c.ut * r2 * m.v_dir;
    const double pt = ht * (c.decay * c.decay * m.t_self - 2.0 * c.decay * c.tt * m.t_cross + c.tt * c.tt * m.s_tau) +
                      hu * c.tu * c.tu * r2 * m.s_u;
    return {phi2 * pu, phi2 * pt};
}

NormRow radial_integrands(double r, double t, const InitialSpec& init, const ModelParams& p,
                          const AngularMoments& m) {
    const auto power = shell_power(r, t, init, p, m);
    NormRow row{};
    double w = r * r;
    for (int k = 0; k <= kMaxUOrder; ++k) {
        row[column(Field::U, k)] = w * power[0];
        if (k <= kMaxTauOrder) row[column(Field::Tau, k)] = w * power[1];
        w *= r * r;
    }
    return row;
}

// Support of the integrands: scan a log grid and keep everything above
// cutoff * max for any non-trivial column.
std::vector<double> radial_breaks(double t, const InitialSpec& init, const ModelParams& p, const AngularMoments& m,
                                  const QuadratureSpec& q, int panels, double split) {
    const double r_scan_lo = 1e-8;
    const double r_scan_hi = 12.0 * init.width + 1.0;
    constexpr int scan_count = 800;
    const double step = std::log(r_scan_hi / r_scan_lo) / (scan_count - 1);

    std::vector<NormRow> vals(scan_count);
    std::vector<double> rs(scan_count);
    NormRow peak{};
    for (int i = 0; i < scan_count; ++i) {
        rs[i] = r_scan_lo * std::exp(step * i);
        vals[i] = radial_integrands(rs[i], t, init, p, m);
        for (int c = 0; c < 7; ++c) peak[c] = std::max(peak[c], vals[i][c]);
    }
    double lo = r_scan_hi, hi = 0.0;
    for (int c = 0; c < 7; ++c) {
        if (!(peak[c] > 0.0)) continue;
        for (int i = 0; i < scan_count; ++i) {
            if (vals[i][c] > q.cutoff * peak[c]) {
                lo = std::min(lo, rs[std::max(i - 1, 0)]);
                break;
            }
        }
        for (int i = scan_count - 1; i >= 0; --i) {
            if (vals[i][c] > q.cutoff * peak[c]) {
                hi = std::max(hi, rs[std::min(i + 1, scan_count - 1)]);
                break;
            }
        }
    }
    if (hi <= 0.0) return {};
    lo = std::min(lo, 0.5 * hi);

    std::vector<double> breaks{0.0};
    const double ratio = std::log(hi / lo) / panels;
    for (int i = 0; i <= panels; ++i) breaks.push_back(lo * std::exp(ratio * i));
    breaks.back() = hi;
    if (split > lo && split < hi) {
        breaks.push_back(split);
        std::sort(breaks.begin(), breaks.end());
    }
    return breaks;
}

NormRow integrate(double t, const InitialSpec& init, const ModelParams& p, const AngularMoments& m,
                  const QuadratureSpec& q, int panels, double split) {
    NormRow sums{};
    const auto breaks = radial_breaks(t, init, p, m, q, panels, split);
    if (breaks.empty()) return sums;
    const quad::Rule rule = quad::composite(quad::gauss_legendre(q.nodes_per_panel), breaks);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const NormRow f = radial_integrands(rule.nodes[i], t, init, p, m);
        for (int c = 0; c < 7; ++c) sums[c] += rule.weights[i] * f[c];
    }
    return sums;
}

}  // namespace

const char* to_string(Field f) { return f == Field::U ? "u" : "tau"; }

const char* to_string(Components c) {
    switch (c) {
        case Components::UOnly: return "u-only";
        case Components::TauOnly: return "tau-only";
        case Components::Both: return "both";
    }
    return "?";
}

double InitialSpec::profile(double r) const { return amplitude * std::exp(-(r * r) / (width * width)); }

CVec3 InitialSpec::u0(const Vec3& xi) const {
    CVec3 out{};
    if (!has_u()) return out;
    const double r = std::sqrt(dot(xi, xi));
    if (r == 0.0) return out;
    const Vec3 n{xi[0] / r, xi[1] / r, xi[2] / r};
    const Vec3 a = transverse_unit(n, reference);
    const double phi = profile(r);
    for (int j = 0; j < 3; ++j) out[j] = a[j] * phi;
    return out;
}

SymTensor InitialSpec::tau0(const Vec3& xi) const {
    SymTensor out;
    if (!has_tau()) return out;
    const double phi = profile(std::sqrt(dot(xi, xi)));
    for (int i = 0; i < 6; ++i) out.v[i] = tau_template[i] * phi;
    return out;
}

NormRow linear_norms(double t, const InitialSpec& init, const ModelParams& p, const QuadratureSpec& q) {
    const AngularMoments m = angular_moments(init, q);
    const double split = derive_constants(p).R;
    NormRow sq = integrate(t, init, p, m, q, q.radial_panels, split);
    if (q.check_convergence) {
        const NormRow fine = integrate(t, init, p, m, q, 2 * q.radial_panels, split);
        for (int c = 0; c < 7; ++c) {
            const double scale = std::max(std::abs(fine[c]), std::numeric_limits<double>::min());
            if (std::abs(fine[c] - sq[c]) > q.convergence_tol * scale && fine[c] != 0.0) {
                throw Error(ErrorCode::QuadratureNotConverged,
                            "radial panel doubling changed column " + std::to_string(c) + " at t=" +
                                std::to_string(t) + " by more than the tolerance");
            }
        }
        sq = fine;
    }
    NormRow out;
    for (int c = 0; c < 7; ++c) out[c] = std::sqrt(std::max(sq[c], 0.0));
    return out;
}

double linear_norm(int k, double t, Field field, const InitialSpec& init, const ModelParams& p,
                   const QuadratureSpec& q) {
    const int kmax = field == Field::U ? kMaxUOrder : kMaxTauOrder;
    if (k < 0 || k > kmax) throw Error(ErrorCode::OutOfRange, "derivative order out of range");
    if (t < 0.0) throw Error(ErrorCode::OutOfRange, "t must be >= 0");
    return linear_norms(t, init, p, q)[column(field, k)];
}

NormRow linear_norms_direct(double t, const InitialSpec& init, const ModelParams& p, const QuadratureSpec& q) {
    const AngularMoments m = angular_moments(init, q);
    const double split = derive_constants(p).R;
    const auto breaks = radial_breaks(t, init, p, m, q, q.radial_panels, split);
    NormRow sums{};
    if (breaks.empty()) return sums;
    const quad::Rule radial = quad::composite(quad::gauss_legendre(q.nodes_per_panel), breaks);
    const quad::SphereRule sphere = quad::sphere_product(q.polar_nodes, q.azimuth_nodes);

    for (std::size_t i = 0; i < radial.nodes.size(); ++i) {
        const double r = radial.nodes[i];
        double pu = 0.0, pt = 0.0;
        for (std::size_t d = 0; d < sphere.weights.size(); ++d) {
            ModeState mode;
            for (int j = 0; j < 3; ++j) mode.xi[j] = r * sphere.directions[d][j];
            mode.u_hat = init.u0(mode.xi);
            mode.tau_hat = init.tau0(mode.xi);
            const ModeState out = propagate_utau(mode, t, p);
            double su = 0.0, st = 0.0;
            for (int j = 0; j < 3; ++j) su += std::norm(out.u_hat[j]);
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k) st += std::norm(out.tau_hat(j, k));
            pu += sphere.weights[d] * su;
            pt += sphere.weights[d] * st;
        }
        double w = radial.weights[i] * r * r;
        for (int k = 0; k <= kMaxUOrder; ++k) {
            sums[column(Field::U, k)] += w * pu;
            if (k <= kMaxTauOrder) sums[column(Field::Tau, k)] += w * pt;
            w *= r * r;
        }
    }
    NormRow out;
    for (int c = 0; c < 7; ++c) out[c] = std::sqrt(sums[c]);
    return out;
}

std::vector<double> TimeGrid::points() const {
    if (count < 1) throw Error(ErrorCode::ConfigError, "time grid must contain at least one point");
    if (!(t_min > 0.0) || !(t_max >= t_min)) throw Error(ErrorCode::ConfigError, "time grid needs 0 < t_min <= t_max");
    std::vector<double> v(static_cast<std::size_t>(count));
    if (count == 1) {
        v[0] = t_min;
        return v;
    }
    const double a = std::log(t_min), b = std::log(t_max);
    for (int i = 0; i < count; ++i) v[i] = std::exp(a + (b - a) * i / (count - 1));
    v.front() = t_min;
    v.back() = t_max;
    return v;
}

DecaySeries decay_series(const InitialSpec& init, const ModelParams& p, const std::vector<double>& times,
                         const QuadratureSpec& q, int jobs) {
    validate(p);
    if (times.empty()) throw Error(ErrorCode::ConfigError, "empty time grid");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1])) throw Error(ErrorCode::ConfigError, "times must be strictly increasing");

    DecaySeries s;
    s.times = times;
    s.params = p;
    s.init = init;
    s.quad = q;
    s.norms.resize(times.size());
    parallel_for(times.size(), jobs, [&](std::size_t i) { s.norms[i] = linear_norms(times[i], init, p, q); });
    return s;
}

double target_exponent(Field f, int k) { return (f == Field::U ? -0.75 : -1.25) - 0.5 * k; }

LogLogFit fit_loglog(const std::vector<double>& times, const std::vector<double>& values, double t_a, double t_b) {
    if (times.size() != values.size()) throw Error(ErrorCode::ConfigError, "times and values differ in length");
    if (!(t_b / t_a >= 100.0 * (1.0 - 1e-12)))
        throw Error(ErrorCode::WindowTooNarrow, "fit window must span at least a factor 100");
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        if (t < t_a * (1.0 - 1e-12) || t > t_b * (1.0 + 1e-12)) continue;
        if (!(values[i] > 0.0)) continue;
        xs.push_back(std::log1p(t));
        ys.push_back(std::log(values[i]));
    }
    if (xs.size() < 3) throw Error(ErrorCode::WindowTooNarrow, "fewer than 3 samples inside the fit window");

    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    const double slope = sxy / sxx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double e = ys[i] - (my + slope * (xs[i] - mx));
        ssr += e * e;
    }
    return {slope, std::sqrt(ssr / (n - 2.0) / sxx), xs.size()};
}

ExponentFit fit_exponent(const DecaySeries& s, Field f, int k, double t_a, double t_b, double tolerance) {
    std::vector<double> values(s.times.size());
    for (std::size_t i = 0; i < s.times.size(); ++i) values[i] = s.at(i, f, k);
    const LogLogFit ll = fit_loglog(s.times, values, t_a, t_b);
    ExponentFit fit;
    fit.field = f;
    fit.k = k;
    fit.slope = ll.slope;
    fit.stderr_ = ll.stderr_;
    fit.t_a = t_a;
    fit.t_b = t_b;
    fit.target = target_exponent(f, k);
    fit.pass = std::abs(ll.slope - fit.target) <= tolerance;
    return fit;
}

std::vector<LowerRateResult> lower_rate_check(const InitialSpec& init, const ModelParams& p, const TimeGrid& grid,
                                              const QuadratureSpec& q, int jobs) {
    if (!init.has_u() || !(init.amplitude > 0.0) || !(init.width > 0.0))
        throw Error(ErrorCode::HypothesisViolated,
                    "initial velocity must satisfy inf_{|xi|<=R} |u0_hat| >= c0 > 0");
    const DerivedConstants c = derive_constants(p);

    TimeGrid coarse = grid;
    coarse.t_min = std::max(grid.t_min, c.t1_safe);
    TimeGrid fine = coarse;
    fine.count = 2 * coarse.count - 1;

    // The refined grid nests the coarse one, so evaluate it once and subsample.
    const DecaySeries s = decay_series(init, p, fine.points(), q, jobs);

    std::vector<LowerRateResult> out;
    auto check = [&](Field f, int k) {
        LowerRateResult res{};
        res.field = f;
        res.k = k;
        res.target = target_exponent(f, k);
        std::vector<double> env(s.times.size());
        for (std::size_t i = 0; i < s.times.size(); ++i)
            env[i] = s.at(i, f, k) * std::pow(1.0 + s.times[i], -res.target);
        res.infimum = std::numeric_limits<double>::infinity();
        res.refined_infimum = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < env.size(); ++i) {
            res.refined_infimum = std::min(res.refined_infimum, env[i]);
            if (i % 2 == 0) res.infimum = std::min(res.infimum, env[i]);
        }
        const double last = env.back();
        res.t_stable = s.times.back();
        for (std::size_t i = env.size(); i-- > 0;) {
            if (std::abs(env[i] / last - 1.0) > 0.1) break;
            res.t_stable = s.times[i];
        }
        res.stable = res.refined_infimum > 0.0 &&
                     std::abs(res.infimum - res.refined_infimum) <= kLowerRefinementTol * res.refined_infimum;
        res.pass = res.refined_infimum > 0.0 && res.stable;
        out.push_back(res);
    };
    for (int k = 0; k <= kMaxUOrder; ++k) check(Field::U, k);
    for (int k = 0; k <= kMaxTauOrder; ++k) check(Field::Tau, k);
    return out;
}

void to_json(nlohmann::json& j, const InitialSpec& s) {
    j = nlohmann::json{{"amplitude", s.amplitude},
                       {"width", s.width},
                       {"reference", s.reference},
                       {"tau_template", s.tau_template},
                       {"which", to_string(s.which)}};
}

void from_json(const nlohmann::json& j, InitialSpec& s) {
    s = InitialSpec{};
    if (j.contains("amplitude")) s.amplitude = j.at("amplitude").get<double>();
    if (j.contains("width")) s.width = j.at("width").get<double>();
    if (j.contains("reference")) s.reference = j.at("reference").get<Vec3>();
    if (j.contains("tau_template")) s.tau_template = j.at("tau_template").get<std::array<double, 6>>();
    if (j.contains("which")) {
        const auto w = j.at("which").get<std::string>();
        if (w == "u-only") s.which = Components::UOnly;
        else if (w == "tau-only") s.which = Components::TauOnly;
        else if (w == "both") s.which = Components::Both;
        else throw Error(ErrorCode::ConfigError, "initial.which must be u-only, tau-only or both");
    }
    if (!(s.width > 0.0)) throw Error(ErrorCode::ConfigError, "initial.width must be > 0");
}

void from_json(const nlohmann::json& j, QuadratureSpec& q) {
    q = QuadratureSpec{};
    if (j.contains("radial_panels")) q.radial_panels = j.at("radial_panels").get<int>();
    if (j.contains("nodes_per_panel")) q.nodes_per_panel = j.at("nodes_per_panel").get<int>();
    if (j.contains("polar_nodes")) q.polar_nodes = j.at("polar_nodes").get<int>();
    if (j.contains("azimuth_nodes")) q.azimuth_nodes = j.at("azimuth_nodes").get<int>();
    if (j.contains("cutoff")) q.cutoff = j.at("cutoff").get<double>();
    if (j.contains("convergence_tol")) q.convergence_tol = j.at("convergence_tol").get<double>();
    if (j.contains("check_convergence")) q.check_convergence = j.at("check_convergence").get<bool>();
    if (q.radial_panels < 1 || q.nodes_per_panel < 2 || q.polar_nodes < 2 || q.azimuth_nodes < 3)
        throw Error(ErrorCode::ConfigError, "quadrature orders too small");
}

void to_json(nlohmann::json& j, const QuadratureSpec& q) {
    j = nlohmann::json{{"radial_panels", q.radial_panels},
                       {"nodes_per_panel", q.nodes_per_panel},
                       {"polar_nodes", q.polar_nodes},
                       {"azimuth_nodes", q.azimuth_nodes},
                       {"cutoff", q.cutoff},
                       {"convergence_tol", q.convergence_tol},
                       {"check_convergence", q.check_convergence}};
}

void from_json(const nlohmann::json& j, TimeGrid& g) {
    g = TimeGrid{};
    if (j.contains("t_min")) g.t_min = j.at("t_min").get<double>();
    if (j.contains("t_max")) g.t_max = j.at("t_max").get<double>();
    if (j.contains("count")) g.count = j.at("count").get<int>();
    if (g.count < 1) throw Error(ErrorCode::ConfigError, "empty time grid");
}

void to_json(nlohmann::json& j, const ExponentFit& f) {
    j = nlohmann::json{{"field", to_string(f.field)}, {"k", f.k},
                       {"slope", f.slope},            {"stderr", f.stderr_},
                       {"target", f.target},          {"window", {f.t_a, f.t_b}},
                       {"pass", f.pass}};
}

void to_json(nlohmann::json& j, const LowerRateResult& r) {
    j = nlohmann::json{{"field", to_string(r.field)},
                       {"k", r.k},
                       {"target", r.target},
                       {"infimum", r.infimum},
                       {"refined_infimum", r.refined_infimum},
                       {"t_stable", r.t_stable},
                       {"stable", r.stable},
                       {"pass", r.pass}};
}

std::string to_csv(const DecaySeries& s) {
    std::string out = "t,u_k0,u_k1,u_k2,u_k3,tau_k0,tau_k1,tau_k2\n";
    char buf[32];
    for (std::size_t i = 0; i < s.times.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", s.times[i]);
        out += buf;
        for (double v : s.norms[i]) {
            std::snprintf(buf, sizeof buf, ",%.17g", v);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

}  // namespace oldroyd
