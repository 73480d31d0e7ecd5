#include "oldroyd/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <nlohmann/json.hpp>

#include "oldroyd/error.hpp"
#include "oldroyd/symbols.hpp"

namespace oldroyd {

namespace {

constexpr int kMinGridCount = 16;
constexpr double kRelativeRMin = 1e-4;
constexpr double kRelativeTMin = 1e-4;

void check_grid(const GridSpec& g) {
    if (g.r_count < kMinGridCount || g.t_count < kMinGridCount)
        throw Error(ErrorCode::GridTooCoarse, "bound grids need at least 16x16 points, got " +
                                                  std::to_string(g.r_count) + "x" + std::to_string(g.t_count));
}

struct ResolvedGrid {
    GridSpec spec;
    std::vector<double> r;
    std::vector<double> t;
};

ResolvedGrid resolve(const GridSpec& in, const DerivedConstants& c, double t_floor, bool include_zero) {
    ResolvedGrid out;
    out.spec = in;
    GridSpec& g = out.spec;
    if (g.r_max <= 0.0) g.r_max = c.R;
    if (g.r_min <= 0.0) g.r_min = kRelativeRMin * g.r_max;
    if (g.t_max <= 0.0) g.t_max = 100.0 / c.theta;
    if (g.t_min <= 0.0) g.t_min = t_floor > 0.0 ? t_floor : kRelativeTMin / c.theta;
    g.t_min = std::max(g.t_min, t_floor);

    out.r = log_grid(g.r_min, g.r_max, g.r_count);
    out.t = log_grid(g.t_min, g.t_max, g.t_count);
    if (include_zero) out.t.insert(out.t.begin(), 0.0);
    return out;
}

// Scans the grid; `ratio` returns |kernel| / bound at (r, t).
BoundReport scan(std::string name, BoundKind kind, const ResolvedGrid& grid, double amplitude,
                 const std::function<double(double, double)>& ratio) {
    BoundReport rep;
    rep.bound_name = std::move(name);
    rep.kind = kind;
    rep.grid = grid.spec;
    rep.amplitude_used = amplitude;
    rep.worst_ratio = kind == BoundKind::Upper ? -std::numeric_limits<double>::infinity()
                                               : std::numeric_limits<double>::infinity();
    for (double t : grid.t) {
        for (double r : grid.r) {
            const double q = ratio(r, t);
            const bool worse = kind == BoundKind::Upper ? q > rep.worst_ratio : q < rep.worst_ratio;
            if (worse || std::isnan(q)) {
                rep.worst_ratio = q;
                rep.worst_r = r;
                rep.worst_t = t;
                if (std::isnan(q)) break;
            }
        }
    }
    rep.pass = kind == BoundKind::Upper ? rep.worst_ratio <= 1.0 : rep.worst_ratio >= 1.0;
    rep.observed_amplitude = rep.worst_ratio * amplitude;
    return rep;
}

}  // namespace

GridSpec GridSpec::refined() const {
    GridSpec g = *this;
    g.r_count = 2 * r_count - 1;
    g.t_count = 2 * t_count - 1;
    return g;
}

std::vector<double> log_grid(double lo, double hi, int count) {
    std::vector<double> v(static_cast<std::size_t>(std::max(count, 1)));
    if (count == 1) {
        v[0] = hi;
        return v;
    }
    const double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < count; ++i) v[i] = std::exp(a + (b - a) * i / (count - 1));
    v.front() = lo;
    v.back() = hi;
    return v;
}

std::vector<BoundReport> verify_upper_bounds(const ModelParams& p, const GridSpec& spec, const BoundOptions& opt) {
    check_grid(spec);
    const DerivedConstants c = derive_constants(p);
    const ResolvedGrid grid = resolve(spec, c, 0.0, true);
    const double K = c.K * opt.k_scale;
    auto envelope = [&](double r, double t) { return K * std::exp(-c.theta * r * r * t); };

    std::vector<BoundReport> out;
    out.push_back(scan("G1", BoundKind::Upper, grid, K, [&](double r, double t) {
        return std::abs(g_kernels(r, t, p).g1) / envelope(r, t);
    }));
    out.push_back(scan("G2", BoundKind::Upper, grid, K, [&](double r, double t) {
        return std::abs(g_kernels(r, t, p).g2) / envelope(r, t);
    }));
    out.push_back(scan("G3", BoundKind::Upper, grid, K, [&](double r, double t) {
        return std::abs(g_kernels(r, t, p).g3) / envelope(r, t);
    }));
    out.push_back(scan("G_usigma", BoundKind::Upper, grid, K, [&](double r, double t) {
        const GKernels g = g_kernels(r, t, p);
        const double r2 = r * r;
        const double entry = std::max({std::abs(g.g3 - p.epsilon * r2 * g.g1), std::abs(p.kappa * r * g.g1),
                                       std::abs(0.5 * p.alpha * r * g.g1), std::abs(g.g2 + p.epsilon * r2 * g.g1)});
        return entry / envelope(r, t);
    }));
    return out;
}

std::vector<BoundReport> verify_lower_bounds(const ModelParams& p, const GridSpec& spec, const BoundOptions& opt) {
    check_grid(spec);
    const DerivedConstants c = derive_constants(p);
    const double onset = opt.use_published_t1 ? c.t1 : c.t1_safe;
    GridSpec s = spec;
    s.t_min = std::max(s.t_min, onset);
    const ResolvedGrid grid = resolve(s, c, onset, false);
    const double c1 = c.c1 * opt.c1_scale;

    auto lower = [&](double r, double t) { return c1 * std::exp(-c.eta * r * r * t); };

    std::vector<BoundReport> out;
    out.push_back(scan("G1_lower", BoundKind::Lower, grid, c1, [&](double r, double t) {
        return std::abs(g_kernels(r, t, p).g1) / lower(r, t);
    }));
    out.push_back(scan("G3_lower", BoundKind::Lower, grid, c1, [&](double r, double t) {
        return std::abs(g_kernels(r, t, p).g3) / lower(r, t);
    }));
    out.push_back(scan("G2_refined", BoundKind::Upper, grid, c.c1_tilde, [&](double r, double t) {
        const double env = c.c1_tilde * (r * r * std::exp(-c.theta * r * r * t) + std::exp(-0.5 * p.beta * t));
        return std::abs(g_kernels(r, t, p).g2) / env;
    }));
    return out;
}

BoundReport verify_discriminant_window(const ModelParams& p, int r_count, double r_max) {
    const DerivedConstants c = derive_constants(p);
    ResolvedGrid grid;
    grid.spec.r_count = r_count;
    grid.spec.t_count = 1;
    grid.spec.r_max = r_max > 0.0 ? r_max : c.R;
    grid.spec.r_min = kRelativeRMin * grid.spec.r_max;
    grid.r = log_grid(grid.spec.r_min, grid.spec.r_max, r_count);
    grid.r.insert(grid.r.begin(), 0.0);
    grid.t = {0.0};

    const double lo = 0.5 * p.beta * p.beta;
    const double hi = (2.0 * c.R * c.R + p.beta) * (2.0 * c.R * c.R + p.beta);
    return scan("discriminant_window", BoundKind::Upper, grid, 1.0, [&](double r, double) {
        const double d = discriminant(p, r);
        if (d <= 0.0) return std::numeric_limits<double>::infinity();
        return std::max(lo / d, d / hi);
    });
}

void to_json(nlohmann::json& j, const GridSpec& g) {
    j = nlohmann::json{{"r_count", g.r_count}, {"t_count", g.t_count}, {"r_min", g.r_min},
                       {"r_max", g.r_max},     {"t_min", g.t_min},     {"t_max", g.t_max}};
}

void from_json(const nlohmann::json& j, GridSpec& g) {
    g = GridSpec{};
    if (j.contains("r_count")) g.r_count = j.at("r_count").get<int>();
    if (j.contains("t_count")) g.t_count = j.at("t_count").get<int>();
    if (j.contains("r_min")) g.r_min = j.at("r_min").get<double>();
    if (j.contains("r_max")) g.r_max = j.at("r_max").get<double>();
    if (j.contains("t_min")) g.t_min = j.at("t_min").get<double>();
    if (j.contains("t_max")) g.t_max = j.at("t_max").get<double>();
}

void to_json(nlohmann::json& j, const BoundReport& r) {
    j = nlohmann::json{{"bound_name", r.bound_name},
                       {"kind", r.kind == BoundKind::Upper ? "upper" : "lower"},
                       {"grid", r.grid},
                       {"worst_ratio", r.worst_ratio},
                       {"worst_point", {{"r", r.worst_r}, {"t", r.worst_t}}},
                       {"amplitude_used", r.amplitude_used},
                       {"observed_amplitude", r.observed_amplitude},
                       {"pass", r.pass}};
}

}  // namespace oldroyd
