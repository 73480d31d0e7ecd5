#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "oldroyd/model.hpp"

namespace oldroyd {

/// Log-spaced (r, t) grid over (0, R] x [t_min, t_max]. Zero bounds mean
/// "use the default": r_max = R, t_max = 100 / theta.
struct GridSpec {
    int r_count = 200;
    int t_count = 200;
    double r_min = 0.0;
    double r_max = 0.0;
    double t_min = 0.0;
    double t_max = 0.0;

    /// Nested refinement: every point of *this is a point of the result.
    GridSpec refined() const;
};

enum class BoundKind { Upper, Lower };

struct BoundReport {
    std::string bound_name;
    BoundKind kind = BoundKind::Upper;
    GridSpec grid;
    double worst_ratio = 0.0;  // max |kernel|/bound (upper) or min (lower)
    double worst_r = 0.0;
    double worst_t = 0.0;
    double amplitude_used = 0.0;      // K, c1 or c1_tilde after any scaling
    double observed_amplitude = 0.0;  // amplitude that would make the check tight
    bool pass = false;
};

struct BoundOptions {
    double k_scale = 1.0;      // multiplies K (falsification runs)
    double c1_scale = 1.0;     // multiplies c1 (falsification runs)
    bool use_published_t1 = false;  // lower checks start at t1 instead of t1_safe
};

/// |G1|, |G2|, |G3| and the (u, sigma) block entries against K e^{-theta r^2 t}.
std::vector<BoundReport> verify_upper_bounds(const ModelParams& p, const GridSpec& grid,
                                             const BoundOptions& opt = {});

/// |G1|, |G3| >= c1 e^{-eta r^2 t} and |G2| <= c1_tilde (r^2 e^{-theta r^2 t} + e^{-beta t/2})
/// for t >= t1_safe (or t1 when requested).
std::vector<BoundReport> verify_lower_bounds(const ModelParams& p, const GridSpec& grid,
                                             const BoundOptions& opt = {});

/// beta^2/2 <= D(r) <= (2R^2 + beta)^2 on (0, R]. worst_ratio is the largest of
/// (beta^2/2)/D and D/(2R^2+beta)^2, so pass = worst_ratio <= 1.
BoundReport verify_discriminant_window(const ModelParams& p, int r_count, double r_max = 0.0);

/// Log grid of `count` points on [lo, hi], endpoints exact.
std::vector<double> log_grid(double lo, double hi, int count);

void to_json(nlohmann::json& j, const GridSpec& g);
void from_json(const nlohmann::json& j, GridSpec& g);
void to_json(nlohmann::json& j, const BoundReport& r);

}  // namespace oldroyd
