#pragma once

#include <array>
#include <vector>

namespace oldroyd::quad {

struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] (Newton iteration on P_n).
Rule gauss_legendre(int n);

/// Composite rule: `rule` mapped onto each [breaks[i], breaks[i+1]].
Rule composite(const Rule& rule, const std::vector<double>& breaks);

/// Product rule on the unit sphere: Gauss-Legendre in cos(polar angle) times a
/// uniform azimuthal rule. Weights sum to 4 pi.
struct SphereRule {
    std::vector<std::array<double, 3>> directions;
    std::vector<double> weights;
};

SphereRule sphere_product(int polar_nodes, int azimuth_nodes);

}  // namespace oldroyd::quad
