#include "oldroyd/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "oldroyd/error.hpp"

namespace oldroyd::quad {

Rule gauss_legendre(int n) {
    if (n < 1) throw Error(ErrorCode::ConfigError, "Gauss-Legendre order must be >= 1");
    Rule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0;
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // one more derivative evaluation at the converged node
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n == 1 ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

Rule composite(const Rule& rule, const std::vector<double>& breaks) {
    Rule out;
    const std::size_t m = rule.nodes.size();
    if (breaks.size() < 2) return out;
    out.nodes.reserve(m * (breaks.size() - 1));
    out.weights.reserve(m * (breaks.size() - 1));
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double half = 0.5 * (breaks[i + 1] - breaks[i]);
        const double mid = 0.5 * (breaks[i + 1] + breaks[i]);
        for (std::size_t j = 0; j < m; ++j) {
            out.nodes.push_back(mid + half * rule.nodes[j]);
            out.weights.push_back(half * rule.weights[j]);
        }
    }
    return out;
}

SphereRule sphere_product(int polar_nodes, int azimuth_nodes) {
    const Rule polar = gauss_legendre(polar_nodes);
    SphereRule s;
    const double dphi = 2.0 * std::numbers::pi / azimuth_nodes;
    for (int i = 0; i < polar_nodes; ++i) {
        const double c = polar.nodes[i];
        const double sn = std::sqrt(std::max(0.0, 1.0 - c * c));
        for (int j = 0; j < azimuth_nodes; ++j) {
            const double phi = (j + 0.5) * dphi;
            s.directions.push_back({sn * std::cos(phi), sn * std::sin(phi), c});
            s.weights.push_back(polar.weights[i] * dphi);
        }
    }
    return s;
}

}  // namespace oldroyd::quad
