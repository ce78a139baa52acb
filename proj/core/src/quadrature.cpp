#include "qsteer/quadrature.hpp"

#include "qsteer/errors.hpp"

#include <cmath>
#include <numbers>

namespace qsteer {

GaussRule gauss_legendre(int n, double a, double b) {
    if (n < 1) throw InputError("Gauss-Legendre rule needs at least one node");
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (b + a);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Tricomi's initial guess, then Newton on P_n.
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double pn = n == 1 ? x : p1;
            const double pm1 = n == 1 ? 1.0 : p0;
            dp = n * (x * pn - pm1) / (x * x - 1.0);
            const double dx = pn / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = mid - half * x;
        rule.nodes[n - 1 - i] = mid + half * x;
        rule.weights[i] = rule.weights[n - 1 - i] = half * w;
    }
    return rule;
}

GaussRule composite_gauss_legendre(int panels, int order, double a, double b) {
    if (panels < 1) throw InputError("composite rule needs at least one panel");
    const GaussRule ref = gauss_legendre(order, 0.0, 1.0);
    GaussRule rule;
    rule.nodes.reserve(static_cast<std::size_t>(panels) * order);
    rule.weights.reserve(rule.nodes.capacity());
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * h;
        for (int k = 0; k < order; ++k) {
            rule.nodes.push_back(lo + h * ref.nodes[k]);
            rule.weights.push_back(h * ref.weights[k]);
        }
    }
    return rule;
}

} // namespace qsteer
