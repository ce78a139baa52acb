#pragma once

#include <vector>

namespace qsteer {

struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// n-point Gauss-Legendre rule mapped to [a, b].
GaussRule gauss_legendre(int n, double a = 0.0, double b = 1.0);

// Composite rule: `panels` equal panels of an `order`-point rule each.
GaussRule composite_gauss_legendre(int panels, int order, double a, double b);

} // namespace qsteer
