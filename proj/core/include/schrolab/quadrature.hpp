#pragma once

#include <vector>

namespace schrolab {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// m-point Gauss-Legendre rule on [a, b].
QuadratureRule gauss_legendre(int m, double a = -1.0, double b = 1.0);

// Composite rule: `panels` equal panels on [a, b], m Gauss points each.
QuadratureRule composite_gauss(int m, int panels, double a, double b);

}  // namespace schrolab
