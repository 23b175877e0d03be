#include "schrolab/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace schrolab {

QuadratureRule gauss_legendre(int m, double a, double b) {
    if (m < 1) throw std::invalid_argument("gauss_legendre: m must be >= 1");
    QuadratureRule r;
    r.nodes.resize(static_cast<std::size_t>(m));
    r.weights.resize(static_cast<std::size_t>(m));
    const unsigned um = static_cast<unsigned>(m);
    for (int i = 0; i < m; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            const double p = std::legendre(um, x);
            const double pm1 = m > 1 ? std::legendre(um - 1, x) : 1.0;
            dp = m * (x * p - pm1) / (x * x - 1.0);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double p = std::legendre(um, x);
        const double pm1 = m > 1 ? std::legendre(um - 1, x) : 1.0;
        dp = m * (x * p - pm1) / (x * x - 1.0);
        const auto idx = static_cast<std::size_t>(m - 1 - i);
        r.nodes[idx] = 0.5 * (b - a) * x + 0.5 * (a + b);
        r.weights[idx] = (b - a) / ((1.0 - x * x) * dp * dp);
    }
    return r;
}

QuadratureRule composite_gauss(int m, int panels, double a, double b) {
    if (panels < 1) throw std::invalid_argument("composite_gauss: panels must be >= 1");
    QuadratureRule r;
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        auto g = gauss_legendre(m, a + p * h, a + (p + 1) * h);
        r.nodes.insert(r.nodes.end(), g.nodes.begin(), g.nodes.end());
        r.weights.insert(r.weights.end(), g.weights.begin(), g.weights.end());
    }
    return r;
}

}  // namespace schrolab
