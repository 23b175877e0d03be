#include "schrolab/trajectory.hpp"

#include <algorithm>
#include <cmath>

namespace schrolab {

CVec free_flow(const ModeLattice& lat, const CVec& c, double t) {
    CVec r = c;
    for (Eigen::Index i = 0; i < r.size(); ++i)
        r[i] *= std::polar(1.0, -static_cast<double>(lat.norm2(static_cast<std::size_t>(i))) * t);
    return r;
}

CVec Trajectory::at(double t) const {
    if (states.empty()) throw ConfigError("Trajectory: empty");
    const std::size_t n = states.size();
    if (t <= 0.0 || n == 1) return free_flow(*lattice, states.front(), t - times.front());
    if (t >= T) return free_flow(*lattice, states.back(), t - times.back());
    const double h = T / static_cast<double>(n - 1);
    const double x = t / h;
    auto j = static_cast<std::ptrdiff_t>(std::floor(x));
    const std::ptrdiff_t last = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(n) - 4);
    j = std::clamp<std::ptrdiff_t>(j - 1, 0, last);
    const std::ptrdiff_t cnt = std::min<std::ptrdiff_t>(4, static_cast<std::ptrdiff_t>(n));
    CVec v = CVec::Zero(states.front().size());
    for (std::ptrdiff_t a = 0; a < cnt; ++a) {
        double w = 1.0;
        for (std::ptrdiff_t b = 0; b < cnt; ++b)
            if (b != a) w *= (x - static_cast<double>(j + b)) / static_cast<double>(a - b);
        const auto idx = static_cast<std::size_t>(j + a);
        v += w * free_flow(*lattice, states[idx], -times[idx]);
    }
    return free_flow(*lattice, v, t);
}

Trajectory sample_trajectory(LatticePtr lattice, double T, int steps, const std::function<CVec(double)>& u) {
    if (steps < 1 || !(T > 0.0)) throw ConfigError("sample_trajectory: need steps >= 1 and T > 0");
    Trajectory tr;
    tr.lattice = std::move(lattice);
    tr.T = T;
    for (int j = 0; j <= steps; ++j) {
        const double t = T * j / steps;
        tr.times.push_back(t);
        tr.states.push_back(u(t));
    }
    return tr;
}

}  // namespace schrolab
