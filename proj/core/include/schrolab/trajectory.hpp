#pragma once

#include <functional>
#include <vector>

#include "schrolab/spectral.hpp"

namespace schrolab {

// States on a uniform grid of [0, T].  Values between nodes come from cubic
// Lagrange interpolation in the interaction picture v = W(-t) u; outside [0, T]
// the trajectory continues by the free flow from its endpoint values.
struct Trajectory {
    LatticePtr lattice;
    double T = 0.0;
    std::vector<double> times;
    std::vector<CVec> states;

    CVec at(double t) const;
    SpectralField field_at(double t) const { return SpectralField(lattice, at(t)); }
    const CVec& front() const { return states.front(); }
    const CVec& back() const { return states.back(); }
    std::size_t steps() const { return times.empty() ? 0 : times.size() - 1; }
};

Trajectory sample_trajectory(LatticePtr lattice, double T, int steps, const std::function<CVec(double)>& u);

// Apply W(t) (multiplication by e^{-i|k|^2 t}) to raw coefficients.
CVec free_flow(const ModeLattice& lat, const CVec& c, double t);

}  // namespace schrolab
