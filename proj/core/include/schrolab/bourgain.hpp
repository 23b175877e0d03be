#pragma once

#include <functional>
#include <string>
#include <vector>

#include "schrolab/spectral.hpp"
#include "schrolab/trajectory.hpp"

namespace schrolab::bourgain {

// Cutoff eta: 1 on [0, T], 0 outside [-T/4, 5T/4], ramps are the raised cosine
// (1 - cos(pi x))/2 composed `order` times.
double window(double t, double T, int order = 1);
// int eta(t)^power e^{-i omega t} dt by composite Gauss quadrature (flat part exact).
cplx window_fourier(double omega, double T, int order = 1, int power = 1);
double window_norm2(double T, int order = 1);

struct SpaceTimeOptions {
    int band = 32;            // time frequencies kept beyond the dispersion offset
    int window_order = 1;
    double max_offset = 0.0;  // bound on |frequency - center|; <= 0 with a Trajectory: Nyquist of its grid
};

// Sampling of the window support [-T/4, 5T/4) and the retained frequencies |m| <= M.
struct SpaceTimeGrid {
    double T = 1.0;
    double t0 = -0.25;
    double time_window = 1.5;
    int M = 0;
    int P = 0;
    int window_order = 1;

    double time(int j) const { return t0 + time_window * j / P; }
    double omega(int m) const;
};

SpaceTimeGrid make_grid(double T, const SpaceTimeOptions& opts);

// u(x, t) = sum_k sum_m coeffs(k, m) / sqrt(time_window) e^{i k x} e^{i tau_{k,m} t},
// tau_{k,m} = centers(k) + 2 pi m / time_window.  Columns are m = -M..M.
struct SpaceTimeField {
    LatticePtr lattice;
    double time_window = 0.0;
    int M = 0;
    CMat coeffs;
    RVec centers;
    std::string cutoff;
    double window_norm = 0.0;  // int eta^2

    double tau(std::size_t k, int m) const;
};

RVec dispersion_centers(const ModeLattice& lat);

// Samples at grid.time(j), j < P, already including any cutoff.
SpaceTimeField transform_samples(LatticePtr lattice, const SpaceTimeGrid& grid, const std::vector<CVec>& samples,
                                 const RVec& centers, std::string cutoff = "none");
SpaceTimeField from_function(LatticePtr lattice, const SpaceTimeGrid& grid, const std::function<CVec(double)>& u,
                             std::string cutoff = "none");
// eta(t) * W(t - c) u(c), c = clamp(t, 0, T): the canonical extension of u on [0, T].
SpaceTimeField canonical_extension(LatticePtr lattice, const SpaceTimeGrid& grid,
                                   const std::function<CVec(double)>& u);
SpaceTimeField canonical_extension(const Trajectory& tr, const SpaceTimeOptions& opts);

SpaceTimeField conjugate(const SpaceTimeField& f);

// sign = +1: <tau + |k|^2>, sign = -1: <tau - |k|^2>.
double xsb_norm(const SpaceTimeField& f, double s, double b, int sign = +1);

// Upper bound of the X^T_{s,b} restriction norm through the canonical extension.
double restriction_norm(const Trajectory& tr, double s, double b, const SpaceTimeOptions& opts = {});

}  // namespace schrolab::bourgain
