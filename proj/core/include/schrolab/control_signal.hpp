#pragma once

#include <string>
#include <vector>

#include "schrolab/spectral.hpp"

namespace schrolab {

// E(theta, t) = int_0^t e^{i theta tau} d tau, with E(0, t) = t.
cplx phase_integral(double theta, double t);

// h(t) = shape * (amp .* e^{-i freq (t - t_ref)}): every control produced here
// is a finite superposition of adjoint free-flow modes.
struct ModalSignal {
    CMat shape;
    RVec freq;
    CVec amp;
    double t_ref = 0.0;

    CVec at(double t) const;
    Eigen::Index rows() const { return shape.rows(); }
};

// Uniform grid with ceil(per_unit * T) intervals on [0, T].
std::vector<double> uniform_time_grid(double T, int per_unit);

struct InternalSignal {
    LatticePtr lattice;  // lattice of the emitted frames
    std::vector<double> time_grid;
    std::vector<CVec> frames;
    LatticePtr modal_lattice;  // Exponential lattice on which `modal` evaluates
    ModalSignal modal;
};

struct FaceTrace {
    int face_id = 0;
    int axis = 0;
    int side = 0;  // 0: x_axis = 0, 1: x_axis = pi
    std::vector<std::vector<double>> grid;  // transverse coordinates of sample points
    std::vector<double> time_grid;
    CMat values;  // rows: time samples, cols: grid points
    ModalSignal modal;
};

struct BoundarySignal {
    std::string kind;  // "dirichlet_trace" or "neumann_trace"
    std::vector<FaceTrace> faces;
};

void sample_frames(InternalSignal& sig);
void sample_trace(FaceTrace& face);

std::string to_json(const InternalSignal& sig);
std::string to_json(const BoundarySignal& sig);

// Uniform transverse grid on a face of (0, pi)^n: points per axis, n-1 coordinates each.
std::vector<std::vector<double>> face_grid(int n, int points_per_axis);

// Discrete time-Sobolev norm on the periodic time window [0, T): for each column,
// DFT over the time samples (last sample excluded when it duplicates T), weight
// (1 + |omega|)^{2 sigma}, and spatial weights `space_w` per column.
double time_sobolev_norm(const CMat& values, double T, double sigma, const std::vector<double>& space_w);

}  // namespace schrolab
