#pragma once

#include <numbers>

#include "schrolab/control_signal.hpp"
#include "schrolab/spectral.hpp"

namespace schrolab::neumann {

// Control from the full side face (id = 2 * axis + side, as for the Dirichlet faces).
struct NeumannProblem {
    LatticePtr lattice;  // Cosine
    int face = 0;
    double s = 0.0;
    double T = 2.0 * std::numbers::pi;
};

NeumannProblem make_problem(LatticePtr lattice, int face = 0, double s = 0.0, double T = 2.0 * std::numbers::pi);

// int_Omega cos_k^2 = prod_i (pi if k_i = 0 else pi/2).
double mode_norm(const ModeLattice& lat, std::size_t i);
// int over the face of cos_{p'} cos_{q'} (restricted to the face, sign (-1)^{p_a + q_a} on the far side).
double side_overlap(const NeumannProblem& prob, std::size_t p, std::size_t q);

struct NeumannGramian {
    CMat matrix;  // symmetrized W^{1/2} (E o B) W^{1/2}
    RVec weight;  // w_s(p) = (1 + |p|^2)^{-s}
    double T = 0.0;

    // G_{q,p} = w_s(p) E(|q|^2 - |p|^2, T) B(p', q')
    CMat unsymmetrized() const;
    double smallest_eigenvalue() const;
};

NeumannGramian neumann_gramian(const NeumannProblem& prob);
double observability_constant(const NeumannGramian& g);

struct NeumannOptions {
    int samples_per_unit = 256;
    int points_per_axis = 0;  // 0 picks 4N
    double singular_tol = 1e-12;
};

struct NeumannResult {
    BoundarySignal trace;
    SpectralField achieved;
    double residual = 0.0;  // relative H^s_N
    CVec phi;
    double lambda_min = 0.0;
    double trace_norm = 0.0;  // H^{s/2}(time; L^2(side)) of the emitted samples
};

NeumannResult neumann_control(const NeumannProblem& prob, const SpectralField& u0, const SpectralField& u1,
                              NeumannOptions opts = {});

// Samples of the free Neumann flow of v0 on the side face.
FaceTrace side_trace(const NeumannProblem& prob, const SpectralField& v0, int samples_per_unit, int points_per_axis);

// int_0^T int_side |v|^2 / ||v0||^2_{L^2(Omega)}.
double ingham_observability_ratio(const NeumannProblem& prob, const SpectralField& v0);

// Independent replay through the duality identity: the side integrals of h e^{i|q|^2 t} cos_q
// by composite Gauss in time and on the face, h evaluated from its modal form.
SpectralField replay_neumann(const NeumannProblem& prob, const SpectralField& u0, const FaceTrace& h, int panels = 0);

}  // namespace schrolab::neumann
