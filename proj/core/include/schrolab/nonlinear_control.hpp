#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "schrolab/control_signal.hpp"
#include "schrolab/dirichlet_control.hpp"
#include "schrolab/errors.hpp"
#include "schrolab/internal_control.hpp"
#include "schrolab/spectral.hpp"
#include "schrolab/trajectory.hpp"

namespace schrolab::nonlinear {

// N(u) = lambda u^{alpha1} conj(u)^{alpha2}.
struct NonlinearitySpec {
    double lambda = 1.0;
    int alpha1 = 2;
    int alpha2 = 1;

    int alpha() const { return alpha1 + alpha2 - 1; }
    bool gauge_invariant() const { return alpha1 == alpha2 + 1; }
};

NonlinearitySpec make_spec(double lambda, int alpha1, int alpha2);

// Dealiased product, exact on the output lattice of truncation out_N (default: u's).
SpectralField nonlinearity(const SpectralField& u, const NonlinearitySpec& spec, std::optional<int> out_N = std::nullopt);
// Galerkin projection of N(u) onto u's own lattice (Cosine products of Sine data are
// projected back onto the Sine lattice).
SpectralField nonlinearity_galerkin(const SpectralField& u, const NonlinearitySpec& spec);

// int_0^{t_j} W(t_j - tau) f(tau) dtau at every node of the source's uniform grid
// (phase-factored cubic rule, 4th order).
std::vector<CVec> duhamel_cumulative(const Trajectory& source);
SpectralField duhamel(const Trajectory& source, double t);

// i int_0^T W(T - tau) N(v)(tau) dtau.
SpectralField omega(const Trajectory& v, const NonlinearitySpec& spec);

struct FixedPointReport {
    int iterates = 0;
    std::vector<double> distances;            // ||v^{j+1} - v^j|| in the X^T_{s,b} surrogate
    std::vector<double> contraction_factors;  // distances[j+1] / distances[j]
    double final_residual = 0.0;              // last distance relative to ||v||
    double ball_radius = 0.0;                 // max ||v^j||
    double delta = 0.0;                       // ||u0||_s + ||u1||_s
    bool converged = false;
};

struct FixedPointOptions {
    double b = 0.625;
    double tol = 1e-10;  // relative successive-iterate distance
    int max_iter = 50;
    double contraction_limit = 0.55;
    int steps_per_unit = 256;  // floor; raised to resolve the interaction frequencies
    int band = 16;
    internal::HumOptions hum;
    dirichlet::DirichletOptions boundary;
};

// Raised when the Picard iteration does not contract; data() holds the contraction factors.
class NonContraction : public NumericError {
public:
    using NumericError::NumericError;
};

struct InternalFixedPoint {
    Trajectory trajectory;
    InternalSignal control;
    CVec psi;
    FixedPointReport report;
    SpectralField achieved;
    double endpoint_residual = 0.0;
};

InternalFixedPoint fixed_point_internal(const SpectralField& phi, const SpectralField& psi,
                                        const internal::InternalController& ctrl, const NonlinearitySpec& spec,
                                        const FixedPointOptions& opts = {});

// Internal control on (0, pi)^n with Dirichlet (Sine data, alpha even) or Neumann
// (Cosine data) conditions through odd/even extension.  a_omega in the Cosine basis.
struct BoundaryConditionedFixedPoint {
    InternalFixedPoint torus;
    internal::InternalController controller;
    SpectralField achieved;  // restricted to the rectangle
    double endpoint_residual = 0.0;
};

BoundaryConditionedFixedPoint fixed_point_internal_bc(Parity parity, const SpectralField& a_omega, double s, double T,
                                                      const SpectralField& phi, const SpectralField& psi,
                                                      const NonlinearitySpec& spec, const FixedPointOptions& opts = {});

// Independent RK4 replay of u_t = i Delta u + i N(u) + a h on the controller lattice.
SpectralField replay_internal(const internal::InternalController& ctrl, const NonlinearitySpec& spec,
                              const SpectralField& u0, const InternalSignal& h, int steps = 0);

struct DirichletFixedPoint {
    Trajectory trajectory;
    SpectralField v0;
    BoundarySignal trace;
    double trace_norm = 0.0;  // discrete H^{(s+1)/2}(0, T) norm of g h over the faces
    FixedPointReport report;
    SpectralField achieved;
    double endpoint_residual = 0.0;
    double condition = 0.0;
};

// Picard iteration of Gamma(v) = W_D u0 + i int W_D N(v) + Lambda(u_T - W_D(T) u0 - omega(v, T)),
// Lambda = evolve_moments o S^{-1}.
DirichletFixedPoint fixed_point_dirichlet(const SpectralField& u0, const SpectralField& u_T,
                                          const dirichlet::SmoothController& g, double T, const NonlinearitySpec& spec,
                                          double s, double b, const FixedPointOptions& opts = {});

SpectralField replay_dirichlet_nonlinear(const dirichlet::SmoothController& g, const SpectralField& v0,
                                         const NonlinearitySpec& spec, const SpectralField& u0, double T,
                                         int steps = 0);

// Calls attempt(delta); on NonContraction halves delta, at most max_halvings times.
// Returns the result with the delta that worked.
template <class F>
auto with_delta_halving(double delta, F&& attempt, int max_halvings = 5) {
    for (int h = 0;; ++h) {
        try {
            return std::make_pair(attempt(delta), delta);
        } catch (const NonContraction& e) {
            if (h >= max_halvings) throw;
        }
        delta *= 0.5;
    }
}

}  // namespace schrolab::nonlinear
