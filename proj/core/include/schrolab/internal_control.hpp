#pragma once

#include <optional>

#include "schrolab/control_signal.hpp"
#include "schrolab/spectral.hpp"

namespace schrolab::internal {

struct InternalController {
    SpectralField a;  // real profile on an Exponential lattice
    double s = 0.0;
    double T = 1.0;
    LatticePtr lattice;  // state lattice (Exponential)
};

InternalController make_controller(SpectralField a, double s, double T, LatticePtr lattice);

// Separable bump of unit height supported on [-width/2, width/2]^n (centered at 0),
// truncated to N_a Fourier modes.
SpectralField bump_profile(int n, int N_a, double width, double height = 1.0);
SpectralField constant_profile(int n, int N_a, double c);

struct GramianMatrix {
    CMat matrix;
    double T = 0.0;
    double s = 0.0;

    double smallest_eigenvalue() const;
    double largest_eigenvalue() const;
};

GramianMatrix assemble_internal_gramian(const InternalController& ctrl);
double observability_constant(const GramianMatrix& g);

struct HumOptions {
    bool tikhonov = false;
    double tikhonov_eps = 1e-10;
    double singular_tol = 1e-12;
    int samples_per_unit = 256;
    std::optional<Parity> parity;  // restrict the Gramian to odd/even coefficients
};

// Factorized HUM solver.  Weighted coordinates: x~ = <k>^s x.
class HumSolver {
public:
    HumSolver(InternalController ctrl, HumOptions opts = {});

    const InternalController& controller() const { return ctrl_; }
    const GramianMatrix& gramian() const { return gram_; }
    LatticePtr control_lattice() const { return ext_; }
    double lambda_min() const { return lambda_min_; }
    double lambda_max() const { return lambda_max_; }

    // Adjoint datum psi~ steering u0 to u1.
    CVec solve(const SpectralField& u0, const SpectralField& u1) const;
    ModalSignal control(const CVec& psi) const;
    // Closed-form W(t) u0 + int_0^t W(t - tau) a h(tau) dtau for the control of psi.
    SpectralField state_at(const SpectralField& u0, const CVec& psi, double t) const;
    // Controlled part only (u0 = 0), for many times at once.
    std::vector<CVec> controlled_part(const CVec& psi, const std::vector<double>& times) const;

private:
    InternalController ctrl_;
    HumOptions opts_;
    GramianMatrix gram_;
    LatticePtr ext_;
    CMat shape_;    // ext x L: h(t) = shape (psi .* e^{-i|k|^2 (t-T)})
    CMat kernel_;   // L x L: P a shape
    CMat basis_;    // L x L_sub orthonormal parity basis (identity if none)
    CMat inverse_;  // (Q^H M Q)^{-1}
    RVec wL_;       // <k>^s on the state lattice
    double lambda_min_ = 0.0;
    double lambda_max_ = 0.0;
};

struct InternalControlResult {
    InternalSignal signal;
    SpectralField achieved;
    double residual = 0.0;  // relative ||u(T) - u1||_s
    CVec psi;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
};

InternalControlResult hum_internal_control(const InternalController& ctrl, const SpectralField& u0,
                                           const SpectralField& u1, HumOptions opts = {});

// a_omega: Cosine-basis profile on Omega, extended evenly.  u0, u1: Sine (odd) or Cosine (even).
InternalControlResult internal_control_with_bc(Parity parity, const SpectralField& a_omega, double s, double T,
                                               const SpectralField& u0, const SpectralField& u1,
                                               HumOptions opts = {});

// Independent replay of u_t = i Delta u + a h: interaction-picture RK4 with the
// control evaluated from its modal form.  steps = 0 picks a frequency-adaptive count.
SpectralField replay(const InternalController& ctrl, const SpectralField& u0, const InternalSignal& h, int steps = 0);

// ||h||^2_{L^2(0,T; H^s)} by composite Gauss quadrature in time.
double control_norm_squared(const InternalSignal& h, double s, double T, int panels = 0);

double relative_residual(const SpectralField& achieved, const SpectralField& target, double s,
                         NormWeight w = NormWeight::Bracket);

}  // namespace schrolab::internal
