#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "schrolab/control_signal.hpp"
#include "schrolab/spectral.hpp"

namespace schrolab::dirichlet {

// Faces of (0, pi)^n are numbered id = 2 * axis + side, side 0 at x_axis = 0 and side 1 at x_axis = pi.
inline int face_count(int n) { return 2 * n; }
inline int face_axis(int id) { return id / 2; }
inline int face_side(int id) { return id % 2; }

// g(x) = prod_i rho(x_i) on the active faces, zero on the others.
struct SmoothController {
    int n = 1;
    double epsilon = 1.0;
    int order = 3;
    bool uniform = false;   // rho == 1
    std::vector<int> faces; // active face ids

    double rho(double s) const;
    double rho_derivative(double s, int k) const;
    bool face_active(int id) const;
    // Transition interval of rho; empty for the uniform profile.
    double plateau_end() const { return epsilon / 4.0; }
    double support_end() const { return epsilon / 2.0; }
    double g(std::span<const double> x) const;
};

// faces empty: all 2n faces are active.
SmoothController build_smooth_controller(int n, double epsilon, int order, std::vector<int> faces = {});
SmoothController uniform_controller(int n, std::vector<int> faces = {});

// Cosine coefficients of rho on (0, pi), c_0 + sum c_k cos(k x), k = 0..M.
std::vector<double> rho_cosine_coefficients(const SmoothController& g, int M);

// int_0^pi rho(x) sin(p x) sin(q x) dx.
double axis_overlap(const SmoothController& g, int p, int q);

double face_integral(const SmoothController& g, std::span<const int> p, std::span<const int> q, int face);

// Phi_T(a, b) = (e^{-i a T} - e^{-i b T}) / (b - a), Phi_T(a, a) = i T e^{-i a T}.
cplx phi(double a, double b, double T);

struct SMatrix {
    CMat matrix;  // rows q, columns p
    double T = 0.0;
    LatticePtr lattice;
};

// Boundary pairing I(g, p, q) summed over faces, tabulated on a Sine lattice.
class MomentOperator {
public:
    MomentOperator(SmoothController g, LatticePtr lattice);

    const SmoothController& controller() const { return g_; }
    const LatticePtr& lattice() const { return lattice_; }
    const Eigen::MatrixXd& pairing() const { return I_; }

    SMatrix assemble(double T) const;
    SpectralField evolve(const SpectralField& v0, double t) const;

private:
    SmoothController g_;
    LatticePtr lattice_;
    Eigen::MatrixXd I_;  // I(q, p)
};

SMatrix assemble_S(const SmoothController& g, double T, LatticePtr lattice);
SpectralField evolve_moments(const SpectralField& v0, const SmoothController& g, double t);

// d/dnu of prod sin(p_i x_i) at the face points.
CMat normal_derivative_matrix(const ModeLattice& lat, int face, const std::vector<std::vector<double>>& grid);

struct DirichletOptions {
    int samples_per_unit = 256;
    int points_per_axis = 0;  // face grid points per transverse axis; 0 picks 4N
    double cond_limit = 1e12;
    double s = 0.0;           // regularity index used for residual reporting
};

struct DirichletResult {
    SpectralField v0;
    BoundarySignal trace;
    SpectralField achieved;
    double residual = 0.0;
    double condition = 0.0;
};

DirichletResult dirichlet_control(const SpectralField& u_T, const SMatrix& S, const SmoothController& g,
                                  DirichletOptions opts = {});

// Solves S v0 = u through a column-pivoted QR, checking cond(S) against the limit.
class SSolver {
public:
    explicit SSolver(const SMatrix& S, double cond_limit = 1e12);
    CVec solve(const CVec& u) const;
    double condition() const { return cond_; }

private:
    Eigen::ColPivHouseholderQR<CMat> qr_;
    double cond_ = 0.0;
};

BoundarySignal synthesize_trace(const SpectralField& v0, const SmoothController& g, double T,
                                int samples_per_unit, int points_per_axis);

// Extra right-hand side du/dt (Sine coefficients) of the state on `lattice`.
using SourceTerm = std::function<CVec(double t, const CVec& u)>;

// Independent replay of the boundary-forced equation with u = g h on the boundary,
// h = d/dnu W_D(t) v0: duality form per mode, RK4 in the interaction picture, boundary
// integrals by composite Gauss on the faces.  steps = 0 picks a frequency-adaptive count.
SpectralField replay_dirichlet(const SmoothController& g, const SpectralField& v0, LatticePtr lattice,
                               const SpectralField& u0, double T, int steps = 0, const SourceTerm& source = {});

// ||v0||_{s+2} / ||u_T||_s (Laplacian weight) for v0 = S^{-1} u_T.
std::vector<double> isomorphism_ratios(const SSolver& solver, const SpectralField& u_T, const std::vector<double>& s);

struct ConvexWeight {
    double value = 0.0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;
    Eigen::VectorXd grad_laplacian;
};

// theta(x) = (x1^+)^4 (1 + delta sum_{j>=2} (x_j^+)^4).
ConvexWeight convex_weight(std::span<const double> x, double delta);

// Vector field q with its Jacobian Dq(k, j) = dq_k/dx_j and grad(div q).
struct MultiplierField {
    std::function<void(std::span<const double> x, Eigen::VectorXd& q, Eigen::MatrixXd& Dq,
                       Eigen::VectorXd& grad_div)>
        eval;
};

MultiplierField linear_multiplier(int n);
MultiplierField convex_multiplier(int n, double delta);

struct ConvexityCertificate {
    int samples = 0;
    double min_margin = 0.0;   // min lambda_min(H - diag((12 - 26(n-1)delta) x1^2, 2 delta x1^4 x_j^2))
    double min_hessian = 0.0;  // min lambda_min(H(x))
    bool holds = false;        // margin >= -1e-13 and min_hessian > 0 everywhere
};

// Hessian bound of theta on uniform samples of (0, 1)^n inside the unit ball (x1 >= 1e-3).
ConvexityCertificate convexity_certificate(int n, double delta, int samples, std::uint64_t seed);

struct MultiplierOptions {
    int space_nodes = 64;
    int time_nodes = 64;
    int time_panels = 0;  // 0: frequency-adaptive
};

struct MultiplierTerms {
    double boundary = 0.0;
    double endpoint = 0.0;
    double div_term = 0.0;
    double jacobian_term = 0.0;
    double residual = 0.0;
};

// Both sides of the multiplier identity for v = W_D(t) v0, n in {1, 2}.
MultiplierTerms multiplier_identity(const SpectralField& v0, const MultiplierField& q, double T,
                                    MultiplierOptions opts = {});
double multiplier_identity_residual(const SpectralField& v0, const MultiplierField& q, double T,
                                    MultiplierOptions opts = {});

}  // namespace schrolab::dirichlet
