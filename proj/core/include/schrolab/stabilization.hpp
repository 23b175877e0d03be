#pragma once

#include <vector>

#include "schrolab/nonlinear_control.hpp"
#include "schrolab/probes.hpp"
#include "schrolab/spectral.hpp"
#include "schrolab/trajectory.hpp"

namespace schrolab::stab {

enum class Method { Eigen, Duhamel };

// Largest lattice accepted by the dense routes.
constexpr std::size_t kDenseLimit = 33 * 33;

// Truncated A_a = i Delta - P a^2 on an Exponential lattice; a real, Exponential basis.
CMat damped_generator(const SpectralField& a, const ModeLattice& lattice);

class DampedFlow {
public:
    DampedFlow(const SpectralField& a, LatticePtr lattice);

    const CMat& generator() const { return A_; }
    const LatticePtr& lattice() const { return lattice_; }
    CMat propagator(double t) const;
    double spectral_abscissa() const;
    // ||e^{tA}|| as an operator on H^s.
    double operator_norm(double t, double s) const;
    bool diagonal() const { return diagonal_; }

private:
    LatticePtr lattice_;
    CMat A_;
    bool diagonal_ = false;
};

SpectralField damped_propagate(const SpectralField& u0, const SpectralField& a, double t,
                               Method method = Method::Eigen);
double spectral_abscissa(const SpectralField& a, LatticePtr lattice);

struct DecayFit {
    double nu = 0.0;
    double C = 0.0;
    double s = 0.0;
    double t_start = 0.0;
    double t_end = 0.0;
    double r2 = 0.0;
    int samples = 0;
};

// Least-squares line through log(norms); C is relative to norm0.  Throws NumericError
// (norms attached) when fewer than 10 samples or r2 < 0.99.
DecayFit fit_log_norms(const std::vector<double>& times, const std::vector<double>& norms, double s, double norm0);

// Linear decay of ||W_a(t) u0||_s on [t_start, t_max]; t_start discards 2/nu_est of transient.
DecayFit decay_fit(const SpectralField& a, const SpectralField& u0, double s, double t_max, int samples = 64);

struct StabilizeOptions {
    double s = 0.0;
    int steps_per_unit = 256;
    double tol = 1e-12;
    int max_iter = 50;
    double contraction_limit = 0.55;
    double window_target = 0.125;  // C e^{-nu T} for the window length
    int samples_per_window = 32;
};

struct WindowRecord {
    double t_start = 0.0;
    double t_end = 0.0;
    double norm_start = 0.0;
    double norm_end = 0.0;
    double factor = 0.0;  // norm_end / norm_start
    int iterates = 0;
    std::vector<double> contraction_factors;
};

struct StabilizationResult {
    double window = 0.0;
    double window_operator_norm = 0.0;  // ||W_a(window)||_{H^s -> H^s}
    std::vector<WindowRecord> windows;
    std::vector<double> times;
    std::vector<double> norms;
    DecayFit linear;
    DecayFit fit;
    SpectralField final_state;
};

// Windowed Picard solution of u = W_a(t) u_k + i int W_a(t - tau) N(u) on consecutive windows;
// throws NumericError when a converged window fails to halve the H^s norm.
StabilizationResult nonlinear_stabilize(const SpectralField& u0, const SpectralField& a,
                                        const nonlinear::NonlinearitySpec& spec, double t_max,
                                        const StabilizeOptions& opts = {});

// Independent interaction-picture RK4 of u_t = i Delta u + i N(u) - a^2 u.
SpectralField replay_damped(const SpectralField& u0, const SpectralField& a, const nonlinear::NonlinearitySpec& spec,
                            double t, int steps = 0);

enum class DampedKind { Homogeneous, Duhamel };

// Homogeneous: ||W_a(t) phi||_{X^T_{s,b}} / ||phi||_s.  Duhamel: ||int W_a(t - tau) f||_{X^T_{s,b}} /
// ||f||_{X^T_{s,b-1}} for near-free forcing.  Inputs as in linear_estimate_probe.
double damped_homogeneous_ratio(const DampedFlow& flow, const SpectralField& phi, double s, double b, double T,
                                const bourgain::SpaceTimeOptions& opts);
double damped_duhamel_ratio(const DampedFlow& flow, const bourgain::NearFree& f, double s, double b, double T,
                            const bourgain::SpaceTimeOptions& opts);
bourgain::RatioStats damped_estimate_probes(DampedKind kind, const SpectralField& a, int samples, double s, double b,
                                            const bourgain::ProbeOptions& opts);

}  // namespace schrolab::stab
