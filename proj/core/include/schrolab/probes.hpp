#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "schrolab/bourgain.hpp"
#include "schrolab/spectral.hpp"

namespace schrolab::bourgain {

struct RatioStats {
    std::vector<double> ratios;          // at the requested band
    std::vector<double> refined_ratios;  // at twice the band
    double max = 0.0;
    double median = 0.0;
    double refined_max = 0.0;
    double refinement_delta = 0.0;  // |refined_max - max| / max
    bool stable = true;             // refinement_delta < 5%
};

RatioStats summarize(std::vector<double> ratios, std::vector<double> refined);

struct ProbeOptions {
    int n = 1;
    int N = 8;
    double T = 1.0;
    int band = 32;
    int window_order = 1;
    double sigma_max = 8.0;  // detuning range of near-free samples
    double decay = 1.0;      // random amplitudes ~ <k>^{-s-decay}
    double scale = 1.0;      // every generated input is multiplied by this
    std::uint64_t seed = 1;
};

// a_k e^{-i(|k|^2 + sigma_k) t} per mode.
struct NearFree {
    SpectralField amp;
    RVec sigma;

    CVec at(double t) const;
    double max_detuning() const;
};

NearFree random_near_free(LatticePtr lattice, double s, const ProbeOptions& opts, std::uint64_t stream);

enum class LinearKind { Homogeneous, Duhamel };

// ||W(t) phi||_{X^T_{s,b}} / ||phi||_s.
double homogeneous_ratio(const SpectralField& phi, double s, double b, double T, const SpaceTimeOptions& opts);
// Forcing f_k = a_k e^{-i(|k|^2 + sigma_k) t}, u = int_0^t W(t - tau) f(tau) dtau:
// ||u||_{X^T_{s,b}} / ||f||_{X^T_{s,b-1}}.
double duhamel_ratio(const NearFree& f, double s, double b, double T, const SpaceTimeOptions& opts);
// Closed form of u_k for the near-free forcing.
CVec duhamel_near_free(const NearFree& f, double t);

RatioStats linear_estimate_probe(LinearKind kind, int samples, double s, double b, const ProbeOptions& opts);

// Windowed inputs eta(t) u_i(t); product of the first alpha1 plain factors and
// alpha2 conjugated ones, computed at every time sample.
double multilinear_ratio(const std::vector<NearFree>& inputs, int alpha1, double s, double b, double T,
                         const SpaceTimeOptions& opts);

struct MultilinearReport {
    int alpha = 0;
    int n = 0;
    int alpha1 = 0;
    int alpha2 = 0;
    double b = 0.0;
    double s = 0.0;
    double s_threshold = 0.0;
    double s_contrast = 0.0;
    RatioStats main;
    RatioStats contrast;
};

// Requires s > s_{alpha,n}.  The contrast run uses s_contrast (default s_{alpha,n} - 0.1).
MultilinearReport multilinear_ratio_probe(int alpha, int n, double s, int samples, const ProbeOptions& opts,
                                          std::optional<int> alpha1 = std::nullopt,
                                          std::optional<double> s_contrast = std::nullopt);

struct BilinearReport {
    double s = 0.0;
    double b = 0.0;
    double b_prime = 0.0;
    RatioStats torus;
    RatioStats rectangle;
    std::vector<double> extension_factor;  // rectangle / torus per sample
};

// ||conj(v1) conj(v2)||_{X_{s,b'}} / (||v1||_{X_{s,b}} ||v2||_{X_{s,b}}) on T^2, and on (0, pi)^2 with
// Sine data and the even product measured on the Cosine lattice.  The torus data are the odd extensions.
struct BilinearRatios {
    double torus = 0.0;
    double rectangle = 0.0;
};

BilinearRatios conjugate_bilinear_ratio(const NearFree& v1, const NearFree& v2, double s, double b, double b_prime,
                                        double T, const SpaceTimeOptions& opts);
BilinearReport conjugate_bilinear_probe(double s, double b, int samples, const ProbeOptions& opts,
                                        double b_prime = -0.45);

enum class SumKind { Resonance, Moment, Shifted };

struct SumParams {
    double gamma = 1.0;  // resonance sum
    double lambda_max = 32.0;
    double lambda_step = 0.5;
    long k_max = 10000;

    double s = -1.0;  // moment sum
    double delta = 0.4;
    double k = 3.0;
    int n = 2;
    int p_max = 32;
    int q_max = 256;

    double sigma = 0.0;  // shifted sum (k shared with the moment sum)
    int n_max = 64;
    long m_max = 100000;
};

struct SumReport {
    std::string kind;
    std::vector<std::pair<double, double>> curve;  // (parameter, normalized sum)
    double constant = 0.0;       // sup of the normalized sum over the full range
    double constant_half = 0.0;  // sup over the first half of the range
    double truncation_delta = 0.0;  // relative change of the constant when the summation range doubles
    bool bound_ok = false;          // finite, stable in range and truncation within 5%
};

SumReport lattice_sum_probe(SumKind kind, const SumParams& params);

}  // namespace schrolab::bourgain
