#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "schrolab/internal_control.hpp"
#include "schrolab/stabilization.hpp"
#include "test_util.hpp"

using namespace schrolab;
using namespace schrolab::stab;
using testutil::random_field;

namespace {
constexpr double kPi = std::numbers::pi;

SpectralField bump(double height) { return internal::bump_profile(1, 16, kPi / 2.0, height); }
}  // namespace

TEST_CASE("damped flow: zero and constant damping") {
    std::mt19937_64 rng(2);
    auto L = make_lattice(1, 8, Basis::Exponential);
    auto u0 = random_field(L, rng);
    auto zero = internal::constant_profile(1, 2, 0.0);
    CHECK(testutil::max_abs_diff(damped_propagate(u0, zero, 0.8).coeffs(), free_propagate(u0, 0.8).coeffs()) < 1e-14);
    CHECK(spectral_abscissa(zero, L) == doctest::Approx(0.0).epsilon(1e-14));

    const double c = 0.7;
    auto a = internal::constant_profile(1, 2, c);
    for (auto m : {Method::Eigen, Method::Duhamel}) {
        auto u = damped_propagate(u0, a, 1.3, m);
        const CVec want = std::exp(-c * c * 1.3) * free_propagate(u0, 1.3).coeffs();
        CHECK(testutil::max_abs_diff(u.coeffs(), want) < 1e-12);
    }
    CHECK(spectral_abscissa(a, L) == doctest::Approx(-c * c).epsilon(1e-12));
    CHECK_THROWS_AS(DampedFlow(a, make_lattice(2, 17, Basis::Exponential)), ConfigError);
}

TEST_CASE("damped flow: eigen and Duhamel routes agree, semigroup, energy decay") {
    std::mt19937_64 rng(3);
    auto L = make_lattice(1, 16, Basis::Exponential);
    auto u0 = random_field(L, rng, 1.0);
    auto a = bump(1.0);
    auto e = damped_propagate(u0, a, 1.0, Method::Eigen);
    auto d = damped_propagate(u0, a, 1.0, Method::Duhamel);
    CHECK((e - d).coeffs().norm() < 1e-8 * u0.coeffs().norm());

    DampedFlow flow(a, L);
    const CMat P1 = flow.propagator(0.4), P2 = flow.propagator(0.9), P12 = flow.propagator(1.3);
    CHECK((P1 * P2 - P12).cwiseAbs().maxCoeff() < 1e-10);
    const CMat step = flow.propagator(0.01);
    CVec u = u0.coeffs();
    double prev = u.norm();
    for (int j = 0; j < 300; ++j) {
        u = step * u;
        CHECK(u.norm() <= prev + 1e-10);
        prev = u.norm();
    }
    CHECK(flow.spectral_abscissa() < 0.0);
}

TEST_CASE("decay fits: constant damping, slowest eigenmode, bump against the spectral abscissa") {
    std::mt19937_64 rng(5);
    auto L = make_lattice(1, 16, Basis::Exponential);
    auto u0 = random_field(L, rng, 1.0);
    const double c = 0.8;
    auto fc = decay_fit(internal::constant_profile(1, 2, c), u0, 0.0, 5.0);
    CHECK(std::abs(fc.nu - c * c) < 1e-6);
    CHECK(fc.r2 > 0.99);
    CHECK(fc.samples >= 10);

    auto a = bump(2.0);
    DampedFlow flow(a, L);
    Eigen::ComplexEigenSolver<CMat> es(flow.generator());
    Eigen::Index imax;
    es.eigenvalues().real().maxCoeff(&imax);
    SpectralField slow(L, es.eigenvectors().col(imax));
    auto fs = decay_fit(a, slow, 0.0, 8.0);
    CHECK(std::abs(fs.nu + es.eigenvalues()[imax].real()) < 1e-6);

    const double abscissa = flow.spectral_abscissa();
    auto f0 = decay_fit(a, u0, 0.0, 40.0 / -abscissa);
    auto f2 = decay_fit(a, u0, 2.0, 40.0 / -abscissa);
    CHECK(f0.nu > 0.0);
    CHECK(f2.nu > 0.0);
    CHECK(f0.nu / -abscissa == doctest::Approx(1.0).epsilon(0.1));
    CHECK(f2.nu / f0.nu == doctest::Approx(1.0).epsilon(0.1));
    CHECK_THROWS_AS(decay_fit(internal::constant_profile(1, 2, 0.0), u0, 0.0, 5.0), ConfigError);
}

TEST_CASE("fit rejects non-exponential data") {
    std::vector<double> t, n;
    for (int i = 0; i < 20; ++i) {
        t.push_back(i);
        n.push_back(1.0 + (i % 2 ? 10.0 : 0.0));
    }
    CHECK_THROWS_AS(fit_log_norms(t, n, 0.0, 1.0), NumericError);
    CHECK_THROWS_AS(fit_log_norms({0.0, 1.0}, {1.0, 0.5}, 0.0, 1.0), NumericError);
}

TEST_CASE("nonlinear stabilization halves the norm per window") {
    std::mt19937_64 rng(7);
    auto L = make_lattice(1, 16, Basis::Exponential);
    auto u0 = random_field(L, rng, 2.0);
    u0.coeffs() *= 1e-2 / sobolev_norm(u0, 0.0);
    auto a = internal::bump_profile(1, 16, 4.0, 1.0);
    const auto spec = nonlinear::make_spec(1.0, 2, 1);

    auto lin = nonlinear_stabilize(u0, a, nonlinear::make_spec(0.0, 2, 1), 1.0);
    auto probe = damped_propagate(u0, a, lin.window);
    CHECK(testutil::max_abs_diff(lin.final_state.coeffs(), probe.coeffs()) < 1e-10 * u0.coeffs().norm());

    StabilizeOptions o;
    const double tmax = 5.0 * lin.window;
    auto r = nonlinear_stabilize(u0, a, spec, tmax, o);
    CHECK(r.windows.size() >= 5);
    for (const auto& w : r.windows) {
        CHECK(w.factor <= 0.5);
        CHECK(w.iterates >= 2);
    }
    CHECK(r.fit.nu > 0.0);
    CHECK(r.fit.nu / r.linear.nu == doctest::Approx(1.0).epsilon(0.25));

    // independent replay of the first window
    auto rep = replay_damped(u0, a, spec, r.window);
    auto first = nonlinear_stabilize(u0, a, spec, r.window, o);
    CHECK((rep - first.final_state).coeffs().norm() < 1e-6 * first.final_state.coeffs().norm());

    // local uniformity: half the data still converges and decays
    SpectralField half = 0.5 * u0;
    auto rh = nonlinear_stabilize(half, a, spec, 2.0 * r.window, o);
    CHECK(rh.windows.size() == 2);
    for (std::size_t k = 0; k < 2; ++k)
        CHECK(rh.windows[k].factor == doctest::Approx(r.windows[k].factor).epsilon(0.05));
}

TEST_CASE("damped estimate probes") {
    bourgain::ProbeOptions po;
    po.N = 6;
    po.band = 16;
    auto zero = internal::constant_profile(1, 2, 0.0);
    for (auto [dk, lk, b] : {std::tuple{DampedKind::Homogeneous, bourgain::LinearKind::Homogeneous, 0.6},
                             std::tuple{DampedKind::Duhamel, bourgain::LinearKind::Duhamel, 0.6}}) {
        auto d = damped_estimate_probes(dk, zero, 8, 0.5, b, po);
        auto l = bourgain::linear_estimate_probe(lk, 8, 0.5, b, po);
        for (std::size_t i = 0; i < 8; ++i) CHECK(d.ratios[i] == doctest::Approx(l.ratios[i]).epsilon(1e-10));
    }
    double prev = 1e300;
    for (double c : {0.5, 1.0, 2.0}) {
        auto st = damped_estimate_probes(DampedKind::Homogeneous, internal::constant_profile(1, 2, c), 8, 0.0, 0.6, po);
        CHECK(std::isfinite(st.max));
        CHECK(st.max < prev);
        prev = st.max;
    }
    auto bumpy = internal::bump_profile(1, 6, 2.0, 1.0);
    auto h = damped_estimate_probes(DampedKind::Homogeneous, bumpy, 100, 0.0, 0.6, po);
    auto du = damped_estimate_probes(DampedKind::Duhamel, bumpy, 20, 0.0, 0.6, po);
    CHECK((std::isfinite(h.max) && h.stable));
    CHECK((std::isfinite(du.max) && du.stable));
    CHECK_THROWS_AS(damped_estimate_probes(DampedKind::Duhamel, bumpy, 4, 0.0, 0.4, po), ConfigError);
}
