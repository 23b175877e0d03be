#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "schrolab/dirichlet_control.hpp"
#include "test_util.hpp"

using namespace schrolab;
using namespace schrolab::dirichlet;
using testutil::random_field;

namespace {
constexpr double kPi = std::numbers::pi;

double trapezoid_overlap(const SmoothController& g, int p, int q, int M) {
    const double h = kPi / M;
    double acc = 0.0;
    for (int j = 0; j <= M; ++j) {
        const double x = j * h;
        const double w = (j == 0 || j == M) ? 0.5 : 1.0;
        acc += w * g.rho(x) * std::sin(p * x) * std::sin(q * x);
    }
    return acc * h;
}
}  // namespace

TEST_CASE("smooth controller plateau and cutoff") {
    auto g = build_smooth_controller(2, 1.2, 3);
    CHECK(g.rho(0.0) == 1.0);
    CHECK(g.rho(kPi) == 0.0);
    CHECK(g.rho(1.2 / 8) == 1.0);
    CHECK(g.rho(0.3) == 1.0);
    CHECK(g.rho(0.6) == 0.0);
    const double h = 1e-5;
    CHECK(std::abs((g.rho(h) - g.rho(0.0)) / h) < 1e-8);
    for (int k = 0; k <= g.order; ++k) {
        // odd derivatives at the face edges vanish
        CHECK(std::abs(g.rho_derivative(0.0, 2 * k + 1)) < 1e-6);
        CHECK(std::abs(g.rho_derivative(kPi, 2 * k + 1)) < 1e-6);
    }
    // derivatives are continuous through the transition up to the order
    for (int k = 1; k <= g.order; ++k) {
        CHECK(std::abs(g.rho_derivative(0.3 + 1e-12, k)) < 1e-4);
        CHECK(std::abs(g.rho_derivative(0.6 - 1e-12, k)) < 1e-4);
    }
    // analytic derivative vs central differences inside the transition
    for (double s : {0.35, 0.45, 0.55}) {
        const double fd = (g.rho(s + 1e-6) - g.rho(s - 1e-6)) / 2e-6;
        CHECK(std::abs(fd - g.rho_derivative(s, 1)) < 1e-6);
    }
    for (double s = 0.3; s <= 0.6; s += 0.01) CHECK((g.rho(s) >= 0.0 && g.rho(s) <= 1.0));
    CHECK_THROWS_AS(build_smooth_controller(1, 0.0, 2), ConfigError);
    CHECK_THROWS_AS(build_smooth_controller(1, kPi, 2), ConfigError);
    // cosine coefficients reproduce rho
    auto c = rho_cosine_coefficients(g, 200);
    double r = 0.0;
    for (int k = 0; k <= 200; ++k) r += c[static_cast<std::size_t>(k)] * std::cos(k * 0.1);
    CHECK(std::abs(r - 1.0) < 1e-4);
}

TEST_CASE("face integrals") {
    auto g1 = build_smooth_controller(1, 1.0, 3, {0});
    const int p[1] = {3};
    const int q[1] = {5};
    CHECK(face_integral(g1, p, q, 0) == doctest::Approx(15.0).epsilon(1e-15));
    CHECK(face_integral(g1, p, q, 1) == 0.0);
    CHECK_THROWS_AS(face_integral(g1, p, q, 2), ConfigError);

    auto gu = uniform_controller(2);
    const int pp[2] = {2, 3};
    const int qq[2] = {2, 3};
    const int qr[2] = {1, 3};
    // face x_2 = 0 has id 2
    CHECK(face_integral(gu, pp, qq, 2) == doctest::Approx(9.0 * kPi / 2.0).epsilon(1e-14));
    CHECK(std::abs(face_integral(gu, pp, qr, 2)) < 1e-14);
    // opposite face carries (-1)^{p+q}
    const int qs[2] = {2, 4};
    CHECK(face_integral(gu, pp, qs, 3) == doctest::Approx(-12.0 * kPi / 2.0).epsilon(1e-14));

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> eps(0.5, 2.5);
    auto g = build_smooth_controller(2, eps(rng), 4);
    double err = 0.0;
    for (int a = 1; a <= 6; ++a)
        for (int b = 1; b <= 6; ++b) err = std::max(err, std::abs(axis_overlap(g, a, b) - trapezoid_overlap(g, a, b, 100000)));
    CHECK(err < 1e-9);
    const int P[2] = {4, 5};
    const int Q[2] = {2, 5};
    CHECK(std::abs(face_integral(g, P, Q, 0) - 8.0 * trapezoid_overlap(g, 5, 5, 100000)) < 1e-8);
}

TEST_CASE("time factor Phi") {
    const double T = 1.3;
    CHECK(std::abs(phi(4.0, 4.0, T) - cplx(0, T) * std::polar(1.0, -4.0 * T)) == 0.0);
    CHECK(std::abs(phi(4.0, 4.0 + 1e-6, T) - phi(4.0, 4.0, T)) < 1e-4);
    CHECK(std::abs(phi(1.0, 9.0, 0.0)) == 0.0);
}

TEST_CASE("S matrix: diagonal shell, column consistency with moments") {
    auto g = build_smooth_controller(2, 1.5, 3);
    auto L = make_lattice(2, 6, Basis::Sine);
    const double T = 0.8;
    MomentOperator mo(g, L);
    auto S = mo.assemble(T);
    for (std::size_t i = 0; i < L->size(); ++i) {
        const auto q = static_cast<Eigen::Index>(i);
        const cplx shell = -std::pow(2.0 / kPi, 2) * cplx(0, T) * std::polar(1.0, -double(L->norm2(i)) * T) * mo.pairing()(q, q);
        CHECK(std::abs(S.matrix(q, q) - shell) < 1e-14 * std::max(1.0, std::abs(shell)));
    }
    // |p| = |q| off-diagonal, e.g. (1,2) and (2,1)
    const int a[2] = {1, 2};
    const int b[2] = {2, 1};
    const auto ia = static_cast<Eigen::Index>(*L->find(a));
    const auto ib = static_cast<Eigen::Index>(*L->find(b));
    const cplx expect = -std::pow(2.0 / kPi, 2) * cplx(0, T) * std::polar(1.0, -5.0 * T) * mo.pairing()(ia, ib);
    CHECK(std::abs(S.matrix(ia, ib) - expect) < 1e-14);

    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::size_t> pick(0, L->size() - 1);
    for (int r = 0; r < 3; ++r) {
        SpectralField e(L);
        const auto p = pick(rng);
        e.coeffs()[static_cast<Eigen::Index>(p)] = 1.0;
        // evolve_moments builds its own pairing table
        auto u = evolve_moments(e, g, T);
        CHECK(testutil::max_abs_diff(u.coeffs(), S.matrix.col(static_cast<Eigen::Index>(p))) < 1e-10);
    }
    auto v = random_field(L, rng);
    auto w = random_field(L, rng);
    auto lhs = mo.evolve(v + cplx(2.0, 1.0) * w, 0.4);
    auto rhs = mo.evolve(v, 0.4) + cplx(2.0, 1.0) * mo.evolve(w, 0.4);
    CHECK(testutil::max_abs_diff(lhs.coeffs(), rhs.coeffs()) < 1e-12 * lhs.coeffs().cwiseAbs().maxCoeff());
    CHECK(mo.evolve(v, 0.0).coeffs().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("moment evolution matches the duality time-stepping replay") {
    auto g = build_smooth_controller(1, 1.0, 3, {0});
    auto L = make_lattice(1, 8, Basis::Sine);
    SpectralField v0(L);
    v0.coeffs()[2] = 1.0;
    SpectralField zero(L);
    for (double t : {0.3, 1.0}) {
        auto ref = replay_dirichlet(g, v0, L, zero, t, 10000);
        CHECK(testutil::max_abs_diff(evolve_moments(v0, g, t).coeffs(), ref.coeffs()) < 1e-7);
    }
    auto g2 = build_smooth_controller(2, 2.0, 3);
    auto L2 = make_lattice(2, 4, Basis::Sine);
    std::mt19937_64 rng(8);
    auto v2 = random_field(L2, rng);
    auto ref2 = replay_dirichlet(g2, v2, L2, SpectralField(L2), 0.5);
    CHECK(testutil::max_abs_diff(evolve_moments(v2, g2, 0.5).coeffs(), ref2.coeffs()) < 1e-9);
}

TEST_CASE("Dirichlet control: zero target, round trip, replayed n = 1 control") {
    auto g2 = build_smooth_controller(2, 2.0, 3);
    auto L2 = make_lattice(2, 6, Basis::Sine);
    auto S2 = assemble_S(g2, 1.0, L2);
    auto z = dirichlet_control(SpectralField(L2), S2, g2);
    CHECK(z.v0.coeffs().cwiseAbs().maxCoeff() == 0.0);
    for (const auto& f : z.trace.faces) CHECK(f.values.cwiseAbs().maxCoeff() == 0.0);

    std::mt19937_64 rng(13);
    auto v = random_field(L2, rng);
    SpectralField uT(L2, S2.matrix * v.coeffs());
    auto r2 = dirichlet_control(uT, S2, g2);
    CHECK(testutil::max_abs_diff(r2.v0.coeffs(), v.coeffs()) < 1e-9);
    CHECK(r2.trace.kind == "dirichlet_trace");
    CHECK(r2.trace.faces.size() == 2);

    auto g = build_smooth_controller(1, 1.0, 3, {0});
    auto L = make_lattice(1, 16, Basis::Sine);
    auto S = assemble_S(g, 1.0, L);
    SpectralField target(L);
    for (int p = 1; p <= 16; ++p) target.coeffs()[p - 1] = cplx(1.0, 0.5 * p) / std::pow(double(p), 3);
    auto r = dirichlet_control(target, S, g);
    CHECK(r.residual < 1e-8);
    CHECK(std::isfinite(r.condition));
    auto rep = replay_dirichlet(g, r.v0, L, SpectralField(L), 1.0);
    CHECK(sobolev_norm(rep - target, 0.0) / sobolev_norm(target, 0.0) < 1e-8);
    // emitted trace at x = 0 is the normal derivative of the adjoint flow
    const auto& f0 = r.trace.faces.front();
    cplx h = 0.0;
    for (int p = 1; p <= 16; ++p) h += -double(p) * r.v0.coeffs()[p - 1] * std::polar(1.0, -double(p * p) * f0.time_grid[5]);
    CHECK(std::abs(f0.values(5, 0) - h) < 1e-12 * std::max(1.0, std::abs(h)));

    SSolver solver(S);
    const auto ratios = isomorphism_ratios(solver, target, {-1.0, -0.5, 0.0, 0.4});
    for (double q : ratios) CHECK((std::isfinite(q) && q > 0.0));
}

TEST_CASE("singular S is reported") {
    // one small face patch and a very short horizon
    auto g = build_smooth_controller(2, 0.4, 3, {0});
    auto L = make_lattice(2, 8, Basis::Sine);
    auto S = assemble_S(g, 0.01, L);
    CHECK_THROWS_AS(SSolver{S}, SingularMatrixError);
}

TEST_CASE("convex weight: values, Hessian, third derivatives") {
    const double xn[2] = {-0.3, 0.5};
    auto w0 = convex_weight(xn, 0.2);
    CHECK(w0.value == 0.0);
    CHECK(w0.hessian.cwiseAbs().maxCoeff() == 0.0);

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    const double delta = 0.3;
    for (int r = 0; r < 20; ++r) {
        double x[3] = {u(rng), u(rng), u(rng)};
        auto w = convex_weight(x, delta);
        const double h = 1e-5;
        for (int j = 0; j < 3; ++j) {
            double xp[3] = {x[0], x[1], x[2]}, xm[3] = {x[0], x[1], x[2]};
            xp[j] += h;
            xm[j] -= h;
            auto a = convex_weight(xp, delta);
            auto b = convex_weight(xm, delta);
            CHECK(((a.gradient - b.gradient) / (2 * h) - w.hessian.col(j)).cwiseAbs().maxCoeff() < 1e-6);
            const double lap_p = a.hessian.trace(), lap_m = b.hessian.trace();
            CHECK(std::abs((lap_p - lap_m) / (2 * h) - w.grad_laplacian[j]) < 1e-6);
            CHECK(std::abs((a.value - b.value) / (2 * h) - w.gradient[j]) < 1e-6);
        }
    }
}

TEST_CASE("convexity certificate below the threshold") {
    for (int n : {2, 3}) {
        const double delta = 0.9 * (6.0 / 13.0) / (n - 1);
        std::mt19937_64 rng(19 + n);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        double worst = 1e300;
        int kept = 0;
        while (kept < 500) {
            double x[3] = {u(rng), u(rng), u(rng)};
            double r2 = 0.0;
            for (int i = 0; i < n; ++i) r2 += x[i] * x[i];
            if (r2 >= 1.0 || x[0] < 1e-3) continue;
            ++kept;
            auto w = convex_weight(std::span<const double>(x, static_cast<std::size_t>(n)), delta);
            // H minus the quadratic lower bound is positive semidefinite
            Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
            D(0, 0) = (12.0 - 26.0 * (n - 1) * delta) * x[0] * x[0];
            for (int j = 1; j < n; ++j) D(j, j) = 2.0 * delta * std::pow(x[0], 4) * x[j] * x[j];
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w.hessian - D);
            CHECK(es.eigenvalues().minCoeff() > -1e-13);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eh(w.hessian);
            worst = std::min(worst, eh.eigenvalues().minCoeff() / (x[0] * x[0]));
        }
        CHECK(worst > 0.0);
    }
}

TEST_CASE("library convexity certificate at the planar threshold") {
    auto c = convexity_certificate(2, 0.9 * 6.0 / 13.0, 10000, 5);
    CHECK(c.samples == 10000);
    CHECK(c.holds);
    CHECK(c.min_hessian > 0.0);
    CHECK_THROWS_AS(convexity_certificate(1, 0.1, 10, 1), ConfigError);
}

TEST_CASE("multiplier identity") {
    auto L1 = make_lattice(1, 6, Basis::Sine);
    CHECK(multiplier_identity_residual(SpectralField(L1), linear_multiplier(1), 1.0) == 0.0);
    SpectralField one(L1);
    one.coeffs()[3] = 1.0;
    auto t = multiplier_identity(one, linear_multiplier(1), 1.0);
    // closed form: both sides equal T pi p^2 / 2
    CHECK(t.boundary == doctest::Approx(16.0 * kPi / 2.0).epsilon(1e-12));
    CHECK(t.residual < 1e-6);

    std::mt19937_64 rng(29);
    auto L2 = make_lattice(2, 8, Basis::Sine);
    auto v = random_field(L2, rng, 3.0);
    auto q = convex_multiplier(2, 0.3);
    CHECK(multiplier_identity_residual(v, q, 1.0) < 1e-5);
    CHECK(multiplier_identity_residual(v, linear_multiplier(2), 1.0) < 1e-5);
    // refinement in time
    std::vector<double> res;
    for (int panels : {4, 8, 16}) {
        MultiplierOptions o;
        o.time_nodes = 8;
        o.time_panels = panels;
        res.push_back(multiplier_identity_residual(v, q, 1.0, o));
    }
    MESSAGE("time refinement residuals: " << res[0] << ", " << res[1] << ", " << res[2]);
    CHECK(res[1] <= 0.5 * res[0]);
    CHECK((res[2] <= 0.5 * res[1] || res[2] < 1e-12));
    CHECK_THROWS_AS(multiplier_identity_residual(random_field(make_lattice(3, 2, Basis::Sine), rng), q, 1.0), ConfigError);
}
