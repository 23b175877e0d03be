#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "schrolab/spectral.hpp"
#include "test_util.hpp"

using namespace schrolab;
using testutil::random_field;

namespace {
constexpr double kPi = std::numbers::pi;

// Direct convolution of Exponential coefficient arrays, projected onto out.
SpectralField direct_convolution(const SpectralField& f, const SpectralField& g, bool cf, bool cg, int outN) {
    const int n = f.lattice().dim();
    auto out = make_lattice(n, outN, Basis::Exponential);
    SpectralField r(out);
    std::vector<int> k(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < f.lattice().size(); ++i)
        for (std::size_t j = 0; j < g.lattice().size(); ++j) {
            auto a = f.lattice().index(i);
            auto b = g.lattice().index(j);
            for (int d = 0; d < n; ++d) k[d] = (cf ? -a[d] : a[d]) + (cg ? -b[d] : b[d]);
            auto pos = out->find(k);
            if (!pos) continue;
            cplx fa = f.coeffs()[static_cast<Eigen::Index>(i)];
            cplx gb = g.coeffs()[static_cast<Eigen::Index>(j)];
            r.coeffs()[static_cast<Eigen::Index>(*pos)] += (cf ? std::conj(fa) : fa) * (cg ? std::conj(gb) : gb);
        }
    return r;
}
}  // namespace

TEST_CASE("lattice index sets and norm tables") {
    auto s = make_lattice(1, 2, Basis::Sine);
    CHECK(s->size() == 2);
    CHECK(s->index(0)[0] == 1);
    CHECK(s->norm2(1) == 4);
    auto e = make_lattice(2, 1, Basis::Exponential);
    CHECK(e->size() == 9);
    const int k[2] = {-1, 1};
    CHECK(e->norm2(*e->find(k)) == 2);
    auto c = make_lattice(2, 1, Basis::Cosine);
    CHECK(c->size() == 4);
    CHECK(c->norm2(0) == 0);
    CHECK_THROWS_AS(make_lattice(0, 2, Basis::Sine), ConfigError);
    CHECK_THROWS_AS(make_lattice(1, 0, Basis::Sine), ConfigError);
}

TEST_CASE("transforms: basis functions and round trips") {
    auto lat = make_lattice(1, 4, Basis::Sine);
    PhysicalGrid g{1, 16, Basis::Sine, {}};
    for (int j = 0; j <= 16; ++j) g.values.push_back(std::sin(g.coordinate(j)));
    auto f = to_spectral(g, lat);
    CHECK(std::abs(f.coeffs()[0] - 1.0) < 1e-14);
    CHECK(f.coeffs().tail(3).cwiseAbs().maxCoeff() < 1e-14);

    auto tor = make_lattice(1, 4, Basis::Exponential);
    PhysicalGrid one{1, 10, Basis::Exponential, std::vector<cplx>(10, 1.0)};
    auto c = to_spectral(one, tor);
    CHECK(std::abs(c.coeffs()[4] - 1.0) < 1e-14);
    CHECK(c.coeffs().cwiseAbs().sum() - 1.0 < 1e-13);

    std::mt19937_64 rng(7);
    for (Basis b : {Basis::Exponential, Basis::Sine, Basis::Cosine})
        for (int n : {1, 2})
            for (int N : {8, 32}) {
                if (n == 2 && N == 32 && b == Basis::Exponential) continue;
                auto L = make_lattice(n, N, b);
                auto f0 = random_field(L, rng);
                auto back = to_spectral(to_physical(f0, 2 * N + 2), L);
                CHECK(testutil::max_abs_diff(back.coeffs(), f0.coeffs()) < 1e-12 * f0.coeffs().cwiseAbs().maxCoeff());
            }
    CHECK_THROWS_AS(to_physical(f, 9), ConfigError);
}

TEST_CASE("sobolev norms") {
    auto lat = make_lattice(1, 3, Basis::Exponential);
    SpectralField f(lat);
    const int k[1] = {2};
    f.coeffs()[static_cast<Eigen::Index>(*lat->find(k))] = 1.0;
    CHECK(std::abs(sobolev_norm(f, 1.0) - std::sqrt(5.0)) < 1e-15);
    std::mt19937_64 rng(3);
    auto g = random_field(make_lattice(2, 5, Basis::Cosine), rng);
    CHECK(std::abs(sobolev_norm(g, 0.0) - g.coeffs().norm()) < 1e-12);
    // weights s and -s applied in sequence compose to the l2 norm
    SpectralField h = g;
    for (std::size_t i = 0; i < g.lattice().size(); ++i)
        h.coeffs()[static_cast<Eigen::Index>(i)] *= g.lattice().weight(i, -1.3);
    CHECK(std::abs(sobolev_norm(h, 1.3) - g.coeffs().norm()) < 1e-12);
}

TEST_CASE("free propagation: identities, norm conservation, group law") {
    std::mt19937_64 rng(11);
    for (Basis b : {Basis::Exponential, Basis::Sine, Basis::Cosine}) {
        auto L = make_lattice(2, 6, b);
        auto f = random_field(L, rng);
        CHECK(testutil::max_abs_diff(free_propagate(f, 0.0).coeffs(), f.coeffs()) == 0.0);
        for (double s : {-1.0, 0.0, 0.5, 1.3, 2.0})
            for (double t : {0.1, 1.0, 10.0})
                CHECK(std::abs(sobolev_norm(free_propagate(f, t), s) - sobolev_norm(f, s)) <
                      1e-13 * sobolev_norm(f, s));
        auto g1 = free_propagate(free_propagate(f, 0.7), 1.9);
        auto g2 = free_propagate(f, 2.6);
        CHECK(testutil::max_abs_diff(g1.coeffs(), g2.coeffs()) < 1e-13 * f.coeffs().cwiseAbs().maxCoeff());
    }
    auto T = make_lattice(1, 8, Basis::Exponential);
    auto f = random_field(T, rng);
    CHECK(testutil::max_abs_diff(free_propagate(f, 2 * kPi).coeffs(), f.coeffs()) < 1e-12);
}

TEST_CASE("pointwise products are dealiased exactly") {
    auto L = make_lattice(1, 4, Basis::Exponential);
    SpectralField e1(L);
    const int one[1] = {1};
    const int two[1] = {2};
    const int zero[1] = {0};
    e1.coeffs()[static_cast<Eigen::Index>(*L->find(one))] = 1.0;
    auto sq = pointwise_product(e1, e1);
    CHECK(std::abs(sq.coeffs()[static_cast<Eigen::Index>(*L->find(two))] - 1.0) < 1e-15);
    auto mod = pointwise_product(e1, e1, false, true);
    CHECK(std::abs(mod.coeffs()[static_cast<Eigen::Index>(*L->find(zero))] - 1.0) < 1e-15);
    CHECK(mod.coeffs().cwiseAbs().sum() - 1.0 < 1e-14);

    std::mt19937_64 rng(5);
    for (int n : {1, 2}) {
        auto Ln = make_lattice(n, 4, Basis::Exponential);
        auto f = random_field(Ln, rng);
        auto g = random_field(Ln, rng);
        for (bool cf : {false, true})
            for (bool cg : {false, true}) {
                auto p = pointwise_product(f, g, cf, cg);
                auto d = direct_convolution(f, g, cf, cg, 4);
                CHECK(testutil::max_abs_diff(p.coeffs(), d.coeffs()) < 1e-13 * d.coeffs().cwiseAbs().maxCoeff());
            }
        const Factor three[3] = {{&f, false}, {&g, true}, {&f, false}};
        auto p3 = multiply(three, 8);
        auto d3 = direct_convolution(direct_convolution(f, g, false, true, 8), f, false, false, 8);
        CHECK(testutil::max_abs_diff(p3.coeffs(), d3.coeffs()) < 1e-12 * d3.coeffs().cwiseAbs().maxCoeff());
    }
    CHECK_THROWS_AS(pointwise_product(random_field(make_lattice(1, 2, Basis::Exponential), rng),
                                      random_field(make_lattice(2, 2, Basis::Exponential), rng)),
                    ConfigError);
}

TEST_CASE("rectangle products follow parity") {
    auto S = make_lattice(1, 3, Basis::Sine);
    SpectralField s1(S);
    s1.coeffs()[0] = 1.0;
    auto sq = pointwise_product(s1, s1);
    REQUIRE(sq.basis() == Basis::Cosine);
    CHECK(std::abs(sq.coeffs()[0] - 0.5) < 1e-15);
    CHECK(std::abs(sq.coeffs()[2] + 0.5) < 1e-15);
    const Factor cube[3] = {{&s1, false}, {&s1, false}, {&s1, true}};
    auto c = multiply(cube);
    REQUIRE(c.basis() == Basis::Sine);
    // sin^3 = (3 sin x - sin 3x)/4
    CHECK(std::abs(c.coeffs()[0] - 0.75) < 1e-15);
    CHECK(std::abs(c.coeffs()[2] + 0.25) < 1e-15);
}

TEST_CASE("odd and even extension and restriction") {
    auto S = make_lattice(1, 4, Basis::Sine);
    SpectralField s1(S);
    s1.coeffs()[0] = 1.0;
    auto e = odd_extend(s1);
    const int p1[1] = {1};
    const int m1[1] = {-1};
    CHECK(std::abs(e.coeffs()[static_cast<Eigen::Index>(*e.lattice().find(p1))] - 1.0 / cplx(0, 2)) < 1e-16);
    CHECK(std::abs(e.coeffs()[static_cast<Eigen::Index>(*e.lattice().find(m1))] + 1.0 / cplx(0, 2)) < 1e-16);

    auto C = make_lattice(1, 4, Basis::Cosine);
    SpectralField c2(C);
    c2.coeffs()[2] = 1.0;
    auto ec = even_extend(c2);
    CHECK(std::abs(ec.coeffs()[2] - 0.5) < 1e-16);
    CHECK(std::abs(ec.coeffs()[6] - 0.5) < 1e-16);

    std::mt19937_64 rng(9);
    for (int n : {1, 2, 3}) {
        auto fs = random_field(make_lattice(n, 5, Basis::Sine), rng);
        auto fc = random_field(make_lattice(n, 5, Basis::Cosine), rng);
        CHECK(testutil::max_abs_diff(restrict_parity(odd_extend(fs), Parity::Odd).coeffs(), fs.coeffs()) < 1e-14);
        CHECK(testutil::max_abs_diff(restrict_parity(even_extend(fc), Parity::Even).coeffs(), fc.coeffs()) < 1e-14);
        const double ratio = sobolev_norm(odd_extend(fs), 0.7) / sobolev_norm(fs, 0.7);
        CHECK(std::abs(ratio - std::pow(2.0, -0.5 * n)) < 1e-14);
        // parity commutes with the free flow
        auto lhs = odd_extend(free_propagate(fs, 0.37));
        auto rhs = free_propagate(odd_extend(fs), 0.37);
        CHECK(testutil::max_abs_diff(lhs.coeffs(), rhs.coeffs()) == 0.0);
    }
    auto bad = random_field(make_lattice(1, 3, Basis::Exponential), rng);
    CHECK_THROWS_AS(restrict_parity(bad, Parity::Odd), ParityError);
}

TEST_CASE("cosine to sine projection matches quadrature") {
    std::mt19937_64 rng(21);
    auto c = random_field(make_lattice(1, 9, Basis::Cosine), rng);
    auto s = project_cosine_to_sine(c, 5);
    for (int p = 1; p <= 5; ++p) {
        const int M = 20000;
        cplx acc = 0.0;
        for (int j = 0; j < M; ++j) {
            const double x = kPi * (j + 0.5) / M;
            cplx v = 0.0;
            for (int k = 0; k <= 9; ++k) v += c.coeffs()[k] * std::cos(k * x);
            acc += v * std::sin(p * x);
        }
        acc *= (2.0 / kPi) * (kPi / M);
        CHECK(std::abs(acc - s.coeffs()[p - 1]) < 1e-7);
    }
}

TEST_CASE("field snapshot JSON round trip") {
    std::mt19937_64 rng(1);
    auto f = random_field(make_lattice(2, 3, Basis::Cosine), rng);
    auto g = field_from_json(field_to_json(f));
    CHECK(g.lattice().same_as(f.lattice()));
    CHECK(testutil::max_abs_diff(g.coeffs(), f.coeffs()) == 0.0);
    CHECK_THROWS_AS(field_from_json("{\"basis\":\"sine\"}"), ConfigError);
}
