#include <numbers>
#include <random>

#include <benchmark/benchmark.h>

#include "schrolab/bourgain.hpp"
#include "schrolab/dirichlet_control.hpp"
#include "schrolab/internal_control.hpp"
#include "schrolab/nonlinear_control.hpp"
#include "schrolab/stabilization.hpp"

using namespace schrolab;

namespace {

SpectralField random_field(const LatticePtr& L, std::uint64_t seed, double decay) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    SpectralField f(L);
    for (std::size_t k = 0; k < L->size(); ++k) {
        const double re = g(rng), im = g(rng);
        f.coeffs()[static_cast<Eigen::Index>(k)] = cplx(re, im) * std::pow(L->bracket2(k), -0.5 * decay);
    }
    return f;
}

void BM_Nonlinearity(benchmark::State& st) {
    auto L = make_lattice(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)), Basis::Exponential);
    auto u = random_field(L, 1, 1.0);
    const auto spec = nonlinear::make_spec(1.0, 2, 1);
    for (auto _ : st) benchmark::DoNotOptimize(nonlinear::nonlinearity(u, spec));
}
BENCHMARK(BM_Nonlinearity)->Args({1, 16})->Args({1, 64})->Args({2, 8})->Args({2, 16});

void BM_FreePropagate(benchmark::State& st) {
    auto L = make_lattice(2, static_cast<int>(st.range(0)), Basis::Exponential);
    auto u = random_field(L, 2, 1.0);
    for (auto _ : st) benchmark::DoNotOptimize(free_propagate(u, 0.37));
}
BENCHMARK(BM_FreePropagate)->Arg(8)->Arg(32);

void BM_HumSolve(benchmark::State& st) {
    const int N = static_cast<int>(st.range(0));
    auto L = make_lattice(1, N, Basis::Exponential);
    auto ctrl = internal::make_controller(internal::bump_profile(1, N, std::numbers::pi / 2.0), 0.0, 1.0, L);
    auto u0 = random_field(L, 3, 2.0), u1 = random_field(L, 4, 2.0);
    for (auto _ : st) benchmark::DoNotOptimize(internal::hum_internal_control(ctrl, u0, u1));
}
BENCHMARK(BM_HumSolve)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_AssembleS(benchmark::State& st) {
    auto g = dirichlet::build_smooth_controller(2, 1.0, 3);
    auto L = make_lattice(2, static_cast<int>(st.range(0)), Basis::Sine);
    const dirichlet::MomentOperator mo(g, L);
    for (auto _ : st) benchmark::DoNotOptimize(mo.assemble(1.0));
}
BENCHMARK(BM_AssembleS)->Arg(6)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_RestrictionNorm(benchmark::State& st) {
    auto L = make_lattice(1, 8, Basis::Exponential);
    auto u = random_field(L, 5, 1.0);
    auto tr = sample_trajectory(L, 1.0, 256, [&](double t) { return free_propagate(u, t).coeffs(); });
    bourgain::SpaceTimeOptions o;
    o.band = static_cast<int>(st.range(0));
    for (auto _ : st) benchmark::DoNotOptimize(bourgain::restriction_norm(tr, 0.0, 0.625, o));
}
BENCHMARK(BM_RestrictionNorm)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_DampedPropagate(benchmark::State& st) {
    auto L = make_lattice(1, 16, Basis::Exponential);
    auto a = internal::bump_profile(1, 16, 4.0, 1.0);
    auto u = random_field(L, 6, 2.0);
    const auto m = st.range(0) == 0 ? stab::Method::Eigen : stab::Method::Duhamel;
    for (auto _ : st) benchmark::DoNotOptimize(stab::damped_propagate(u, a, 1.0, m));
}
BENCHMARK(BM_DampedPropagate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
