// Acceptance run: one PASS/FAIL line per criterion.  Exit code 0 only if all pass.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <boost/rational.hpp>

#include "schrolab/dirichlet_control.hpp"
#include "schrolab/exponents.hpp"
#include "schrolab/internal_control.hpp"
#include "schrolab/neumann_control.hpp"
#include "schrolab/nonlinear_control.hpp"
#include "schrolab/probes.hpp"
#include "schrolab/stabilization.hpp"

using namespace schrolab;
namespace fs = std::filesystem;
using R = boost::rational<long long>;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
    bool pass = true;
    std::ostringstream note;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            note << " [failed: " << what << "]";
        }
    }
};

SpectralField random_field(const LatticePtr& L, std::mt19937_64& rng, double decay = 0.0) {
    std::normal_distribution<double> g(0.0, 1.0);
    SpectralField f(L);
    for (std::size_t i = 0; i < L->size(); ++i) {
        const double re = g(rng), im = g(rng);
        f.coeffs()[static_cast<Eigen::Index>(i)] = cplx(re, im) * std::pow(L->bracket2(i), -0.5 * decay);
    }
    return f;
}

SpectralField scaled(SpectralField f, double s, double size) {
    f.coeffs() *= size / sobolev_norm(f, s);
    return f;
}

double rel(const SpectralField& a, const SpectralField& b, double s, NormWeight w = NormWeight::Bracket) {
    return sobolev_norm(a - b, s, w) / sobolev_norm(b, s, w);
}

// ---------------------------------------------------------------- 1
R s_alpha_n_formula(int a, int n) {
    if (a == 1) return R(n, 2) - R(1);
    if (a == 2) return n == 1 ? R(0) : R(n, 2) - R(3, 4) - R(1, 4 * (n - 1));
    return R(n, 2) - R(2, a);
}

R s_b_formula(int a, int n) {
    const R sc = R(n, 2) - R(2, a);
    if (n <= 2) return sc;
    const R floor = n == 3 ? R(3, 4) : R(3 * n, n + 4);
    return std::max(sc, floor);
}

Outcome criterion1() {
    Outcome o;
    struct Row {
        int a, n;
        R sb, san, sc;
    };
    const std::vector<Row> reference{{2, 3, R(3, 4), R(5, 8), R(1, 2)},
                                     {2, 4, R(3, 2), R(7, 6), R(1)},
                                     {2, 5, R(5, 3), R(27, 16), R(3, 2)},
                                     {3, 4, R(3, 2), R(4, 3), R(4, 3)}};
    const auto t = bourgain::table1();
    o.require(t.size() == reference.size(), "four table rows");
    for (std::size_t i = 0; i < std::min(t.size(), reference.size()); ++i) {
        const auto& r = reference[i];
        o.require(t[i].alpha == r.a && t[i].n == r.n && t[i].e.s_b == r.sb && t[i].e.s_alpha_n == r.san &&
                      t[i].e.s_c == r.sc,
                  "table row " + std::to_string(i));
    }
    int checked = 0;
    for (int a = 1; a <= 6; ++a)
        for (int n = 1; n <= 6; ++n) {
            const auto e = bourgain::critical_exponents(a, n);
            o.require(e.s_alpha_n == s_alpha_n_formula(a, n) && e.s_c == R(n, 2) - R(2, a) && e.s_b == s_b_formula(a, n),
                      "closed form at (" + std::to_string(a) + "," + std::to_string(n) + ")");
            ++checked;
        }
    o.note << "4 table rows exact, " << checked << " (alpha, n) pairs match the closed formulas";
    return o;
}

// ---------------------------------------------------------------- 2
Outcome criterion2() {
    Outcome o;
    std::mt19937_64 rng(11);
    auto L = make_lattice(1, 16, Basis::Exponential);
    auto a = internal::bump_profile(1, 16, kPi / 2.0);
    for (double s : {0.0, 1.0}) {
        auto ctrl = internal::make_controller(a, s, 1.0, L);
        auto u0 = random_field(L, rng, 2.0), u1 = random_field(L, rng, 2.0);
        auto r = internal::hum_internal_control(ctrl, u0, u1);
        auto rep = internal::replay(ctrl, u0, r.signal);
        const double rr = internal::relative_residual(rep, u1, s);
        o.require(r.residual < 1e-8, "HUM residual");
        o.require(rr < 1e-6, "replay");
        o.note << "s=" << s << ": residual " << r.residual << ", replay " << rr << "; ";
    }
    return o;
}

// ---------------------------------------------------------------- 3
Outcome criterion3() {
    Outcome o;
    double worst_T = 0.0;
    for (double s : {-1.0, 0.0, 1.0, 2.0})
        for (int n : {1, 2}) {
            const double T = 1.3;
            auto ctrl = internal::make_controller(internal::constant_profile(n, 2, 1.0), s, T,
                                                  make_lattice(n, n == 1 ? 12 : 5, Basis::Exponential));
            auto g = internal::assemble_internal_gramian(ctrl);
            const CMat I = CMat::Identity(g.matrix.rows(), g.matrix.cols());
            worst_T = std::max(worst_T, (g.matrix - T * I).cwiseAbs().maxCoeff());
        }
    o.require(worst_T < 1e-13, "a = 1 gives T I");
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst_herm = 0.0, worst_neg = 0.0;
    for (int k = 0; k < 20; ++k) {
        const int n = 1 + k % 2;
        const int N = n == 1 ? 4 + static_cast<int>(U(rng) * 9) : 2 + static_cast<int>(U(rng) * 3);
        const double width = 0.5 + 4.0 * U(rng), height = 0.2 + 2.0 * U(rng);
        const double T = 0.2 + 2.0 * U(rng), s = -1.0 + 3.0 * U(rng);
        auto ctrl = internal::make_controller(internal::bump_profile(n, 8, width, height), s, T,
                                              make_lattice(n, N, Basis::Exponential));
        auto g = internal::assemble_internal_gramian(ctrl);
        const double scale = g.matrix.cwiseAbs().maxCoeff();
        worst_herm = std::max(worst_herm, (g.matrix - g.matrix.adjoint()).cwiseAbs().maxCoeff() / scale);
        Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (g.matrix + g.matrix.adjoint()), Eigen::EigenvaluesOnly);
        worst_neg = std::max(worst_neg, -es.eigenvalues().minCoeff() / scale);
    }
    o.require(worst_herm < 1e-12, "Hermitian");
    o.require(worst_neg <= 1e-12, "positive semidefinite");
    o.note << "|G - T I| = " << worst_T << "; 20 random configs: Hermitian defect " << worst_herm
           << ", min eigenvalue / scale " << -worst_neg;
    return o;
}

// ---------------------------------------------------------------- 4
Outcome criterion4() {
    Outcome o;
    auto g2 = dirichlet::build_smooth_controller(2, 1.5, 3);
    auto L2 = make_lattice(2, 6, Basis::Sine);
    const dirichlet::MomentOperator mo(g2, L2);
    auto S = mo.assemble(0.8);
    double col = 0.0;
    for (std::size_t p = 0; p < L2->size(); ++p) {
        SpectralField e(L2);
        e.coeffs()[static_cast<Eigen::Index>(p)] = 1.0;
        auto u = dirichlet::evolve_moments(e, g2, 0.8);
        col = std::max(col, (u.coeffs() - S.matrix.col(static_cast<Eigen::Index>(p))).cwiseAbs().maxCoeff());
    }
    o.require(col < 1e-10, "column consistency");
    std::mt19937_64 rng(13);
    auto v = random_field(L2, rng);
    const auto Sr = dirichlet::assemble_S(dirichlet::build_smooth_controller(2, 2.0, 3), 1.0, L2);
    const dirichlet::SSolver solver(Sr);
    const double rt = (solver.solve(Sr.matrix * v.coeffs()) - v.coeffs()).cwiseAbs().maxCoeff();
    o.require(rt < 1e-9, "round trip");

    auto g = dirichlet::build_smooth_controller(1, 1.0, 3, {0});
    auto L = make_lattice(1, 16, Basis::Sine);
    auto S1 = dirichlet::assemble_S(g, 1.0, L);
    auto target = random_field(L, rng, 3.0);
    auto r = dirichlet::dirichlet_control(target, S1, g);
    auto rep = dirichlet::replay_dirichlet(g, r.v0, L, SpectralField(L), 1.0);
    const double rr = rel(rep, target, 0.0, NormWeight::Laplacian);
    o.require(r.residual < 1e-8, "vertex control residual");
    o.require(rr < 1e-6, "duality replay");
    o.note << "column defect " << col << ", round trip " << rt << " (cond " << solver.condition() << ")" << ", n=1 residual " << r.residual << ", replay " << rr;
    return o;
}

// ---------------------------------------------------------------- 5
Outcome criterion5() {
    Outcome o;
    const double delta = 0.9 * 6.0 / 13.0;
    const auto cert = dirichlet::convexity_certificate(2, delta, 10000, 2024);
    o.require(cert.samples == 10000 && cert.min_hessian > 0.0, "Hessian positive on samples");
    std::mt19937_64 rng(29);
    auto L = make_lattice(2, 8, Basis::Sine);
    const auto q = dirichlet::convex_multiplier(2, delta);
    double worst = 0.0, worst_ratio = 1e300;
    for (int j = 0; j < 10; ++j) {
        auto v = random_field(L, rng, 3.0);
        worst = std::max(worst, dirichlet::multiplier_identity_residual(v, q, 1.0));
        dirichlet::MultiplierOptions c, f;
        c.time_nodes = f.time_nodes = 8;
        c.time_panels = 4;
        f.time_panels = 8;
        worst_ratio = std::min(worst_ratio, dirichlet::multiplier_identity_residual(v, q, 1.0, c) /
                                                dirichlet::multiplier_identity_residual(v, q, 1.0, f));
    }
    o.require(worst < 1e-5, "identity residual");
    o.require(worst_ratio >= 2.0, "refinement");
    o.note << "min lambda_min(H) " << cert.min_hessian << " on " << cert.samples << " points; max residual " << worst
           << "; min halving gain " << worst_ratio;
    return o;
}

// ---------------------------------------------------------------- 6
Outcome criterion6() {
    Outcome o;
    double off = 0.0;
    for (int n : {1, 2}) {
        auto L = make_lattice(n, n == 1 ? 16 : 8, Basis::Cosine);
        for (double s : {0.0, 0.5}) {
            CMat m = neumann::neumann_gramian(neumann::make_problem(L, 0, s)).matrix;
            m.diagonal().setZero();
            off = std::max(off, m.cwiseAbs().maxCoeff());
        }
    }
    o.require(off < 1e-14, "diagonal Gramian");
    std::mt19937_64 rng(3);
    auto L1 = make_lattice(1, 16, Basis::Cosine);
    auto p1 = neumann::make_problem(L1, 0, 0.0);
    auto r1 = neumann::neumann_control(p1, random_field(L1, rng), random_field(L1, rng));
    auto L2 = make_lattice(2, 8, Basis::Cosine);
    auto p2 = neumann::make_problem(L2, 0, 0.5);
    auto a0 = random_field(L2, rng, 1.0), a1 = random_field(L2, rng, 1.0);
    auto r2 = neumann::neumann_control(p2, a0, a1);
    const double rep2 = rel(neumann::replay_neumann(p2, a0, r2.trace.faces.front()), a1, 0.5);
    o.require(r1.residual < 1e-10, "n=1 residual");
    o.require(r2.residual < 1e-8, "n=2 residual");
    o.require(rep2 < 1e-8, "n=2 replay");
    double worst = 0.0;
    for (int n : {1, 2}) {
        auto L = make_lattice(n, 8, Basis::Cosine);
        for (double s : {0.0, 0.5, -0.7}) {
            auto prob = neumann::make_problem(L, 0, s);
            auto v0 = random_field(L, rng);
            const int P = 32;
            auto tr = neumann::side_trace(prob, v0, 256, P);
            std::vector<double> sw(tr.grid.size(), n == 1 ? 1.0 : kPi / P);
            const double lhs = time_sobolev_norm(tr.values, prob.T, -0.5 * s, sw);
            double rhs = 0.0;
            for (std::size_t i = 0; i < L->size(); ++i)
                rhs += 2 * kPi * std::pow(1.0 + L->norm2(i), -s) * neumann::side_overlap(prob, i, i) *
                       std::norm(v0.coeffs()[static_cast<Eigen::Index>(i)]);
            worst = std::max(worst, std::abs(lhs * lhs - rhs) / rhs);
        }
    }
    o.require(worst < 1e-12, "trace-norm identity");
    o.note << "off-diagonal " << off << ", residual n=1 " << r1.residual << ", n=2 " << r2.residual << " (replay " << rep2
           << "), trace-norm identity " << worst;
    return o;
}

// ---------------------------------------------------------------- 7
void check_stats(Outcome& o, const std::string& name, const bourgain::RatioStats& st, const std::vector<double>& scaled) {
    bool finite = true;
    for (double r : st.ratios) finite = finite && std::isfinite(r) && r > 0.0;
    double sd = 0.0;
    for (std::size_t i = 0; i < std::min(scaled.size(), st.ratios.size()); ++i)
        sd = std::max(sd, std::abs(scaled[i] - st.ratios[i]) / st.ratios[i]);
    o.require(finite, name + " finite");
    o.require(st.refinement_delta < 0.05, name + " stable");
    o.require(sd <= 1e-12, name + " scale invariant");
    o.note << name << " max " << st.max << " (refine " << st.refinement_delta << ", scale " << sd << "); ";
}

Outcome criterion7() {
    Outcome o;
    bourgain::ProbeOptions po;
    po.n = 1;
    po.N = 8;
    po.seed = 3;
    bourgain::ProbeOptions ps = po;
    ps.scale = 37.5;
    using bourgain::LinearKind;
    for (auto [kind, name, b] : {std::tuple{LinearKind::Homogeneous, "homogeneous", 0.55},
                                 std::tuple{LinearKind::Duhamel, "duhamel", 0.55}}) {
        auto st = bourgain::linear_estimate_probe(kind, 32, 0.0, b, po);
        check_stats(o, name, st, bourgain::linear_estimate_probe(kind, 32, 0.0, b, ps).ratios);
    }
    for (auto [alpha, n, N] : {std::tuple{1, 2, 3}, std::tuple{2, 1, 8}, std::tuple{3, 1, 6}}) {
        bourgain::ProbeOptions pm = po;
        pm.n = n;
        pm.N = N;
        pm.band = 16;
        const double s = bourgain::to_double(bourgain::critical_exponents(alpha, n).s_alpha_n) + 0.1;
        auto rep = bourgain::multilinear_ratio_probe(alpha, n, s, 6, pm);
        bourgain::ProbeOptions pms = pm;
        pms.scale = 0.01;
        check_stats(o, "multilinear(" + std::to_string(alpha) + "," + std::to_string(n) + ")", rep.main,
                    bourgain::multilinear_ratio_probe(alpha, n, s, 6, pms).main.ratios);
    }
    {
        bourgain::ProbeOptions pb = po;
        pb.N = 3;
        pb.band = 16;
        auto rep = bourgain::conjugate_bilinear_probe(-0.36, 0.40, 4, pb, -0.45);
        bourgain::ProbeOptions pbs = pb;
        pbs.scale = 3.0;
        auto rep2 = bourgain::conjugate_bilinear_probe(-0.36, 0.40, 4, pbs, -0.45);
        check_stats(o, "bilinear torus", rep.torus, rep2.torus.ratios);
        check_stats(o, "bilinear rectangle", rep.rectangle, rep2.rectangle.ratios);
    }
    {
        auto a = internal::bump_profile(1, 8, kPi / 2.0, 1.0);
        for (auto [kind, name, b] : {std::tuple{stab::DampedKind::Homogeneous, "damped homogeneous", 0.55},
                                     std::tuple{stab::DampedKind::Duhamel, "damped duhamel", 0.55}}) {
            auto st = stab::damped_estimate_probes(kind, a, 16, 0.0, b, po);
            check_stats(o, name, st, stab::damped_estimate_probes(kind, a, 16, 0.0, b, ps).ratios);
        }
    }
    for (auto [kind, name] : {std::pair{bourgain::SumKind::Resonance, "resonance"},
                              std::pair{bourgain::SumKind::Moment, "moment"},
                              std::pair{bourgain::SumKind::Shifted, "shifted"}}) {
        auto rep = bourgain::lattice_sum_probe(kind, bourgain::SumParams{});
        o.require(rep.bound_ok, std::string(name) + " sum bound shape");
        o.note << name << " sum C " << rep.constant << " (truncation " << rep.truncation_delta << "); ";
    }
    return o;
}

// ---------------------------------------------------------------- 8
Outcome criterion8() {
    Outcome o;
    std::mt19937_64 rng(5);
    auto L8 = make_lattice(1, 8, Basis::Exponential);
    auto c8 = internal::make_controller(internal::bump_profile(1, 8, kPi / 2.0), 0.0, 1.0, L8);
    auto r0 = nonlinear::fixed_point_internal(random_field(L8, rng, 1.0), random_field(L8, rng, 1.0), c8,
                                              nonlinear::make_spec(0.0, 2, 1));
    o.require(r0.report.iterates == 1 && r0.report.distances.front() < 1e-12, "lambda = 0 in one iteration");

    const double s = 0.6;
    auto L = make_lattice(1, 16, Basis::Exponential);
    auto ctrl = internal::make_controller(internal::bump_profile(1, 16, kPi / 2.0), s, 1.0, L);
    auto phi = scaled(random_field(L, rng, 2.0), s, 5e-4), psi = scaled(random_field(L, rng, 2.0), s, 5e-4);
    const auto spec = nonlinear::make_spec(1.0, 2, 1);
    auto r = nonlinear::fixed_point_internal(phi, psi, ctrl, spec);
    double worst = 0.0;
    for (double f : r.report.contraction_factors) worst = std::max(worst, f);
    const double rep = internal::relative_residual(nonlinear::replay_internal(ctrl, spec, phi, r.control), psi, s);
    const cplx z = std::polar(1.0, 0.7);
    auto rz = nonlinear::fixed_point_internal(z * phi, z * psi, ctrl, spec);
    const double gauge = (rz.psi - z * r.psi).cwiseAbs().maxCoeff() / r.psi.cwiseAbs().maxCoeff();
    o.require(r.report.converged && worst <= 0.55, "contraction");
    o.require(r.endpoint_residual < 1e-7, "endpoint");
    o.require(rep < 1e-6, "replay");
    o.require(gauge < 1e-10, "gauge symmetry");
    o.note << "lambda=0 distance " << r0.report.distances.front() << "; cubic: " << r.report.iterates
           << " iterates, max factor " << worst << ", endpoint " << r.endpoint_residual << ", replay " << rep
           << ", gauge " << gauge;
    return o;
}

// ---------------------------------------------------------------- 9
Outcome criterion9() {
    Outcome o;
    std::mt19937_64 rng(5);
    auto L = make_lattice(1, 16, Basis::Exponential);
    auto u0 = random_field(L, rng, 1.0);
    const double c = 0.8;
    const auto fc = stab::decay_fit(internal::constant_profile(1, 2, c), u0, 0.0, 5.0);
    o.require(std::abs(fc.nu - c * c) < 1e-6, "constant damping rate");
    auto bump = internal::bump_profile(1, 16, kPi / 2.0, 2.0);
    const double abscissa = stab::spectral_abscissa(bump, L);
    const auto fb = stab::decay_fit(bump, u0, 0.0, 40.0 / -abscissa);
    const double agree = std::abs(fb.nu / -abscissa - 1.0);
    o.require(agree <= 0.1, "bump rate vs abscissa");

    auto a = internal::bump_profile(1, 16, 4.0, 1.0);
    auto v0 = random_field(L, rng, 2.0);
    v0.coeffs() *= 1e-2 / sobolev_norm(v0, 0.0);
    const auto lin = stab::nonlinear_stabilize(v0, a, nonlinear::make_spec(0.0, 2, 1), 1.0);
    const auto r = stab::nonlinear_stabilize(v0, a, nonlinear::make_spec(1.0, 2, 1), 5.0 * lin.window);
    double worst = 0.0;
    for (const auto& w : r.windows) worst = std::max(worst, w.factor);
    o.require(r.windows.size() >= 5 && worst <= 0.5, "per-window halving");
    o.note << "constant: |nu - c^2| " << std::abs(fc.nu - c * c) << "; bump: nu " << fb.nu << " vs " << -abscissa
           << " (" << agree << "); " << r.windows.size() << " windows, worst factor " << worst;
    return o;
}

// ---------------------------------------------------------------- 10
std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

Outcome criterion10(const std::string& cli, const fs::path& work) {
    Outcome o;
    const std::vector<std::string> runs{
        "exponents --alpha 2 --n 3",
        "table1",
        "simulate --frames 16",
        "control-internal --n 1 --N 16 --a bump --T 1",
        "control-dirichlet --faces 0",
        "control-neumann",
        "control-nonlinear",
        "stabilize --a-profile constant --a-height 0.8 --tmax 12",
        "probe-xsb --samples 8",
        "probe-multilinear --samples 4",
        "probe-claims --sum shifted",
        "identity-multiplier --samples 2",
    };
    int files = 0;
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const fs::path dir = work / ("run" + std::to_string(k));
        const fs::path keep = work / ("run" + std::to_string(k) + "_first");
        fs::remove_all(dir);
        fs::remove_all(keep);
        for (int rep = 0; rep < 2; ++rep) {
            const std::string cmd = "\"" + cli + "\" run " + runs[k] + " --seed 4242 -o \"" + dir.string() + "\" > \"" +
                                    (work / "stdout.txt").string() + "\"";
            if (std::system(cmd.c_str()) != 0) {
                o.require(false, "exit status of '" + runs[k] + "'");
                break;
            }
            if (rep == 0) fs::rename(dir, keep);
        }
        if (!o.pass) break;
        std::vector<std::string> names;
        for (const auto& e : fs::directory_iterator(keep))
            if (e.path().filename() != "manifest.json") names.push_back(e.path().filename().string());
        for (const auto& n : names) {
            o.require(fs::exists(dir / n) && slurp(keep / n) == slurp(dir / n), runs[k] + ": " + n);
            ++files;
        }
        o.require(!names.empty(), runs[k] + " wrote files");
        fs::remove_all(dir);
        fs::remove_all(keep);
    }
    o.note << runs.size() << " experiments, " << files << " output files byte-identical across reruns";
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "";
    const fs::path work = argc > 2 ? fs::path(argv[2]) : fs::temp_directory_path() / "schrolab_acceptance";
    fs::create_directories(work);

    struct Item {
        int id;
        std::string title;
        double budget;  // seconds, 0: none
        std::function<Outcome()> run;
    };
    const std::vector<Item> items{
        {1, "exponent tables", 1.0, criterion1},
        {2, "internal linear controllability", 10.0, criterion2},
        {3, "Gramian identities", 0.0, criterion3},
        {4, "Dirichlet moment operator", 30.0, criterion4},
        {5, "multiplier machinery", 0.0, criterion5},
        {6, "Neumann control", 0.0, criterion6},
        {7, "Bourgain probes", 120.0, criterion7},
        {8, "nonlinear control", 0.0, criterion8},
        {9, "stabilization", 30.0, criterion9},
        {10, "determinism", 0.0, [&] {
             if (cli.empty()) {
                 Outcome o;
                 o.require(false, "no CLI path given");
                 return o;
             }
             return criterion10(cli, work);
         }},
    };
    int failed = 0;
    for (const auto& it : items) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = it.run();
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (it.budget > 0.0 && sec >= it.budget) o.require(false, "runtime budget");
        failed += o.pass ? 0 : 1;
        std::printf("CRITERION %2d %s  %s (%.2f s%s): %s\n", it.id, o.pass ? "PASS" : "FAIL", it.title.c_str(), sec,
                    it.budget > 0.0 ? (" / " + std::to_string(static_cast<int>(it.budget)) + " s").c_str() : "",
                    o.note.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(items.size()) - failed, items.size());
    return failed == 0 ? 0 : 1;
}
