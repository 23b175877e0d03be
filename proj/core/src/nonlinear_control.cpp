#include "schrolab/nonlinear_control.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "schrolab/bourgain.hpp"
#include "schrolab/parallel.hpp"

namespace schrolab::nonlinear {

namespace {

constexpr cplx kI{0.0, 1.0};

double max_norm2(const ModeLattice& lat) {
    long m = 0;
    for (std::size_t i = 0; i < lat.size(); ++i) m = std::max(m, lat.norm2(i));
    return static_cast<double>(m);
}

// Node count on [0, T]: the storage floor or enough to keep omega_max * dt <= 1/2.
int storage_steps(double T, int per_unit, double omega_max) {
    const double rate = std::max(static_cast<double>(per_unit), 2.0 * omega_max);
    return std::max(3, static_cast<int>(std::ceil(rate * T)));
}

double replay_steps(double T, double omega_max) {
    return std::max(2048.0, std::ceil(omega_max * T / 0.05));
}

std::vector<double> node_times(double T, int steps) {
    std::vector<double> t(static_cast<std::size_t>(steps) + 1);
    for (int j = 0; j <= steps; ++j) t[static_cast<std::size_t>(j)] = T * j / steps;
    return t;
}

Trajectory make_trajectory(LatticePtr lat, double T, std::vector<double> times, std::vector<CVec> states) {
    Trajectory tr;
    tr.lattice = std::move(lat);
    tr.T = T;
    tr.times = std::move(times);
    tr.states = std::move(states);
    return tr;
}

Trajectory source_of(const Trajectory& v, const NonlinearitySpec& spec) {
    std::vector<CVec> f(v.states.size());
    parallel_for(f.size(), [&](std::size_t j) {
        f[j] = nonlinearity_galerkin(SpectralField(v.lattice, v.states[j]), spec).coeffs();
    });
    return make_trajectory(v.lattice, v.T, v.times, std::move(f));
}

Trajectory difference(const Trajectory& a, const Trajectory& b) {
    std::vector<CVec> d(a.states.size());
    for (std::size_t j = 0; j < d.size(); ++j) d[j] = a.states[j] - b.states[j];
    return make_trajectory(a.lattice, a.T, a.times, std::move(d));
}

// Bookkeeping shared by the internal and boundary iterations.
class PicardLoop {
public:
    PicardLoop(double s, double b, const FixedPointOptions& opts, double omega_max)
        : s_(s), b_(b), opts_(opts) {
        st_.band = opts.band;
        st_.max_offset = omega_max + 1.0;
    }

    double norm(const Trajectory& v) const { return bourgain::restriction_norm(v, s_, b_, st_); }

    // Returns true once converged; throws NonContraction when the iteration stalls.
    bool record(const Trajectory& prev, const Trajectory& next, FixedPointReport& rep) {
        ++rep.iterates;
        const double size = norm(next);
        rep.ball_radius = std::max(rep.ball_radius, size);
        const double d = norm(difference(next, prev));
        if (!std::isfinite(d))
            throw NonContraction("Picard iterate is not finite at iterate " + std::to_string(rep.iterates),
                                 rep.contraction_factors);
        rep.distances.push_back(d);
        const double scale = std::max(size, 1e-300);
        rep.final_residual = d / scale;
        const std::size_t n = rep.distances.size();
        if (n >= 2) {
            const double d0 = rep.distances[n - 2];
            const double f = d0 > 0.0 ? d / d0 : 0.0;
            rep.contraction_factors.push_back(f);
            // distances at roundoff level carry no contraction information
            if (!std::isfinite(f) || (f > opts_.contraction_limit && d > 1e3 * 2.2e-16 * scale))
                throw NonContraction("Picard iteration does not contract: factor " + std::to_string(f) +
                                         " at iterate " + std::to_string(rep.iterates),
                                     rep.contraction_factors);
        }
        if (rep.final_residual < opts_.tol || d == 0.0) {
            rep.converged = true;
            return true;
        }
        if (rep.iterates >= opts_.max_iter)
            throw NonContraction("Picard iteration did not converge in " + std::to_string(opts_.max_iter) +
                                     " iterates (relative distance " + std::to_string(rep.final_residual) + ")",
                                 rep.contraction_factors);
        return false;
    }

private:
    double s_;
    double b_;
    FixedPointOptions opts_;
    bourgain::SpaceTimeOptions st_;
};

}  // namespace

NonlinearitySpec make_spec(double lambda, int alpha1, int alpha2) {
    if (alpha1 < 0 || alpha2 < 0 || alpha1 + alpha2 < 2)
        throw ConfigError("nonlinearity needs alpha1, alpha2 >= 0 with alpha1 + alpha2 >= 2");
    if (!std::isfinite(lambda)) throw ConfigError("lambda must be finite");
    return {lambda, alpha1, alpha2};
}

SpectralField nonlinearity(const SpectralField& u, const NonlinearitySpec& spec, std::optional<int> out_N) {
    make_spec(spec.lambda, spec.alpha1, spec.alpha2);
    std::vector<Factor> fs;
    for (int i = 0; i < spec.alpha1; ++i) fs.push_back({&u, false});
    for (int i = 0; i < spec.alpha2; ++i) fs.push_back({&u, true});
    SpectralField r = multiply(fs, out_N ? *out_N : u.lattice().truncation());
    r.coeffs() *= spec.lambda;
    return r;
}

SpectralField nonlinearity_galerkin(const SpectralField& u, const NonlinearitySpec& spec) {
    SpectralField r = nonlinearity(u, spec);
    if (r.basis() != u.basis()) {
        if (u.basis() != Basis::Sine) throw ConfigError("unexpected product basis");
        r = project_cosine_to_sine(r, u.lattice().truncation());
    }
    return r;
}

std::vector<CVec> duhamel_cumulative(const Trajectory& source) {
    const std::size_t n = source.states.size();
    if (n < 4) throw ConfigError("duhamel: need at least 3 uniform intervals");
    const auto& lat = *source.lattice;
    const double h = source.T / static_cast<double>(n - 1);
    std::vector<CVec> g(n);
    for (std::size_t j = 0; j < n; ++j) g[j] = free_flow(lat, source.states[j], -source.times[j]);
    constexpr std::array<double, 4> first{9.0 / 24, 19.0 / 24, -5.0 / 24, 1.0 / 24};
    constexpr std::array<double, 4> inner{-1.0 / 24, 13.0 / 24, 13.0 / 24, -1.0 / 24};
    std::vector<CVec> out(n);
    CVec acc = CVec::Zero(g[0].size());
    out[0] = acc;
    for (std::size_t j = 0; j + 1 < n; ++j) {
        if (j == 0) {
            for (std::size_t a = 0; a < 4; ++a) acc += (h * first[a]) * g[a];
        } else if (j + 2 == n) {
            for (std::size_t a = 0; a < 4; ++a) acc += (h * first[3 - a]) * g[n - 4 + a];
        } else {
            for (std::size_t a = 0; a < 4; ++a) acc += (h * inner[a]) * g[j - 1 + a];
        }
        out[j + 1] = free_flow(lat, acc, source.times[j + 1]);
    }
    return out;
}

SpectralField duhamel(const Trajectory& source, double t) {
    const double eps = 1e-12 * std::max(1.0, source.T);
    if (!(t >= -eps && t <= source.T + eps)) throw ConfigError("duhamel: time grid does not cover [0, t]");
    t = std::clamp(t, 0.0, source.T);
    const auto cum = duhamel_cumulative(source);
    const std::size_t n = source.states.size();
    const double h = source.T / static_cast<double>(n - 1);
    const auto j = std::min(static_cast<std::size_t>(std::floor(t / h)), n - 1);
    const double tj = source.times[j];
    CVec acc = free_flow(*source.lattice, cum[j], -tj);
    if (t > tj) {
        // 3-point Gauss is exact on the cubic interpolant used by Trajectory::at
        const double r = std::sqrt(0.6);
        const std::array<double, 3> x{-r, 0.0, r};
        const std::array<double, 3> w{5.0 / 9, 8.0 / 9, 5.0 / 9};
        const double half = 0.5 * (t - tj);
        for (std::size_t q = 0; q < 3; ++q) {
            const double tau = tj + half * (1.0 + x[q]);
            acc += (half * w[q]) * free_flow(*source.lattice, source.at(tau), -tau);
        }
    }
    return SpectralField(source.lattice, free_flow(*source.lattice, acc, t));
}

SpectralField omega(const Trajectory& v, const NonlinearitySpec& spec) {
    SpectralField r(v.lattice, kI * duhamel_cumulative(source_of(v, spec)).back());
    return r;
}

InternalFixedPoint fixed_point_internal(const SpectralField& phi, const SpectralField& psi,
                                        const internal::InternalController& ctrl, const NonlinearitySpec& spec,
                                        const FixedPointOptions& opts) {
    make_spec(spec.lambda, spec.alpha1, spec.alpha2);
    const auto& L = *ctrl.lattice;
    if (!phi.lattice().same_as(L) || !psi.lattice().same_as(L))
        throw ConfigError("phi and psi must live on the controller lattice");
    const internal::HumSolver solver(ctrl, opts.hum);
    const double T = ctrl.T;
    const double omega_max = (spec.alpha() + 2) * std::max(1.0, max_norm2(L));
    const int steps = storage_steps(T, opts.steps_per_unit, omega_max);
    const auto times = node_times(T, steps);

    std::vector<CVec> lin(times.size());
    for (std::size_t j = 0; j < times.size(); ++j) lin[j] = free_flow(L, phi.coeffs(), times[j]);

    auto build = [&](const CVec& dpsi, const std::vector<CVec>* duh) {
        const auto c = solver.controlled_part(dpsi, times);
        std::vector<CVec> st(times.size());
        for (std::size_t j = 0; j < times.size(); ++j) {
            st[j] = lin[j] + c[j];
            if (duh) st[j] += kI * (*duh)[j];
        }
        return make_trajectory(ctrl.lattice, T, times, std::move(st));
    };

    InternalFixedPoint out;
    out.report.delta = sobolev_norm(phi, ctrl.s) + sobolev_norm(psi, ctrl.s);
    PicardLoop loop(ctrl.s, opts.b, opts, omega_max);
    out.psi = solver.solve(phi, psi);
    Trajectory v = build(out.psi, nullptr);
    out.report.ball_radius = loop.norm(v);
    for (;;) {
        const auto D = duhamel_cumulative(source_of(v, spec));
        const SpectralField target(ctrl.lattice, psi.coeffs() - kI * D.back());
        CVec dpsi = solver.solve(phi, target);
        Trajectory next = build(dpsi, &D);
        const bool done = loop.record(v, next, out.report);
        v = std::move(next);
        out.psi = std::move(dpsi);
        if (done) break;
    }
    out.trajectory = std::move(v);
    out.control.lattice = out.control.modal_lattice = solver.control_lattice();
    out.control.modal = solver.control(out.psi);
    out.control.time_grid = uniform_time_grid(T, opts.hum.samples_per_unit);
    sample_frames(out.control);
    out.achieved = out.trajectory.field_at(T);
    out.endpoint_residual = internal::relative_residual(out.achieved, psi, ctrl.s);
    return out;
}

BoundaryConditionedFixedPoint fixed_point_internal_bc(Parity parity, const SpectralField& a_omega, double s, double T,
                                                      const SpectralField& phi, const SpectralField& psi,
                                                      const NonlinearitySpec& spec, const FixedPointOptions& opts) {
    const Basis want = parity == Parity::Odd ? Basis::Sine : Basis::Cosine;
    if (phi.basis() != want || psi.basis() != want) throw ConfigError("boundary data basis does not match parity");
    if (a_omega.basis() != Basis::Cosine) throw ConfigError("profile on Omega must be given in the Cosine basis");
    if (parity == Parity::Odd && spec.alpha() % 2 != 0)
        throw ParityError("Dirichlet conditions need an even alpha (odd data give an even nonlinearity)", 1.0);
    const auto& L = phi.lattice();
    auto torus = make_lattice(L.dim(), L.truncation(), Basis::Exponential);
    BoundaryConditionedFixedPoint out;
    out.controller = internal::make_controller(even_extend(a_omega), s, T, torus);
    FixedPointOptions o = opts;
    o.hum.parity = parity;
    out.torus = fixed_point_internal(extend(phi), extend(psi), out.controller, spec, o);
    out.achieved = restrict_parity(out.torus.achieved, parity, 1e-8);
    out.endpoint_residual = internal::relative_residual(out.achieved, psi, s);
    return out;
}

SpectralField replay_internal(const internal::InternalController& ctrl, const NonlinearitySpec& spec,
                              const SpectralField& u0, const InternalSignal& h, int steps) {
    const auto& L = *ctrl.lattice;
    if (!u0.lattice().same_as(L)) throw ConfigError("initial state must live on the controller lattice");
    const CMat A = convolution_matrix(ctrl.a, *h.modal_lattice, L);
    const double omega_max = (spec.alpha() + 2) * std::max(1.0, max_norm2(L)) + h.modal.freq.maxCoeff();
    if (steps <= 0) steps = static_cast<int>(replay_steps(ctrl.T, omega_max));
    const double dt = ctrl.T / steps;
    auto rhs = [&](double t, const CVec& w) {
        const SpectralField u(ctrl.lattice, free_flow(L, w, t));
        CVec f = kI * nonlinearity_galerkin(u, spec).coeffs() + A * h.modal.at(t);
        return free_flow(L, f, -t);
    };
    CVec w = u0.coeffs();
    for (int j = 0; j < steps; ++j) {
        const double t = j * dt;
        const CVec k1 = rhs(t, w);
        const CVec k2 = rhs(t + 0.5 * dt, w + 0.5 * dt * k1);
        const CVec k3 = rhs(t + 0.5 * dt, w + 0.5 * dt * k2);
        const CVec k4 = rhs(t + dt, w + dt * k3);
        w += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return SpectralField(ctrl.lattice, free_flow(L, w, ctrl.T));
}

namespace {

double boundary_trace_norm(const BoundarySignal& tr, const dirichlet::SmoothController& g, double T, double sigma) {
    double acc = 0.0;
    for (const auto& f : tr.faces) {
        const int n = g.n;
        CMat vals = f.values;
        std::vector<double> x(static_cast<std::size_t>(n));
        for (std::size_t c = 0; c < f.grid.size(); ++c) {
            int t = 0;
            for (int i = 0; i < n; ++i)
                x[static_cast<std::size_t>(i)] =
                    i == f.axis ? (f.side == 0 ? 0.0 : std::numbers::pi) : f.grid[c][static_cast<std::size_t>(t++)];
            vals.col(static_cast<Eigen::Index>(c)) *= g.g(x);
        }
        const int P = n == 1 ? 1
                             : static_cast<int>(std::lround(std::pow(static_cast<double>(f.grid.size()), 1.0 / (n - 1))));
        const std::vector<double> sw(f.grid.size(), n == 1 ? 1.0 : std::pow(std::numbers::pi / P, n - 1));
        const double v = time_sobolev_norm(vals, T, sigma, sw);
        acc += v * v;
    }
    return std::sqrt(acc);
}

}  // namespace

DirichletFixedPoint fixed_point_dirichlet(const SpectralField& u0, const SpectralField& u_T,
                                          const dirichlet::SmoothController& g, double T, const NonlinearitySpec& spec,
                                          double s, double b, const FixedPointOptions& opts) {
    make_spec(spec.lambda, spec.alpha1, spec.alpha2);
    if (u_T.basis() != Basis::Sine || !u0.lattice().same_as(u_T.lattice()))
        throw ConfigError("Dirichlet data must share one Sine lattice");
    if (u_T.lattice().dim() != g.n) throw ConfigError("controller dimension does not match the data");
    if (!(b > 0.0)) throw ConfigError("b must be positive");
    if (!(T > 0.0)) throw ConfigError("T must be positive");
    const auto lat = u_T.lattice_ptr();
    const auto& L = *lat;
    const dirichlet::MomentOperator mo(g, lat);
    const dirichlet::SSolver S(mo.assemble(T), opts.boundary.cond_limit);
    const double omega_max = (spec.alpha() + 2) * std::max(1.0, max_norm2(L));
    const int steps = storage_steps(T, opts.steps_per_unit, omega_max);
    const auto times = node_times(T, steps);

    std::vector<CMat> St(times.size());
    parallel_for(times.size(), [&](std::size_t j) {
        St[j] = j == 0 ? CMat::Zero(static_cast<Eigen::Index>(L.size()), static_cast<Eigen::Index>(L.size()))
                       : mo.assemble(times[j]).matrix;
    });
    std::vector<CVec> lin(times.size());
    for (std::size_t j = 0; j < times.size(); ++j) lin[j] = free_flow(L, u0.coeffs(), times[j]);
    const CVec defect = u_T.coeffs() - lin.back();

    auto build = [&](const CVec& v0, const std::vector<CVec>* duh) {
        std::vector<CVec> st(times.size());
        for (std::size_t j = 0; j < times.size(); ++j) {
            st[j] = lin[j] + St[j] * v0;
            if (duh) st[j] += kI * (*duh)[j];
        }
        return make_trajectory(lat, T, times, std::move(st));
    };

    DirichletFixedPoint out;
    out.condition = S.condition();
    out.report.delta = sobolev_norm(u0, s, NormWeight::Laplacian) + sobolev_norm(u_T, s, NormWeight::Laplacian);
    PicardLoop loop(s, b, opts, omega_max);
    CVec v0 = S.solve(defect);
    Trajectory v = build(v0, nullptr);
    out.report.ball_radius = loop.norm(v);
    for (;;) {
        const auto D = duhamel_cumulative(source_of(v, spec));
        CVec next0 = S.solve(defect - kI * D.back());
        Trajectory next = build(next0, &D);
        const bool done = loop.record(v, next, out.report);
        v = std::move(next);
        v0 = std::move(next0);
        if (done) break;
    }
    out.trajectory = std::move(v);
    out.v0 = SpectralField(lat, v0);
    out.trace = dirichlet::synthesize_trace(out.v0, g, T, opts.boundary.samples_per_unit,
                                            opts.boundary.points_per_axis);
    out.trace_norm = boundary_trace_norm(out.trace, g, T, 0.5 * (s + 1.0));
    out.achieved = out.trajectory.field_at(T);
    const double err = sobolev_norm(out.achieved - u_T, s, NormWeight::Laplacian);
    const double ref = sobolev_norm(u_T, s, NormWeight::Laplacian);
    out.endpoint_residual = ref > 0.0 ? err / ref : err;
    return out;
}

SpectralField replay_dirichlet_nonlinear(const dirichlet::SmoothController& g, const SpectralField& v0,
                                         const NonlinearitySpec& spec, const SpectralField& u0, double T, int steps) {
    const auto lat = u0.lattice_ptr();
    const double omega_max = (spec.alpha() + 2) * std::max(1.0, max_norm2(*lat)) + max_norm2(v0.lattice());
    if (steps <= 0) steps = static_cast<int>(replay_steps(T, omega_max));
    const dirichlet::SourceTerm src = [&](double, const CVec& u) -> CVec {
        return kI * nonlinearity_galerkin(SpectralField(lat, u), spec).coeffs();
    };
    return dirichlet::replay_dirichlet(g, v0, lat, u0, T, steps, src);
}

}  // namespace schrolab::nonlinear
