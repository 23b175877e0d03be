#include "schrolab/stabilization.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "schrolab/bourgain.hpp"
#include "schrolab/parallel.hpp"

namespace schrolab::stab {

namespace {

constexpr cplx kI{0.0, 1.0};

double max_norm2(const ModeLattice& lat) {
    long m = 0;
    for (std::size_t i = 0; i < lat.size(); ++i) m = std::max(m, lat.norm2(i));
    return static_cast<double>(m);
}

RVec weights(const ModeLattice& lat, double s) {
    RVec w(static_cast<Eigen::Index>(lat.size()));
    for (std::size_t i = 0; i < lat.size(); ++i) w[static_cast<Eigen::Index>(i)] = lat.weight(i, s);
    return w;
}

void check_profile(const SpectralField& a, const ModeLattice& lat) {
    if (a.basis() != Basis::Exponential || lat.basis() != Basis::Exponential)
        throw ConfigError("damping needs Exponential lattices");
    if (a.lattice().dim() != lat.dim()) throw ConfigError("damping profile dimension does not match the lattice");
    if (max_imag_physical(a) > 1e-12 * std::max(1.0, max_abs_physical(a)))
        throw ConfigError("damping profile must be real");
}

// Frequency scale of the interaction-picture integrand of the damped flow.
double coupling_frequency(const DampedFlow& f) {
    const auto& L = *f.lattice();
    CMat B = f.generator();
    for (Eigen::Index i = 0; i < B.rows(); ++i) B(i, i) += kI * static_cast<double>(L.norm2(static_cast<std::size_t>(i)));
    return (f.diagonal() ? 0.0 : 2.0 * max_norm2(L)) + B.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace

CMat damped_generator(const SpectralField& a, const ModeLattice& lattice) {
    check_profile(a, lattice);
    const Factor fs[2] = {{&a, false}, {&a, false}};
    const SpectralField a2 = multiply(fs, 2 * a.lattice().truncation());
    CMat A = -convolution_matrix(a2, lattice, lattice);
    for (std::size_t i = 0; i < lattice.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        A(k, k) -= kI * static_cast<double>(lattice.norm2(i));
    }
    return A;
}

DampedFlow::DampedFlow(const SpectralField& a, LatticePtr lattice) : lattice_(std::move(lattice)) {
    if (lattice_->size() > kDenseLimit)
        throw ConfigError("damped flow: lattice of " + std::to_string(lattice_->size()) + " modes exceeds the dense limit " +
                          std::to_string(kDenseLimit));
    A_ = damped_generator(a, *lattice_);
    const CMat off = A_ - CMat(A_.diagonal().asDiagonal());
    diagonal_ = off.cwiseAbs().maxCoeff() == 0.0;
}

CMat DampedFlow::propagator(double t) const {
    if (diagonal_) {
        CMat P = CMat::Zero(A_.rows(), A_.cols());
        for (Eigen::Index i = 0; i < A_.rows(); ++i) P(i, i) = std::exp(A_(i, i) * t);
        return P;
    }
    const CMat At = A_ * t;
    return At.exp();
}

double DampedFlow::spectral_abscissa() const {
    Eigen::ComplexEigenSolver<CMat> es(A_, false);
    return es.eigenvalues().real().maxCoeff();
}

double DampedFlow::operator_norm(double t, double s) const {
    const RVec w = weights(*lattice_, s);
    const CMat M = w.asDiagonal() * propagator(t) * w.cwiseInverse().asDiagonal();
    Eigen::JacobiSVD<CMat> svd(M);
    return svd.singularValues()[0];
}

SpectralField damped_propagate(const SpectralField& u0, const SpectralField& a, double t, Method method) {
    const DampedFlow flow(a, u0.lattice_ptr());
    const auto& L = u0.lattice();
    if (method == Method::Eigen) return SpectralField(u0.lattice_ptr(), flow.propagator(t) * u0.coeffs());
    // Duhamel stepping: RK4 on w' = -W(-t) P a^2 W(t) w, u = W(t) w.
    CMat B = flow.generator();
    for (Eigen::Index i = 0; i < B.rows(); ++i) B(i, i) += kI * static_cast<double>(L.norm2(static_cast<std::size_t>(i)));
    const double omega = coupling_frequency(flow);
    const int steps = std::max(256, static_cast<int>(std::ceil(std::abs(t) * omega / 0.01)));
    const double h = t / steps;
    auto rhs = [&](double tau, const CVec& w) { return free_flow(L, B * free_flow(L, w, tau), -tau); };
    CVec w = u0.coeffs();
    for (int j = 0; j < steps; ++j) {
        const double tau = j * h;
        const CVec k1 = rhs(tau, w);
        const CVec k2 = rhs(tau + 0.5 * h, w + 0.5 * h * k1);
        const CVec k3 = rhs(tau + 0.5 * h, w + 0.5 * h * k2);
        const CVec k4 = rhs(tau + h, w + h * k3);
        w += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return SpectralField(u0.lattice_ptr(), free_flow(L, w, t));
}

double spectral_abscissa(const SpectralField& a, LatticePtr lattice) {
    return DampedFlow(a, std::move(lattice)).spectral_abscissa();
}

DecayFit fit_log_norms(const std::vector<double>& times, const std::vector<double>& norms, double s, double norm0) {
    if (times.size() != norms.size()) throw ConfigError("decay fit: size mismatch");
    if (times.size() < 10) throw NumericError("decay fit needs at least 10 samples", norms);
    const auto n = static_cast<double>(times.size());
    double st = 0.0, sy = 0.0;
    std::vector<double> y(norms.size());
    for (std::size_t i = 0; i < norms.size(); ++i) {
        if (!(norms[i] > 0.0)) throw NumericError("decay fit: nonpositive norm", norms);
        y[i] = std::log(norms[i]);
        st += times[i];
        sy += y[i];
    }
    const double tm = st / n, ym = sy / n;
    double stt = 0.0, sty = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        stt += (times[i] - tm) * (times[i] - tm);
        sty += (times[i] - tm) * (y[i] - ym);
        syy += (y[i] - ym) * (y[i] - ym);
    }
    const double slope = sty / stt;
    const double icpt = ym - slope * tm;
    double res = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = y[i] - (icpt + slope * times[i]);
        res += e * e;
    }
    DecayFit f;
    f.nu = -slope;
    f.C = std::exp(icpt) / norm0;
    f.s = s;
    f.t_start = times.front();
    f.t_end = times.back();
    f.samples = static_cast<int>(times.size());
    f.r2 = syy > 0.0 ? 1.0 - res / syy : (res == 0.0 ? 1.0 : 0.0);
    if (!(f.r2 >= 0.99)) throw NumericError("decay fit: not an exponential regime (r2 = " + std::to_string(f.r2) + ")", norms);
    return f;
}

DecayFit decay_fit(const SpectralField& a, const SpectralField& u0, double s, double t_max, int samples) {
    if (samples < 10) throw ConfigError("decay fit needs at least 10 samples");
    if (!(t_max > 0.0)) throw ConfigError("decay fit needs t_max > 0");
    if (a.coeffs().cwiseAbs().maxCoeff() == 0.0) throw ConfigError("decay fit needs a nonzero damping profile");
    const DampedFlow flow(a, u0.lattice_ptr());
    const double nu_est = -flow.spectral_abscissa();
    const double t0 = nu_est > 0.0 ? std::min(2.0 / nu_est, 0.5 * t_max) : 0.5 * t_max;
    const double dt = (t_max - t0) / (samples - 1);
    const CMat step = flow.propagator(dt);
    CVec u = flow.propagator(t0) * u0.coeffs();
    std::vector<double> times, norms;
    for (int j = 0; j < samples; ++j) {
        if (j > 0) u = step * u;
        times.push_back(t0 + j * dt);
        norms.push_back(sobolev_norm(SpectralField(u0.lattice_ptr(), u), s));
    }
    const double n0 = sobolev_norm(u0, s);
    if (!(n0 > 0.0)) throw ConfigError("decay fit needs a nonzero initial state");
    auto f = fit_log_norms(times, norms, s, n0);
    if (!(f.nu > 0.0)) throw NumericError("decay fit: rate is not positive", norms);
    return f;
}

namespace {

struct WindowSolve {
    std::vector<CVec> states;
    int iterates = 0;
    std::vector<double> factors;
};

// Picard iteration of v = P(t) u + i int_0^t P(t - tau) N(v) on a uniform grid; the source
// integral is the cubic rule on g(tau) = P(t_j - tau) f(tau) per interval.
class WindowSolver {
public:
    WindowSolver(const DampedFlow& flow, const nonlinear::NonlinearitySpec& spec, double T, int steps,
                 const StabilizeOptions& opts)
        : flow_(flow), spec_(spec), steps_(steps), opts_(opts), w_(weights(*flow.lattice(), opts.s)) {
        h_ = T / steps;
        for (int m = -2; m <= 3; ++m) P_[static_cast<std::size_t>(m + 2)] = flow.propagator(m * h_);
    }

    WindowSolve solve(const CVec& u) const {
        const auto n = static_cast<std::size_t>(steps_) + 1;
        std::vector<CVec> lin(n);
        lin[0] = u;
        for (std::size_t j = 1; j < n; ++j) lin[j] = P(1) * lin[j - 1];
        WindowSolve out;
        out.states = lin;
        if (spec_.lambda == 0.0) return out;
        double prev = -1.0;
        for (;;) {
            std::vector<CVec> f(n);
            parallel_for(n, [&](std::size_t j) {
                f[j] = nonlinear::nonlinearity_galerkin(SpectralField(flow_.lattice(), out.states[j]), spec_).coeffs();
            });
            const auto D = cumulative(f);
            double diff = 0.0, size = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                CVec v = lin[j] + kI * D[j];
                diff = std::max(diff, (w_.asDiagonal() * (v - out.states[j])).norm());
                size = std::max(size, (w_.asDiagonal() * v).norm());
                out.states[j] = std::move(v);
            }
            ++out.iterates;
            if (!std::isfinite(diff)) throw nonlinear::NonContraction("window iterate is not finite", out.factors);
            if (prev > 0.0) {
                const double fct = diff / prev;
                out.factors.push_back(fct);
                if (fct > opts_.contraction_limit && diff > 1e3 * 2.2e-16 * size)
                    throw nonlinear::NonContraction("window Picard iteration does not contract: factor " +
                                                        std::to_string(fct),
                                                    out.factors);
            }
            if (diff <= opts_.tol * size) return out;
            if (out.iterates >= opts_.max_iter)
                throw nonlinear::NonContraction("window Picard iteration did not converge", out.factors);
            prev = diff;
        }
    }

private:
    const CMat& P(int m) const { return P_[static_cast<std::size_t>(m + 2)]; }

    std::vector<CVec> cumulative(const std::vector<CVec>& f) const {
        constexpr std::array<double, 4> first{9.0 / 24, 19.0 / 24, -5.0 / 24, 1.0 / 24};
        constexpr std::array<double, 4> inner{-1.0 / 24, 13.0 / 24, 13.0 / 24, -1.0 / 24};
        const std::size_t n = f.size();
        std::vector<CVec> D(n);
        D[0] = CVec::Zero(f[0].size());
        for (std::size_t j = 0; j + 1 < n; ++j) {
            // stencil offsets m relative to j; the weight of f_{j+m} carries P((1 - m) h)
            int m0;
            std::array<double, 4> w;
            if (j == 0) {
                m0 = 0;
                w = first;
            } else if (j + 2 == n) {
                m0 = -2;
                w = {first[3], first[2], first[1], first[0]};
            } else {
                m0 = -1;
                w = inner;
            }
            CVec acc = P(1) * D[j];
            for (int a = 0; a < 4; ++a) {
                const int m = m0 + a;
                acc += (h_ * w[static_cast<std::size_t>(a)]) * (P(1 - m) * f[static_cast<std::size_t>(static_cast<int>(j) + m)]);
            }
            D[j + 1] = std::move(acc);
        }
        return D;
    }

    const DampedFlow& flow_;
    nonlinear::NonlinearitySpec spec_;
    int steps_;
    StabilizeOptions opts_;
    RVec w_;
    double h_ = 0.0;
    std::array<CMat, 6> P_;
};

}  // namespace

StabilizationResult nonlinear_stabilize(const SpectralField& u0, const SpectralField& a,
                                        const nonlinear::NonlinearitySpec& spec, double t_max,
                                        const StabilizeOptions& opts) {
    nonlinear::make_spec(spec.lambda, spec.alpha1, spec.alpha2);
    if (!(t_max > 0.0)) throw ConfigError("stabilize needs t_max > 0");
    const DampedFlow flow(a, u0.lattice_ptr());
    const double s = opts.s;
    StabilizationResult out;
    const double nu_est = -flow.spectral_abscissa();
    if (!(nu_est > 0.0)) throw NumericError("damped generator has no decay at this truncation", {nu_est});
    out.linear = decay_fit(a, u0, s, std::max(10.0 / nu_est, 1.0));
    // window: C e^{-nu T} = target, lengthened until the flow itself is contractive enough
    double T = std::log(std::max(out.linear.C, 1.0) / opts.window_target) / out.linear.nu;
    T = std::max(T, 1.0 / nu_est);
    out.window_operator_norm = flow.operator_norm(T, s);
    for (int i = 0; i < 40 && out.window_operator_norm > 2.0 * opts.window_target; ++i) {
        T *= 1.25;
        out.window_operator_norm = flow.operator_norm(T, s);
    }
    out.window = T;
    const double omega = (spec.alpha() + 2) * std::max(1.0, max_norm2(u0.lattice())) + coupling_frequency(flow);
    const double rate = std::max(static_cast<double>(opts.steps_per_unit), omega);
    const int steps = std::max(3, static_cast<int>(std::ceil(rate * T)));
    const WindowSolver solver(flow, spec, T, steps, opts);
    const int count = std::max(1, static_cast<int>(std::ceil(t_max / T - 1e-9)));
    const int stride = std::max(1, steps / std::max(1, opts.samples_per_window));

    CVec u = u0.coeffs();
    const auto norm_of = [&](const CVec& c) { return sobolev_norm(SpectralField(u0.lattice_ptr(), c), s); };
    for (int k = 0; k < count; ++k) {
        const auto sol = solver.solve(u);
        WindowRecord rec;
        rec.t_start = k * T;
        rec.t_end = (k + 1) * T;
        rec.norm_start = norm_of(u);
        rec.norm_end = norm_of(sol.states.back());
        rec.factor = rec.norm_start > 0.0 ? rec.norm_end / rec.norm_start : 0.0;
        rec.iterates = sol.iterates;
        rec.contraction_factors = sol.factors;
        for (int j = 0; j < steps; j += stride) {
            out.times.push_back(rec.t_start + j * T / steps);
            out.norms.push_back(norm_of(sol.states[static_cast<std::size_t>(j)]));
        }
        out.windows.push_back(rec);
        if (rec.factor > 0.5)
            throw NumericError("window " + std::to_string(k) + " does not halve the norm (factor " +
                                   std::to_string(rec.factor) + ")",
                               {rec.factor});
        u = sol.states.back();
    }
    out.times.push_back(count * T);
    out.norms.push_back(norm_of(u));
    out.final_state = SpectralField(u0.lattice_ptr(), u);
    // global fit after the linear transient
    const double t0 = std::min(out.linear.t_start, 0.5 * count * T);
    std::vector<double> ft, fn;
    for (std::size_t i = 0; i < out.times.size(); ++i)
        if (out.times[i] >= t0 && out.norms[i] > 0.0) {
            ft.push_back(out.times[i]);
            fn.push_back(out.norms[i]);
        }
    out.fit = fit_log_norms(ft, fn, s, norm_of(u0.coeffs()));
    return out;
}

SpectralField replay_damped(const SpectralField& u0, const SpectralField& a, const nonlinear::NonlinearitySpec& spec,
                            double t, int steps) {
    const auto& L = u0.lattice();
    const DampedFlow flow(a, u0.lattice_ptr());
    CMat B = flow.generator();
    for (Eigen::Index i = 0; i < B.rows(); ++i) B(i, i) += kI * static_cast<double>(L.norm2(static_cast<std::size_t>(i)));
    const double omega = (spec.alpha() + 2) * std::max(1.0, max_norm2(L)) + coupling_frequency(flow);
    if (steps <= 0) steps = std::max(2048, static_cast<int>(std::ceil(omega * t / 0.2)));
    const double h = t / steps;
    auto rhs = [&](double tau, const CVec& w) {
        const SpectralField uu(u0.lattice_ptr(), free_flow(L, w, tau));
        const CVec f = B * uu.coeffs() + kI * nonlinear::nonlinearity_galerkin(uu, spec).coeffs();
        return free_flow(L, f, -tau);
    };
    CVec w = u0.coeffs();
    for (int j = 0; j < steps; ++j) {
        const double tau = j * h;
        const CVec k1 = rhs(tau, w);
        const CVec k2 = rhs(tau + 0.5 * h, w + 0.5 * h * k1);
        const CVec k3 = rhs(tau + 0.5 * h, w + 0.5 * h * k2);
        const CVec k4 = rhs(tau + h, w + h * k3);
        w += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return SpectralField(u0.lattice_ptr(), free_flow(L, w, t));
}

namespace {

double ratio(double num, double den) { return num == 0.0 ? 0.0 : num / den; }

// int_0^t e^{lambda (t - tau)} e^{-i mu tau} d tau.
cplx forced_mode(cplx lambda, double mu, double t) {
    const cplx z = lambda + kI * mu;
    const cplx zt = z * t;
    cplx e;
    if (std::abs(zt) < 1e-3)
        e = t * (1.0 + zt / 2.0 + zt * zt / 6.0 + zt * zt * zt / 24.0);
    else
        e = (std::exp(zt) - 1.0) / z;
    return std::exp(-kI * mu * t) * e;
}

}  // namespace

double damped_homogeneous_ratio(const DampedFlow& flow, const SpectralField& phi, double s, double b, double T,
                                const bourgain::SpaceTimeOptions& opts) {
    bourgain::SpaceTimeOptions o = opts;
    o.max_offset = flow.diagonal() ? 0.0 : max_norm2(*flow.lattice());
    const auto grid = bourgain::make_grid(T, o);
    const CMat A = flow.generator();
    // v(t) = e^{tA} phi through one eigendecomposition
    Eigen::ComplexEigenSolver<CMat> es(A);
    const CMat& V = es.eigenvectors();
    const CVec c = V.partialPivLu().solve(phi.coeffs());
    const CVec lam = es.eigenvalues();
    auto f = bourgain::canonical_extension(phi.lattice_ptr(), grid, [&](double t) -> CVec {
        if (flow.diagonal()) {
            CVec r = phi.coeffs();
            for (Eigen::Index i = 0; i < r.size(); ++i) r[i] *= std::exp(A(i, i) * t);
            return r;
        }
        return V * (c.array() * (lam * t).array().exp()).matrix();
    });
    return ratio(bourgain::xsb_norm(f, s, b), sobolev_norm(phi, s));
}

double damped_duhamel_ratio(const DampedFlow& flow, const bourgain::NearFree& f, double s, double b, double T,
                            const bourgain::SpaceTimeOptions& opts) {
    bourgain::SpaceTimeOptions o = opts;
    o.max_offset = f.max_detuning() + (flow.diagonal() ? 0.0 : max_norm2(*flow.lattice()));
    const auto grid = bourgain::make_grid(T, o);
    const auto& lat = f.amp.lattice();
    const CMat A = flow.generator();
    const auto n = A.rows();
    RVec mu(n);
    for (Eigen::Index k = 0; k < n; ++k) mu[k] = static_cast<double>(lat.norm2(static_cast<std::size_t>(k))) + f.sigma[k];
    std::function<CVec(double)> u;
    Eigen::ComplexEigenSolver<CMat> es;
    CMat Vi;
    if (flow.diagonal()) {
        u = [&](double t) {
            CVec r(n);
            for (Eigen::Index k = 0; k < n; ++k) r[k] = f.amp.coeffs()[k] * forced_mode(A(k, k), mu[k], t);
            return r;
        };
    } else {
        es.compute(A);
        Vi = es.eigenvectors().inverse();
        u = [&](double t) {
            CVec r = CVec::Zero(n);
            const CVec& lam = es.eigenvalues();
            for (Eigen::Index k = 0; k < n; ++k) {
                const cplx ak = f.amp.coeffs()[k];
                if (ak == cplx(0.0)) continue;
                CVec d(n);
                for (Eigen::Index i = 0; i < n; ++i) d[i] = Vi(i, k) * ak * forced_mode(lam[i], mu[k], t);
                r += es.eigenvectors() * d;
            }
            return r;
        };
    }
    auto U = bourgain::canonical_extension(f.amp.lattice_ptr(), grid, u);
    auto F = bourgain::canonical_extension(f.amp.lattice_ptr(), grid, [&](double t) { return f.at(t); });
    return ratio(bourgain::xsb_norm(U, s, b), bourgain::xsb_norm(F, s, b - 1.0));
}

bourgain::RatioStats damped_estimate_probes(DampedKind kind, const SpectralField& a, int samples, double s, double b,
                                            const bourgain::ProbeOptions& opts) {
    if (samples < 1) throw ConfigError("probe: need at least one sample");
    if (kind == DampedKind::Homogeneous && !(b >= 0.0 && b <= 1.0))
        throw ConfigError("damped homogeneous probe needs b in [0, 1]");
    if (kind == DampedKind::Duhamel && !(b > 0.5 && b < 1.0))
        throw ConfigError("damped Duhamel probe needs b in (1/2, 1)");
    auto lat = make_lattice(opts.n, opts.N, Basis::Exponential);
    const DampedFlow flow(a, lat);
    std::vector<bourgain::NearFree> data;
    for (int i = 0; i < samples; ++i)
        data.push_back(bourgain::random_near_free(lat, s, opts, static_cast<std::uint64_t>(i)));
    std::vector<double> r(static_cast<std::size_t>(samples)), rr(static_cast<std::size_t>(samples));
    parallel_for(static_cast<std::size_t>(samples), [&](std::size_t i) {
        for (int pass = 0; pass < 2; ++pass) {
            bourgain::SpaceTimeOptions so;
            so.band = pass == 0 ? opts.band : 2 * opts.band;
            so.window_order = opts.window_order;
            const double v = kind == DampedKind::Homogeneous
                                 ? damped_homogeneous_ratio(flow, data[i].amp, s, b, opts.T, so)
                                 : damped_duhamel_ratio(flow, data[i], s, b, opts.T, so);
            (pass == 0 ? r : rr)[i] = v;
        }
    });
    return bourgain::summarize(std::move(r), std::move(rr));
}

}  // namespace schrolab::stab
