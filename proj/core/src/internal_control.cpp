#include "schrolab/internal_control.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "schrolab/fft.hpp"
#include "schrolab/parallel.hpp"
#include "schrolab/quadrature.hpp"

namespace schrolab::internal {
namespace {

constexpr double kPi = std::numbers::pi;

RVec weights(const ModeLattice& lat, double s) {
    RVec w(static_cast<Eigen::Index>(lat.size()));
    for (std::size_t i = 0; i < lat.size(); ++i) w[static_cast<Eigen::Index>(i)] = lat.weight(i, s);
    return w;
}

RVec norms2(const ModeLattice& lat) {
    RVec v(static_cast<Eigen::Index>(lat.size()));
    for (std::size_t i = 0; i < lat.size(); ++i) v[static_cast<Eigen::Index>(i)] = static_cast<double>(lat.norm2(i));
    return v;
}

// Orthonormal basis of the odd (even) coefficient subspace of an Exponential lattice,
// one column per index of the Sine (Cosine) lattice of the same truncation.
CMat parity_basis(const ModeLattice& lat, Parity parity) {
    const int n = lat.dim();
    auto sub = make_lattice(n, lat.truncation(), parity == Parity::Odd ? Basis::Sine : Basis::Cosine);
    CMat Q = CMat::Zero(static_cast<Eigen::Index>(lat.size()), static_cast<Eigen::Index>(sub->size()));
    std::vector<int> k(static_cast<std::size_t>(n));
    for (std::size_t c = 0; c < sub->size(); ++c) {
        auto p = sub->index(c);
        int nonzero = 0;
        for (int a = 0; a < n; ++a)
            if (p[a] != 0) ++nonzero;
        const double amp = 1.0 / std::sqrt(static_cast<double>(1 << nonzero));
        for (int mask = 0; mask < (1 << n); ++mask) {
            bool skip = false;
            double sign = 1.0;
            for (int a = 0; a < n; ++a) {
                const bool flip = (mask >> a) & 1;
                if (flip && p[a] == 0) skip = true;
                k[static_cast<std::size_t>(a)] = flip ? -p[a] : p[a];
                if (flip && parity == Parity::Odd) sign = -sign;
            }
            if (skip) continue;
            Q(static_cast<Eigen::Index>(*lat.find(k)), static_cast<Eigen::Index>(c)) = sign * amp;
        }
    }
    return Q;
}

}  // namespace

InternalController make_controller(SpectralField a, double s, double T, LatticePtr lattice) {
    if (a.basis() != Basis::Exponential) throw ConfigError("controller profile must be on an Exponential lattice");
    if (lattice->basis() != Basis::Exponential) throw ConfigError("internal control runs on the torus lattice");
    if (a.lattice().dim() != lattice->dim()) throw ConfigError("profile and state lattice dimensions differ");
    if (!(T > 0.0)) throw ConfigError("control time T must be positive");
    if (max_imag_physical(a) > 1e-12) throw ConfigError("controller profile a(x) must be real");
    if (max_abs_physical(a) <= 0.0) throw ConfigError("controller profile a(x) must not vanish identically");
    return InternalController{std::move(a), s, T, std::move(lattice)};
}

SpectralField bump_profile(int n, int N_a, double width, double height) {
    if (!(width > 0.0 && width < 2.0 * kPi)) throw ConfigError("bump width must lie in (0, 2 pi)");
    const int G = 4096;
    std::vector<cplx> line(G);
    for (int j = 0; j < G; ++j) {
        double x = 2.0 * kPi * j / G;
        if (x > kPi) x -= 2.0 * kPi;
        const double r = 2.0 * x / width;
        line[static_cast<std::size_t>(j)] = std::abs(r) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r * r)) : 0.0;
    }
    const int dims[1] = {G};
    fft::transform(line, dims, -1);
    std::vector<double> c1(static_cast<std::size_t>(2 * N_a + 1));
    for (int k = -N_a; k <= N_a; ++k) {
        const cplx a = line[static_cast<std::size_t>((k + G) % G)];
        const cplx b = line[static_cast<std::size_t>((-k + G) % G)];
        c1[static_cast<std::size_t>(k + N_a)] = 0.5 * (a + b).real() / G;
    }
    auto lat = make_lattice(n, N_a, Basis::Exponential);
    SpectralField f(lat);
    const double h = std::pow(height, 1.0 / n);
    for (std::size_t i = 0; i < lat->size(); ++i) {
        auto k = lat->index(i);
        double v = 1.0;
        for (int a = 0; a < n; ++a) v *= h * c1[static_cast<std::size_t>(k[a] + N_a)];
        f.coeffs()[static_cast<Eigen::Index>(i)] = v;
    }
    return f;
}

SpectralField constant_profile(int n, int N_a, double c) {
    auto lat = make_lattice(n, N_a, Basis::Exponential);
    SpectralField f(lat);
    std::vector<int> zero(static_cast<std::size_t>(n), 0);
    f.coeffs()[static_cast<Eigen::Index>(*lat->find(zero))] = c;
    return f;
}

double GramianMatrix::smallest_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<CMat> es(matrix, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double GramianMatrix::largest_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<CMat> es(matrix, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

GramianMatrix assemble_internal_gramian(const InternalController& ctrl) {
    const auto& L = *ctrl.lattice;
    auto ext = make_lattice(L.dim(), L.truncation() + ctrl.a.lattice().truncation(), Basis::Exponential);
    const CMat A = convolution_matrix(ctrl.a, L, *ext);
    const RVec wL = weights(L, ctrl.s);
    const RVec wE = weights(*ext, -ctrl.s);
    const CMat C = wE.asDiagonal() * A * wL.asDiagonal();
    const CMat core = C.adjoint() * C;
    const RVec k2 = norms2(L);
    const Eigen::Index m = core.rows();
    CMat M(m, m);
    parallel_for(static_cast<std::size_t>(m), [&](std::size_t r) {
        const auto i = static_cast<Eigen::Index>(r);
        for (Eigen::Index j = 0; j < m; ++j) M(i, j) = core(i, j) * phase_integral(k2[j] - k2[i], ctrl.T);
    });
    GramianMatrix g;
    g.matrix = 0.5 * (M + M.adjoint());
    g.T = ctrl.T;
    g.s = ctrl.s;
    return g;
}

double observability_constant(const GramianMatrix& g) {
    const double lmin = g.smallest_eigenvalue();
    const double scale = std::max(1.0, g.matrix.cwiseAbs().maxCoeff());
    if (lmin <= 1e-14 * scale)
        throw SingularMatrixError("Gramian is not positive definite (lambda_min = " + std::to_string(lmin) + ")",
                                  lmin);
    return 1.0 / lmin;
}

HumSolver::HumSolver(InternalController ctrl, HumOptions opts) : ctrl_(std::move(ctrl)), opts_(opts) {
    gram_ = assemble_internal_gramian(ctrl_);
    const auto& L = *ctrl_.lattice;
    ext_ = make_lattice(L.dim(), L.truncation() + ctrl_.a.lattice().truncation(), Basis::Exponential);
    const CMat A = convolution_matrix(ctrl_.a, L, *ext_);
    wL_ = weights(L, ctrl_.s);
    shape_ = weights(*ext_, -2.0 * ctrl_.s).asDiagonal() * A * wL_.asDiagonal();
    kernel_ = convolution_matrix(ctrl_.a, *ext_, L) * shape_;

    basis_ = opts_.parity ? parity_basis(L, *opts_.parity) : CMat::Identity(gram_.matrix.rows(), gram_.matrix.cols());
    CMat proj = basis_.adjoint() * gram_.matrix * basis_;
    proj = 0.5 * (proj + proj.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<CMat> es(proj);
    lambda_min_ = es.eigenvalues().minCoeff();
    lambda_max_ = es.eigenvalues().maxCoeff();
    RVec ev = es.eigenvalues();
    if (lambda_min_ < opts_.singular_tol * lambda_max_) {
        if (!opts_.tikhonov)
            throw SingularMatrixError("Gramian numerically singular: lambda_min = " + std::to_string(lambda_min_) +
                                          ", lambda_max = " + std::to_string(lambda_max_),
                                      lambda_min_);
        ev.array() += opts_.tikhonov_eps * lambda_max_;
    }
    inverse_ = es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().adjoint();
}

CVec HumSolver::solve(const SpectralField& u0, const SpectralField& u1) const {
    const auto& L = *ctrl_.lattice;
    if (!u0.lattice().same_as(L) || !u1.lattice().same_as(L))
        throw ConfigError("u0 and u1 must live on the controller lattice");
    const CVec defect = u1.coeffs() - free_propagate(u0, ctrl_.T).coeffs();
    const CVec y = basis_.adjoint() * (wL_.asDiagonal() * defect);
    return basis_ * (inverse_ * y);
}

ModalSignal HumSolver::control(const CVec& psi) const {
    ModalSignal m;
    m.shape = shape_;
    m.freq = norms2(*ctrl_.lattice);
    m.amp = psi;
    m.t_ref = ctrl_.T;
    return m;
}

std::vector<CVec> HumSolver::controlled_part(const CVec& psi, const std::vector<double>& times) const {
    const auto& L = *ctrl_.lattice;
    const RVec k2 = norms2(L);
    const Eigen::Index m = kernel_.rows();
    CVec b(m);
    for (Eigen::Index j = 0; j < m; ++j) b[j] = psi[j] * std::polar(1.0, k2[j] * ctrl_.T);
    std::vector<CVec> out(times.size());
    parallel_for(times.size(), [&](std::size_t ti) {
        const double t = times[ti];
        CVec u = CVec::Zero(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            cplx acc = 0.0;
            for (Eigen::Index j = 0; j < m; ++j) {
                const cplx kij = kernel_(i, j);
                if (kij == cplx(0.0)) continue;
                acc += kij * b[j] * phase_integral(k2[i] - k2[j], t);
            }
            u[i] = acc * std::polar(1.0, -k2[i] * t);
        }
        out[ti] = std::move(u);
    });
    return out;
}

SpectralField HumSolver::state_at(const SpectralField& u0, const CVec& psi, double t) const {
    SpectralField u = free_propagate(u0, t);
    u.coeffs() += controlled_part(psi, {t}).front();
    return u;
}

double relative_residual(const SpectralField& achieved, const SpectralField& target, double s, NormWeight w) {
    const double err = sobolev_norm(achieved - target, s, w);
    const double ref = sobolev_norm(target, s, w);
    return ref > 0.0 ? err / ref : err;
}

InternalControlResult hum_internal_control(const InternalController& ctrl, const SpectralField& u0,
                                           const SpectralField& u1, HumOptions opts) {
    HumSolver solver(ctrl, opts);
    InternalControlResult r;
    r.psi = solver.solve(u0, u1);
    r.signal.lattice = solver.control_lattice();
    r.signal.modal_lattice = solver.control_lattice();
    r.signal.modal = solver.control(r.psi);
    r.signal.time_grid = uniform_time_grid(ctrl.T, opts.samples_per_unit);
    sample_frames(r.signal);
    r.achieved = solver.state_at(u0, r.psi, ctrl.T);
    r.residual = relative_residual(r.achieved, u1, ctrl.s);
    r.lambda_min = solver.lambda_min();
    r.lambda_max = solver.lambda_max();
    return r;
}

InternalControlResult internal_control_with_bc(Parity parity, const SpectralField& a_omega, double s, double T,
                                               const SpectralField& u0, const SpectralField& u1, HumOptions opts) {
    const Basis want = parity == Parity::Odd ? Basis::Sine : Basis::Cosine;
    if (u0.basis() != want || u1.basis() != want) throw ConfigError("boundary data basis does not match parity");
    if (a_omega.basis() != Basis::Cosine) throw ConfigError("profile on Omega must be given in the Cosine basis");
    const auto& L = u0.lattice();
    auto torus = make_lattice(L.dim(), L.truncation(), Basis::Exponential);
    auto ctrl = make_controller(even_extend(a_omega), s, T, torus);
    opts.parity = parity;
    HumSolver solver(ctrl, opts);
    const SpectralField e0 = extend(u0);
    const SpectralField e1 = extend(u1);
    InternalControlResult r;
    r.psi = solver.solve(e0, e1);
    r.signal.modal_lattice = solver.control_lattice();
    r.signal.modal = solver.control(r.psi);
    r.signal.lattice = make_lattice(L.dim(), solver.control_lattice()->truncation(), want);
    r.signal.time_grid = uniform_time_grid(T, opts.samples_per_unit);
    sample_frames(r.signal);
    const SpectralField end = solver.state_at(e0, r.psi, T);
    r.achieved = restrict_parity(end, parity, 1e-8);
    r.residual = relative_residual(r.achieved, u1, s);
    r.lambda_min = solver.lambda_min();
    r.lambda_max = solver.lambda_max();
    return r;
}

SpectralField replay(const InternalController& ctrl, const SpectralField& u0, const InternalSignal& h, int steps) {
    const auto& L = *ctrl.lattice;
    const RVec k2 = norms2(L);
    const CMat A = convolution_matrix(ctrl.a, *h.modal_lattice, L);
    const double kmax = k2.maxCoeff() + h.modal.freq.maxCoeff();
    if (steps <= 0) steps = std::max(2048, static_cast<int>(std::ceil(kmax * ctrl.T / 0.05)));
    const double dt = ctrl.T / steps;
    auto rhs = [&](double t) {
        CVec f = A * h.modal.at(t);
        for (Eigen::Index i = 0; i < f.size(); ++i) f[i] *= std::polar(1.0, k2[i] * t);
        return f;
    };
    CVec w = u0.coeffs();
    CVec f0 = rhs(0.0);
    for (int j = 0; j < steps; ++j) {
        const double t = j * dt;
        const CVec fm = rhs(t + 0.5 * dt);
        const CVec f1 = rhs(t + dt);
        w += (dt / 6.0) * (f0 + 4.0 * fm + f1);
        f0 = f1;
    }
    SpectralField out(ctrl.lattice, w);
    return free_propagate(out, ctrl.T);
}

double control_norm_squared(const InternalSignal& h, double s, double T, int panels) {
    const RVec w = weights(*h.modal_lattice, s);
    if (panels <= 0) panels = std::max(64, static_cast<int>(std::ceil(2.0 * h.modal.freq.maxCoeff() * T / 4.0)));
    const auto q = composite_gauss(8, panels, 0.0, T);
    double acc = 0.0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i)
        acc += q.weights[i] * (w.asDiagonal() * h.modal.at(q.nodes[i])).squaredNorm();
    return acc;
}

}  // namespace schrolab::internal
