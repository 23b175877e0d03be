#include "schrolab/neumann_control.hpp"

#include <cmath>

#include "schrolab/parallel.hpp"
#include "schrolab/quadrature.hpp"

namespace schrolab::neumann {
namespace {

constexpr double kPi = std::numbers::pi;

RVec norms2(const ModeLattice& lat) {
    RVec v(static_cast<Eigen::Index>(lat.size()));
    for (std::size_t i = 0; i < lat.size(); ++i) v[static_cast<Eigen::Index>(i)] = static_cast<double>(lat.norm2(i));
    return v;
}

// Row per sample point: cos_{p'}(x') times the sign of cos(p_a x_a) at the face.
CMat side_matrix(const NeumannProblem& prob, const std::vector<std::vector<double>>& grid) {
    const auto& lat = *prob.lattice;
    const int n = lat.dim();
    const int a = prob.face / 2;
    const int side = prob.face % 2;
    CMat D(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(lat.size()));
    for (std::size_t j = 0; j < grid.size(); ++j)
        for (std::size_t c = 0; c < lat.size(); ++c) {
            auto p = lat.index(c);
            double v = (side == 1 && p[a] % 2) ? -1.0 : 1.0;
            int t = 0;
            for (int i = 0; i < n; ++i) {
                if (i == a) continue;
                v *= std::cos(p[i] * grid[j][static_cast<std::size_t>(t++)]);
            }
            D(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) = v;
        }
    return D;
}

}  // namespace

NeumannProblem make_problem(LatticePtr lattice, int face, double s, double T) {
    if (lattice->basis() != Basis::Cosine) throw ConfigError("Neumann control runs on a Cosine lattice");
    if (face < 0 || face >= 2 * lattice->dim()) throw ConfigError("side must be a full face of the rectangle");
    if (!(T > 0.0)) throw ConfigError("control time T must be positive");
    return NeumannProblem{std::move(lattice), face, s, T};
}

double mode_norm(const ModeLattice& lat, std::size_t i) {
    double v = 1.0;
    for (int k : lat.index(i)) v *= k == 0 ? kPi : kPi / 2.0;
    return v;
}

double side_overlap(const NeumannProblem& prob, std::size_t p, std::size_t q) {
    const auto& lat = *prob.lattice;
    const int a = prob.face / 2;
    auto kp = lat.index(p);
    auto kq = lat.index(q);
    double v = (prob.face % 2 == 1 && (kp[a] + kq[a]) % 2) ? -1.0 : 1.0;
    for (int i = 0; i < lat.dim(); ++i) {
        if (i == a) continue;
        if (kp[i] != kq[i]) return 0.0;
        v *= kp[i] == 0 ? kPi : kPi / 2.0;
    }
    return v;
}

CMat NeumannGramian::unsymmetrized() const {
    const RVec r = weight.cwiseSqrt();
    return r.cwiseInverse().asDiagonal() * matrix * r.asDiagonal();
}

double NeumannGramian::smallest_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<CMat> es(matrix, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

NeumannGramian neumann_gramian(const NeumannProblem& prob) {
    const auto& lat = *prob.lattice;
    const RVec k2 = norms2(lat);
    const auto m = static_cast<Eigen::Index>(lat.size());
    NeumannGramian g;
    g.T = prob.T;
    g.weight.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) g.weight[i] = std::pow(1.0 + k2[i], -prob.s);
    g.matrix = CMat::Zero(m, m);
    parallel_for(static_cast<std::size_t>(m), [&](std::size_t q) {
        const auto iq = static_cast<Eigen::Index>(q);
        for (Eigen::Index p = 0; p < m; ++p) {
            const double b = side_overlap(prob, static_cast<std::size_t>(p), q);
            if (b == 0.0) continue;
            g.matrix(iq, p) = std::sqrt(g.weight[iq] * g.weight[p]) * b * phase_integral(k2[iq] - k2[p], prob.T);
        }
    });
    return g;
}

double observability_constant(const NeumannGramian& g) {
    const double l = g.smallest_eigenvalue();
    if (!(l > 0.0)) throw SingularMatrixError("Neumann Gramian is not positive definite", l);
    return 1.0 / l;
}

FaceTrace side_trace(const NeumannProblem& prob, const SpectralField& v0, int samples_per_unit, int points_per_axis) {
    const auto& lat = *prob.lattice;
    if (points_per_axis <= 0) points_per_axis = 4 * lat.truncation();
    FaceTrace tr;
    tr.face_id = prob.face;
    tr.axis = prob.face / 2;
    tr.side = prob.face % 2;
    tr.grid = face_grid(lat.dim(), points_per_axis);
    tr.time_grid = uniform_time_grid(prob.T, samples_per_unit);
    tr.modal.shape = side_matrix(prob, tr.grid);
    tr.modal.freq = norms2(lat);
    tr.modal.amp = v0.coeffs();
    tr.modal.t_ref = 0.0;
    sample_trace(tr);
    return tr;
}

NeumannResult neumann_control(const NeumannProblem& prob, const SpectralField& u0, const SpectralField& u1,
                              NeumannOptions opts) {
    const auto& lat = *prob.lattice;
    if (!u0.lattice().same_as(lat) || !u1.lattice().same_as(lat))
        throw ConfigError("u0 and u1 must live on the problem lattice");
    const auto g = neumann_gramian(prob);
    const RVec k2 = norms2(lat);
    const auto m = static_cast<Eigen::Index>(lat.size());
    const CVec d = u1.coeffs() - free_propagate(u0, prob.T).coeffs();
    CVec r(m);
    for (Eigen::Index q = 0; q < m; ++q)
        r[q] = cplx(0.0, -mode_norm(lat, static_cast<std::size_t>(q))) * std::polar(1.0, k2[q] * prob.T) * d[q];

    Eigen::SelfAdjointEigenSolver<CMat> es(g.matrix);
    const RVec ev = es.eigenvalues();
    NeumannResult res;
    res.lambda_min = ev.minCoeff();
    if (res.lambda_min < opts.singular_tol * ev.maxCoeff())
        throw SingularMatrixError("Neumann Gramian numerically singular: lambda_min = " + std::to_string(res.lambda_min),
                                  res.lambda_min);
    const RVec sw = g.weight.cwiseSqrt();
    const CVec chi = es.eigenvectors() * ev.cwiseInverse().asDiagonal() * (es.eigenvectors().adjoint() * (sw.asDiagonal() * r));
    res.phi = sw.cwiseInverse().asDiagonal() * chi;

    SpectralField amp(prob.lattice, g.weight.asDiagonal() * res.phi);
    FaceTrace tr = side_trace(prob, amp, opts.samples_per_unit, opts.points_per_axis);
    res.trace.kind = "neumann_trace";

    const CVec moments = g.unsymmetrized() * res.phi;
    res.achieved = free_propagate(u0, prob.T);
    for (Eigen::Index q = 0; q < m; ++q)
        res.achieved.coeffs()[q] += cplx(0.0, 1.0 / mode_norm(lat, static_cast<std::size_t>(q))) *
                                    std::polar(1.0, -k2[q] * prob.T) * moments[q];
    const double err = sobolev_norm(res.achieved - u1, prob.s);
    const double ref = sobolev_norm(u1, prob.s);
    res.residual = ref > 0.0 ? err / ref : err;

    const int P = static_cast<int>(std::lround(std::pow(double(tr.grid.size()), 1.0 / std::max(1, lat.dim() - 1))));
    std::vector<double> sw2(tr.grid.size(), lat.dim() == 1 ? 1.0 : std::pow(kPi / P, lat.dim() - 1));
    res.trace_norm = time_sobolev_norm(tr.values, prob.T, 0.5 * prob.s, sw2);
    res.trace.faces.push_back(std::move(tr));
    return res;
}

double ingham_observability_ratio(const NeumannProblem& prob, const SpectralField& v0) {
    const auto& lat = *prob.lattice;
    const RVec k2 = norms2(lat);
    const auto m = static_cast<Eigen::Index>(lat.size());
    double num = 0.0;
    double den = 0.0;
    for (Eigen::Index q = 0; q < m; ++q) {
        den += mode_norm(lat, static_cast<std::size_t>(q)) * std::norm(v0.coeffs()[q]);
        for (Eigen::Index p = 0; p < m; ++p) {
            const double b = side_overlap(prob, static_cast<std::size_t>(p), static_cast<std::size_t>(q));
            if (b == 0.0) continue;
            num += std::real(std::conj(v0.coeffs()[q]) * v0.coeffs()[p] * b * phase_integral(k2[q] - k2[p], prob.T));
        }
    }
    return den > 0.0 ? num / den : 0.0;
}

SpectralField replay_neumann(const NeumannProblem& prob, const SpectralField& u0, const FaceTrace& h, int panels) {
    const auto& lat = *prob.lattice;
    const int n = lat.dim();
    const int N = lat.truncation();
    const RVec k2 = norms2(lat);
    const double wmax = 2.0 * k2.maxCoeff() + 1.0;
    if (panels <= 0) panels = std::max(32, static_cast<int>(std::ceil(wmax * prob.T / 4.0)));
    const auto tq = composite_gauss(8, panels, 0.0, prob.T);
    // tensor rule on the face; the modal shape is rebuilt at these nodes
    const auto ax = composite_gauss(16, std::max(2, N / 2), 0.0, kPi);
    std::vector<std::vector<double>> nodes;
    std::vector<double> w;
    std::size_t total = 1;
    for (int i = 0; i < n - 1; ++i) total *= ax.nodes.size();
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::vector<double> x;
        double wt = 1.0;
        std::size_t r = idx;
        for (int i = 0; i < n - 1; ++i) {
            const std::size_t j = r % ax.nodes.size();
            r /= ax.nodes.size();
            x.push_back(ax.nodes[j]);
            wt *= ax.weights[j];
        }
        nodes.push_back(std::move(x));
        w.push_back(wt);
    }
    // h at the nodes: the emitted modal amplitudes on cosine transverse profiles
    Eigen::MatrixXd cosq(static_cast<Eigen::Index>(nodes.size()), static_cast<Eigen::Index>(lat.size()));
    const int a = prob.face / 2;
    for (std::size_t j = 0; j < nodes.size(); ++j)
        for (std::size_t c = 0; c < lat.size(); ++c) {
            auto p = lat.index(c);
            double v = (prob.face % 2 == 1 && p[a] % 2) ? -1.0 : 1.0;
            int t = 0;
            for (int i = 0; i < n; ++i)
                if (i != a) v *= std::cos(p[i] * nodes[j][static_cast<std::size_t>(t++)]);
            cosq(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) = v;
        }
    if (h.modal.amp.size() != static_cast<Eigen::Index>(lat.size()))
        throw ConfigError("trace modal form does not match the problem lattice");
    const Eigen::MatrixXd cw = cosq.transpose() * Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())).asDiagonal();
    CVec acc = CVec::Zero(static_cast<Eigen::Index>(lat.size()));
    for (std::size_t ti = 0; ti < tq.nodes.size(); ++ti) {
        const double t = tq.nodes[ti];
        CVec amp(h.modal.amp.size());
        for (Eigen::Index i = 0; i < amp.size(); ++i) amp[i] = h.modal.amp[i] * std::polar(1.0, -h.modal.freq[i] * (t - h.modal.t_ref));
        const CVec hv = cosq.cast<cplx>() * amp;
        CVec proj = cw.cast<cplx>() * hv;
        for (Eigen::Index q = 0; q < proj.size(); ++q) acc[q] += tq.weights[ti] * proj[q] * std::polar(1.0, k2[q] * t);
    }
    SpectralField u = free_propagate(u0, prob.T);
    for (Eigen::Index q = 0; q < acc.size(); ++q)
        u.coeffs()[q] += cplx(0.0, 1.0 / mode_norm(lat, static_cast<std::size_t>(q))) * std::polar(1.0, -k2[q] * prob.T) * acc[q];
    return u;
}

}  // namespace schrolab::neumann
