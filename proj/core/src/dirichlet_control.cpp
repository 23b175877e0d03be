#include "schrolab/dirichlet_control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "schrolab/parallel.hpp"
#include "schrolab/quadrature.hpp"

namespace schrolab::dirichlet {
namespace {

constexpr double kPi = std::numbers::pi;

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Monomial coefficients of the smoothstep t^{r+1} sum_k C(r+k, k) (1-t)^k.
std::vector<double> smoothstep_poly(int r) {
    std::vector<double> out(static_cast<std::size_t>(2 * r + 2), 0.0);
    for (int k = 0; k <= r; ++k) {
        const double c = binomial(r + k, k);
        for (int j = 0; j <= k; ++j) {
            const double term = c * binomial(k, j) * ((j % 2) ? -1.0 : 1.0);
            out[static_cast<std::size_t>(r + 1 + j)] += term;
        }
    }
    return out;
}

double poly_derivative(const std::vector<double>& c, double t, int k) {
    double acc = 0.0;
    for (std::size_t i = static_cast<std::size_t>(k); i < c.size(); ++i) {
        double f = 1.0;
        for (int j = 0; j < k; ++j) f *= static_cast<double>(i - static_cast<std::size_t>(j));
        acc += c[i] * f * std::pow(t, static_cast<double>(i) - k);
    }
    return acc;
}

// Quadrature on (0, pi) for integrands rho(x) * trig of degree <= 2N.
QuadratureRule axis_rule(const SmoothController& g, int N) {
    if (g.uniform) return composite_gauss(16, std::max(4, N), 0.0, kPi);
    const int panels = std::max(2, N / 4 + 1);
    auto a = composite_gauss(16, panels, 0.0, g.plateau_end());
    auto b = composite_gauss(16, panels, g.plateau_end(), g.support_end());
    a.nodes.insert(a.nodes.end(), b.nodes.begin(), b.nodes.end());
    a.weights.insert(a.weights.end(), b.weights.begin(), b.weights.end());
    return a;
}

// C(m) = int_0^pi rho(x) cos(m x) dx.
double rho_cosine_moment(const SmoothController& g, int m) {
    if (g.uniform) return m == 0 ? kPi : 0.0;
    const double e4 = g.plateau_end();
    double acc = m == 0 ? e4 : std::sin(m * e4) / m;
    const auto q = composite_gauss(20, std::max(2, static_cast<int>(std::abs(m) * e4 / 2.0) + 2), e4, g.support_end());
    for (std::size_t i = 0; i < q.nodes.size(); ++i) acc += q.weights[i] * g.rho(q.nodes[i]) * std::cos(m * q.nodes[i]);
    return acc;
}

RVec norms2(const ModeLattice& lat) {
    RVec v(static_cast<Eigen::Index>(lat.size()));
    for (std::size_t i = 0; i < lat.size(); ++i) v[static_cast<Eigen::Index>(i)] = static_cast<double>(lat.norm2(i));
    return v;
}

}  // namespace

double SmoothController::rho(double s) const {
    if (uniform) return 1.0;
    if (s <= plateau_end()) return 1.0;
    if (s >= support_end()) return 0.0;
    static thread_local std::vector<double> poly;
    static thread_local int cached = -1;
    if (cached != order) {
        poly = smoothstep_poly(order);
        cached = order;
    }
    const double t = (s - plateau_end()) / (support_end() - plateau_end());
    return 1.0 - poly_derivative(poly, t, 0);
}

double SmoothController::rho_derivative(double s, int k) const {
    if (k == 0) return rho(s);
    if (uniform || s <= plateau_end() || s >= support_end()) return 0.0;
    const auto poly = smoothstep_poly(order);
    const double w = support_end() - plateau_end();
    const double t = (s - plateau_end()) / w;
    return -poly_derivative(poly, t, k) / std::pow(w, k);
}

bool SmoothController::face_active(int id) const {
    return std::find(faces.begin(), faces.end(), id) != faces.end();
}

double SmoothController::g(std::span<const double> x) const {
    double v = 1.0;
    for (double xi : x) v *= rho(xi);
    return v;
}

SmoothController build_smooth_controller(int n, double epsilon, int order, std::vector<int> faces) {
    if (n < 1) throw ConfigError("dimension must be positive");
    if (!(epsilon > 0.0 && epsilon < kPi)) throw ConfigError("controller epsilon must lie in (0, pi)");
    if (order < 1) throw ConfigError("smoothstep order must be at least 1");
    SmoothController g;
    g.n = n;
    g.epsilon = epsilon;
    g.order = order;
    if (faces.empty())
        for (int f = 0; f < face_count(n); ++f) faces.push_back(f);
    for (int f : faces)
        if (f < 0 || f >= face_count(n)) throw ConfigError("unknown face id " + std::to_string(f));
    std::sort(faces.begin(), faces.end());
    g.faces = std::move(faces);
    return g;
}

SmoothController uniform_controller(int n, std::vector<int> faces) {
    auto g = build_smooth_controller(n, 1.0, 1, std::move(faces));
    g.uniform = true;
    return g;
}

std::vector<double> rho_cosine_coefficients(const SmoothController& g, int M) {
    std::vector<double> c(static_cast<std::size_t>(M) + 1);
    for (int k = 0; k <= M; ++k) c[static_cast<std::size_t>(k)] = rho_cosine_moment(g, k) * (k == 0 ? 1.0 : 2.0) / kPi;
    return c;
}

double axis_overlap(const SmoothController& g, int p, int q) {
    return 0.5 * (rho_cosine_moment(g, p - q) - rho_cosine_moment(g, p + q));
}

double face_integral(const SmoothController& g, std::span<const int> p, std::span<const int> q, int face) {
    const int n = static_cast<int>(p.size());
    if (face < 0 || face >= face_count(n)) throw ConfigError("unknown face id " + std::to_string(face));
    if (!g.face_active(face)) return 0.0;
    const int a = face_axis(face);
    const int side = face_side(face);
    double v = static_cast<double>(p[a]) * q[a] * g.rho(side == 0 ? 0.0 : kPi);
    if (side == 1 && (p[a] + q[a]) % 2 != 0) v = -v;
    for (int i = 0; i < n && v != 0.0; ++i)
        if (i != a) v *= axis_overlap(g, p[i], q[i]);
    return v;
}

cplx phi(double a, double b, double T) {
    if (a == b) return cplx(0.0, T) * std::polar(1.0, -a * T);
    return (std::polar(1.0, -a * T) - std::polar(1.0, -b * T)) / (b - a);
}

MomentOperator::MomentOperator(SmoothController g, LatticePtr lattice) : g_(std::move(g)), lattice_(std::move(lattice)) {
    if (lattice_->basis() != Basis::Sine) throw ConfigError("Dirichlet moments live on a Sine lattice");
    if (lattice_->dim() != g_.n) throw ConfigError("controller and lattice dimensions differ");
    const int n = g_.n;
    const int N = lattice_->truncation();
    // 1-D overlaps are shared by every face
    Eigen::MatrixXd J(N + 1, N + 1);
    for (int p = 1; p <= N; ++p)
        for (int q = 1; q <= N; ++q) J(p, q) = axis_overlap(g_, p, q);
    const auto m = static_cast<Eigen::Index>(lattice_->size());
    I_ = Eigen::MatrixXd::Zero(m, m);
    parallel_for(static_cast<std::size_t>(m), [&](std::size_t r) {
        auto q = lattice_->index(r);
        for (Eigen::Index c = 0; c < m; ++c) {
            auto p = lattice_->index(static_cast<std::size_t>(c));
            double total = 0.0;
            for (int f : g_.faces) {
                const int a = face_axis(f);
                const int side = face_side(f);
                double v = static_cast<double>(p[a]) * q[a] * g_.rho(side == 0 ? 0.0 : kPi);
                if (side == 1 && (p[a] + q[a]) % 2 != 0) v = -v;
                for (int i = 0; i < n && v != 0.0; ++i)
                    if (i != a) v *= J(p[i], q[i]);
                total += v;
            }
            I_(static_cast<Eigen::Index>(r), c) = total;
        }
    });
}

SMatrix MomentOperator::assemble(double T) const {
    if (!(T > 0.0)) throw ConfigError("control time T must be positive");
    const RVec k2 = norms2(*lattice_);
    const double c = -std::pow(2.0 / kPi, g_.n);
    SMatrix S;
    S.T = T;
    S.lattice = lattice_;
    S.matrix.resize(I_.rows(), I_.cols());
    for (Eigen::Index q = 0; q < I_.rows(); ++q)
        for (Eigen::Index p = 0; p < I_.cols(); ++p) S.matrix(q, p) = c * phi(k2[p], k2[q], T) * I_(q, p);
    return S;
}

SpectralField MomentOperator::evolve(const SpectralField& v0, double t) const {
    if (!v0.lattice().same_as(*lattice_)) throw ConfigError("v0 must live on the moment lattice");
    SpectralField u(lattice_);
    if (t == 0.0) return u;
    u.coeffs() = assemble(t).matrix * v0.coeffs();
    return u;
}

SMatrix assemble_S(const SmoothController& g, double T, LatticePtr lattice) {
    return MomentOperator(g, std::move(lattice)).assemble(T);
}

SpectralField evolve_moments(const SpectralField& v0, const SmoothController& g, double t) {
    return MomentOperator(g, v0.lattice_ptr()).evolve(v0, t);
}

CMat normal_derivative_matrix(const ModeLattice& lat, int face, const std::vector<std::vector<double>>& grid) {
    const int n = lat.dim();
    const int a = face_axis(face);
    const int side = face_side(face);
    CMat D(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(lat.size()));
    for (std::size_t j = 0; j < grid.size(); ++j)
        for (std::size_t c = 0; c < lat.size(); ++c) {
            auto p = lat.index(c);
            double v = side == 0 ? -static_cast<double>(p[a]) : (p[a] % 2 ? -1.0 : 1.0) * p[a];
            int t = 0;
            for (int i = 0; i < n; ++i) {
                if (i == a) continue;
                v *= std::sin(p[i] * grid[j][static_cast<std::size_t>(t++)]);
            }
            D(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) = v;
        }
    return D;
}

SSolver::SSolver(const SMatrix& S, double cond_limit) : qr_(S.matrix) {
    Eigen::JacobiSVD<CMat> svd(S.matrix);
    const auto& sv = svd.singularValues();
    cond_ = sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1] : std::numeric_limits<double>::infinity();
    if (!(cond_ <= cond_limit))
        throw SingularMatrixError("moment operator S is numerically singular: cond = " + std::to_string(cond_), cond_);
}

CVec SSolver::solve(const CVec& u) const { return qr_.solve(u); }

BoundarySignal synthesize_trace(const SpectralField& v0, const SmoothController& g, double T,
                                int samples_per_unit, int points_per_axis) {
    const auto& lat = v0.lattice();
    if (points_per_axis <= 0) points_per_axis = 4 * lat.truncation();
    BoundarySignal sig;
    sig.kind = "dirichlet_trace";
    const auto times = uniform_time_grid(T, samples_per_unit);
    for (int f : g.faces) {
        if (!g.uniform && face_side(f) == 1) continue;  // g vanishes on the far faces
        FaceTrace tr;
        tr.face_id = f;
        tr.axis = face_axis(f);
        tr.side = face_side(f);
        tr.grid = face_grid(lat.dim(), points_per_axis);
        tr.time_grid = times;
        tr.modal.shape = normal_derivative_matrix(lat, f, tr.grid);
        tr.modal.freq = norms2(lat);
        tr.modal.amp = v0.coeffs();
        tr.modal.t_ref = 0.0;
        sample_trace(tr);
        sig.faces.push_back(std::move(tr));
    }
    return sig;
}

DirichletResult dirichlet_control(const SpectralField& u_T, const SMatrix& S, const SmoothController& g,
                                  DirichletOptions opts) {
    if (!u_T.lattice().same_as(*S.lattice)) throw ConfigError("target must live on the lattice of S");
    SSolver solver(S, opts.cond_limit);
    DirichletResult r;
    r.condition = solver.condition();
    r.v0 = SpectralField(S.lattice, solver.solve(u_T.coeffs()));
    r.trace = synthesize_trace(r.v0, g, S.T, opts.samples_per_unit, opts.points_per_axis);
    r.achieved = SpectralField(S.lattice, S.matrix * r.v0.coeffs());
    const double err = sobolev_norm(r.achieved - u_T, opts.s, NormWeight::Laplacian);
    const double ref = sobolev_norm(u_T, opts.s, NormWeight::Laplacian);
    r.residual = ref > 0.0 ? err / ref : err;
    return r;
}

SpectralField replay_dirichlet(const SmoothController& g, const SpectralField& v0, LatticePtr lattice,
                               const SpectralField& u0, double T, int steps, const SourceTerm& source) {
    const int n = g.n;
    const auto& V = v0.lattice();
    const auto& L = *lattice;
    if (V.basis() != Basis::Sine || L.basis() != Basis::Sine || V.dim() != n || L.dim() != n)
        throw ConfigError("replay needs Sine lattices matching the controller dimension");
    if (!u0.lattice().same_as(L)) throw ConfigError("initial state must live on the replay lattice");
    const int Nq = std::max(V.truncation(), L.truncation());
    const auto rule = axis_rule(g, Nq);
    const std::size_t m1 = rule.nodes.size();

    // Boundary nodes: per active face, a tensor rule over the n-1 transverse axes.
    struct Node {
        int axis;
        int side;
        double weight;
        std::vector<double> x;  // full point
    };
    std::vector<Node> nodes;
    for (int f : g.faces) {
        const int a = face_axis(f);
        const int side = face_side(f);
        const double ga = g.rho(side == 0 ? 0.0 : kPi);
        if (ga == 0.0) continue;
        std::size_t total = 1;
        for (int i = 0; i < n - 1; ++i) total *= m1;
        for (std::size_t idx = 0; idx < total; ++idx) {
            Node nd{a, side, ga, std::vector<double>(static_cast<std::size_t>(n))};
            std::size_t r = idx;
            for (int i = 0; i < n; ++i) {
                if (i == a) {
                    nd.x[static_cast<std::size_t>(i)] = side == 0 ? 0.0 : kPi;
                    continue;
                }
                const std::size_t j = r % m1;
                r /= m1;
                nd.x[static_cast<std::size_t>(i)] = rule.nodes[j];
                nd.weight *= rule.weights[j] * g.rho(rule.nodes[j]);
            }
            if (nd.weight != 0.0) nodes.push_back(std::move(nd));
        }
    }
    // d/dnu sin-products at the nodes for the control modes and the state modes
    auto dnu = [&](const ModeLattice& lat) {
        Eigen::MatrixXd D(static_cast<Eigen::Index>(nodes.size()), static_cast<Eigen::Index>(lat.size()));
        for (std::size_t j = 0; j < nodes.size(); ++j)
            for (std::size_t c = 0; c < lat.size(); ++c) {
                auto p = lat.index(c);
                const auto& nd = nodes[j];
                double v = static_cast<double>(p[nd.axis]) * (nd.side == 0 ? -1.0 : std::cos(p[nd.axis] * kPi));
                for (int i = 0; i < n; ++i)
                    if (i != nd.axis) v *= std::sin(p[i] * nd.x[static_cast<std::size_t>(i)]);
                D(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) = v;
            }
        return D;
    };
    const Eigen::MatrixXd Dv = dnu(V);
    Eigen::MatrixXd Dq = dnu(L);
    RVec w(static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t j = 0; j < nodes.size(); ++j) w[static_cast<Eigen::Index>(j)] = nodes[j].weight;
    const Eigen::MatrixXd DqW = Dq.transpose() * w.asDiagonal();
    const RVec kv = norms2(V);
    const RVec kq = norms2(L);
    const double c = std::pow(2.0 / kPi, n);

    const double wmax = kv.maxCoeff() + kq.maxCoeff();
    if (steps <= 0) steps = std::max(2048, static_cast<int>(std::ceil(wmax * T / 0.05)));
    const double dt = T / steps;

    auto rhs = [&](double t, const CVec& wq) {
        CVec hv(kv.size());
        for (Eigen::Index i = 0; i < kv.size(); ++i) hv[i] = v0.coeffs()[i] * std::polar(1.0, -kv[i] * t);
        const CVec h = Dv * hv;
        CVec f = cplx(0.0, -c) * (DqW * h);
        if (source) {
            CVec u(wq.size());
            for (Eigen::Index i = 0; i < kq.size(); ++i) u[i] = wq[i] * std::polar(1.0, -kq[i] * t);
            f += source(t, u);
        }
        for (Eigen::Index i = 0; i < kq.size(); ++i) f[i] *= std::polar(1.0, kq[i] * t);
        return f;
    };
    CVec wq = u0.coeffs();
    for (int j = 0; j < steps; ++j) {
        const double t = j * dt;
        const CVec k1 = rhs(t, wq);
        const CVec k2 = rhs(t + 0.5 * dt, wq + 0.5 * dt * k1);
        const CVec k3 = rhs(t + 0.5 * dt, wq + 0.5 * dt * k2);
        const CVec k4 = rhs(t + dt, wq + dt * k3);
        wq += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    for (Eigen::Index i = 0; i < kq.size(); ++i) wq[i] *= std::polar(1.0, -kq[i] * T);
    return SpectralField(lattice, wq);
}

std::vector<double> isomorphism_ratios(const SSolver& solver, const SpectralField& u_T, const std::vector<double>& s) {
    const SpectralField v0(u_T.lattice_ptr(), solver.solve(u_T.coeffs()));
    std::vector<double> out;
    for (double si : s)
        out.push_back(sobolev_norm(v0, si + 2.0, NormWeight::Laplacian) / sobolev_norm(u_T, si, NormWeight::Laplacian));
    return out;
}

ConvexWeight convex_weight(std::span<const double> x, double delta) {
    const int n = static_cast<int>(x.size());
    ConvexWeight w;
    w.gradient = Eigen::VectorXd::Zero(n);
    w.hessian = Eigen::MatrixXd::Zero(n, n);
    w.grad_laplacian = Eigen::VectorXd::Zero(n);
    const double x1 = std::max(x[0], 0.0);
    if (x1 == 0.0) return w;
    double P = 1.0;
    double Q = 0.0;  // sum (x_j^+)^2
    for (int j = 1; j < n; ++j) {
        const double y = std::max(x[static_cast<std::size_t>(j)], 0.0);
        P += delta * std::pow(y, 4);
        Q += y * y;
    }
    w.value = std::pow(x1, 4) * P;
    w.gradient[0] = 4.0 * std::pow(x1, 3) * P;
    w.hessian(0, 0) = 12.0 * x1 * x1 * P;
    w.grad_laplacian[0] = 24.0 * x1 * P + 48.0 * delta * std::pow(x1, 3) * Q;
    for (int j = 1; j < n; ++j) {
        const double y = std::max(x[static_cast<std::size_t>(j)], 0.0);
        w.gradient[j] = 4.0 * delta * std::pow(x1, 4) * std::pow(y, 3);
        w.hessian(0, j) = w.hessian(j, 0) = 16.0 * delta * std::pow(x1, 3) * std::pow(y, 3);
        w.hessian(j, j) = 12.0 * delta * std::pow(x1, 4) * y * y;
        w.grad_laplacian[j] = 48.0 * delta * x1 * x1 * std::pow(y, 3) + 24.0 * delta * std::pow(x1, 4) * y;
    }
    return w;
}

ConvexityCertificate convexity_certificate(int n, double delta, int samples, std::uint64_t seed) {
    if (n < 2) throw ConfigError("convexity certificate needs n >= 2");
    if (samples < 1) throw ConfigError("convexity certificate needs samples >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ConvexityCertificate c;
    c.min_margin = c.min_hessian = std::numeric_limits<double>::infinity();
    std::vector<double> x(static_cast<std::size_t>(n));
    while (c.samples < samples) {
        double r2 = 0.0;
        for (auto& xi : x) {
            xi = u(rng);
            r2 += xi * xi;
        }
        if (r2 >= 1.0 || x[0] < 1e-3) continue;
        ++c.samples;
        const auto w = convex_weight(x, delta);
        Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
        D(0, 0) = (12.0 - 26.0 * (n - 1) * delta) * x[0] * x[0];
        for (int j = 1; j < n; ++j) D(j, j) = 2.0 * delta * std::pow(x[0], 4) * x[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> em(w.hessian - D, Eigen::EigenvaluesOnly);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eh(w.hessian, Eigen::EigenvaluesOnly);
        c.min_margin = std::min(c.min_margin, em.eigenvalues().minCoeff());
        c.min_hessian = std::min(c.min_hessian, eh.eigenvalues().minCoeff());
    }
    c.holds = c.min_margin >= -1e-13 && c.min_hessian > 0.0;
    return c;
}

MultiplierField linear_multiplier(int n) {
    MultiplierField f;
    f.eval = [n](std::span<const double> x, Eigen::VectorXd& q, Eigen::MatrixXd& Dq, Eigen::VectorXd& gd) {
        q = Eigen::Map<const Eigen::VectorXd>(x.data(), n);
        Dq = Eigen::MatrixXd::Identity(n, n);
        gd = Eigen::VectorXd::Zero(n);
    };
    return f;
}

MultiplierField convex_multiplier(int n, double delta) {
    MultiplierField f;
    f.eval = [n, delta](std::span<const double> x, Eigen::VectorXd& q, Eigen::MatrixXd& Dq, Eigen::VectorXd& gd) {
        (void)n;
        auto w = convex_weight(x, delta);
        q = w.gradient;
        Dq = w.hessian;
        gd = w.grad_laplacian;
    };
    return f;
}

MultiplierTerms multiplier_identity(const SpectralField& v0, const MultiplierField& qf, double T,
                                    MultiplierOptions opts) {
    const auto& lat = v0.lattice();
    const int n = lat.dim();
    if (lat.basis() != Basis::Sine) throw ConfigError("multiplier identity needs a Sine-basis datum");
    if (n > 2) throw ConfigError("multiplier identity is implemented for n <= 2");
    const int N = lat.truncation();
    const auto sx = gauss_legendre(opts.space_nodes, 0.0, kPi);
    const int m = opts.space_nodes;
    int panels = opts.time_panels;
    const double wmax = static_cast<double>(n) * (N * N - 1) + 1.0;
    if (panels <= 0) panels = std::max(1, static_cast<int>(std::ceil(wmax * T / 16.0)));
    const auto tq = composite_gauss(opts.time_nodes, panels, 0.0, T);

    // 1-D tables: S(j, p) = sin(p x_j), C(j, p) = p cos(p x_j); boundary values of p cos(p x).
    Eigen::MatrixXd S(m, N), C(m, N);
    Eigen::VectorXd c0(N), cpi(N);
    for (int p = 1; p <= N; ++p) {
        for (int j = 0; j < m; ++j) {
            S(j, p - 1) = std::sin(p * sx.nodes[static_cast<std::size_t>(j)]);
            C(j, p - 1) = p * std::cos(p * sx.nodes[static_cast<std::size_t>(j)]);
        }
        c0[p - 1] = p;
        cpi[p - 1] = p * std::cos(p * kPi);
    }
    Eigen::VectorXd wx(m);
    for (int j = 0; j < m; ++j) wx[j] = sx.weights[static_cast<std::size_t>(j)];

    // Multiplier data at the volume nodes and on the faces.
    const int nv = n == 1 ? m : m * m;
    std::vector<Eigen::VectorXd> qv(static_cast<std::size_t>(nv)), gdv(static_cast<std::size_t>(nv));
    std::vector<Eigen::MatrixXd> Dqv(static_cast<std::size_t>(nv));
    std::vector<double> wv(static_cast<std::size_t>(nv));
    for (int i = 0; i < nv; ++i) {
        double x[2];
        if (n == 1) {
            x[0] = sx.nodes[static_cast<std::size_t>(i)];
            wv[static_cast<std::size_t>(i)] = wx[i];
        } else {
            x[0] = sx.nodes[static_cast<std::size_t>(i / m)];
            x[1] = sx.nodes[static_cast<std::size_t>(i % m)];
            wv[static_cast<std::size_t>(i)] = wx[i / m] * wx[i % m];
        }
        qf.eval(std::span<const double>(x, static_cast<std::size_t>(n)), qv[static_cast<std::size_t>(i)],
                Dqv[static_cast<std::size_t>(i)], gdv[static_cast<std::size_t>(i)]);
    }
    // q . nu on faces: id -> per transverse node
    std::vector<std::vector<double>> qnu(static_cast<std::size_t>(2 * n));
    for (int f = 0; f < 2 * n; ++f) {
        const int a = face_axis(f);
        const int side = face_side(f);
        const int count = n == 1 ? 1 : m;
        for (int j = 0; j < count; ++j) {
            double x[2];
            x[a] = side == 0 ? 0.0 : kPi;
            if (n == 2) x[1 - a] = sx.nodes[static_cast<std::size_t>(j)];
            Eigen::VectorXd q, gd;
            Eigen::MatrixXd Dq;
            qf.eval(std::span<const double>(x, static_cast<std::size_t>(n)), q, Dq, gd);
            qnu[static_cast<std::size_t>(f)].push_back(side == 0 ? -q[a] : q[a]);
        }
    }

    // Coefficient matrix (n = 2: rows p1, cols p2; n = 1: column vector).
    auto coeffs_at = [&](double t) {
        Eigen::MatrixXcd Cm = Eigen::MatrixXcd::Zero(N, n == 1 ? 1 : N);
        for (std::size_t i = 0; i < lat.size(); ++i) {
            auto p = lat.index(i);
            const cplx c = v0.coeffs()[static_cast<Eigen::Index>(i)] * std::polar(1.0, -static_cast<double>(lat.norm2(i)) * t);
            if (n == 1) Cm(p[0] - 1, 0) = c;
            else Cm(p[0] - 1, p[1] - 1) = c;
        }
        return Cm;
    };

    struct Fields {
        std::vector<cplx> v, v1, v2;
    };
    auto volume_fields = [&](const Eigen::MatrixXcd& Cm) {
        Fields F;
        if (n == 1) {
            const Eigen::VectorXcd v = S.cast<cplx>() * Cm.col(0);
            const Eigen::VectorXcd v1 = C.cast<cplx>() * Cm.col(0);
            F.v.assign(v.data(), v.data() + m);
            F.v1.assign(v1.data(), v1.data() + m);
        } else {
            const Eigen::MatrixXcd Sc = S.cast<cplx>(), Cc = C.cast<cplx>();
            const Eigen::MatrixXcd v = Sc * Cm * Sc.transpose();
            const Eigen::MatrixXcd v1 = Cc * Cm * Sc.transpose();
            const Eigen::MatrixXcd v2 = Sc * Cm * Cc.transpose();
            F.v.resize(static_cast<std::size_t>(nv));
            F.v1.resize(static_cast<std::size_t>(nv));
            F.v2.resize(static_cast<std::size_t>(nv));
            for (int i = 0; i < nv; ++i) {
                F.v[static_cast<std::size_t>(i)] = v(i / m, i % m);
                F.v1[static_cast<std::size_t>(i)] = v1(i / m, i % m);
                F.v2[static_cast<std::size_t>(i)] = v2(i / m, i % m);
            }
        }
        return F;
    };
    auto grad = [&](const Fields& F, int i, int k) -> cplx {
        return k == 0 ? F.v1[static_cast<std::size_t>(i)] : F.v2[static_cast<std::size_t>(i)];
    };

    // Im int v q . grad(conj v)
    auto endpoint_integrand = [&](double t) {
        const Fields F = volume_fields(coeffs_at(t));
        double acc = 0.0;
        for (int i = 0; i < nv; ++i) {
            cplx s = 0.0;
            for (int k = 0; k < n; ++k) s += qv[static_cast<std::size_t>(i)][k] * std::conj(grad(F, i, k));
            acc += wv[static_cast<std::size_t>(i)] * std::imag(F.v[static_cast<std::size_t>(i)] * s);
        }
        return acc;
    };

    MultiplierTerms out;
    out.endpoint = 0.5 * (endpoint_integrand(T) - endpoint_integrand(0.0));
    for (std::size_t ti = 0; ti < tq.nodes.size(); ++ti) {
        const double t = tq.nodes[ti];
        const double wt = tq.weights[ti];
        const Eigen::MatrixXcd Cm = coeffs_at(t);
        const Fields F = volume_fields(Cm);
        double dv = 0.0, jv = 0.0;
        for (int i = 0; i < nv; ++i) {
            const auto& gd = gdv[static_cast<std::size_t>(i)];
            const auto& Dq = Dqv[static_cast<std::size_t>(i)];
            cplx s1 = 0.0, s2 = 0.0;
            for (int k = 0; k < n; ++k) {
                s1 += gd[k] * std::conj(grad(F, i, k));
                for (int j = 0; j < n; ++j) s2 += Dq(k, j) * std::conj(grad(F, i, k)) * grad(F, i, j);
            }
            dv += wv[static_cast<std::size_t>(i)] * std::real(F.v[static_cast<std::size_t>(i)] * s1);
            jv += wv[static_cast<std::size_t>(i)] * std::real(s2);
        }
        out.div_term += 0.5 * wt * dv;
        out.jacobian_term += wt * jv;

        double bnd = 0.0;
        for (int f = 0; f < 2 * n; ++f) {
            const int a = face_axis(f);
            const int side = face_side(f);
            const Eigen::VectorXd& cb = side == 0 ? c0 : cpi;
            if (n == 1) {
                const cplx d = cb.dot(Cm.col(0).real()) + cplx(0, 1) * cb.dot(Cm.col(0).imag());
                bnd += qnu[static_cast<std::size_t>(f)][0] * std::norm(d);
            } else {
                // d_a v on the face: transverse factor sin(p x) tabulated in S
                Eigen::VectorXcd d;
                if (a == 0) d = S.cast<cplx>() * (Cm.transpose() * cb.cast<cplx>());
                else d = S.cast<cplx>() * (Cm * cb.cast<cplx>());
                for (int j = 0; j < m; ++j) bnd += wx[j] * qnu[static_cast<std::size_t>(f)][static_cast<std::size_t>(j)] * std::norm(d[j]);
            }
        }
        out.boundary += 0.5 * wt * bnd;
    }
    const double rhs = out.endpoint + out.div_term + out.jacobian_term;
    out.residual = std::abs(out.boundary - rhs) / (std::abs(out.boundary) + std::abs(rhs) + 1e-30);
    return out;
}

double multiplier_identity_residual(const SpectralField& v0, const MultiplierField& q, double T,
                                    MultiplierOptions opts) {
    return multiplier_identity(v0, q, T, opts).residual;
}

}  // namespace schrolab::dirichlet
