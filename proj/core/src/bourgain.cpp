#include "schrolab/bourgain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "schrolab/control_signal.hpp"
#include "schrolab/fft.hpp"
#include "schrolab/parallel.hpp"
#include "schrolab/quadrature.hpp"

namespace schrolab::bourgain {

namespace {

constexpr double kPi = std::numbers::pi;

double ramp(double x, int order) {
    x = std::clamp(x, 0.0, 1.0);
    for (int i = 0; i < order; ++i) x = 0.5 * (1.0 - std::cos(kPi * x));
    return x;
}

double bracket(double y) { return std::sqrt(1.0 + y * y); }

}  // namespace

double window(double t, double T, int order) {
    const double r = 0.25 * T;
    if (t <= -r || t >= T + r) return 0.0;
    if (t < 0.0) return ramp((t + r) / r, order);
    if (t > T) return ramp((T + r - t) / r, order);
    return 1.0;
}

cplx window_fourier(double omega, double T, int order, int power) {
    const double r = 0.25 * T;
    const int panels = 8 + static_cast<int>(std::ceil(std::abs(omega) * r / 2.0)) + 8 * order;
    cplx acc = phase_integral(-omega, T);
    for (auto [a, b] : {std::pair{-r, 0.0}, {T, T + r}}) {
        const auto q = composite_gauss(16, panels, a, b);
        for (std::size_t i = 0; i < q.nodes.size(); ++i) {
            const double t = q.nodes[i];
            acc += q.weights[i] * std::pow(window(t, T, order), power) * std::polar(1.0, -omega * t);
        }
    }
    return acc;
}

double window_norm2(double T, int order) { return window_fourier(0.0, T, order, 2).real(); }

double SpaceTimeGrid::omega(int m) const { return 2.0 * kPi * m / time_window; }

SpaceTimeGrid make_grid(double T, const SpaceTimeOptions& opts) {
    if (!(T > 0.0)) throw ConfigError("space-time grid: T must be positive");
    if (opts.band < 1) throw ConfigError("space-time grid: band must be >= 1");
    if (opts.window_order < 1) throw ConfigError("space-time grid: window order must be >= 1");
    SpaceTimeGrid g;
    g.T = T;
    g.t0 = -0.25 * T;
    g.time_window = 1.5 * T;
    g.window_order = opts.window_order;
    const int off = static_cast<int>(std::ceil(std::max(0.0, opts.max_offset) * g.time_window / (2.0 * kPi)));
    g.M = off + opts.band;
    g.P = fft::smooth_size(2 * g.M + 2 * opts.band + 1);
    return g;
}

double SpaceTimeField::tau(std::size_t k, int m) const {
    return centers[static_cast<Eigen::Index>(k)] + 2.0 * kPi * m / time_window;
}

RVec dispersion_centers(const ModeLattice& lat) {
    RVec c(static_cast<Eigen::Index>(lat.size()));
    for (std::size_t i = 0; i < lat.size(); ++i) c[static_cast<Eigen::Index>(i)] = -static_cast<double>(lat.norm2(i));
    return c;
}

SpaceTimeField transform_samples(LatticePtr lattice, const SpaceTimeGrid& grid, const std::vector<CVec>& samples,
                                 const RVec& centers, std::string cutoff) {
    if (static_cast<int>(samples.size()) != grid.P) throw ConfigError("transform_samples: expected P samples");
    const auto L = static_cast<Eigen::Index>(lattice->size());
    if (centers.size() != L) throw ConfigError("transform_samples: centers size mismatch");
    SpaceTimeField f;
    f.lattice = lattice;
    f.time_window = grid.time_window;
    f.M = grid.M;
    f.centers = centers;
    f.cutoff = std::move(cutoff);
    f.window_norm = window_norm2(grid.T, grid.window_order);
    f.coeffs = CMat::Zero(L, 2 * grid.M + 1);
    const int P = grid.P;
    const double scale = std::sqrt(grid.time_window) / P;
    parallel_for(static_cast<std::size_t>(L), [&](std::size_t ki) {
        const auto k = static_cast<Eigen::Index>(ki);
        std::vector<cplx> buf(static_cast<std::size_t>(P));
        for (int j = 0; j < P; ++j)
            buf[static_cast<std::size_t>(j)] = samples[static_cast<std::size_t>(j)][k] *
                                               std::polar(1.0, -centers[k] * grid.time(j));
        const int dims[1] = {P};
        fft::transform(buf, dims, -1);
        for (int m = -grid.M; m <= grid.M; ++m) {
            const cplx shift = std::polar(1.0, -grid.omega(m) * grid.t0);
            f.coeffs(k, m + grid.M) = scale * shift * buf[static_cast<std::size_t>(((m % P) + P) % P)];
        }
    });
    return f;
}

SpaceTimeField from_function(LatticePtr lattice, const SpaceTimeGrid& grid, const std::function<CVec(double)>& u,
                             std::string cutoff) {
    std::vector<CVec> samples(static_cast<std::size_t>(grid.P));
    for (int j = 0; j < grid.P; ++j) samples[static_cast<std::size_t>(j)] = u(grid.time(j));
    RVec c = dispersion_centers(*lattice);
    return transform_samples(std::move(lattice), grid, samples, c, std::move(cutoff));
}

SpaceTimeField canonical_extension(LatticePtr lattice, const SpaceTimeGrid& grid,
                                   const std::function<CVec(double)>& u) {
    const auto& lat = *lattice;
    auto g = [&](double t) -> CVec {
        const double c = std::clamp(t, 0.0, grid.T);
        return window(t, grid.T, grid.window_order) * free_flow(lat, u(c), t - c);
    };
    return from_function(lattice, grid, g, "raised_cosine:" + std::to_string(grid.window_order));
}

SpaceTimeField canonical_extension(const Trajectory& tr, const SpaceTimeOptions& opts) {
    SpaceTimeOptions o = opts;
    if (o.max_offset <= 0.0 && tr.steps() > 0) o.max_offset = kPi * static_cast<double>(tr.steps()) / tr.T;
    const auto grid = make_grid(tr.T, o);
    return canonical_extension(tr.lattice, grid, [&](double t) { return tr.at(t); });
}

SpaceTimeField conjugate(const SpaceTimeField& f) {
    SpaceTimeField r = f;
    const auto& lat = *f.lattice;
    const Eigen::Index cols = f.coeffs.cols();
    std::vector<int> neg(static_cast<std::size_t>(lat.dim()));
    for (std::size_t i = 0; i < lat.size(); ++i) {
        std::size_t target = i;
        if (lat.basis() == Basis::Exponential) {
            auto k = lat.index(i);
            for (int a = 0; a < lat.dim(); ++a) neg[static_cast<std::size_t>(a)] = -k[static_cast<std::size_t>(a)];
            target = *lat.find(neg);
        }
        const auto ti = static_cast<Eigen::Index>(target);
        r.centers[ti] = -f.centers[static_cast<Eigen::Index>(i)];
        for (Eigen::Index c = 0; c < cols; ++c)
            r.coeffs(ti, cols - 1 - c) = std::conj(f.coeffs(static_cast<Eigen::Index>(i), c));
    }
    return r;
}

double xsb_norm(const SpaceTimeField& f, double s, double b, int sign) {
    const auto& lat = *f.lattice;
    const double sg = sign >= 0 ? 1.0 : -1.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < lat.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        const double wk = std::pow(lat.bracket2(i), s);
        const double nk = static_cast<double>(lat.norm2(i));
        double row = 0.0;
        for (int m = -f.M; m <= f.M; ++m) {
            const double a = std::norm(f.coeffs(k, m + f.M));
            if (a == 0.0) continue;
            row += std::pow(bracket(f.tau(i, m) + sg * nk), 2.0 * b) * a;
        }
        acc += wk * row;
    }
    return std::sqrt(acc);
}

double restriction_norm(const Trajectory& tr, double s, double b, const SpaceTimeOptions& opts) {
    return xsb_norm(canonical_extension(tr, opts), s, b, +1);
}

}  // namespace schrolab::bourgain
