#include "schrolab/control_signal.hpp"

#include <cmath>
#include <numbers>

#include "json.hpp"
#include "schrolab/fft.hpp"

namespace schrolab {

cplx phase_integral(double theta, double t) {
    const double x = theta * t;
    if (std::abs(x) < 1e-5) return t * cplx(1.0 - x * x / 6.0, x / 2.0 - x * x * x / 24.0);
    return (std::polar(1.0, x) - 1.0) / cplx(0.0, theta);
}

CVec ModalSignal::at(double t) const {
    CVec v(amp.size());
    for (Eigen::Index i = 0; i < amp.size(); ++i) v[i] = amp[i] * std::polar(1.0, -freq[i] * (t - t_ref));
    return shape * v;
}

std::vector<double> uniform_time_grid(double T, int per_unit) {
    const int m = std::max(1, static_cast<int>(std::ceil(per_unit * T - 1e-9)));
    std::vector<double> g(static_cast<std::size_t>(m) + 1);
    for (int j = 0; j <= m; ++j) g[static_cast<std::size_t>(j)] = T * j / m;
    return g;
}

void sample_frames(InternalSignal& sig) {
    sig.frames.clear();
    for (double t : sig.time_grid) {
        CVec h = sig.modal.at(t);
        if (sig.lattice && !sig.lattice->same_as(*sig.modal_lattice)) {
            SpectralField ext(sig.modal_lattice, h);
            h = restrict_parity(ext, sig.lattice->basis() == Basis::Sine ? Parity::Odd : Parity::Even, 1e-8).coeffs();
        }
        sig.frames.push_back(std::move(h));
    }
}

void sample_trace(FaceTrace& face) {
    face.values.resize(static_cast<Eigen::Index>(face.time_grid.size()), face.modal.rows());
    for (std::size_t j = 0; j < face.time_grid.size(); ++j)
        face.values.row(static_cast<Eigen::Index>(j)) = face.modal.at(face.time_grid[j]).transpose();
}

namespace {

nlohmann::json complex_array(const CVec& v) {
    auto a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back({v[i].real(), v[i].imag()});
    return a;
}

}  // namespace

std::string to_json(const InternalSignal& sig) {
    nlohmann::json j;
    j["kind"] = "internal";
    j["basis"] = basis_name(sig.lattice->basis());
    j["n"] = sig.lattice->dim();
    j["N"] = sig.lattice->truncation();
    j["time_grid"] = sig.time_grid;
    auto frames = nlohmann::json::array();
    for (const auto& f : sig.frames) frames.push_back(complex_array(f));
    j["spectral_frames"] = std::move(frames);
    return j.dump();
}

std::string to_json(const BoundarySignal& sig) {
    nlohmann::json j;
    j["kind"] = sig.kind;
    auto faces = nlohmann::json::array();
    for (const auto& f : sig.faces) {
        nlohmann::json fj;
        fj["face_id"] = f.face_id;
        fj["grid"] = f.grid;
        fj["time_grid"] = f.time_grid;
        auto rows = nlohmann::json::array();
        for (Eigen::Index r = 0; r < f.values.rows(); ++r) rows.push_back(complex_array(f.values.row(r).transpose()));
        fj["values"] = std::move(rows);
        faces.push_back(std::move(fj));
    }
    j["faces"] = std::move(faces);
    return j.dump();
}

std::vector<std::vector<double>> face_grid(int n, int points_per_axis) {
    std::vector<std::vector<double>> pts;
    const int d = n - 1;
    if (d == 0) return {std::vector<double>{}};
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(points_per_axis);
    for (std::size_t i = 0; i < total; ++i) {
        std::vector<double> x(static_cast<std::size_t>(d));
        std::size_t r = i;
        for (int a = d - 1; a >= 0; --a) {
            const int j = static_cast<int>(r % static_cast<std::size_t>(points_per_axis));
            r /= static_cast<std::size_t>(points_per_axis);
            x[static_cast<std::size_t>(a)] = std::numbers::pi * (j + 0.5) / points_per_axis;
        }
        pts.push_back(std::move(x));
    }
    return pts;
}

double time_sobolev_norm(const CMat& values, double T, double sigma, const std::vector<double>& space_w) {
    Eigen::Index nt = values.rows();
    if (nt > 1) --nt;  // drop the endpoint sample t = T of the periodic window
    const int m = static_cast<int>(nt);
    double acc = 0.0;
    std::vector<cplx> col(static_cast<std::size_t>(m));
    const int dims[1] = {m};
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
        for (int j = 0; j < m; ++j) col[static_cast<std::size_t>(j)] = values(j, c);
        fft::transform(col, dims, -1);
        for (int l = 0; l < m; ++l) {
            const int freq = l <= m / 2 ? l : l - m;
            const double omega = 2.0 * std::numbers::pi * freq / T;
            const double w = std::pow(1.0 + std::abs(omega), 2.0 * sigma);
            acc += space_w[static_cast<std::size_t>(c)] * w * std::norm(col[static_cast<std::size_t>(l)]) * T /
                   (static_cast<double>(m) * m);
        }
    }
    return std::sqrt(acc);
}

}  // namespace schrolab
