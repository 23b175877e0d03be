#include "schrolab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "json.hpp"

#include "schrolab/fft.hpp"

namespace schrolab {
namespace {

constexpr double kPi = std::numbers::pi;

int wrap(int k, int G) { return ((k % G) + G) % G; }

std::size_t ipow(std::size_t b, int e) {
    std::size_t r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
}

// Place Exponential coefficients on a G^n torus array and evaluate there.
std::vector<cplx> eval_on_torus(const SpectralField& f, int G) {
    const auto& lat = f.lattice();
    const int n = lat.dim();
    std::vector<cplx> buf(ipow(static_cast<std::size_t>(G), n), cplx(0.0));
    for (std::size_t i = 0; i < lat.size(); ++i) {
        auto k = lat.index(i);
        std::size_t pos = 0;
        for (int a = 0; a < n; ++a) pos = pos * static_cast<std::size_t>(G) + static_cast<std::size_t>(wrap(k[a], G));
        buf[pos] += f.coeffs()[static_cast<Eigen::Index>(i)];
    }
    std::vector<int> dims(static_cast<std::size_t>(n), G);
    fft::transform(buf, dims, +1);
    return buf;
}

// Inverse of eval_on_torus, read onto an Exponential lattice.
SpectralField read_from_torus(std::vector<cplx> buf, int n, int G, LatticePtr out) {
    std::vector<int> dims(static_cast<std::size_t>(n), G);
    fft::transform(buf, dims, -1);
    const double scale = 1.0 / static_cast<double>(ipow(static_cast<std::size_t>(G), n));
    SpectralField r(out);
    for (std::size_t i = 0; i < out->size(); ++i) {
        auto k = out->index(i);
        std::size_t pos = 0;
        for (int a = 0; a < n; ++a) pos = pos * static_cast<std::size_t>(G) + static_cast<std::size_t>(wrap(k[a], G));
        r.coeffs()[static_cast<Eigen::Index>(i)] = buf[pos] * scale;
    }
    return r;
}

SpectralField restrict_unchecked(const SpectralField& f, Parity parity, int N) {
    const int n = f.lattice().dim();
    auto out = make_lattice(n, N, parity == Parity::Odd ? Basis::Sine : Basis::Cosine);
    SpectralField r(out);
    for (std::size_t i = 0; i < out->size(); ++i) {
        auto k = out->index(i);
        auto j = f.lattice().find(k);
        if (!j) continue;
        cplx c = f.coeffs()[static_cast<Eigen::Index>(*j)];
        if (parity == Parity::Odd) {
            for (int a = 0; a < n; ++a) c *= cplx(0.0, 2.0);
        } else {
            for (int a = 0; a < n; ++a)
                if (k[a] != 0) c *= 2.0;
        }
        r.coeffs()[static_cast<Eigen::Index>(i)] = c;
    }
    return r;
}

}  // namespace

std::string basis_name(Basis b) {
    switch (b) {
        case Basis::Exponential: return "exponential";
        case Basis::Sine: return "sine";
        case Basis::Cosine: return "cosine";
    }
    return "?";
}

Basis basis_from_name(const std::string& name) {
    if (name == "exponential") return Basis::Exponential;
    if (name == "sine") return Basis::Sine;
    if (name == "cosine") return Basis::Cosine;
    throw ConfigError("unknown basis: " + name);
}

ModeLattice::ModeLattice(int n, int N, Basis basis) : n_(n), N_(N), basis_(basis) {
    if (n < 1) throw ConfigError("lattice dimension must be >= 1");
    if (N < 1) throw ConfigError("lattice truncation must be >= 1");
    const std::size_t count = static_cast<std::size_t>(axis_count());
    const std::size_t total = ipow(count, n);
    idx_.resize(total * static_cast<std::size_t>(n));
    norm2_.resize(total);
    for (std::size_t i = 0; i < total; ++i) {
        std::size_t r = i;
        long s2 = 0;
        for (int a = n - 1; a >= 0; --a) {
            int k = axis_min() + static_cast<int>(r % count);
            r /= count;
            idx_[i * static_cast<std::size_t>(n) + static_cast<std::size_t>(a)] = k;
            s2 += static_cast<long>(k) * k;
        }
        norm2_[i] = s2;
    }
}

double ModeLattice::axis_length() const { return basis_ == Basis::Exponential ? 2.0 * kPi : kPi; }

int ModeLattice::axis_min() const {
    switch (basis_) {
        case Basis::Exponential: return -N_;
        case Basis::Sine: return 1;
        case Basis::Cosine: return 0;
    }
    return 0;
}

int ModeLattice::axis_count() const {
    switch (basis_) {
        case Basis::Exponential: return 2 * N_ + 1;
        case Basis::Sine: return N_;
        case Basis::Cosine: return N_ + 1;
    }
    return 0;
}

double ModeLattice::weight(std::size_t i, double s, NormWeight w) const {
    if (s == 0.0) return 1.0;
    const double base = w == NormWeight::Bracket ? bracket2(i) : static_cast<double>(norm2_[i]);
    return std::pow(base, 0.5 * s);
}

std::optional<std::size_t> ModeLattice::find(std::span<const int> k) const {
    if (static_cast<int>(k.size()) != n_) return std::nullopt;
    const int lo = axis_min();
    const int cnt = axis_count();
    std::size_t pos = 0;
    for (int a = 0; a < n_; ++a) {
        int d = k[a] - lo;
        if (d < 0 || d >= cnt) return std::nullopt;
        pos = pos * static_cast<std::size_t>(cnt) + static_cast<std::size_t>(d);
    }
    return pos;
}

LatticePtr make_lattice(int n, int N, Basis basis) {
    return std::make_shared<const ModeLattice>(n, N, basis);
}

SpectralField::SpectralField(LatticePtr lattice)
    : lattice_(std::move(lattice)), coeffs_(CVec::Zero(static_cast<Eigen::Index>(lattice_->size()))) {}

SpectralField::SpectralField(LatticePtr lattice, CVec coeffs)
    : lattice_(std::move(lattice)), coeffs_(std::move(coeffs)) {
    if (static_cast<std::size_t>(coeffs_.size()) != lattice_->size())
        throw ConfigError("coefficient count does not match lattice size");
}

SpectralField& SpectralField::operator+=(const SpectralField& o) {
    if (!lattice_->same_as(o.lattice())) throw ConfigError("field lattices differ");
    coeffs_ += o.coeffs_;
    return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o) {
    if (!lattice_->same_as(o.lattice())) throw ConfigError("field lattices differ");
    coeffs_ -= o.coeffs_;
    return *this;
}

SpectralField& SpectralField::operator*=(cplx z) {
    coeffs_ *= z;
    return *this;
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(cplx z, SpectralField a) { return a *= z; }

double PhysicalGrid::coordinate(int j) const {
    return basis == Basis::Exponential ? 2.0 * kPi * j / grid_size : kPi * j / grid_size;
}

PhysicalGrid to_physical(const SpectralField& f, int grid_size) {
    const auto& lat = f.lattice();
    if (grid_size < 2 * lat.truncation() + 2)
        throw ConfigError("physical grid too small for lattice (need >= 2N+2)");
    const int n = lat.dim();
    PhysicalGrid g;
    g.n = n;
    g.grid_size = grid_size;
    g.basis = lat.basis();
    if (lat.basis() == Basis::Exponential) {
        g.values = eval_on_torus(f, grid_size);
        return g;
    }
    const int G2 = 2 * grid_size;
    auto torus = eval_on_torus(extend(f), G2);
    const int P = grid_size + 1;
    g.values.resize(ipow(static_cast<std::size_t>(P), n));
    for (std::size_t i = 0; i < g.values.size(); ++i) {
        std::size_t r = i, pos = 0, mul = 1;
        std::vector<int> j(static_cast<std::size_t>(n));
        for (int a = n - 1; a >= 0; --a) {
            j[static_cast<std::size_t>(a)] = static_cast<int>(r % static_cast<std::size_t>(P));
            r /= static_cast<std::size_t>(P);
        }
        for (int a = n - 1; a >= 0; --a) {
            pos += static_cast<std::size_t>(j[static_cast<std::size_t>(a)]) * mul;
            mul *= static_cast<std::size_t>(G2);
        }
        g.values[i] = torus[pos];
    }
    return g;
}

SpectralField to_spectral(const PhysicalGrid& samples, LatticePtr lattice) {
    if (samples.basis != lattice->basis()) throw ConfigError("grid basis does not match lattice basis");
    if (samples.n != lattice->dim()) throw ConfigError("grid dimension does not match lattice");
    if (samples.grid_size < 2 * lattice->truncation() + 2)
        throw ConfigError("physical grid too small for lattice (need >= 2N+2)");
    const int n = samples.n;
    const int G = samples.grid_size;
    if (lattice->basis() == Basis::Exponential) {
        if (samples.values.size() != ipow(static_cast<std::size_t>(G), n))
            throw ConfigError("sample count does not match grid");
        return read_from_torus(samples.values, n, G, lattice);
    }
    const int P = G + 1;
    if (samples.values.size() != ipow(static_cast<std::size_t>(P), n))
        throw ConfigError("sample count does not match grid");
    const bool odd = lattice->basis() == Basis::Sine;
    const int G2 = 2 * G;
    std::vector<cplx> torus(ipow(static_cast<std::size_t>(G2), n));
    for (std::size_t i = 0; i < torus.size(); ++i) {
        std::size_t r = i, src = 0;
        double sign = 1.0;
        std::vector<int> j(static_cast<std::size_t>(n));
        for (int a = n - 1; a >= 0; --a) {
            j[static_cast<std::size_t>(a)] = static_cast<int>(r % static_cast<std::size_t>(G2));
            r /= static_cast<std::size_t>(G2);
        }
        for (int a = 0; a < n; ++a) {
            int ja = j[static_cast<std::size_t>(a)];
            if (ja > G) {
                ja = G2 - ja;
                if (odd) sign = -sign;
            }
            src = src * static_cast<std::size_t>(P) + static_cast<std::size_t>(ja);
        }
        torus[i] = sign * samples.values[src];
    }
    auto ext = read_from_torus(std::move(torus), n, G2, make_lattice(n, lattice->truncation(), Basis::Exponential));
    return restrict_unchecked(ext, odd ? Parity::Odd : Parity::Even, lattice->truncation());
}

double sobolev_norm(const SpectralField& f, double s, NormWeight w) {
    const auto& lat = f.lattice();
    double acc = 0.0;
    for (std::size_t i = 0; i < lat.size(); ++i) {
        const double wt = lat.weight(i, s, w);
        acc += wt * wt * std::norm(f.coeffs()[static_cast<Eigen::Index>(i)]);
    }
    return std::sqrt(acc);
}

SpectralField free_propagate(const SpectralField& f, double t) {
    SpectralField r = f;
    const auto& lat = f.lattice();
    for (std::size_t i = 0; i < lat.size(); ++i)
        r.coeffs()[static_cast<Eigen::Index>(i)] *= std::polar(1.0, -static_cast<double>(lat.norm2(i)) * t);
    return r;
}

int dealiased_grid_size(int total_degree, int out_N) {
    return fft::smooth_size(std::max(total_degree + out_N + 1, 2 * out_N + 2));
}

SpectralField multiply(std::span<const Factor> factors, std::optional<int> out_N) {
    if (factors.empty()) throw ConfigError("multiply: no factors");
    const auto& first = factors.front().field->lattice();
    const int n = first.dim();
    const bool torus = first.basis() == Basis::Exponential;
    int degree = 0;
    int sine_count = 0;
    for (const auto& fc : factors) {
        const auto& lat = fc.field->lattice();
        if (lat.dim() != n) throw ConfigError("multiply: lattice dimensions differ");
        if ((lat.basis() == Basis::Exponential) != torus)
            throw ConfigError("multiply: cannot mix torus and rectangle bases");
        degree += lat.truncation();
        if (lat.basis() == Basis::Sine) ++sine_count;
    }
    const int No = out_N.value_or(first.truncation());
    const int G = dealiased_grid_size(degree, No);
    std::vector<cplx> acc;
    for (const auto& fc : factors) {
        auto vals = eval_on_torus(torus ? *fc.field : extend(*fc.field), G);
        if (fc.conjugate)
            for (auto& v : vals) v = std::conj(v);
        if (acc.empty()) {
            acc = std::move(vals);
        } else {
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] *= vals[i];
        }
    }
    auto out = read_from_torus(std::move(acc), n, G, make_lattice(n, No, Basis::Exponential));
    if (torus) return out;
    return restrict_unchecked(out, sine_count % 2 == 1 ? Parity::Odd : Parity::Even, No);
}

SpectralField pointwise_product(const SpectralField& f, const SpectralField& g, bool conj_f, bool conj_g) {
    const Factor fs[2] = {{&f, conj_f}, {&g, conj_g}};
    return multiply(fs);
}

SpectralField odd_extend(const SpectralField& f) {
    if (f.basis() != Basis::Sine) throw ConfigError("odd_extend requires a Sine-basis field");
    const int n = f.lattice().dim();
    auto out = make_lattice(n, f.lattice().truncation(), Basis::Exponential);
    SpectralField r(out);
    const cplx unit = 1.0 / cplx(0.0, 2.0);
    std::vector<int> p(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < out->size(); ++i) {
        auto k = out->index(i);
        bool zero = false;
        double sign = 1.0;
        for (int a = 0; a < n; ++a) {
            if (k[a] == 0) zero = true;
            p[static_cast<std::size_t>(a)] = std::abs(k[a]);
            if (k[a] < 0) sign = -sign;
        }
        if (zero) continue;
        cplx c = f.coeffs()[static_cast<Eigen::Index>(*f.lattice().find(p))] * sign;
        for (int a = 0; a < n; ++a) c *= unit;
        r.coeffs()[static_cast<Eigen::Index>(i)] = c;
    }
    return r;
}

SpectralField even_extend(const SpectralField& f) {
    if (f.basis() != Basis::Cosine) throw ConfigError("even_extend requires a Cosine-basis field");
    const int n = f.lattice().dim();
    auto out = make_lattice(n, f.lattice().truncation(), Basis::Exponential);
    SpectralField r(out);
    std::vector<int> p(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < out->size(); ++i) {
        auto k = out->index(i);
        double scale = 1.0;
        for (int a = 0; a < n; ++a) {
            p[static_cast<std::size_t>(a)] = std::abs(k[a]);
            if (k[a] != 0) scale *= 0.5;
        }
        r.coeffs()[static_cast<Eigen::Index>(i)] = scale * f.coeffs()[static_cast<Eigen::Index>(*f.lattice().find(p))];
    }
    return r;
}

SpectralField extend(const SpectralField& f) {
    switch (f.basis()) {
        case Basis::Sine: return odd_extend(f);
        case Basis::Cosine: return even_extend(f);
        case Basis::Exponential: return f;
    }
    return f;
}

double parity_asymmetry(const SpectralField& f, Parity parity) {
    if (f.basis() != Basis::Exponential) throw ConfigError("parity check requires an Exponential field");
    const auto& lat = f.lattice();
    const int n = lat.dim();
    const double sgn = parity == Parity::Odd ? -1.0 : 1.0;
    double scale = f.coeffs().cwiseAbs().maxCoeff();
    if (scale == 0.0) return 0.0;
    double worst = 0.0;
    std::vector<int> m(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < lat.size(); ++i) {
        auto k = lat.index(i);
        for (int a = 0; a < n; ++a) {
            std::copy(k.begin(), k.end(), m.begin());
            m[static_cast<std::size_t>(a)] = -k[a];
            auto j = *lat.find(m);
            worst = std::max(worst, std::abs(f.coeffs()[static_cast<Eigen::Index>(i)] -
                                             sgn * f.coeffs()[static_cast<Eigen::Index>(j)]));
        }
    }
    return worst / scale;
}

SpectralField restrict_parity(const SpectralField& f, Parity parity, double tol) {
    const double asym = parity_asymmetry(f, parity);
    if (asym > tol)
        throw ParityError("field violates the requested parity (relative asymmetry " + std::to_string(asym) + ")",
                          asym);
    return restrict_unchecked(f, parity, f.lattice().truncation());
}

SpectralField project_cosine_to_sine(const SpectralField& f, int N) {
    if (f.basis() != Basis::Cosine) throw ConfigError("project_cosine_to_sine requires a Cosine field");
    const int n = f.lattice().dim();
    const int Nc = f.lattice().truncation();
    // transfer(p-1, k) = (2/pi) * int_0^pi cos(kx) sin(px) dx
    Eigen::MatrixXd transfer(N, Nc + 1);
    for (int p = 1; p <= N; ++p)
        for (int k = 0; k <= Nc; ++k) {
            double v = 0.0;
            if (p != k && ((k + p) % 2 == 1)) v = 2.0 * p / (static_cast<double>(p) * p - static_cast<double>(k) * k);
            transfer(p - 1, k) = (2.0 / kPi) * v;
        }
    std::vector<int> dims(static_cast<std::size_t>(n), Nc + 1);
    std::vector<cplx> cur(f.coeffs().data(), f.coeffs().data() + f.coeffs().size());
    for (int a = 0; a < n; ++a) {
        std::size_t outer = 1, inner = 1;
        for (int b = 0; b < a; ++b) outer *= static_cast<std::size_t>(dims[static_cast<std::size_t>(b)]);
        for (int b = a + 1; b < n; ++b) inner *= static_cast<std::size_t>(dims[static_cast<std::size_t>(b)]);
        const std::size_t src_len = static_cast<std::size_t>(dims[static_cast<std::size_t>(a)]);
        std::vector<cplx> next(outer * static_cast<std::size_t>(N) * inner, cplx(0.0));
        for (std::size_t o = 0; o < outer; ++o)
            for (int p = 0; p < N; ++p)
                for (std::size_t k = 0; k < src_len; ++k) {
                    const double t = transfer(p, static_cast<Eigen::Index>(k));
                    if (t == 0.0) continue;
                    const cplx* src = &cur[(o * src_len + k) * inner];
                    cplx* dst = &next[(o * static_cast<std::size_t>(N) + static_cast<std::size_t>(p)) * inner];
                    for (std::size_t in = 0; in < inner; ++in) dst[in] += t * src[in];
                }
        cur = std::move(next);
        dims[static_cast<std::size_t>(a)] = N;
    }
    auto out = make_lattice(n, N, Basis::Sine);
    return SpectralField(out, Eigen::Map<CVec>(cur.data(), static_cast<Eigen::Index>(cur.size())));
}

SpectralField retruncate(const SpectralField& f, int N) {
    const auto& lat = f.lattice();
    auto out = make_lattice(lat.dim(), N, lat.basis());
    SpectralField r(out);
    for (std::size_t i = 0; i < out->size(); ++i) {
        auto j = lat.find(out->index(i));
        if (j) r.coeffs()[static_cast<Eigen::Index>(i)] = f.coeffs()[static_cast<Eigen::Index>(*j)];
    }
    return r;
}

CMat convolution_matrix(const SpectralField& a, const ModeLattice& in, const ModeLattice& out) {
    if (a.basis() != Basis::Exponential || in.basis() != Basis::Exponential || out.basis() != Basis::Exponential)
        throw ConfigError("convolution_matrix requires Exponential lattices");
    const int n = in.dim();
    CMat M = CMat::Zero(static_cast<Eigen::Index>(out.size()), static_cast<Eigen::Index>(in.size()));
    std::vector<int> d(static_cast<std::size_t>(n));
    for (std::size_t r = 0; r < out.size(); ++r) {
        auto k = out.index(r);
        for (std::size_t c = 0; c < in.size(); ++c) {
            auto m = in.index(c);
            for (int i = 0; i < n; ++i) d[static_cast<std::size_t>(i)] = k[i] - m[i];
            auto j = a.lattice().find(d);
            if (j) M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = a.coeffs()[static_cast<Eigen::Index>(*j)];
        }
    }
    return M;
}

double max_imag_physical(const SpectralField& f) {
    auto g = to_physical(f, fft::smooth_size(4 * f.lattice().truncation() + 4));
    double m = 0.0;
    for (auto v : g.values) m = std::max(m, std::abs(v.imag()));
    return m;
}

double max_abs_physical(const SpectralField& f) {
    auto g = to_physical(f, fft::smooth_size(4 * f.lattice().truncation() + 4));
    double m = 0.0;
    for (auto v : g.values) m = std::max(m, std::abs(v));
    return m;
}

std::string field_to_json(const SpectralField& f) {
    nlohmann::json j;
    j["basis"] = basis_name(f.basis());
    j["n"] = f.lattice().dim();
    j["N"] = f.lattice().truncation();
    auto arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < f.coeffs().size(); ++i) arr.push_back({f.coeffs()[i].real(), f.coeffs()[i].imag()});
    j["coeffs"] = std::move(arr);
    return j.dump();
}

SpectralField field_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("field snapshot: ") + e.what());
    }
    for (const char* key : {"basis", "n", "N", "coeffs"})
        if (!j.contains(key)) throw ConfigError(std::string("field snapshot missing key: ") + key);
    auto lat = make_lattice(j["n"].get<int>(), j["N"].get<int>(), basis_from_name(j["basis"].get<std::string>()));
    const auto& arr = j["coeffs"];
    if (arr.size() != lat->size()) throw ConfigError("field snapshot: coefficient count mismatch");
    CVec c(static_cast<Eigen::Index>(lat->size()));
    for (std::size_t i = 0; i < arr.size(); ++i)
        c[static_cast<Eigen::Index>(i)] = cplx(arr[i].at(0).get<double>(), arr[i].at(1).get<double>());
    return SpectralField(lat, std::move(c));
}

}  // namespace schrolab
