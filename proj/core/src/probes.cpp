#include "schrolab/probes.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "schrolab/control_signal.hpp"
#include "schrolab/exponents.hpp"
#include "schrolab/parallel.hpp"

namespace schrolab::bourgain {

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t h = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h), v.end());
    const double hi = v[h];
    if (v.size() % 2 == 1) return hi;
    return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h)));
}

double ratio(double num, double den) { return num == 0.0 ? 0.0 : num / den; }

SpaceTimeOptions st_options(const ProbeOptions& o, int band, double offset) {
    SpaceTimeOptions so;
    so.band = band;
    so.window_order = o.window_order;
    so.max_offset = offset;
    return so;
}

double max_norm2(const ModeLattice& lat) {
    long m = 0;
    for (std::size_t i = 0; i < lat.size(); ++i) m = std::max(m, lat.norm2(i));
    return static_cast<double>(m);
}

// Windowed near-free input as a space-time field.
SpaceTimeField windowed(const NearFree& u, double T, const SpaceTimeOptions& opts) {
    SpaceTimeOptions o = opts;
    o.max_offset = u.max_detuning();
    const auto grid = make_grid(T, o);
    return from_function(u.amp.lattice_ptr(), grid,
                         [&](double t) -> CVec { return window(t, T, grid.window_order) * u.at(t); });
}

// Product of windowed inputs sampled on the grid adapted to the largest dispersion offset.
SpaceTimeField windowed_product(const std::vector<NearFree>& in, const std::vector<bool>& conj, double T,
                                const SpaceTimeOptions& opts, const std::function<SpectralField(const SpectralField&)>& lift,
                                int out_N) {
    const auto& lat0 = lift(in.front().amp).lattice();
    double offset = 0.0;
    for (const auto& u : in) offset += max_norm2(u.amp.lattice()) + u.max_detuning();
    offset += static_cast<double>(lat0.dim()) * out_N * out_N;
    SpaceTimeOptions o = opts;
    o.max_offset = offset;
    const auto grid = make_grid(T, o);
    std::vector<CVec> samples(static_cast<std::size_t>(grid.P));
    LatticePtr out_lat;
    for (int j = 0; j < grid.P; ++j) {
        const double t = grid.time(j);
        const double w = window(t, T, grid.window_order);
        std::vector<SpectralField> f;
        f.reserve(in.size());
        for (const auto& u : in) f.push_back(lift(SpectralField(u.amp.lattice_ptr(), w * u.at(t))));
        std::vector<Factor> fac;
        for (std::size_t i = 0; i < f.size(); ++i) fac.push_back({&f[i], static_cast<bool>(conj[i])});
        auto p = multiply(fac, out_N);
        out_lat = p.lattice_ptr();
        samples[static_cast<std::size_t>(j)] = std::move(p.coeffs());
    }
    return transform_samples(out_lat, grid, samples, dispersion_centers(*out_lat), "product");
}

template <class F>
RatioStats run_samples(int samples, int band, const F& eval) {
    if (samples < 1) throw ConfigError("probe: need at least one sample");
    std::vector<double> r(static_cast<std::size_t>(samples)), rr(static_cast<std::size_t>(samples));
    parallel_for(static_cast<std::size_t>(samples), [&](std::size_t i) {
        r[i] = eval(i, band);
        rr[i] = eval(i, 2 * band);
    });
    return summarize(std::move(r), std::move(rr));
}

}  // namespace

RatioStats summarize(std::vector<double> ratios, std::vector<double> refined) {
    RatioStats st;
    st.max = ratios.empty() ? 0.0 : *std::max_element(ratios.begin(), ratios.end());
    st.median = median_of(ratios);
    st.refined_max = refined.empty() ? st.max : *std::max_element(refined.begin(), refined.end());
    st.refinement_delta = st.max > 0.0 ? std::abs(st.refined_max - st.max) / st.max : 0.0;
    st.stable = st.refinement_delta < 0.05 && std::isfinite(st.max) && std::isfinite(st.refined_max);
    st.ratios = std::move(ratios);
    st.refined_ratios = std::move(refined);
    return st;
}

CVec NearFree::at(double t) const {
    const auto& lat = amp.lattice();
    CVec r = amp.coeffs();
    for (Eigen::Index i = 0; i < r.size(); ++i)
        r[i] *= std::polar(1.0, -(static_cast<double>(lat.norm2(static_cast<std::size_t>(i))) + sigma[i]) * t);
    return r;
}

double NearFree::max_detuning() const { return sigma.size() == 0 ? 0.0 : sigma.cwiseAbs().maxCoeff(); }

NearFree random_near_free(LatticePtr lattice, double s, const ProbeOptions& opts, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(opts.seed), static_cast<std::uint32_t>(opts.seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(-opts.sigma_max, opts.sigma_max);
    const auto L = static_cast<Eigen::Index>(lattice->size());
    NearFree nf{SpectralField(lattice), RVec(L)};
    for (Eigen::Index i = 0; i < L; ++i) {
        const double w = std::pow(lattice->bracket2(static_cast<std::size_t>(i)), -0.5 * (s + opts.decay));
        const double re = g(rng), im = g(rng);
        nf.amp.coeffs()[i] = opts.scale * w * cplx(re, im) / std::sqrt(2.0);
        nf.sigma[i] = u(rng);
    }
    return nf;
}

double homogeneous_ratio(const SpectralField& phi, double s, double b, double T, const SpaceTimeOptions& opts) {
    SpaceTimeOptions o = opts;
    o.max_offset = 0.0;
    const auto grid = make_grid(T, o);
    const auto& lat = phi.lattice();
    auto f = canonical_extension(phi.lattice_ptr(), grid, [&](double t) { return free_flow(lat, phi.coeffs(), t); });
    return ratio(xsb_norm(f, s, b), sobolev_norm(phi, s));
}

CVec duhamel_near_free(const NearFree& f, double t) {
    const auto& lat = f.amp.lattice();
    CVec r = f.amp.coeffs();
    for (Eigen::Index i = 0; i < r.size(); ++i)
        r[i] *= std::polar(1.0, -static_cast<double>(lat.norm2(static_cast<std::size_t>(i))) * t) *
                phase_integral(-f.sigma[i], t);
    return r;
}

double duhamel_ratio(const NearFree& f, double s, double b, double T, const SpaceTimeOptions& opts) {
    SpaceTimeOptions o = opts;
    o.max_offset = f.max_detuning();
    const auto grid = make_grid(T, o);
    auto U = canonical_extension(f.amp.lattice_ptr(), grid, [&](double t) { return duhamel_near_free(f, t); });
    auto F = canonical_extension(f.amp.lattice_ptr(), grid, [&](double t) { return f.at(t); });
    return ratio(xsb_norm(U, s, b), xsb_norm(F, s, b - 1.0));
}

RatioStats linear_estimate_probe(LinearKind kind, int samples, double s, double b, const ProbeOptions& opts) {
    if (kind == LinearKind::Duhamel && !(b > 0.5 && b < 1.0))
        throw ConfigError("linear_estimate_probe: Duhamel kind needs b in (1/2, 1)");
    auto lat = make_lattice(opts.n, opts.N, Basis::Exponential);
    std::vector<NearFree> data;
    for (int i = 0; i < samples; ++i) data.push_back(random_near_free(lat, s, opts, static_cast<std::uint64_t>(i)));
    return run_samples(samples, opts.band, [&](std::size_t i, int band) {
        const auto so = st_options(opts, band, 0.0);
        return kind == LinearKind::Homogeneous ? homogeneous_ratio(data[i].amp, s, b, opts.T, so)
                                               : duhamel_ratio(data[i], s, b, opts.T, so);
    });
}

double multilinear_ratio(const std::vector<NearFree>& inputs, int alpha1, double s, double b, double T,
                         const SpaceTimeOptions& opts) {
    if (inputs.size() < 2) throw ConfigError("multilinear_ratio: need at least two factors");
    if (alpha1 < 0 || alpha1 > static_cast<int>(inputs.size())) throw ConfigError("multilinear_ratio: bad alpha1");
    double den = 1.0;
    for (const auto& u : inputs) den *= xsb_norm(windowed(u, T, opts), s, b);
    std::vector<bool> conj(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) conj[i] = static_cast<int>(i) >= alpha1;
    const int out_N = static_cast<int>(inputs.size()) * inputs.front().amp.lattice().truncation();
    auto P = windowed_product(inputs, conj, T, opts, [](const SpectralField& f) { return f; }, out_N);
    return ratio(xsb_norm(P, s, -b), den);
}

MultilinearReport multilinear_ratio_probe(int alpha, int n, double s, int samples, const ProbeOptions& opts,
                                          std::optional<int> alpha1, std::optional<double> s_contrast) {
    const auto e = critical_exponents(alpha, n);
    MultilinearReport rep;
    rep.alpha = alpha;
    rep.n = n;
    rep.s = s;
    rep.s_threshold = to_double(e.s_alpha_n);
    if (!(s > rep.s_threshold)) throw ConfigError("multilinear_ratio_probe: need s > s_{alpha,n}");
    rep.s_contrast = s_contrast.value_or(rep.s_threshold - 0.1);
    rep.b = n >= 2 ? to_double(exponent_plan(alpha, n).b_hint) : 5.0 / 12.0;
    rep.alpha1 = alpha1.value_or((alpha + 2) / 2);
    rep.alpha2 = alpha + 1 - rep.alpha1;
    if (rep.alpha2 < 0) throw ConfigError("multilinear_ratio_probe: alpha1 exceeds alpha + 1");
    auto lat = make_lattice(n, opts.N, Basis::Exponential);
    auto run = [&](double sv) {
        std::vector<std::vector<NearFree>> data(static_cast<std::size_t>(samples));
        for (int i = 0; i < samples; ++i)
            for (int f = 0; f <= alpha; ++f)
                data[static_cast<std::size_t>(i)].push_back(
                    random_near_free(lat, sv, opts, static_cast<std::uint64_t>(i) * 64 + static_cast<std::uint64_t>(f)));
        return run_samples(samples, opts.band, [&](std::size_t i, int band) {
            return multilinear_ratio(data[i], rep.alpha1, sv, rep.b, opts.T, st_options(opts, band, 0.0));
        });
    };
    rep.main = run(s);
    rep.contrast = run(rep.s_contrast);
    return rep;
}

BilinearRatios conjugate_bilinear_ratio(const NearFree& v1, const NearFree& v2, double s, double b, double b_prime,
                                        double T, const SpaceTimeOptions& opts) {
    if (v1.amp.basis() != Basis::Sine || v2.amp.basis() != Basis::Sine)
        throw ConfigError("conjugate_bilinear_ratio: inputs must be Sine fields");
    const int out_N = 2 * v1.amp.lattice().truncation();
    const std::vector<bool> conj{true, true};
    const std::vector<NearFree> in{v1, v2};
    BilinearRatios r;

    const double den_rect = xsb_norm(windowed(v1, T, opts), s, b) * xsb_norm(windowed(v2, T, opts), s, b);
    auto Pr = windowed_product(in, conj, T, opts, [](const SpectralField& f) { return f; }, out_N);
    r.rectangle = ratio(xsb_norm(Pr, s, b_prime), den_rect);

    auto ext = [](const NearFree& u) {
        NearFree e{odd_extend(u.amp), RVec()};
        const auto& L = e.amp.lattice();
        const auto& S = u.amp.lattice();
        e.sigma = RVec::Zero(static_cast<Eigen::Index>(L.size()));
        std::vector<int> a(static_cast<std::size_t>(L.dim()));
        for (std::size_t i = 0; i < L.size(); ++i) {
            auto k = L.index(i);
            bool zero = false;
            for (int d = 0; d < L.dim(); ++d) {
                a[static_cast<std::size_t>(d)] = std::abs(k[static_cast<std::size_t>(d)]);
                zero = zero || a[static_cast<std::size_t>(d)] == 0;
            }
            if (!zero) e.sigma[static_cast<Eigen::Index>(i)] = u.sigma[static_cast<Eigen::Index>(*S.find(a))];
        }
        return e;
    };
    const NearFree e1 = ext(v1), e2 = ext(v2);
    const double den_torus = xsb_norm(windowed(e1, T, opts), s, b) * xsb_norm(windowed(e2, T, opts), s, b);
    auto Pt = windowed_product({e1, e2}, conj, T, opts, [](const SpectralField& f) { return f; }, out_N);
    r.torus = ratio(xsb_norm(Pt, s, b_prime), den_torus);
    return r;
}

BilinearReport conjugate_bilinear_probe(double s, double b, int samples, const ProbeOptions& opts, double b_prime) {
    if (!(s > -0.375 && s < -1.0 / 3.0)) throw ConfigError("conjugate_bilinear_probe: need s in (-3/8, -1/3)");
    if (!(b > 0.375 && b < 0.5)) throw ConfigError("conjugate_bilinear_probe: need b in (3/8, 1/2)");
    if (!(s + 2.0 * b < 0.5)) throw ConfigError("conjugate_bilinear_probe: need s + 2b < 1/2");
    if (!(b_prime > -0.5 && b_prime < -5.0 / 12.0)) throw ConfigError("conjugate_bilinear_probe: need b' in (-1/2, -5/12)");
    BilinearReport rep;
    rep.s = s;
    rep.b = b;
    rep.b_prime = b_prime;
    auto lat = make_lattice(2, opts.N, Basis::Sine);
    std::vector<std::pair<NearFree, NearFree>> data;
    for (int i = 0; i < samples; ++i)
        data.emplace_back(random_near_free(lat, s, opts, 2 * static_cast<std::uint64_t>(i)),
                          random_near_free(lat, s, opts, 2 * static_cast<std::uint64_t>(i) + 1));
    const auto S = static_cast<std::size_t>(samples);
    std::vector<BilinearRatios> r(S), rr(S);
    parallel_for(S, [&](std::size_t i) {
        r[i] = conjugate_bilinear_ratio(data[i].first, data[i].second, s, b, b_prime, opts.T,
                                        st_options(opts, opts.band, 0.0));
        rr[i] = conjugate_bilinear_ratio(data[i].first, data[i].second, s, b, b_prime, opts.T,
                                         st_options(opts, 2 * opts.band, 0.0));
    });
    std::vector<double> t1, t2, q1, q2;
    for (std::size_t i = 0; i < S; ++i) {
        t1.push_back(r[i].torus);
        t2.push_back(rr[i].torus);
        q1.push_back(r[i].rectangle);
        q2.push_back(rr[i].rectangle);
        rep.extension_factor.push_back(ratio(r[i].rectangle, r[i].torus));
    }
    rep.torus = summarize(t1, t2);
    rep.rectangle = summarize(q1, q2);
    return rep;
}

namespace {

double bracket_pow(double y, double p) { return std::pow(1.0 + y * y, 0.5 * p); }

void finish(SumReport& r, double full_trunc_constant) {
    r.constant = 0.0;
    r.constant_half = 0.0;
    const double mid = r.curve.empty() ? 0.0 : 0.5 * r.curve.back().first;
    for (auto [x, y] : r.curve) {
        r.constant = std::max(r.constant, y);
        if (x <= mid) r.constant_half = std::max(r.constant_half, y);
    }
    r.truncation_delta = r.constant > 0.0 ? std::abs(full_trunc_constant - r.constant) / r.constant : 0.0;
    r.bound_ok = std::isfinite(r.constant) && r.constant > 0.0 && r.truncation_delta < 0.05 &&
                 (r.constant - r.constant_half) <= 0.05 * r.constant;
}

std::vector<std::pair<double, double>> resonance_curve(const SumParams& p, long K) {
    std::vector<std::pair<double, double>> c;
    const int steps = static_cast<int>(std::floor(p.lambda_max / p.lambda_step + 1e-9));
    for (int i = 0; i <= steps; ++i) {
        const double lam = i * p.lambda_step;
        double acc = 0.0;
        for (long k = -K; k <= K; ++k) {
            const double kk = static_cast<double>(k);
            acc += bracket_pow(lam * lam - kk * kk, -p.gamma);
        }
        c.emplace_back(lam, acc);
    }
    return c;
}

// S(p) / <p>^{2s+2} for all p in (N*)^n with |p| <= p_max, q in {1..q_max}^n.
std::vector<std::pair<double, double>> moment_curve(const SumParams& p, int q_max) {
    const int n = p.n;
    const double e_qn = 2.0 * p.s + 2.0;
    const double e_d = 2.0 * (1.0 - p.delta);
    std::vector<double> qn_pow(static_cast<std::size_t>(q_max) + 1), lag(static_cast<std::size_t>(2 * q_max + 2 * p.p_max) + 1);
    for (int q = 1; q <= q_max; ++q) qn_pow[static_cast<std::size_t>(q)] = std::pow(static_cast<double>(q), e_qn);
    for (std::size_t d = 0; d < lag.size(); ++d) lag[d] = bracket_pow(static_cast<double>(d), -p.k);
    const long dmax = static_cast<long>(n) * q_max * q_max + static_cast<long>(p.p_max) * p.p_max;
    std::vector<double> diff(static_cast<std::size_t>(dmax) + 1, 0.0);
    for (long d = 1; d <= dmax; ++d) diff[static_cast<std::size_t>(d)] = std::pow(static_cast<double>(d), -e_d);

    std::vector<std::vector<int>> ps;
    std::vector<int> cur(static_cast<std::size_t>(n), 1);
    std::function<void(int, long)> gen = [&](int axis, long nrm) {
        if (axis == n) {
            ps.push_back(cur);
            return;
        }
        for (int v = 1; nrm + static_cast<long>(v) * v <= static_cast<long>(p.p_max) * p.p_max; ++v) {
            cur[static_cast<std::size_t>(axis)] = v;
            gen(axis + 1, nrm + static_cast<long>(v) * v);
        }
    };
    gen(0, 0);

    std::vector<std::pair<double, double>> out(ps.size());
    parallel_for(ps.size(), [&](std::size_t idx) {
        const auto& pv = ps[idx];
        long pn2 = 0;
        for (int v : pv) pn2 += static_cast<long>(v) * v;
        double acc = 0.0;
        std::vector<int> q(static_cast<std::size_t>(n - 1), 1);
        std::function<void(int, long, double)> rec = [&](int axis, long qn2, double w) {
            if (axis == n - 1) {
                for (int qn = 1; qn <= q_max; ++qn) {
                    const long d = qn2 + static_cast<long>(qn) * qn - pn2;
                    if (d == 0) continue;
                    acc += w * qn_pow[static_cast<std::size_t>(qn)] * diff[static_cast<std::size_t>(std::labs(d))];
                }
                return;
            }
            for (int v = 1; v <= q_max; ++v)
                rec(axis + 1, qn2 + static_cast<long>(v) * v,
                    w * lag[static_cast<std::size_t>(std::abs(v - pv[static_cast<std::size_t>(axis)]))]);
        };
        rec(0, 0, 1.0);
        out[idx] = {std::sqrt(static_cast<double>(pn2)), acc / std::pow(1.0 + static_cast<double>(pn2), p.s + 1.0)};
    });
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::pair<double, double>> shifted_curve(const SumParams& p, long m_max) {
    std::vector<std::pair<double, double>> out(static_cast<std::size_t>(p.n_max));
    parallel_for(out.size(), [&](std::size_t i) {
        const double nn = static_cast<double>(i + 1);
        double acc = 0.0;
        for (long m = 1; m <= m_max; ++m) {
            const double mm = static_cast<double>(m);
            acc += bracket_pow(mm + nn, p.sigma) * bracket_pow(mm - nn, -p.k);
        }
        out[i] = {nn, acc / std::pow(nn, p.sigma)};
    });
    return out;
}

double curve_max(const std::vector<std::pair<double, double>>& c) {
    double m = 0.0;
    for (auto [x, y] : c) m = std::max(m, y);
    return m;
}

}  // namespace

SumReport lattice_sum_probe(SumKind kind, const SumParams& p) {
    SumReport r;
    switch (kind) {
        case SumKind::Resonance: {
            if (!(p.gamma > 0.5)) throw ConfigError("resonance sum: need gamma > 1/2");
            if (p.k_max < 1 || !(p.lambda_step > 0.0)) throw ConfigError("resonance sum: bad range");
            r.kind = "resonance";
            r.curve = resonance_curve(p, p.k_max);
            finish(r, curve_max(resonance_curve(p, 2 * p.k_max)));
            break;
        }
        case SumKind::Moment: {
            if (!(p.s >= -1.0) || !(p.delta > 0.0 && p.delta < 1.0) || !(p.s + 2.0 * p.delta < 0.5) ||
                !(p.k > 1.0 + 2.0 * (p.s + 1.0)) || p.n < 2)
                throw ConfigError("moment sum: need s >= -1, 0 < delta < 1, s + 2 delta < 1/2, k > 1 + 2(s+1), n >= 2");
            if (p.p_max < 1 || p.q_max < p.p_max) throw ConfigError("moment sum: need q_max >= p_max >= 1");
            r.kind = "moment";
            r.curve = moment_curve(p, p.q_max);
            finish(r, curve_max(moment_curve(p, 2 * p.q_max)));
            break;
        }
        case SumKind::Shifted: {
            if (!(p.sigma >= 0.0) || !(p.k > p.sigma + 1.0)) throw ConfigError("shifted sum: need sigma >= 0 and k > sigma + 1");
            if (p.n_max < 2 || p.m_max < p.n_max) throw ConfigError("shifted sum: bad range");
            r.kind = "shifted";
            r.curve = shifted_curve(p, p.m_max);
            finish(r, curve_max(shifted_curve(p, 2 * p.m_max)));
            break;
        }
    }
    return r;
}

}  // namespace schrolab::bourgain
