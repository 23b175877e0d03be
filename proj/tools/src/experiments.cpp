#include "experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "schrolab/dirichlet_control.hpp"
#include "schrolab/errors.hpp"
#include "schrolab/exponents.hpp"
#include "schrolab/internal_control.hpp"
#include "schrolab/neumann_control.hpp"
#include "schrolab/nonlinear_control.hpp"
#include "schrolab/probes.hpp"
#include "schrolab/stabilization.hpp"

namespace schrolab::cli {

using nlohmann::json;

Run::Run(ExperimentConfig& c, OutputSet& o) : cfg(c), out(o) {
    const std::uint64_t s = c.seed();
    std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)};
    rng.seed(seq);
}

void Run::check(const std::string& name, double value, const std::string& relation, double limit) {
    bool ok = false;
    if (relation == "<") ok = value < limit;
    else if (relation == "<=") ok = value <= limit;
    else if (relation == ">") ok = value > limit;
    else if (relation == ">=") ok = value >= limit;
    ok = ok && std::isfinite(value);
    failed = failed || !ok;
    checks.push_back({{"name", name}, {"value", value}, {"relation", relation}, {"limit", limit}, {"ok", ok}});
}

namespace {

constexpr double kPi = std::numbers::pi;

SpectralField random_data(const LatticePtr& L, std::mt19937_64& rng, double decay, double size, double s,
                          NormWeight w = NormWeight::Bracket) {
    std::normal_distribution<double> g(0.0, 1.0);
    SpectralField f(L);
    for (std::size_t k = 0; k < L->size(); ++k) {
        const double re = g(rng);
        const double im = g(rng);
        f.coeffs()[static_cast<Eigen::Index>(k)] = cplx(re, im) * std::pow(L->bracket2(k), -0.5 * decay);
    }
    const double nrm = sobolev_norm(f, s, w);
    if (nrm > 0.0) f.coeffs() *= size / nrm;
    return f;
}

SpectralField scaled_to(const SpectralField& f, double size, double s, NormWeight w = NormWeight::Bracket) {
    SpectralField g = f;
    const double nrm = sobolev_norm(f, s, w);
    if (nrm > 0.0) g.coeffs() *= size / nrm;
    return g;
}

SpectralField profile(const Run& run) {
    const int n = static_cast<int>(run.i("lattice.n"));
    const int modes = static_cast<int>(run.i("control.a_modes"));
    const std::string kind = run.t("control.a_profile");
    if (kind == "bump") return internal::bump_profile(n, modes, run.r("control.a_width"), run.r("control.a_height"));
    if (kind == "constant") return internal::constant_profile(n, modes, run.r("control.a_height"));
    if (kind == "none") return internal::constant_profile(n, modes, 0.0);
    throw ConfigError("control.a_profile must be bump, constant or none, got '" + kind + "'");
}

std::vector<int> faces(const Run& run) {
    std::vector<int> out;
    std::stringstream ss(run.t("control.faces"));
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.find_first_not_of(" ") == std::string::npos) continue;
        try {
            std::size_t pos = 0;
            const int f = std::stoi(item, &pos);
            out.push_back(f);
        } catch (const std::exception&) {
            throw ConfigError("control.faces: '" + item + "' is not a face id");
        }
    }
    const int n = static_cast<int>(run.i("lattice.n"));
    for (int f : out)
        if (f < 0 || f >= dirichlet::face_count(n)) throw ConfigError("control.faces: face id out of range");
    return out;
}

LatticePtr lattice(const Run& run, Basis b) {
    const int n = static_cast<int>(run.i("lattice.n"));
    const int N = static_cast<int>(run.i("lattice.N"));
    if (n < 1 || N < 1) throw ConfigError("lattice.n and lattice.N must be positive");
    return make_lattice(n, N, b);
}

nonlinear::NonlinearitySpec spec_of(const Run& run) {
    return nonlinear::make_spec(run.r("model.lambda"), static_cast<int>(run.i("model.alpha1")),
                                static_cast<int>(run.i("model.alpha2")));
}

json report_json(const nonlinear::FixedPointReport& r) {
    return {{"iterates", r.iterates},           {"distances", r.distances},
            {"contraction_factors", r.contraction_factors}, {"final_residual", r.final_residual},
            {"ball_radius", r.ball_radius},       {"delta", r.delta},
            {"converged", r.converged}};
}

std::string fixed_point_csv(const nonlinear::FixedPointReport& r) {
    std::vector<std::vector<double>> rows;
    for (std::size_t j = 0; j < r.distances.size(); ++j)
        rows.push_back({double(j + 1), r.distances[j], j == 0 ? 0.0 : r.contraction_factors[j - 1]});
    return csv({"iteration", "distance", "factor"}, rows);
}

double max_of(const std::vector<double>& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); }

json stats_json(const bourgain::RatioStats& s) {
    return {{"max", s.max},
            {"median", s.median},
            {"refined_max", s.refined_max},
            {"refinement_delta", s.refinement_delta},
            {"stable", s.stable},
            {"samples", s.ratios.size()}};
}

std::string histogram_gp(const std::string& file, const std::string& title, int column) {
    std::ostringstream os;
    os << "set datafile separator \",\"\n"
       << "set title \"" << title << "\"\n"
       << "set xlabel \"ratio\"\nset ylabel \"count\"\n"
       << "binwidth = 0.02\nbin(x) = binwidth * floor(x / binwidth)\n"
       << "set style fill solid 0.5\n"
       << "plot \"" << file << "\" using (bin($" << column << ")):(1.0) smooth freq with boxes notitle\n";
    return os.str();
}

void check_stats(Run& run, const std::string& name, const bourgain::RatioStats& s) {
    run.check(name + ".max", s.max, "<", 1e300);
    run.check(name + ".refinement_delta", s.refinement_delta, "<", run.r("tolerance.stability"));
}

// ---------------------------------------------------------------------------

void run_exponents(Run& run) {
    const int alpha = static_cast<int>(run.i("model.alpha"));
    const int n = static_cast<int>(run.i("lattice.n"));
    if (alpha < 1 || n < 1) throw ConfigError("model.alpha and lattice.n must be positive");
    const auto e = bourgain::critical_exponents(alpha, n);
    using bourgain::to_string;
    json res = {{"alpha", alpha},
                {"n", n},
                {"s_b", to_string(e.s_b)},
                {"s_alpha_n", to_string(e.s_alpha_n)},
                {"s_c", to_string(e.s_c)},
                {"s_b_value", bourgain::to_double(e.s_b)},
                {"s_alpha_n_value", bourgain::to_double(e.s_alpha_n)},
                {"s_c_value", bourgain::to_double(e.s_c)}};
    if (n >= 2) {
        const auto p = bourgain::exponent_plan(alpha, n);
        json plan = {{"p1", to_string(p.p1)},       {"q1", to_string(p.q1)},         {"r1", to_string(p.r1)},
                     {"sigma1", to_string(p.sigma1)}, {"sigma2", to_string(p.sigma2)},
                     {"b_lower", to_string(p.b_lower)}, {"b_hint", to_string(p.b_hint)}, {"fallback", p.fallback}};
        if (p.p2) plan["p2"] = to_string(*p.p2);
        if (p.q2) plan["q2"] = to_string(*p.q2);
        if (p.r2) plan["r2"] = to_string(*p.r2);
        json checks = json::array();
        for (const auto& c : p.checks) checks.push_back({{"name", c.name}, {"holds", c.holds}});
        plan["constraints"] = checks;
        res["plan"] = plan;
        run.check("plan.constraints", p.all_hold() ? 1.0 : 0.0, ">=", 1.0);
    }
    run.results = res;
}

void run_table1(Run& run) {
    json rows = json::array();
    std::vector<std::vector<double>> num;
    for (const auto& r : bourgain::table1()) {
        rows.push_back({{"alpha", r.alpha},
                        {"n", r.n},
                        {"s_b", bourgain::to_string(r.e.s_b)},
                        {"s_alpha_n", bourgain::to_string(r.e.s_alpha_n)},
                        {"s_c", bourgain::to_string(r.e.s_c)}});
        num.push_back({double(r.alpha), double(r.n), bourgain::to_double(r.e.s_b), bourgain::to_double(r.e.s_alpha_n),
                       bourgain::to_double(r.e.s_c)});
    }
    run.results = {{"rows", rows}};
    const std::string table = bourgain::format_table1();
    run.out.write("table1.txt", table);
    run.out.write("table1.csv", csv({"alpha", "n", "s_b", "s_alpha_n", "s_c"}, num));
    run.stdout_text = table;
}

void run_simulate(Run& run) {
    const auto L = lattice(run, Basis::Exponential);
    const double s = run.r("model.s"), T = run.r("model.T");
    const int frames = static_cast<int>(run.i("model.frames"));
    if (T <= 0.0 || frames < 1) throw ConfigError("model.T and model.frames must be positive");
    const auto spec = spec_of(run);
    const auto a = profile(run);
    const bool damped = run.t("control.a_profile") != "none";
    auto u = random_data(L, run.rng, run.r("control.decay"), run.r("model.delta"), s);
    const double mass0 = sobolev_norm(u, 0.0);

    std::vector<std::vector<double>> rows{{0.0, mass0, sobolev_norm(u, s)}};
    double drift = 0.0, growth = 0.0;
    for (int j = 1; j <= frames; ++j) {
        const double dt = T / frames;
        if (!damped && spec.lambda == 0.0) u = free_propagate(u, dt);
        else u = stab::replay_damped(u, a, spec, dt);
        const double m = sobolev_norm(u, 0.0);
        drift = std::max(drift, std::abs(m - mass0) / mass0);
        growth = std::max(growth, (m - rows.back()[1]) / mass0);
        rows.push_back({j * dt, m, sobolev_norm(u, s)});
    }
    run.out.write("norms.csv", csv({"t", "l2", "hs"}, rows));
    run.out.write("final_state.json", field_to_json(u) + "\n");
    run.out.write("norms.gp", "set datafile separator \",\"\nset xlabel \"t\"\nset ylabel \"norm\"\n"
                              "plot \"norms.csv\" using 1:2 with lines title \"L2\", "
                              "\"norms.csv\" using 1:3 with lines title \"H^s\"\n");
    run.results = {{"mass_initial", mass0}, {"mass_final", rows.back()[1]}, {"hs_final", rows.back()[2]},
                   {"max_relative_mass_drift", drift}, {"damped", damped}};
    if (!damped && spec.gauge_invariant()) run.check("mass_drift", drift, "<", run.r("tolerance.replay"));
    if (damped && spec.gauge_invariant()) run.check("mass_growth", growth, "<=", 1e-12);
}

void run_control_internal(Run& run) {
    const auto L = lattice(run, Basis::Exponential);
    const double s = run.r("model.s"), T = run.r("model.T");
    const auto ctrl = internal::make_controller(profile(run), s, T, L);
    const double decay = run.r("control.decay");
    const auto u0 = random_data(L, run.rng, decay, 1.0, s);
    const auto u1 = random_data(L, run.rng, decay, 1.0, s);
    const auto res = internal::hum_internal_control(ctrl, u0, u1);
    const auto rep = internal::replay(ctrl, u0, res.signal);
    const double replay_res = internal::relative_residual(rep, u1, s);

    const auto G = internal::assemble_internal_gramian(ctrl);
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (G.matrix + G.matrix.adjoint()), Eigen::EigenvaluesOnly);
    std::vector<std::vector<double>> rows;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) rows.push_back({double(k), es.eigenvalues()[k]});
    const double hermitian = (G.matrix - G.matrix.adjoint()).cwiseAbs().maxCoeff();

    run.out.write("control.json", to_json(res.signal) + "\n");
    run.out.write("gramian_spectrum.csv", csv({"index", "eigenvalue"}, rows));
    run.out.write("gramian_spectrum.gp", "set datafile separator \",\"\nset logscale y\n"
                                         "set xlabel \"index\"\nset ylabel \"eigenvalue\"\n"
                                         "plot \"gramian_spectrum.csv\" using 1:2 with linespoints notitle\n");
    run.results = {{"residual", res.residual},
                   {"replay_residual", replay_res},
                   {"lambda_min", res.lambda_min},
                   {"lambda_max", res.lambda_max},
                   {"observability_constant", internal::observability_constant(G)},
                   {"gramian_hermitian_defect", hermitian},
                   {"control_norm", std::sqrt(internal::control_norm_squared(res.signal, s, T))}};
    run.check("residual", res.residual, "<", run.r("tolerance.residual"));
    run.check("replay_residual", replay_res, "<", run.r("tolerance.replay"));
    run.check("lambda_min", res.lambda_min, ">", 0.0);
}

void run_control_dirichlet(Run& run) {
    const auto L = lattice(run, Basis::Sine);
    const int n = static_cast<int>(run.i("lattice.n"));
    const double s = run.r("model.s"), T = run.r("model.T");
    const auto g = dirichlet::build_smooth_controller(n, run.r("model.epsilon"), static_cast<int>(run.i("model.order")),
                                                      faces(run));
    const auto uT = random_data(L, run.rng, run.r("control.decay"), 1.0, s, NormWeight::Laplacian);
    const dirichlet::MomentOperator mo(g, L);
    const auto S = mo.assemble(T);
    dirichlet::DirichletOptions opts;
    opts.s = s;
    const auto res = dirichlet::dirichlet_control(uT, S, g, opts);
    const auto rep = dirichlet::replay_dirichlet(g, res.v0, L, SpectralField(L), T);
    const double replay_res =
        sobolev_norm(rep - uT, s, NormWeight::Laplacian) / sobolev_norm(uT, s, NormWeight::Laplacian);

    const std::vector<double> s_list{-1.0, -0.5, 0.0, 0.5, 1.0};
    const auto iso = dirichlet::isomorphism_ratios(dirichlet::SSolver(S), uT, s_list);
    std::vector<std::vector<double>> iso_rows;
    for (std::size_t k = 0; k < s_list.size(); ++k) iso_rows.push_back({s_list[k], iso[k]});

    std::vector<std::vector<double>> cond_rows;
    for (double f : {0.25, 0.5, 0.75, 1.0, 1.5, 2.0}) {
        const dirichlet::SSolver sv(mo.assemble(f * T), std::numeric_limits<double>::infinity());
        cond_rows.push_back({f * T, sv.condition()});
    }

    run.out.write("trace.json", to_json(res.trace) + "\n");
    run.out.write("isomorphism.csv", csv({"s", "ratio"}, iso_rows));
    run.out.write("conditioning.csv", csv({"T", "condition"}, cond_rows));
    run.out.write("conditioning.gp", "set datafile separator \",\"\nset logscale y\n"
                                     "set xlabel \"T\"\nset ylabel \"cond(S)\"\n"
                                     "plot \"conditioning.csv\" using 1:2 with linespoints notitle\n");
    run.results = {{"residual", res.residual},
                   {"replay_residual", replay_res},
                   {"condition", res.condition},
                   {"faces", g.faces},
                   {"isomorphism_ratios", iso}};
    run.check("residual", res.residual, "<", run.r("tolerance.residual"));
    run.check("replay_residual", replay_res, "<", run.r("tolerance.replay"));
}

void run_control_neumann(Run& run) {
    const auto L = lattice(run, Basis::Cosine);
    const double s = run.r("model.s"), T = run.r("model.T");
    const int face = static_cast<int>(run.i("control.face"));
    if (face < 0 || face >= 2 * L->dim()) throw ConfigError("control.face out of range");
    const auto prob = neumann::make_problem(L, face, s, T);
    const double decay = run.r("control.decay");
    const auto u0 = random_data(L, run.rng, decay, 1.0, s);
    const auto u1 = random_data(L, run.rng, decay, 1.0, s);
    const auto res = neumann::neumann_control(prob, u0, u1);
    const auto rep = neumann::replay_neumann(prob, u0, res.trace.faces.at(0));
    const double replay_res = sobolev_norm(rep - u1, s) / sobolev_norm(u1, s);

    const auto G = neumann::neumann_gramian(prob);
    CMat off = G.matrix;
    off.diagonal().setZero();
    const double offdiag = off.cwiseAbs().maxCoeff() / G.matrix.diagonal().cwiseAbs().maxCoeff();

    run.out.write("trace.json", to_json(res.trace) + "\n");
    run.results = {{"residual", res.residual},
                   {"replay_residual", replay_res},
                   {"lambda_min", res.lambda_min},
                   {"trace_norm", res.trace_norm},
                   {"gramian_relative_offdiagonal", offdiag}};
    run.check("residual", res.residual, "<", run.r("tolerance.residual"));
    run.check("replay_residual", replay_res, "<", run.r("tolerance.replay"));
}

void emit_trajectory_norms(Run& run, const Trajectory& tr, double s, NormWeight w) {
    const int frames = static_cast<int>(std::max<long long>(1, run.i("model.frames")));
    std::vector<std::vector<double>> rows;
    for (int j = 0; j <= frames; ++j) {
        const double t = tr.T * j / frames;
        rows.push_back({t, sobolev_norm(tr.field_at(t), s, w)});
    }
    run.out.write("trajectory_norms.csv", csv({"t", "norm"}, rows));
}

void fixed_point_checks(Run& run, const nonlinear::FixedPointReport& rep, double endpoint, double replay_res) {
    run.check("converged", rep.converged ? 1.0 : 0.0, ">=", 1.0);
    run.check("max_contraction_factor", max_of(rep.contraction_factors), "<=", run.r("tolerance.contraction"));
    run.check("endpoint_residual", endpoint, "<", run.r("tolerance.residual"));
    run.check("replay_residual", replay_res, "<", run.r("tolerance.replay"));
}

void run_control_nonlinear(Run& run) {
    const double s = run.r("model.s"), T = run.r("model.T"), b = run.r("model.b");
    const double decay = run.r("control.decay");
    const auto spec = spec_of(run);
    const std::string bc = run.t("control.bc"), mode = run.t("control.mode");
    nonlinear::FixedPointOptions opts;
    opts.b = b;
    opts.contraction_limit = run.r("tolerance.contraction");
    opts.boundary.s = s;

    if (mode == "boundary") {
        if (bc != "dirichlet") throw ConfigError("boundary mode needs control.bc = dirichlet");
        const auto L = lattice(run, Basis::Sine);
        const auto g = dirichlet::build_smooth_controller(L->dim(), run.r("model.epsilon"),
                                                          static_cast<int>(run.i("model.order")), faces(run));
        const auto u0 = random_data(L, run.rng, decay, 1.0, s, NormWeight::Laplacian);
        const auto uT = random_data(L, run.rng, decay, 1.0, s, NormWeight::Laplacian);
        auto attempt = [&](double delta) {
            return nonlinear::fixed_point_dirichlet(scaled_to(u0, delta / 2, s, NormWeight::Laplacian),
                                                    scaled_to(uT, delta / 2, s, NormWeight::Laplacian), g, T, spec, s,
                                                    b, opts);
        };
        auto [r, delta] = nonlinear::with_delta_halving(run.r("model.delta"), attempt);
        const auto a0 = scaled_to(u0, delta / 2, s, NormWeight::Laplacian);
        const auto aT = scaled_to(uT, delta / 2, s, NormWeight::Laplacian);
        const auto rep = nonlinear::replay_dirichlet_nonlinear(g, r.v0, spec, a0, T);
        const double replay_res =
            sobolev_norm(rep - aT, s, NormWeight::Laplacian) / sobolev_norm(aT, s, NormWeight::Laplacian);
        run.out.write("trace.json", to_json(r.trace) + "\n");
        run.out.write("fixed_point.csv", fixed_point_csv(r.report));
        emit_trajectory_norms(run, r.trajectory, s, NormWeight::Laplacian);
        run.results = {{"mode", mode},
                       {"bc", bc},
                       {"delta", delta},
                       {"endpoint_residual", r.endpoint_residual},
                       {"replay_residual", replay_res},
                       {"trace_norm", r.trace_norm},
                       {"condition", r.condition},
                       {"report", report_json(r.report)}};
        fixed_point_checks(run, r.report, r.endpoint_residual, replay_res);
        return;
    }
    if (mode != "internal") throw ConfigError("control.mode must be internal or boundary");

    if (bc == "periodic") {
        const auto L = lattice(run, Basis::Exponential);
        const auto ctrl = internal::make_controller(profile(run), s, T, L);
        const auto phi = random_data(L, run.rng, decay, 1.0, s);
        const auto psi = random_data(L, run.rng, decay, 1.0, s);
        auto attempt = [&](double delta) {
            return nonlinear::fixed_point_internal(scaled_to(phi, delta / 2, s), scaled_to(psi, delta / 2, s), ctrl,
                                                   spec, opts);
        };
        auto [r, delta] = nonlinear::with_delta_halving(run.r("model.delta"), attempt);
        const auto p0 = scaled_to(phi, delta / 2, s), p1 = scaled_to(psi, delta / 2, s);
        const auto rep = nonlinear::replay_internal(ctrl, spec, p0, r.control);
        const double replay_res = internal::relative_residual(rep, p1, s);
        run.out.write("control.json", to_json(r.control) + "\n");
        run.out.write("fixed_point.csv", fixed_point_csv(r.report));
        emit_trajectory_norms(run, r.trajectory, s, NormWeight::Bracket);
        run.results = {{"mode", mode},
                       {"bc", bc},
                       {"delta", delta},
                       {"endpoint_residual", r.endpoint_residual},
                       {"replay_residual", replay_res},
                       {"control_norm", std::sqrt(internal::control_norm_squared(r.control, s, T))},
                       {"report", report_json(r.report)}};
        fixed_point_checks(run, r.report, r.endpoint_residual, replay_res);
        return;
    }
    const Parity parity = bc == "dirichlet" ? Parity::Odd : bc == "neumann" ? Parity::Even
                          : throw ConfigError("control.bc must be periodic, dirichlet or neumann");
    const auto L = lattice(run, parity == Parity::Odd ? Basis::Sine : Basis::Cosine);
    const auto a = restrict_parity(profile(run), Parity::Even);
    const auto phi = random_data(L, run.rng, decay, 1.0, s);
    const auto psi = random_data(L, run.rng, decay, 1.0, s);
    auto attempt = [&](double delta) {
        return nonlinear::fixed_point_internal_bc(parity, a, s, T, scaled_to(phi, delta / 2, s),
                                                  scaled_to(psi, delta / 2, s), spec, opts);
    };
    auto [r, delta] = nonlinear::with_delta_halving(run.r("model.delta"), attempt);
    const auto p0 = extend(scaled_to(phi, delta / 2, s)), p1 = extend(scaled_to(psi, delta / 2, s));
    const auto rep = nonlinear::replay_internal(r.controller, spec, p0, r.torus.control);
    const double replay_res = internal::relative_residual(rep, p1, s);
    run.out.write("control.json", to_json(r.torus.control) + "\n");
    run.out.write("fixed_point.csv", fixed_point_csv(r.torus.report));
    emit_trajectory_norms(run, r.torus.trajectory, s, NormWeight::Bracket);
    run.results = {{"mode", mode},
                   {"bc", bc},
                   {"delta", delta},
                   {"endpoint_residual", r.endpoint_residual},
                   {"replay_residual", replay_res},
                   {"parity_asymmetry", parity_asymmetry(r.torus.achieved, parity)},
                   {"report", report_json(r.torus.report)}};
    fixed_point_checks(run, r.torus.report, r.endpoint_residual, replay_res);
}

void run_stabilize(Run& run) {
    const auto L = lattice(run, Basis::Exponential);
    if (run.t("control.a_profile") == "none") throw ConfigError("stabilization needs a damping profile");
    const double s = run.r("model.s");
    const auto a = profile(run);
    const auto spec = spec_of(run);
    const auto u0 = random_data(L, run.rng, run.r("control.decay"), 1.0, s);
    const double abscissa = stab::spectral_abscissa(a, L);
    if (!(abscissa < 0.0)) throw NumericError("damped generator is not stable", {abscissa});

    const auto lin = stab::decay_fit(a, u0, s, 12.0 / -abscissa);
    stab::StabilizeOptions opts;
    opts.s = s;
    opts.contraction_limit = run.r("tolerance.contraction");
    double tmax = run.r("model.tmax");
    if (tmax <= 0.0) {
        const auto probe = stab::nonlinear_stabilize(u0, a, nonlinear::make_spec(0.0, spec.alpha1, spec.alpha2), 1.0, opts);
        tmax = 5.0 * probe.window;
    }
    auto attempt = [&](double delta) {
        return stab::nonlinear_stabilize(scaled_to(u0, delta, s), a, spec, tmax, opts);
    };
    auto [r, delta] = nonlinear::with_delta_halving(run.r("model.delta"), attempt);

    std::vector<std::vector<double>> rows, wrows;
    for (std::size_t j = 0; j < r.times.size(); ++j) rows.push_back({r.times[j], r.norms[j]});
    double worst = 0.0;
    for (std::size_t k = 0; k < r.windows.size(); ++k) {
        const auto& w = r.windows[k];
        wrows.push_back({double(k), w.t_start, w.t_end, w.norm_start, w.norm_end, w.factor, double(w.iterates)});
        worst = std::max(worst, w.factor);
    }
    run.out.write("norms.csv", csv({"t", "norm"}, rows));
    run.out.write("windows.csv", csv({"window", "t_start", "t_end", "norm_start", "norm_end", "factor", "iterates"}, wrows));
    std::ostringstream gp;
    gp << "set datafile separator \",\"\nset logscale y\nset xlabel \"t\"\nset ylabel \"||u(t)||_s\"\n"
       << "nu = " << format_real(r.fit.nu) << "\nC = " << format_real(r.fit.C * r.norms.front()) << "\n"
       << "plot \"norms.csv\" using 1:2 with lines title \"solution\", C * exp(-nu * x) title \"fit\"\n";
    run.out.write("decay.gp", gp.str());
    auto fit_json = [](const stab::DecayFit& f) {
        return json{{"nu", f.nu}, {"C", f.C}, {"t_start", f.t_start}, {"t_end", f.t_end}, {"r2", f.r2}, {"samples", f.samples}};
    };
    run.results = {{"spectral_abscissa", abscissa},
                   {"linear_fit", fit_json(lin)},
                   {"nonlinear_fit", fit_json(r.fit)},
                   {"window", r.window},
                   {"window_operator_norm", r.window_operator_norm},
                   {"windows", r.windows.size()},
                   {"delta", delta},
                   {"tmax", tmax},
                   {"worst_window_factor", worst}};
    run.check("rate_agreement", std::abs(lin.nu / -abscissa - 1.0), "<=", run.r("tolerance.rate"));
    run.check("worst_window_factor", worst, "<=", 0.5);
    run.check("windows", double(r.windows.size()), ">=", 1.0);
}

bourgain::ProbeOptions probe_options(const Run& run) {
    bourgain::ProbeOptions o;
    o.n = static_cast<int>(run.i("lattice.n"));
    o.N = static_cast<int>(run.i("lattice.N"));
    o.T = run.r("model.T");
    o.band = static_cast<int>(run.i("lattice.M"));
    o.window_order = static_cast<int>(run.i("probe.window_order"));
    o.sigma_max = run.r("probe.sigma_max");
    o.decay = run.r("probe.decay");
    o.seed = run.cfg.seed();
    return o;
}

double scale_defect(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) d = std::max(d, std::abs(a[k] - b[k]) / std::abs(a[k]));
    return d;
}

void run_probe_xsb(Run& run) {
    const std::string kind = run.t("probe.kind");
    const double s = run.r("model.s"), b = run.r("model.b");
    const int samples = static_cast<int>(run.i("probe.samples"));
    if (samples < 1) throw ConfigError("probe.samples must be positive");
    auto opts = probe_options(run);
    const int few = std::min(samples, 4);
    std::vector<std::vector<double>> rows;

    if (kind == "bilinear") {
        const double bp = run.r("probe.b_prime");
        const auto rep = bourgain::conjugate_bilinear_probe(s, b, samples, opts, bp);
        auto scaled = opts;
        scaled.scale = 1024.0;
        const auto rep2 = bourgain::conjugate_bilinear_probe(s, b, few, scaled, bp);
        for (std::size_t k = 0; k < rep.torus.ratios.size(); ++k)
            rows.push_back({double(k), rep.torus.ratios[k], rep.torus.refined_ratios[k], rep.rectangle.ratios[k],
                            rep.rectangle.refined_ratios[k]});
        run.out.write("ratios.csv", csv({"sample", "torus", "torus_refined", "rectangle", "rectangle_refined"}, rows));
        run.out.write("histogram.gp", histogram_gp("ratios.csv", "bilinear ratios", 2));
        const double defect = std::max(scale_defect(rep.torus.ratios, rep2.torus.ratios),
                                       scale_defect(rep.rectangle.ratios, rep2.rectangle.ratios));
        run.results = {{"kind", kind},          {"s", s}, {"b", b}, {"b_prime", bp},
                       {"torus", stats_json(rep.torus)}, {"rectangle", stats_json(rep.rectangle)},
                       {"extension_factor_max", max_of(rep.extension_factor)}, {"scale_defect", defect}};
        check_stats(run, "torus", rep.torus);
        check_stats(run, "rectangle", rep.rectangle);
        run.check("scale_defect", defect, "<", 1e-12);
        return;
    }

    std::function<bourgain::RatioStats(int, const bourgain::ProbeOptions&)> probe;
    if (kind == "homogeneous" || kind == "duhamel") {
        const auto k = kind == "homogeneous" ? bourgain::LinearKind::Homogeneous : bourgain::LinearKind::Duhamel;
        probe = [=](int m, const bourgain::ProbeOptions& o) { return bourgain::linear_estimate_probe(k, m, s, b, o); };
    } else if (kind == "damped-homogeneous" || kind == "damped-duhamel") {
        const auto k = kind == "damped-homogeneous" ? stab::DampedKind::Homogeneous : stab::DampedKind::Duhamel;
        const auto a = profile(run);
        probe = [=](int m, const bourgain::ProbeOptions& o) { return stab::damped_estimate_probes(k, a, m, s, b, o); };
    } else {
        throw ConfigError("probe.kind must be homogeneous, duhamel, damped-homogeneous, damped-duhamel or bilinear");
    }
    const auto st = probe(samples, opts);
    auto scaled = opts;
    scaled.scale = 1024.0;
    const auto st2 = probe(few, scaled);
    for (std::size_t k = 0; k < st.ratios.size(); ++k) rows.push_back({double(k), st.ratios[k], st.refined_ratios[k]});
    run.out.write("ratios.csv", csv({"sample", "ratio", "refined"}, rows));
    run.out.write("histogram.gp", histogram_gp("ratios.csv", kind + " ratios", 2));
    const double defect = scale_defect(st.ratios, st2.ratios);
    run.results = {{"kind", kind}, {"s", s}, {"b", b}, {"stats", stats_json(st)}, {"scale_defect", defect}};
    check_stats(run, "ratios", st);
    run.check("scale_defect", defect, "<", 1e-12);
}

void run_probe_multilinear(Run& run) {
    const int alpha = static_cast<int>(run.i("model.alpha"));
    const int n = static_cast<int>(run.i("lattice.n"));
    const int samples = static_cast<int>(run.i("probe.samples"));
    if (!run.cfg.explicitly_set("model.s")) {
        const double th = bourgain::to_double(bourgain::critical_exponents(alpha, n).s_alpha_n);
        run.cfg.set_real("model.s", th + 0.1);
    }
    const double s = run.r("model.s");
    auto opts = probe_options(run);
    std::optional<int> a1;
    if (run.cfg.explicitly_set("model.alpha1")) a1 = static_cast<int>(run.i("model.alpha1"));
    const auto rep = bourgain::multilinear_ratio_probe(alpha, n, s, samples, opts, a1);
    auto scaled = opts;
    scaled.scale = 1024.0;
    const auto rep2 = bourgain::multilinear_ratio_probe(alpha, n, s, std::min(samples, 4), scaled, a1);
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < rep.main.ratios.size(); ++k)
        rows.push_back({double(k), rep.main.ratios[k], rep.main.refined_ratios[k], rep.contrast.ratios[k],
                        rep.contrast.refined_ratios[k]});
    run.out.write("ratios.csv", csv({"sample", "main", "main_refined", "contrast", "contrast_refined"}, rows));
    run.out.write("histogram.gp", histogram_gp("ratios.csv", "multilinear ratios", 2));
    const double defect = scale_defect(rep.main.ratios, rep2.main.ratios);
    run.results = {{"alpha", rep.alpha},         {"n", rep.n},
                   {"alpha1", rep.alpha1},       {"alpha2", rep.alpha2},
                   {"s", rep.s},                 {"b", rep.b},
                   {"s_threshold", rep.s_threshold}, {"s_contrast", rep.s_contrast},
                   {"main", stats_json(rep.main)}, {"contrast", stats_json(rep.contrast)},
                   {"scale_defect", defect}};
    check_stats(run, "main", rep.main);
    run.check("scale_defect", defect, "<", 1e-12);
}

void run_probe_sums(Run& run) {
    bourgain::SumParams p;
    p.gamma = run.r("sums.gamma");
    p.lambda_max = run.r("sums.lambda_max");
    p.lambda_step = run.r("sums.lambda_step");
    p.k_max = static_cast<long>(run.i("sums.k_max"));
    p.s = run.r("model.s");
    p.delta = run.r("model.delta");
    p.k = run.r("sums.k");
    p.n = static_cast<int>(run.i("lattice.n"));
    p.p_max = static_cast<int>(run.i("sums.p_max"));
    p.q_max = static_cast<int>(run.i("sums.q_max"));
    p.sigma = run.r("sums.sigma");
    p.n_max = static_cast<int>(run.i("sums.n_max"));
    p.m_max = static_cast<long>(run.i("sums.m_max"));
    const std::string which = run.t("sums.sum");
    const auto kind = which == "resonance" ? bourgain::SumKind::Resonance
                      : which == "moment"  ? bourgain::SumKind::Moment
                      : which == "shifted" ? bourgain::SumKind::Shifted
                                           : throw ConfigError("sums.sum must be resonance, moment or shifted");
    const auto rep = bourgain::lattice_sum_probe(kind, p);
    std::vector<std::vector<double>> rows;
    for (const auto& [x, y] : rep.curve) rows.push_back({x, y});
    run.out.write("curve.csv", csv({"parameter", "normalized_sum"}, rows));
    run.out.write("curve.gp", "set datafile separator \",\"\nset xlabel \"parameter\"\nset ylabel \"normalized sum\"\n"
                              "plot \"curve.csv\" using 1:2 with linespoints notitle\n");
    run.results = {{"sum", rep.kind},
                   {"constant", rep.constant},
                   {"constant_half", rep.constant_half},
                   {"truncation_delta", rep.truncation_delta},
                   {"bound_ok", rep.bound_ok}};
    run.check("bound_ok", rep.bound_ok ? 1.0 : 0.0, ">=", 1.0);
}

void run_identity_multiplier(Run& run) {
    const auto L = lattice(run, Basis::Sine);
    const int n = L->dim();
    const double T = run.r("model.T"), delta = run.r("model.delta");
    const int samples = static_cast<int>(run.i("probe.samples"));
    const std::string field = run.t("probe.field");
    const auto q = field == "convex"   ? dirichlet::convex_multiplier(n, delta)
                   : field == "linear" ? dirichlet::linear_multiplier(n)
                                       : throw ConfigError("probe.field must be convex or linear");
    std::vector<std::vector<double>> rows;
    double worst = 0.0, worst_ratio = std::numeric_limits<double>::infinity();
    for (int j = 0; j < samples; ++j) {
        const auto v0 = random_data(L, run.rng, run.r("control.decay"), 1.0, 0.0);
        const double res = dirichlet::multiplier_identity_residual(v0, q, T);
        dirichlet::MultiplierOptions coarse, fine;
        coarse.time_nodes = fine.time_nodes = 8;
        coarse.time_panels = 4;
        fine.time_panels = 8;
        const double rc = dirichlet::multiplier_identity_residual(v0, q, T, coarse);
        const double rf = dirichlet::multiplier_identity_residual(v0, q, T, fine);
        rows.push_back({double(j), res, rc, rf});
        worst = std::max(worst, res);
        worst_ratio = std::min(worst_ratio, rc / rf);
    }
    run.out.write("residuals.csv", csv({"sample", "residual", "coarse", "fine"}, rows));
    run.results = {{"field", field}, {"max_residual", worst}, {"min_refinement_ratio", worst_ratio}};
    run.check("max_residual", worst, "<", run.r("tolerance.identity"));
    run.check("min_refinement_ratio", worst_ratio, ">=", 2.0);
    if (field == "convex" && n >= 2) {
        const auto cert = dirichlet::convexity_certificate(n, delta, 10000, run.cfg.seed());
        json cj = {{"samples", cert.samples}, {"min_margin", cert.min_margin}, {"min_hessian", cert.min_hessian},
                   {"holds", cert.holds}, {"delta", delta}};
        run.out.write_json("certificate.json", cj);
        run.results["certificate"] = cj;
        run.check("certificate.min_hessian", cert.min_hessian, ">", 0.0);
        run.check("certificate.holds", cert.holds ? 1.0 : 0.0, ">=", 1.0);
    }
}

std::vector<ExperimentDef> build() {
    const std::vector<std::string> nl{"model.lambda", "model.alpha1", "model.alpha2"};
    const std::vector<std::string> prof{"control.a_profile", "control.a_width", "control.a_height", "control.a_modes"};
    const std::vector<std::string> probe{"lattice.n",          "lattice.N",           "lattice.M",   "model.s",
                                         "model.b",            "model.T",             "probe.samples",
                                         "probe.sigma_max",    "probe.decay",         "probe.window_order",
                                         "tolerance.stability"};
    auto cat = [](std::vector<std::vector<std::string>> parts) {
        std::vector<std::string> out;
        for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
        return out;
    };
    const std::string two_pi = format_real(2.0 * kPi);
    return {
        {"exponents", "critical exponents and the exponent plan for (alpha, n)", {"model.alpha", "lattice.n"},
         {{"lattice.n", "3"}}, run_exponents},
        {"table1", "the threshold table for the four reference (alpha, n) pairs", {}, {}, run_table1},
        {"simulate", "free, nonlinear or damped evolution of random data",
         cat({{"lattice.n", "lattice.N", "model.s", "model.T", "model.delta", "model.frames", "control.decay",
               "tolerance.replay"},
              nl, prof}),
         {{"control.a_profile", "none"}, {"model.delta", "0.1"}, {"lattice.N", "8"}}, run_simulate},
        {"control-internal", "linear internal control by the Gramian method",
         cat({{"lattice.n", "lattice.N", "model.s", "model.T", "control.decay", "tolerance.residual",
               "tolerance.replay"},
              prof}),
         {}, run_control_internal},
        {"control-dirichlet", "linear Dirichlet boundary control through the moment operator",
         {"lattice.n", "lattice.N", "model.s", "model.T", "model.epsilon", "model.order", "control.faces",
          "control.decay", "tolerance.residual", "tolerance.replay"},
         {{"control.decay", "3"}}, run_control_dirichlet},
        {"control-neumann", "linear Neumann control from a side face",
         {"lattice.n", "lattice.N", "model.s", "model.T", "control.face", "control.decay", "tolerance.residual",
          "tolerance.replay"},
         {{"model.T", two_pi}, {"lattice.N", "8"}}, run_control_neumann},
        {"control-nonlinear", "nonlinear exact control by Picard iteration",
         cat({{"lattice.n", "lattice.N", "model.s", "model.b", "model.T", "model.delta", "model.epsilon",
               "model.order", "model.frames", "control.bc", "control.mode", "control.faces", "control.decay",
               "tolerance.residual", "tolerance.replay", "tolerance.contraction"},
              nl, prof}),
         {{"model.s", "0.6"}, {"tolerance.residual", "1e-7"}, {"control.decay", "3"}}, run_control_nonlinear},
        {"stabilize", "internal damping: linear decay fit and windowed nonlinear decay",
         cat({{"lattice.n", "lattice.N", "model.s", "model.delta", "model.tmax", "control.decay", "tolerance.rate",
               "tolerance.contraction"},
              nl, prof}),
         {{"control.a_width", "4"}, {"model.delta", "0.01"}}, run_stabilize},
        {"probe-xsb", "Bourgain-norm ratio probes of the linear, damped and bilinear estimates",
         cat({probe, {"probe.kind", "probe.b_prime"}, prof}), {{"lattice.N", "8"}}, run_probe_xsb},
        {"probe-multilinear", "multilinear estimate ratios above and below the threshold",
         cat({probe, {"model.alpha", "model.alpha1"}}), {{"lattice.N", "8"}, {"lattice.n", "1"}, {"probe.samples", "16"}},
         run_probe_multilinear},
        {"probe-claims", "truncated lattice sums and their bound shapes",
         {"sums.sum", "sums.gamma", "sums.lambda_max", "sums.lambda_step", "sums.k_max", "model.s",
          "model.delta", "sums.k", "lattice.n", "sums.p_max", "sums.q_max", "sums.sigma", "sums.n_max",
          "sums.m_max"},
         {{"model.s", "-1"}, {"model.delta", "0.4"}, {"lattice.n", "2"}}, run_probe_sums},
        {"identity-multiplier", "multiplier identity residuals and the convexity certificate",
         {"lattice.n", "lattice.N", "model.T", "model.delta", "probe.samples", "probe.field", "control.decay",
          "tolerance.identity"},
         {{"lattice.n", "2"}, {"lattice.N", "8"}, {"model.delta", format_real(0.9 * 6.0 / 13.0)},
          {"probe.samples", "10"}, {"control.decay", "3"}},
         run_identity_multiplier},
    };
}

}  // namespace

const std::vector<ExperimentDef>& experiments() {
    static const std::vector<ExperimentDef> defs = build();
    return defs;
}

const ExperimentDef& experiment(const std::string& name) {
    for (const auto& d : experiments())
        if (d.name == name) return d;
    throw ConfigError("unknown experiment kind '" + name + "'");
}

}  // namespace schrolab::cli
