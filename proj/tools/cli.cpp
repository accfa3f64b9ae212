#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"
#include "nonlocal/ball_kernels.hpp"
#include "nonlocal/errors.hpp"
#include "nonlocal/estimates.hpp"
#include "nonlocal/mc.hpp"
#include "nonlocal/potentials.hpp"
#include "nonlocal/quadrature.hpp"
#include "nonlocal/solver.hpp"
#include "nonlocal/trace.hpp"

namespace nonlocal::cli {

namespace {

constexpr double kPi = std::numbers::pi;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

// Where a command sends its tables.
struct Run {
    std::string command;
    json config;
    std::string hash;
    std::ostream& out;
    std::string out_path;
    std::string json_path;
    std::string trace_path;
};

void write_table(const Run& r, const Table& t, const std::string& path, std::ostream& fallback) {
    if (path.empty()) {
        t.write_csv(fallback, r.command, r.hash);
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open output file " + path);
    t.write_csv(f, r.command, r.hash);
}

void emit(const Run& r, const Table& t, const json& meta = json::object()) {
    write_table(r, t, r.out_path, r.out);
    if (r.json_path.empty()) return;
    std::ofstream f(r.json_path, std::ios::binary);
    if (!f) throw ConfigError("cannot open output file " + r.json_path);
    json doc = {{"version", version()}, {"command", r.command}, {"config_hash", r.hash}, {"config", r.config},
                {"table", t.to_json()}, {"meta", meta}};
    f << doc.dump(2) << "\n";
}

Point point(const json& j) { return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()}; }

StableModel model_of(const json& c) { return StableModel::make(c["alpha"].get<double>(), c["dim"].get<int>()); }

BallDomain ball_of(const json& c) {
    const double R = c["radius"].get<double>();
    if (!(R > 0.0)) throw ConfigError("radius must be positive");
    return BallDomain{{0.0, 0.0, 0.0}, R, c["dim"].get<int>()};
}

void check_plane(const BallDomain& b, const Point& p, const std::string& what) {
    if (b.dim == 2 && p[2] != 0.0) throw ConfigError(what + ": points in two dimensions need a zero third coordinate");
}

std::vector<double> numbers(const json& j) { return j.get<std::vector<double>>(); }

std::vector<Field> model_fields() {
    return {{"alpha", "number", 1.0, "stability index in (0, 2)", {}},
            {"dim", "integer", 3, "space dimension, 2 or 3", {}},
            {"radius", "number", 1.0, "ball radius", {}}};
}

Schema make_schema(std::string name, std::string doc, std::vector<Field> extra, bool with_model = true,
                   std::vector<std::string> required = {}) {
    Schema s{std::move(name), std::move(doc), {}, std::move(required)};
    if (with_model) s.fields = model_fields();
    for (auto& f : extra) s.fields.push_back(std::move(f));
    s.fields.push_back({"output_path", "string", "", "CSV output file; empty for stdout", {}});
    return s;
}

// ---------------------------------------------------------------- kernel eval

void run_kernel_eval(const Run& r) {
    const auto& c = r.config;
    const auto m = model_of(c);
    const auto b = ball_of(c);
    const Point x = point(c["x"]), y = point(c["y"]);
    check_plane(b, x, "x");
    check_plane(b, y, "y");
    const std::string k = c["kernel"];
    double v = 0.0;
    if (k == "green") v = green(m, b, x, y);
    else if (k == "poisson") v = poisson(m, b, x, y);
    else if (k == "martin") v = martin(m, b, x, y);
    else if (k == "modified_martin") v = modified_martin(m, b, x, y);
    else if (k == "killing") v = killing(m, b, x);
    else if (k == "exit_time") v = expected_exit_time(m, b, x);
    else if (k == "martin_sigma") v = martin_sigma(m, b, x);
    else v = levy_density(m, distance(x, y));
    Table t({"kernel", "alpha", "dim", "radius", "x0", "x1", "x2", "y0", "y1", "y2", "value"});
    t.add({k, m.alpha, (long long)m.dim, b.radius, x[0], x[1], x[2], y[0], y[1], y[2], v});
    emit(r, t);
}

// ---------------------------------------------------------------- audit

void run_audit(const Run& r) {
    const auto& c = r.config;
    const auto m = model_of(c);
    const auto b = ball_of(c);
    std::vector<EstimateKind> kinds;
    for (const auto& s : c["kind"]) {
        if (s == "all") {
            kinds = {EstimateKind::green,   EstimateKind::poisson,       EstimateKind::martin,
                     EstimateKind::killing, EstimateKind::mdsigma,       EstimateKind::green_profile,
                     EstimateKind::poisson_profile};
            break;
        }
        kinds.push_back(*estimate_kind_from_string(s.get<std::string>()));
    }
    GridSpec g;
    g.points = c["points"].get<int>();
    g.delta_floor = c["delta_floor"].get<double>();
    g.coarse_floor = c["coarse_floor"].get<double>();
    g.profile_beta = c["profile_beta"].get<double>();
    Table t({"kind", "alpha", "dim", "delta_floor", "ratio_min", "ratio_max", "samples", "coarse_floor",
             "coarse_min", "coarse_max", "change", "passes"});
    json meta = json::array();
    for (auto k : kinds) {
        auto rep = audit_kernel_estimate(m, b, k, g);
        t.add({std::string(to_string(k)), m.alpha, (long long)m.dim, g.delta_floor, rep.ratio_min, rep.ratio_max,
               (long long)rep.samples, g.coarse_floor, rep.coarse_min, rep.coarse_max, rep.change, rep.passes});
        meta.push_back({{"kind", to_string(k)}, {"grid", rep.grid_spec}});
    }
    emit(r, t, meta);
}

// ---------------------------------------------------------------- profile

void run_profile(const Run& r) {
    const auto& c = r.config;
    const auto m = model_of(c);
    const auto b = ball_of(c);
    const std::string kind = c["kind"];
    const auto betas = numbers(c["betas"]);
    if (kind == "regimes") {
        Table t({"beta", "regime", "slope", "predicted_slope", "rms_power_neg_beta", "rms_power_half", "rms_log"});
        for (double beta : betas) {
            auto f = poisson_regime_fit(m, b, beta, c["delta_lo"].get<double>(), c["delta_hi"].get<double>());
            t.add({beta, f.regime, f.slope, f.predicted_slope, f.rms_power_neg_beta, f.rms_power_half, f.rms_log});
        }
        emit(r, t);
        return;
    }
    Table t({"kind", "beta", "delta", "direct", "profile", "ratio", "status"});
    for (double beta : betas) {
        for (double del : numbers(c["deltas"])) {
            if (!(del > 0.0 && del < b.radius)) throw ConfigError("profile: deltas must lie in (0, radius)");
            const Point x = b.along(b.radius - del);
            double direct = kNaN, prof = kNaN;
            std::string status = "ok";
            try {
                if (kind == "green") {
                    direct = green_potential(m, b, ScalarField::delta_power(b, 1.0, beta), x);
                    prof = green_profile(m, b, ProfileSpec::power(beta), x).total();
                } else {
                    direct = poisson_potential(m, b, ExteriorDensity::power(beta), x);
                    prof = poisson_profile(m, b, ProfileSpec::power(beta), x).value;
                }
            } catch (const DivergenceError&) {
                status = "divergent";
            }
            t.add({kind, beta, del, direct, prof, direct / prof, status});
        }
    }
    emit(r, t);
}

// ---------------------------------------------------------------- kato

void run_kato(const Run& r) {
    const auto& c = r.config;
    const auto m = model_of(c);
    const auto b = ball_of(c);
    const double beta = c["beta"];
    auto rep = kato_check(m, b, ScalarField::delta_power(b, 1.0, beta), numbers(c["eps"]), c["points"].get<int>());
    Table t({"beta", "eps", "local_mass", "passes", "divergent", "slope"});
    for (const auto& [e, v] : rep.epsilon_profile) t.add({beta, e, v, rep.passes, rep.divergent, rep.limit_estimate});
    emit(r, t, {{"note", rep.note}});
}

// ---------------------------------------------------------------- criteria

std::vector<Criterion> all_criteria() {
    return {Criterion::w_kato,          Criterion::integral,       Criterion::exterior,
            Criterion::poisson_dominated, Criterion::green_dominated, Criterion::U_for_V_over_t,
            Criterion::U_for_exterior};
}

SignClass sign_of(const std::string& s) {
    if (s == "nonpositive") return SignClass::nonpositive;
    if (s == "general") return SignClass::general;
    return SignClass::nonnegative;
}

void run_criteria(const Run& r) {
    const auto& c = r.config;
    std::vector<Criterion> which;
    for (const auto& s : c["criteria"]) {
        if (s == "all") {
            which = all_criteria();
            break;
        }
        which.push_back(*criterion_from_string(s.get<std::string>()));
    }
    std::vector<std::optional<double>> ext;
    for (double e : numbers(c["exterior_beta"])) ext.emplace_back(e);
    if (ext.empty()) ext.emplace_back(std::nullopt);
    Table t({"alpha", "W_beta", "Lambda_p", "exterior_beta", "criterion", "result", "margin", "method", "note"});
    for (double a : numbers(c["alpha"]))
        for (double b1 : numbers(c["W_beta"]))
            for (double p : numbers(c["Lambda_p"]))
                for (const auto& e : ext) {
                    ProblemSpec ps;
                    ps.alpha = a;
                    ps.dim = c["dim"];
                    ps.radius = c["radius"];
                    ps.sign = sign_of(c["sign"]);
                    ps.W = ProfileSpec::power(b1);
                    ps.Lambda = Nonlinearity::power(p, c["Lambda_coef"].get<double>());
                    if (e) ps.exterior = ExteriorDensity::power(*e);
                    if (c["boundary_h"].get<double>() > 0.0) ps.boundary = BoundaryDensity::uniform(c["boundary_h"]);
                    const auto m = StableModel::make(a, ps.dim);
                    for (auto w : which) {
                        auto rep = integral_criterion(m, ps, w, c["quadrature"].get<bool>());
                        t.add({a, b1, p, e ? *e : kNaN, std::string(to_string(w)),
                               std::string(rep.finite ? "finite" : "infinite"),
                               rep.exponent_margin ? *rep.exponent_margin : kNaN, rep.method, rep.note});
                    }
                }
    emit(r, t);
}

// ---------------------------------------------------------------- solve

SolveOptions solve_options(const json& c) {
    SolveOptions o;
    o.n_radial = c["n_radial"];
    o.delta_min = c["delta_min"];
    o.tol = c["tol"];
    o.k_max = c["k_max"];
    return o;
}

void run_solve(const Run& r) {
    const auto& c = r.config;
    auto p = ProblemSpec::from_json(c["problem"]);
    const auto m = p.model();
    const auto b = p.ball();
    auto opt = solve_options(c);
    json meta = json::object();
    const std::string method = c["method"];
    SupersolutionFit fit;
    bool have_fit = false;
    if (method == "monotone" || !c["m_over_m1"].is_null()) {
        try {
            fit = supersolution_fit(m, b, p, opt);
            have_fit = true;
            meta["fit"] = {{"c1", fit.c1}, {"c2", fit.c2}, {"c4", fit.c4}, {"m1", fit.m1},
                           {"shape", fit.boundary_case ? "V(delta)/delta" : "exterior profile"}};
        } catch (const PreconditionError&) {
            if (method == "monotone") throw;
        }
    }
    if (!c["m_over_m1"].is_null()) {
        if (!have_fit) throw PreconditionError("solve: m_over_m1 needs a supersolution certificate");
        p.m = c["m_over_m1"].get<double>() * fit.m1;
    }
    meta["m"] = p.m;
    Table trace({"k", "sup_diff", "monotone", "dominated"});
    opt.on_step = [&](int k, double diff, bool mono, bool dom) { trace.add({(long long)k, diff, mono, dom}); };
    Solution sol;
    try {
        if (method == "monotone") {
            sol = monotone_solve(m, b, p, opt);
        } else {
            PicardInfo info;
            sol = picard_solve(m, b, p, opt, c["start"] == "upper" ? PicardStart::upper : PicardStart::zero, &info);
            meta["picard"] = {{"C", info.C}, {"r1", info.r1}, {"r2", info.r2}};
        }
    } catch (...) {
        write_table(r, trace, r.trace_path, r.out);
        throw;
    }
    if (!r.trace_path.empty()) write_table(r, trace, r.trace_path, r.out);
    meta["converged"] = sol.trace.converged;
    meta["iterations"] = sol.trace.k_final;
    meta["monotone"] = sol.trace.monotone_flag;
    meta["dominated"] = sol.trace.dominated_flag;
    if (c["weak_dual"].get<bool>()) meta["weak_dual_residuals"] = verify_weak_dual(m, b, sol.u, p, default_bumps(b));
    Table t({"r", "delta", "u", "u0"});
    const auto dels = sol.grid.deltas();
    for (std::size_t i = 0; i < dels.size(); ++i)
        t.add({sol.grid.radii[i], dels[i], sol.trace.final_nodes[i], sol.u0_nodes[i]});
    emit(r, t, meta);
}

// ---------------------------------------------------------------- threshold-scan

void run_threshold(const Run& r) {
    const auto& c = r.config;
    const double b1 = c["W_beta"];
    Table t({"alpha", "p", "p_star", "margin", "exponent_finite", "quadrature_finite", "nonexistence_divergent",
             "growth_rate"});
    for (double a : numbers(c["alphas"])) {
        const double ps = (1.0 + a / 2.0 - b1) / (1.0 - a / 2.0);
        for (double off : numbers(c["offsets"])) {
            ProblemSpec p;
            p.alpha = a;
            p.dim = c["dim"];
            p.radius = c["radius"];
            p.sign = SignClass::nonpositive;
            p.W = ProfileSpec::power(b1);
            p.Lambda = Nonlinearity::power(ps + off);
            p.boundary = BoundaryDensity::uniform(1.0);
            const auto m = p.model();
            auto ex = integral_criterion(m, p, Criterion::integral);
            auto qu = integral_criterion(m, p, Criterion::integral, true);
            bool div = false;
            double rate = kNaN;
            if (c["nonexistence"].get<bool>()) {
                auto n = nonexistence_diagnostic(m, p.ball(), p, p.ball().along(p.radius));
                div = n.divergent;
                rate = n.growth_rate;
            }
            t.add({a, ps + off, ps, ex.exponent_margin ? *ex.exponent_margin : kNaN, ex.finite, qu.finite, div, rate});
        }
    }
    emit(r, t);
}

// ---------------------------------------------------------------- trace

ScalarField trace_field(const json& c, const StableModel& m, const BallDomain& b, TraceOptions& o) {
    const std::string u = c["u"];
    if (u == "martin_sigma")
        return ScalarField::radial(b, [m, b](double s) { return martin_sigma(m, b, b.along(s)); }, "MDsigma");
    if (u == "exit_time")
        return ScalarField::radial(b, [m, b](double s) { return expected_exit_time(m, b, b.along(s)); }, "GD1");
    if (u == "poisson_power") {
        const auto g = ExteriorDensity::power(c["beta"].get<double>());
        return ScalarField::radial(b, [m, b, g](double s) { return poisson_potential(m, b, g, b.along(s)); },
                                   "PDlambda");
    }
    if (u == "martin_point") {
        const Point z = point(c["z"]);
        if (!b.on_sphere(z)) throw ConfigError("trace: z must lie on the sphere");
        o.axis = z - b.center;
        return ScalarField::general(b, [m, b, z](const Point& x) { return martin(m, b, x, z); }, "M(.,z)");
    }
    if (c["problem"].is_null()) throw ConfigError("trace: u = solution needs a problem");
    auto p = ProblemSpec::from_json(c["problem"]);
    if (p.alpha != m.alpha || p.dim != m.dim || p.radius != b.radius)
        throw ConfigError("trace: problem alpha, dim and radius must match the trace settings");
    return monotone_solve(m, b, p).u;
}

void run_trace(const Run& r) {
    const auto& c = r.config;
    const auto m = model_of(c);
    const auto b = ball_of(c);
    TraceOptions o;
    o.max_order = c["max_order"];
    o.rel_tol = c["rel_tol"];
    if (o.max_order < 0 || o.max_order > 4) throw ConfigError("trace: max_order must lie in 0..4");
    const auto u = trace_field(c, m, b, o);
    auto est = trace_sequence(m, b, u, c["k_max"].get<int>(), o);
    std::vector<std::string> cols{"k", "radius", "mass"};
    for (int l = 0; l <= o.max_order; ++l) cols.push_back("moment_" + std::to_string(l));
    Table t(cols);
    for (const auto& lv : est.levels) {
        std::vector<Cell> row{(long long)lv.k, lv.radius, lv.mass};
        for (int l = 0; l <= o.max_order; ++l) row.push_back(lv.moments[l]);
        t.add(row);
    }
    emit(r, t, {{"converged", est.converged}, {"limit_mass", est.limit_mass}});
}

// ---------------------------------------------------------------- dv

void run_dv(const Run& r) {
    const auto& c = r.config;
    const auto m = model_of(c);
    const auto b = ball_of(c);
    const Point z = point(c["z"]);
    check_plane(b, z, "z");
    if (!b.on_sphere(z)) throw ConfigError("dv: z must lie on the sphere");
    std::vector<Bump> bumps;
    if (c["bumps"].is_null()) {
        bumps = default_bumps(b);
        bumps.resize(3);
    } else {
        for (const auto& e : c["bumps"]) bumps.push_back({e["center"].get<double>(), e["width"].get<double>()});
    }
    Table t({"center", "width", "dv_limit", "kernel_integral", "rel_diff"});
    for (const auto& bp : bumps) {
        if (!(bp.width > 0.0)) throw ConfigError("dv: bump width must be positive");
        const auto psi = ScalarField::radial(b, [bp](double s) { return bp(s); }, "bump");
        const double lim = normal_derivative_dV(m, b, psi, z);
        const double ker = dV_kernel_integral(m, b, psi, z);
        t.add({bp.center, bp.width, lim, ker, std::abs(lim - ker) / std::abs(ker)});
    }
    emit(r, t);
}

// ---------------------------------------------------------------- mc

void run_mc(const Run& r) {
    const auto& c = r.config;
    const auto m = model_of(c);
    const auto b = ball_of(c);
    WoSConfig w;
    if (c["samples"].get<long long>() < 1) throw ConfigError("mc: samples must be at least 1");
    if (c["max_steps"].get<long long>() < 1) throw ConfigError("mc: max_steps must be at least 1");
    w.samples = c["samples"].get<std::uint64_t>();
    w.max_steps = c["max_steps"].get<std::uint64_t>();
    w.seed = c["seed"].get<std::uint64_t>();
    w.confidence = c["confidence"];
    const double beta = c["beta"], fc = c["f_const"];
    const auto g = ExteriorDensity::power(beta);
    Table t({"kind", "x0", "x1", "x2", "mean", "std_error", "ci_low", "ci_high", "quadrature", "z_score",
             "truncated_fraction", "median_steps"});
    for (const auto& k : c["kind"]) {
        for (const auto& pj : c["points"]) {
            const Point x = point(pj);
            check_plane(b, x, "points");
            MCEstimate e;
            double ref = 0.0;
            if (k == "green") {
                e = wos_green(m, b, ScalarField::constant(fc), x, w);
                ref = fc * expected_exit_time(m, b, x);
            } else {
                e = wos_poisson(m, b, g, x, w);
                ref = poisson_potential(m, b, g, x);
            }
            const double z = e.std_error > 0.0 ? (e.mean - ref) / e.std_error : (e.mean == ref ? 0.0 : kNaN);
            t.add({k.get<std::string>(), x[0], x[1], x[2], e.mean, e.std_error, e.ci_low, e.ci_high, ref, z,
                   e.truncated_fraction, e.median_steps});
        }
    }
    emit(r, t);
}

// ---------------------------------------------------------------- regress

struct Golden {
    std::string name;
    std::function<double()> compute;
    double expected;
    double tol;  // on |computed - expected| / max(|expected|, 1)
};

std::vector<Golden> golden_values() {
    const auto m31 = StableModel::make(1.0, 3);
    const auto b3 = BallDomain::unit(3);
    const Point o{0.0, 0.0, 0.0};
    std::vector<Golden> g;
    g.push_back({"green_center_half", [=] { return green(m31, b3, o, {0.5, 0.0, 0.0}); },
                 std::sqrt(3.0) / (kPi * kPi), 1e-10});
    g.push_back({"killing_center", [=] { return killing(m31, b3, o); }, 4.0 / kPi, 1e-6});
    g.push_back({"poisson_center_two", [=] { return poisson(m31, b3, o, {2.0, 0.0, 0.0}); },
                 1.0 / (16.0 * std::sqrt(3.0) * kPi * kPi), 1e-12});
    g.push_back({"martin_sigma_center", [=] { return martin_sigma(m31, b3, o); }, 4.0 * kPi, 1e-10});
    g.push_back({"martin_potential_uniform",
                 [=] { return martin_potential(m31, b3, BoundaryDensity::uniform(1.0), {0.5, 0.0, 0.0}); },
                 martin_sigma(m31, b3, {0.5, 0.0, 0.0}), 1e-7});
    g.push_back({"poisson_normalization",
                 [=] { return poisson_potential(m31, b3, ExteriorDensity::power(0.0), {0.9, 0.0, 0.0}); }, 1.0, 1e-8});
    g.push_back({"exit_time_by_quadrature",
                 [=] { return green_potential(m31, b3, ScalarField::constant(1.0), {0.3, 0.4, 0.0}); },
                 expected_exit_time(m31, b3, {0.3, 0.4, 0.0}), 1e-7});
    g.push_back({"integral_identity_a1_b2_d3",
                 [] {
                     QuadratureOptions q;
                     q.rel_tol = 1e-13;
                     return integrate([](double s) { return s / std::pow(2.0 + s, 3); }, {0.0, 1.0}, q).value;
                 },
                 std::pow(3.0, -2.0) / 4.0, 1e-10});
    g.push_back({"threshold_margin_alpha1_p3",
                 [] {
                     ProblemSpec p;
                     p.W = ProfileSpec::power(0.0);
                     p.Lambda = Nonlinearity::power(3.0);
                     return *integral_criterion(p.model(), p, Criterion::integral).exponent_margin;
                 },
                 0.0, 1e-15});
    g.push_back({"exit_law_survival_rho2", [=] { return ExitRadiusTable::get(m31).survival(2.0); }, 1.0 / 3.0, 1e-6});
    g.push_back({"wos_poisson_unit_data",
                 [=] {
                     WoSConfig w;
                     w.samples = 1000;
                     return wos_poisson(m31, b3, ExteriorDensity::power(0.0), {0.3, 0.0, 0.0}, w).mean;
                 },
                 1.0, 0.0});
    g.push_back({"trace_mass_martin_sigma_k4",
                 [=] {
                     auto u = ScalarField::radial(b3, [=](double s) { return martin_sigma(m31, b3, {s, 0.0, 0.0}); },
                                                  "MDsigma");
                     return trace_measure(m31, b3, u, 4).mass;
                 },
                 4.0 * kPi, 1e-4});
    return g;
}

void run_regress(const Run& r, int& status) {
    const std::string filter = r.config["filter"];
    const double scale = r.config["tolerance_scale"];
    Table t({"name", "computed", "expected", "error", "tolerance", "pass"});
    bool ok = true;
    for (const auto& g : golden_values()) {
        if (!filter.empty() && g.name.find(filter) == std::string::npos) continue;
        const double v = g.compute();
        const double err = std::abs(v - g.expected) / std::max(std::abs(g.expected), 1.0);
        const bool pass = err <= g.tol * scale;
        ok = ok && pass;
        t.add({g.name, v, g.expected, err, g.tol * scale, pass});
    }
    emit(r, t);
    if (!ok) status = kRegressionMismatch;
}

// ---------------------------------------------------------------- table of commands

struct Command {
    Schema schema;
    std::function<void(const Run&, int&)> run;
    std::string path;  // subcommand path, e.g. "kernel eval"
};

std::vector<Command> build_commands() {
    auto simple = [](void (*f)(const Run&)) { return [f](const Run& r, int&) { f(r); }; };
    std::vector<Command> cmds;
    cmds.push_back({make_schema("kernel_eval", "Pointwise kernel values.",
                                {{"kernel", "string", "green", "kernel name",
                                  {"green", "poisson", "martin", "modified_martin", "killing", "exit_time",
                                   "martin_sigma", "levy"}},
                                 {"x", "point", json::array({0.0, 0.0, 0.0}), "first point (inside the ball)", {}},
                                 {"y", "point", json::array({0.5, 0.0, 0.0}),
                                  "second point: y for green and levy, z on or outside the sphere otherwise", {}}}),
                    simple(run_kernel_eval), "kernel eval"});
    cmds.push_back({make_schema("audit", "Ratio of kernels to their two-sided estimates over a boundary-refined grid.",
                                {{"kind", "string_list", json::array({"all"}), "estimate kinds or all",
                                  {"all", "green", "poisson", "martin", "killing", "mdsigma", "green_profile",
                                   "poisson_profile"}},
                                 {"points", "integer", 1000, "grid points per floor", {}},
                                 {"delta_floor", "number", 1e-3, "fine distance floor", {}},
                                 {"coarse_floor", "number", 1e-2, "coarse distance floor", {}},
                                 {"profile_beta", "number", 0.5, "exponent for the profile kinds", {}}}),
                    simple(run_audit), "audit"});
    cmds.push_back({make_schema("profile", "Potentials of power profiles against their profile formulas, or the "
                                           "boundary regimes of Poisson potentials.",
                                {{"kind", "string", "green", "green, poisson or regimes", {"green", "poisson", "regimes"}},
                                 {"betas", "number_list", json::array({-0.25, 0.0, 0.25}), "exponents beta of t^-beta", {}},
                                 {"deltas", "number_list", json::array({1e-1, 1e-2, 1e-3}), "boundary distances", {}},
                                 {"delta_lo", "number", 1e-5, "regimes: smallest relative distance", {}},
                                 {"delta_hi", "number", 1e-2, "regimes: largest relative distance", {}}}),
                    simple(run_profile), "profile"});
    cmds.push_back({make_schema("kato", "Kato-class certificate for q = delta^-beta.",
                                {{"beta", "number", 0.5, "exponent of q", {}},
                                 {"eps", "number_list", json::array({0.2, 0.1, 0.05, 0.02, 0.01}), "radii", {}},
                                 {"points", "integer", 200, "sample points", {}}}),
                    simple(run_kato), "kato"});
    cmds.push_back({make_schema("criteria", "Existence criteria over a sweep of power data.",
                                {{"alpha", "number_list", json::array({1.0}), "stability indices", {}},
                                 {"dim", "integer", 3, "space dimension, 2 or 3", {}},
                                 {"radius", "number", 1.0, "ball radius", {}},
                                 {"W_beta", "number_list", json::array({0.0}), "W(t) = t^-W_beta", {}},
                                 {"Lambda_p", "number_list", json::array({1.0}), "Lambda(t) = coef t^p", {}},
                                 {"Lambda_coef", "number", 1.0, "coefficient of Lambda", {}},
                                 {"exterior_beta", "number_list", json::array(), "exterior density t^-beta; empty for none", {}},
                                 {"boundary_h", "number", 1.0, "uniform boundary density; 0 for none", {}},
                                 {"sign", "string", "nonnegative", "sign class of f", {"nonnegative", "nonpositive", "general"}},
                                 {"criteria", "string_list", json::array({"all"}), "criteria to evaluate",
                                  {"all", "w_kato", "integral", "exterior", "poisson_dominated", "green_dominated",
                                   "U_for_V_over_t", "U_for_exterior"}},
                                 {"quadrature", "boolean", false, "force the quadrature route", {}}},
                                false),
                    simple(run_criteria), "criteria"});
    cmds.push_back({make_schema("solve", "Monotone or Picard iteration for a radial problem.",
                                {{"problem", "object", nullptr, "problem document", {}},
                                 {"method", "string", "monotone", "iteration", {"monotone", "picard"}},
                                 {"start", "string", "zero", "Picard start", {"zero", "upper"}},
                                 {"m_over_m1", "number", nullptr, "set m to this multiple of the certified m1", {}},
                                 {"n_radial", "integer", 64, "radial nodes", {}},
                                 {"delta_min", "number", 1e-6, "smallest relative boundary distance", {}},
                                 {"tol", "number", 1e-4, "stopping tolerance relative to sup u0", {}},
                                 {"k_max", "integer", 200, "iteration cap", {}},
                                 {"weak_dual", "boolean", true, "report weak-dual residuals on bump tests", {}}},
                                false, {"problem"}),
                    simple(run_solve), "solve"});
    cmds.push_back({make_schema("threshold_scan", "Existence flip of f = -t^p around the critical exponent.",
                                {{"alphas", "number_list", json::array({0.5, 1.0, 1.5}), "stability indices", {}},
                                 {"dim", "integer", 3, "space dimension, 2 or 3", {}},
                                 {"radius", "number", 1.0, "ball radius", {}},
                                 {"W_beta", "number", 0.0, "W(t) = t^-W_beta", {}},
                                 {"offsets", "number_list", json::array({-0.1, -0.01, 0.0, 0.1}), "p - p*", {}},
                                 {"nonexistence", "boolean", true, "run the boundary divergence diagnostic", {}}},
                                false),
                    simple(run_threshold), "threshold-scan"});
    cmds.push_back({make_schema("trace", "Boundary trace masses and angular moments over an exhaustion.",
                                {{"u", "string", "martin_sigma", "function whose trace is taken",
                                  {"martin_sigma", "exit_time", "poisson_power", "martin_point", "solution"}},
                                 {"beta", "number", 0.0, "poisson_power: exterior density t^-beta", {}},
                                 {"z", "point", json::array({0.0, 0.0, 1.0}), "martin_point: pole on the sphere", {}},
                                 {"problem", "object", nullptr, "solution: problem document", {}},
                                 {"k_max", "integer", 8, "levels k = 1..k_max", {}},
                                 {"max_order", "integer", 4, "highest angular moment (0..4)", {}},
                                 {"rel_tol", "number", 1e-6, "quadrature tolerance", {}}}),
                    simple(run_trace), "trace"});
    cmds.push_back({make_schema("dv", "Normal derivatives d/dV of Green potentials of radial bumps.",
                                {{"z", "point", json::array({1.0, 0.0, 0.0}), "boundary point", {}},
                                 {"bumps", "bump_list", nullptr, "bumps {center, width}; default three shells", {}}}),
                    simple(run_dv), "dv"});
    cmds.push_back({make_schema("mc", "Walk-on-spheres estimates against quadrature.",
                                {{"kind", "string_list", json::array({"green", "poisson"}), "estimators",
                                  {"green", "poisson"}},
                                 {"points", "point_list", json::array({json::array({0.0, 0.0, 0.0}),
                                                                       json::array({0.5, 0.0, 0.0}),
                                                                       json::array({0.0, 0.8, 0.0})}),
                                  "start points", {}},
                                 {"samples", "integer", 100000, "paths per point", {}},
                                 {"seed", "integer", 1, "seed", {}},
                                 {"max_steps", "integer", 10000, "step cap per path", {}},
                                 {"confidence", "number", 0.95, "confidence level of the intervals", {}},
                                 {"beta", "number", 0.125, "poisson: exterior density t^-beta", {}},
                                 {"f_const", "number", 1.0, "green: constant density", {}}}),
                    simple(run_mc), "mc"});
    cmds.push_back({make_schema("regress", "Golden-value regression suite.",
                                {{"filter", "string", "", "substring of test names to run", {}},
                                 {"tolerance_scale", "number", 1.0, "multiplies every tolerance", {}}},
                                false),
                    run_regress, "regress"});
    return cmds;
}

const std::vector<Command>& commands() {
    static const std::vector<Command> c = build_commands();
    return c;
}

std::string dashed(std::string s) {
    std::replace(s.begin(), s.end(), '_', '-');
    return s;
}

json load_config(const Schema& s, const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError(s.command + ": cannot read config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    const std::string text = ss.str();
    if (text.find_first_not_of(" \t\r\n") == std::string::npos)
        throw ConfigError(s.command + ": config file " + path + " is empty\n" + s.diagnostics());
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(s.command + ": config file " + path + " is not valid JSON: " + e.what());
    }
    if (j.is_object() && j.empty())
        throw ConfigError(s.command + ": config file " + path + " is empty\n" + s.diagnostics());
    return j;
}

struct Bound {
    const Command* cmd;
    CLI::App* app;
    std::string config_path, json_path, trace_path;
    std::map<std::string, std::string> flags;
};

int exit_for(const std::exception& e, std::ostream& err) {
    if (auto d = dynamic_cast<const DivergenceError*>(&e)) {
        err << "divergence";
        if (!d->criterion().empty()) err << " (" << d->criterion() << ")";
        err << ": " << e.what() << "\n";
        return kDivergence;
    }
    if (dynamic_cast<const PreconditionError*>(&e)) {
        err << "divergence (criterion not satisfied): " << e.what() << "\n";
        return kDivergence;
    }
    if (auto c = dynamic_cast<const ConvergenceError*>(&e)) {
        err << "no convergence after " << c->iterations() << " iterations (last difference "
            << format_double(c->last_diff()) << "): " << e.what() << "\n";
        return kNonConvergence;
    }
    if (dynamic_cast<const ContractionFailure*>(&e) || dynamic_cast<const SupersolutionBreach*>(&e) ||
        dynamic_cast<const LimitFailure*>(&e) || dynamic_cast<const BiasError*>(&e) ||
        dynamic_cast<const BudgetError*>(&e)) {
        err << "no convergence: " << e.what() << "\n";
        return kNonConvergence;
    }
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DomainError*>(&e) ||
        dynamic_cast<const json::exception*>(&e)) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    }
    err << "error: " << e.what() << "\n";
    return kInternalError;
}

}  // namespace

const std::vector<Schema>& schemas() {
    static const std::vector<Schema> s = [] {
        std::vector<Schema> v;
        for (const auto& c : commands()) v.push_back(c.schema);
        return v;
    }();
    return s;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Nonlocal semilinear Dirichlet problems on balls: kernels, estimates, solvers, traces and "
                 "Monte Carlo checks.",
                 "nonlocal"};
    app.set_version_flag("--version", version());
    app.require_subcommand(1);
    std::vector<std::unique_ptr<Bound>> bound;
    CLI::App* kernel = app.add_subcommand("kernel", "Kernel evaluation");
    kernel->require_subcommand(1);
    for (const auto& c : commands()) {
        auto b = std::make_unique<Bound>();
        b->cmd = &c;
        CLI::App* parent = &app;
        std::string name = c.path;
        if (c.path.rfind("kernel ", 0) == 0) {
            parent = kernel;
            name = c.path.substr(7);
        }
        b->app = parent->add_subcommand(name, c.schema.doc);
        b->app->add_option("--config", b->config_path, "JSON config file");
        b->app->add_option("--json", b->json_path, "JSON output file");
        if (c.path == "solve") b->app->add_option("--trace-out", b->trace_path, "iteration trace CSV file");
        for (const auto& f : c.schema.fields)
            if (f.type != "object" && f.type != "bump_list" && f.type != "point_list")
                b->app->add_option("--" + dashed(f.name) + (f.name == "output_path" ? ",--out" : ""), b->flags[f.name],
                                   f.doc + " [" + f.type + "]");
        bound.push_back(std::move(b));
    }
    std::string schema_name, schema_dir;
    CLI::App* schema_cmd = app.add_subcommand("schema", "Print the JSON schema of a command config");
    schema_cmd->add_option("name", schema_name, "command (audit, kernel_eval, ...)");
    schema_cmd->add_option("--write-dir", schema_dir, "write every schema into this directory");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << version() << "\n";
        return kOk;
    } catch (const CLI::ParseError& e) {
        for (const auto& b : bound)
            if (b->app->parsed() && e.get_name() == "CallForHelp") {
                out << b->app->help();
                return kOk;
            }
        err << "usage error: " << e.what() << "\n";
        return kConfigError;
    }

    if (schema_cmd->parsed()) {
        if (!schema_dir.empty()) {
            std::filesystem::create_directories(schema_dir);
            for (const auto& s : schemas()) {
                std::ofstream f(std::filesystem::path(schema_dir) / (s.command + ".schema.json"));
                f << s.json_schema().dump(2) << "\n";
            }
            return kOk;
        }
        for (const auto& s : schemas())
            if (s.command == schema_name || dashed(s.command) == schema_name) {
                out << s.json_schema().dump(2) << "\n";
                return kOk;
            }
        err << "config error: unknown command '" << schema_name << "'\n";
        return kConfigError;
    }

    for (const auto& b : bound) {
        if (!b->app->parsed()) continue;
        const Schema& s = b->cmd->schema;
        json cfg;
        try {
            json raw = b->config_path.empty() ? json::object() : load_config(s, b->config_path);
            if (!raw.is_object()) throw ConfigError(s.command + ": config must be a JSON object\n" + s.diagnostics());
            for (const auto& f : s.fields) {
                auto opt = b->app->get_option_no_throw("--" + dashed(f.name));
                if (opt && opt->count() > 0) raw[f.name] = parse_flag(f, b->flags[f.name]);
            }
            cfg = validate(s, raw);
        } catch (const ConfigError& e) {
            err << "config error: " << e.what() << "\n";
            return kConfigError;
        }
        Run r{s.command, cfg, config_hash(s.command, cfg), out, cfg["output_path"], b->json_path, b->trace_path};
        int status = kOk;
        try {
            b->cmd->run(r, status);
        } catch (const std::exception& e) {
            return exit_for(e, err);
        }
        return status;
    }
    err << "usage error: no command given\n";
    return kConfigError;
}

}  // namespace nonlocal::cli
