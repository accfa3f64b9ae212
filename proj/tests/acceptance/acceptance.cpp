// Acceptance run: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nonlocal/ball_kernels.hpp"
#include "nonlocal/errors.hpp"
#include "nonlocal/estimates.hpp"
#include "nonlocal/mc.hpp"
#include "nonlocal/potentials.hpp"
#include "nonlocal/quadrature.hpp"
#include "nonlocal/solver.hpp"
#include "nonlocal/trace.hpp"
#include "../unit/oracles.hpp"

using namespace nonlocal;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    std::string id;
    std::string title;
    double budget_s;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

const StableModel m31 = StableModel::make(1.0, 3);
const BallDomain unit3 = BallDomain::unit(3);

Point at_delta(const BallDomain& b, double del) { return b.along(b.radius - del); }

// ---------------------------------------------------------------- A1

Outcome a1() {
    double worst = 0.0;
    QuadratureOptions q;
    q.rel_tol = 1e-13;
    for (double a : {0.5, 1.0, 2.0, 10.0})
        for (double b : {0.5, 1.0, 2.0, 10.0})
            for (int d : {2, 3}) {
                auto f = [&](double s) { return std::pow(s, d - 2) / std::pow(b + s, d); };
                const double num = integrate(f, 0.0, a, q).value;
                const double exact = std::pow(1.0 + b / a, 1.0 - d) / (b * (d - 1));
                worst = std::max(worst, std::abs(num / exact - 1.0));
            }
    return {worst < 1e-10, "max rel err " + fmt("%.2e", worst)};
}

// ---------------------------------------------------------------- A2

Outcome a2() {
    const Point o{0.0, 0.0, 0.0}, y{0.5, 0.0, 0.0};
    const double r0 = 1.0 * (1.0 - 0.25) / 0.25;
    const double g_oracle = m31.green_const * std::pow(0.5, 1.0 - 3.0) * oracle::green_integral(1.0, 3, r0);
    const double k_oracle = integrate_exterior([&](const Point& z) { return levy_density(m31, norm(z)); }, unit3,
                                               4.0, 1e-10, {Symmetry::radial})
                                .value;
    const double g = green(m31, unit3, o, y), k = killing(m31, unit3, o);
    const double eg = std::max(std::abs(g / (std::sqrt(3.0) / (pi * pi)) - 1), std::abs(g_oracle / g - 1));
    const double ek = std::max(std::abs(k / (4.0 / pi) - 1), std::abs(k_oracle / k - 1));
    return {eg < 1e-6 && ek < 1e-6, "green err " + fmt("%.2e", eg) + ", killing err " + fmt("%.2e", ek)};
}

// ---------------------------------------------------------------- A3

Outcome a3() {
    double worst = 0.0;
    for (double a : {0.5, 1.0, 1.5})
        for (int d : {2, 3}) {
            const auto m = StableModel::make(a, d);
            const auto b = BallDomain::unit(d);
            for (double del : {0.5, 0.1, 0.01}) {
                const Point x = at_delta(b, del);
                auto r = integrate_exterior([&](const Point& z) { return poisson(m, b, x, z); }, b, d + a, 1e-6,
                                            {Symmetry::axial, {1, 0, 0}}, 2'000'000, a / 2);
                worst = std::max(worst, std::abs(r.value - 1.0));
            }
        }
    return {worst < 1e-3, "max |mass - 1| " + fmt("%.2e", worst)};
}

// ---------------------------------------------------------------- A4

Outcome a4() {
    double worst = 0.0;
    int pairs = 0;
    const std::vector<std::pair<double, int>> models{{1.0, 3}, {0.5, 3}, {1.5, 3}, {1.0, 2}};
    for (auto [a, d] : models) {
        const auto m = StableModel::make(a, d);
        const auto b = BallDomain::unit(d);
        const std::vector<std::pair<double, double>> xz{{0.0, 1.5}, {0.4, 1.2}, {-0.3, 2.0}, {0.7, -1.3}, {-0.6, 3.0}};
        for (auto [xr, zr] : xz) {
            const Point x{xr, 0.0, 0.0}, z{zr, 0.0, 0.0};
            std::optional<SingularitySpec> s = SingularitySpec{x, double(d) - a};
            auto r = integrate_ball(
                [&](const Point& y) { return y == x ? 0.0 : green(m, b, x, y) * levy_density(m, distance(y, z)); },
                b, s, 1e-6, {Symmetry::axial, {1, 0, 0}}, 2'000'000);
            worst = std::max(worst, std::abs(r.value / poisson(m, b, x, z) - 1.0));
            ++pairs;
        }
    }
    return {worst < 0.02, std::to_string(pairs) + " pairs, max rel diff " + fmt("%.2e", worst)};
}

// ---------------------------------------------------------------- A5

Outcome a5() {
    bool ok = true;
    std::ostringstream os;
    for (auto k : {EstimateKind::green, EstimateKind::martin, EstimateKind::poisson, EstimateKind::killing,
                   EstimateKind::mdsigma}) {
        auto r = audit_kernel_estimate(m31, unit3, k);
        const bool pass = std::isfinite(r.ratio_min) && std::isfinite(r.ratio_max) && r.ratio_min > 0 &&
                          r.change < 0.2 && r.samples >= 900;
        ok = ok && pass;
        os << to_string(k) << " [" << fmt("%.3g", r.ratio_min) << "," << fmt("%.3g", r.ratio_max) << "] change "
           << fmt("%.3f", r.change) << "; ";
    }
    return {ok, os.str()};
}

// ---------------------------------------------------------------- A6

Outcome a6() {
    double sup = 0.0;
    PotentialOptions o;
    o.rel_tol = 1e-7;
    for (double a : {0.5, 1.0, 1.5})
        for (int d : {2, 3}) {
            const auto m = StableModel::make(a, d);
            const auto b = BallDomain::unit(d);
            auto kap = ScalarField::radial(b, [&](double r) { return killing(m, b, {r, 0, 0}); }, "killing", a);
            for (double r : {0.0, 0.3, 0.6, 0.9, 0.99, 0.999})
                sup = std::max(sup, green_potential(m, b, kap, {r, 0, 0}, o));
        }
    return {sup <= 1.0 + 1e-3, "grid sup " + fmt("%.8f", sup)};
}

// ---------------------------------------------------------------- A7

struct Interval {
    double lo = INFINITY, hi = 0.0;
    void add(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    double change(const Interval& o) const { return std::max(std::abs(lo / o.lo - 1), std::abs(hi / o.hi - 1)); }
};

// Ratio intervals on δ ≥ 1e-3 and on δ ≥ 1e-4; stable when finite, within a factor 10
// and moving less than 20% as the floor drops.
template <class F>
bool stable_ratio(F ratio, std::ostringstream& os, const std::string& label) {
    Interval coarse, fine;
    for (double del = 0.5; del >= 0.99e-4; del /= std::sqrt(10.0)) {
        const double v = ratio(del);
        fine.add(v);
        if (del >= 0.99e-3) coarse.add(v);
    }
    const bool ok = std::isfinite(fine.hi) && fine.lo > 0 && fine.hi / fine.lo < 10 && fine.change(coarse) < 0.2;
    os << label << " [" << fmt("%.3g", fine.lo) << "," << fmt("%.3g", fine.hi) << "]" << (ok ? "" : " unstable")
       << "; ";
    return ok;
}

template <class F>
bool flags_divergence(F f) {
    try {
        f();
    } catch (const DivergenceError&) {
        return true;
    }
    return false;
}

Outcome a7() {
    bool ok = true;
    std::ostringstream os;
    for (double beta : {0.0, 0.5, 1.0, 1.4}) {
        ok = stable_ratio(
                 [&](double del) {
                     const Point x = at_delta(unit3, del);
                     return green_potential(m31, unit3, ScalarField::delta_power(unit3, 1.0, beta), x) /
                            green_profile(m31, unit3, ProfileSpec::power(beta), x).total();
                 },
                 os, "G b=" + fmt("%g", beta)) &&
             ok;
    }
    for (double beta : {-0.75, -0.25, 0.25, 0.45}) {
        ok = stable_ratio(
                 [&](double del) {
                     const Point x = at_delta(unit3, del);
                     return poisson_potential(m31, unit3, ExteriorDensity::power(beta), x) /
                            poisson_profile(m31, unit3, ProfileSpec::power(beta), x).value;
                 },
                 os, "P b=" + fmt("%g", beta)) &&
             ok;
    }
    const Point x = at_delta(unit3, 0.1);
    const bool g_end = flags_divergence([&] { green_profile(m31, unit3, ProfileSpec::power(1.5), x); }) &&
                       flags_divergence([&] {
                           green_potential(m31, unit3, ScalarField::delta_power(unit3, 1.0, 1.5), x);
                       });
    const bool p_end = flags_divergence([&] { poisson_profile(m31, unit3, ProfileSpec::power(0.5), x); }) &&
                       flags_divergence([&] { poisson_potential(m31, unit3, ExteriorDensity::power(0.5), x); }) &&
                       flags_divergence([&] { poisson_profile(m31, unit3, ProfileSpec::power(-1.0), x); });
    os << "endpoints flagged: green " << (g_end ? "yes" : "no") << ", poisson " << (p_end ? "yes" : "no");
    return {ok && g_end && p_end, os.str()};
}

// ---------------------------------------------------------------- A8

// Checked as stated: slope -β below -α/2 and α/2 above it. The measured regimes are the
// other way round, so this criterion is expected to fail; see the README.
Outcome a8() {
    bool ok = true;
    std::ostringstream os;
    for (double a : {0.5, 1.0, 1.5}) {
        const auto m = StableModel::make(a, 3);
        for (double beta : {-0.9 * a, 0.5 * (1.0 - a / 2.0)}) {
            auto f = poisson_regime_fit(m, unit3, beta);
            const double stated = beta < -a / 2 ? -beta : a / 2;
            const bool pass = std::abs(f.slope - stated) < 0.05;
            ok = ok && pass;
            os << "a=" << a << " b=" << fmt("%.3g", beta) << " slope " << fmt("%.3f", f.slope) << " stated "
               << fmt("%.3f", stated) << (pass ? "" : " x") << "; ";
        }
        auto c = poisson_regime_fit(m, unit3, -a / 2);
        const bool log_ok = c.rms_log < std::min(c.rms_power_half, c.rms_power_neg_beta);
        ok = ok && log_ok;
        os << "a=" << a << " log fit " << (log_ok ? "best" : "not best") << "; ";
    }
    return {ok, os.str()};
}

// ---------------------------------------------------------------- A9

Outcome a9() {
    const auto U = ProfileSpec::power(0.5);
    const double eta = 2.0 / 40.0;
    double worst = 0.0;
    for (double del : {1e-4, 1e-3, 1e-2, 0.02}) {
        auto parts = region_decomposition(m31, unit3, U, at_delta(unit3, del), eta);
        const double direct = green_potential_radial(
            m31, unit3, [&](double s) { return 1.0 - s < eta ? U(1.0 - s) : 0.0; }, 1.0 - del);
        worst = std::max(worst, std::abs(parts.sum() / direct - 1.0));
    }
    Interval i2, i15;
    for (double del : {1e-5, 1e-4, 1e-3, 1e-2, 0.02}) {
        auto p = region_decomposition(m31, unit3, U, at_delta(unit3, del), eta).parts;
        i2.add(p[1] / (std::sqrt(del) * profile_moment(m31, U, eta)));
        i15.add((p[0] + p[4]) / p[2]);
    }
    const bool ok = worst < 0.01 && i2.hi / i2.lo < 2.0 && i15.hi < 10.0;
    return {ok, "sum err " + fmt("%.2e", worst) + ", I2 anchor [" + fmt("%.3g", i2.lo) + "," + fmt("%.3g", i2.hi) +
                    "], (I1+I5)/I3 <= " + fmt("%.3g", i15.hi)};
}

// ---------------------------------------------------------------- A10

ProblemSpec threshold_problem(double a, double p) {
    ProblemSpec s;
    s.alpha = a;
    s.sign = SignClass::nonpositive;
    s.boundary = BoundaryDensity::uniform(1.0);
    s.W = ProfileSpec::power(0.0);
    s.Lambda = Nonlinearity::power(p);
    return s;
}

Outcome a10() {
    bool ok = true;
    std::ostringstream os;
    for (auto [a, ps] : {std::pair{0.5, 5.0 / 3.0}, std::pair{1.0, 3.0}, std::pair{1.5, 7.0}}) {
        const auto m = StableModel::make(a, 3);
        bool exact = true, quad = true;
        for (double off : {-1e-9, -0.1, 0.0, 0.1}) {
            auto p = threshold_problem(a, ps + off);
            const bool finite = off < 0;
            exact = exact && integral_criterion(m, p, nonlocal::Criterion::integral).finite == finite;
            if (off != -1e-9)
                quad = quad && integral_criterion(m, p, nonlocal::Criterion::integral, true).finite == finite;
        }
        const Point z{1.0, 0.0, 0.0};
        const bool at = nonexistence_diagnostic(m, unit3, threshold_problem(a, ps), z).divergent;
        const bool above = nonexistence_diagnostic(m, unit3, threshold_problem(a, ps + 0.1), z).divergent;
        const bool below = !nonexistence_diagnostic(m, unit3, threshold_problem(a, ps - 0.1), z).divergent;
        ok = ok && exact && quad && at && above && below;
        os << "p*=" << fmt("%.4g", ps) << (exact ? " exact" : " exact-x") << (quad ? " quad" : " quad-x")
           << (at && above ? " div" : " div-x") << (below ? " conv" : " conv-x") << "; ";
    }
    return {ok, os.str()};
}

// ---------------------------------------------------------------- A11

Outcome a11() {
    ProblemSpec p;
    p.Lambda = Nonlinearity::power(2.0);
    p.boundary = BoundaryDensity::uniform(1.0);
    auto fit = supersolution_fit(m31, unit3, p);
    p.m = fit.m1 / 2.0;
    auto s = monotone_solve(m31, unit3, p);
    double worst = 0.0;
    for (double r : verify_weak_dual(m31, unit3, s.u, p, default_bumps(unit3))) worst = std::max(worst, r);
    const bool ok = s.trace.converged && s.trace.monotone_flag && s.trace.dominated_flag && s.trace.k_final < 100 &&
                    worst < 1e-2;
    return {ok, std::to_string(s.trace.k_final) + " iterations, monotone " + (s.trace.monotone_flag ? "yes" : "no") +
                    ", dominated " + (s.trace.dominated_flag ? "yes" : "no") + ", weak-dual max " +
                    fmt("%.2e", worst)};
}

// ---------------------------------------------------------------- A12

Outcome a12() {
    ProblemSpec p;
    p.sign = SignClass::general;
    p.boundary = BoundaryDensity::uniform(1.0);
    p.Lambda = Nonlinearity::power(1.0);
    p.m = 0.5;
    const SolveOptions o;
    auto lo = picard_solve(m31, unit3, p, o, PicardStart::zero);
    auto hi = picard_solve(m31, unit3, p, o, PicardStart::upper);
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < lo.u0_nodes.size(); ++i) {
        diff = std::max(diff, std::abs(lo.trace.final_nodes[i] - hi.trace.final_nodes[i]));
        scale = std::max(scale, std::abs(lo.u0_nodes[i]));
    }
    const double rel = diff / scale;
    return {rel <= 2.0 * o.tol, "sup diff / sup u0 " + fmt("%.2e", rel) + " vs 2 tol " + fmt("%.0e", 2 * o.tol)};
}

// ---------------------------------------------------------------- A13

Outcome a13() {
    const int k = 8;
    auto ms = ScalarField::radial(unit3, [](double r) { return martin_sigma(m31, unit3, {r, 0, 0}); }, "MDsigma");
    auto g1 = ScalarField::radial(unit3, [](double r) { return expected_exit_time(m31, unit3, {r, 0, 0}); }, "GD1");
    const auto lam = ExteriorDensity::power(0.0);
    auto pl = ScalarField::radial(
        unit3, [&](double r) { return poisson_potential(m31, unit3, lam, {r, 0, 0}); }, "PDlambda");
    const double mm = trace_measure(m31, unit3, ms, k).mass;
    const double mg = trace_measure(m31, unit3, g1, k).mass;
    const double mp = trace_measure(m31, unit3, pl, k).mass;
    const bool ok = std::abs(mm / (4 * pi) - 1) < 0.02 && mg < 0.02 * mm && mp < 0.02 * mm;
    return {ok, "k=8 masses: M_D sigma " + fmt("%.6f", mm) + " (4pi " + fmt("%.6f", 4 * pi) + "), G_D 1 " +
                    fmt("%.3e", mg) + ", P_D lambda " + fmt("%.3e", mp)};
}

// ---------------------------------------------------------------- A14

Outcome a14() {
    const Point z{1.0, 0.0, 0.0};
    double worst = 0.0;
    for (Bump bp : {Bump{0.0, 0.5}, Bump{0.4, 0.2}, Bump{0.6, 0.3}}) {
        const auto psi = ScalarField::radial(unit3, [bp](double r) { return bp(r); }, "bump");
        const double lim = normal_derivative_dV(m31, unit3, psi, z);
        const double ker = dV_kernel_integral(m31, unit3, psi, z);
        worst = std::max(worst, std::abs(lim / ker - 1.0));
    }
    return {worst < 0.01, "max rel diff " + fmt("%.2e", worst)};
}

// ---------------------------------------------------------------- A15

Outcome a15() {
    WoSConfig cfg;
    cfg.samples = 100'000;
    cfg.seed = 2024;
    const double beta = 0.125;
    const auto g = ExteriorDensity::power(beta);
    const auto one = ScalarField::constant(1.0);
    bool ok = true;
    double worst = 0.0;
    for (const Point& x : {Point{0.2, 0.0, 0.0}, Point{0.0, 0.5, 0.0}, Point{0.0, 0.0, -0.8}}) {
        auto eg = wos_green(m31, unit3, one, x, cfg);
        auto ep = wos_poisson(m31, unit3, g, x, cfg);
        const double zg = std::abs(eg.mean - expected_exit_time(m31, unit3, x)) / eg.std_error;
        const double zp = std::abs(ep.mean - poisson_potential(m31, unit3, g, x)) / ep.std_error;
        worst = std::max({worst, zg, zp});
        ok = ok && zg <= 3.0 && zp <= 3.0 && eg.truncated_fraction == 0.0 && ep.truncated_fraction == 0.0;
    }
    WoSConfig small = cfg;
    small.samples = 20'000;
    small.threads = 1;
    auto a = wos_poisson(m31, unit3, g, {0.3, 0.3, 0.0}, small);
    small.threads = 4;
    auto b = wos_poisson(m31, unit3, g, {0.3, 0.3, 0.0}, small);
    const bool repro = a.mean == b.mean && a.std_error == b.std_error;
    return {ok && repro, "max |z| " + fmt("%.2f", worst) + ", reproducible " + (repro ? "yes" : "no")};
}

std::vector<Criterion> criteria() {
    return {{"A1", "integral identity", 1, a1},
            {"A2", "closed-form green and killing values", 10, a2},
            {"A3", "poisson normalization", 120, a3},
            {"A4", "poisson kernel from green and levy density", 300, a4},
            {"A5", "two-sided estimate audits", 600, a5},
            {"A6", "green potential of the killing function", 120, a6},
            {"A7", "green and poisson profiles", 900, a7},
            {"A8", "poisson boundary regimes as stated", 600, a8},
            {"A9", "region decomposition", 600, a9},
            {"A10", "threshold law", 60, a10},
            {"A11", "monotone solver", 600, a11},
            {"A12", "picard from both ends", 300, a12},
            {"A13", "trace identities", 900, a13},
            {"A14", "normal derivative", 300, a14},
            {"A15", "monte carlo agreement", 600, a15}};
}

std::set<std::string> split(const std::string& s) {
    std::set<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.insert(item);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria A1-A15"};
    std::string only, skip;
    app.add_option("--only", only, "comma-separated ids to run");
    app.add_option("--skip", skip, "comma-separated ids to leave out");
    CLI11_PARSE(app, argc, argv);
    const auto want = split(only), drop = split(skip);
    int failed = 0;
    for (const auto& c : criteria()) {
        if ((!want.empty() && !want.count(c.id)) || drop.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs <= c.budget_s;
        const bool pass = o.pass && in_time;
        failed += pass ? 0 : 1;
        std::cout << c.id << " " << (pass ? "PASS" : "FAIL") << "  " << c.title << "  (" << fmt("%.2f", secs)
                  << " s of " << fmt("%g", c.budget_s) << " s" << (in_time ? "" : ", over budget") << ")  "
                  << o.detail << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
