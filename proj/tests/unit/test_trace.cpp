#include <cmath>
#include <numbers>

#include "doctest.h"
#include "nonlocal/ball_kernels.hpp"
#include "nonlocal/errors.hpp"
#include "nonlocal/potentials.hpp"
#include "nonlocal/solver.hpp"
#include "nonlocal/trace.hpp"

using namespace nonlocal;

namespace {

const StableModel m31 = StableModel::make(1.0, 3);
const BallDomain unit3 = BallDomain::unit(3);
constexpr double pi = std::numbers::pi;

ScalarField martin_sigma_field(const StableModel& m, const BallDomain& b) {
    return ScalarField::radial(b, [m, b](double r) { return martin_sigma(m, b, Point{r, 0.0, 0.0}); }, "MDsigma");
}

ScalarField exit_time_field(const StableModel& m, const BallDomain& b) {
    return ScalarField::radial(b, [m, b](double r) { return expected_exit_time(m, b, Point{r, 0.0, 0.0}); }, "GD1");
}

}  // namespace

TEST_CASE("nested projection kernel of order 0 is the Poisson kernel") {
    for (double rho : {0.5, 0.9}) {
        const BallDomain U{{0.0, 0.0, 0.0}, rho, 3};
        for (double s : {rho + 1e-3, rho + 0.05, 0.99})
            CHECK(trace_projection_kernel(m31, rho, 3, 0, s) ==
                  doctest::Approx(poisson(m31, U, U.center, Point{s, 0.0, 0.0})).epsilon(1e-8));
    }
    const auto m2 = StableModel::make(1.5, 2);
    const BallDomain U2{{0.0, 0.0, 0.0}, 0.75, 2};
    CHECK(trace_projection_kernel(m2, 0.75, 2, 0, 0.8) ==
          doctest::Approx(poisson(m2, U2, U2.center, Point{0.8, 0.0, 0.0})).epsilon(1e-7));
}

TEST_CASE("trace of M_D sigma has mass 4 pi at every level") {
    const auto u = martin_sigma_field(m31, unit3);
    for (int k : {1, 4, 8, 10}) CHECK(trace_measure(m31, unit3, u, k).mass == doctest::Approx(4.0 * pi).epsilon(1e-4));
    const auto m = StableModel::make(0.5, 3);
    CHECK(trace_measure(m, unit3, martin_sigma_field(m, unit3), 8).mass == doctest::Approx(4.0 * pi).epsilon(2e-3));
}

TEST_CASE("trace of G_D 1 equals the exit time gap and vanishes") {
    const auto u = exit_time_field(m31, unit3);
    for (int k : {1, 5, 9}) {
        const double rho = 1.0 - std::ldexp(1.0, -k);
        CHECK(trace_measure(m31, unit3, u, k).mass ==
              doctest::Approx(m31.exit_time_const * (1.0 - rho)).epsilon(1e-6));
    }
}

TEST_CASE("trace of P_D lambda decays") {
    const auto lam = ExteriorDensity::power(0.0);
    const auto u = ScalarField::radial(
        unit3, [&](double r) { return poisson_potential(m31, unit3, lam, Point{r, 0.0, 0.0}); }, "PDlambda");
    double prev = 1e300;
    for (int k : {2, 4, 6, 8}) {
        const double mass = trace_measure(m31, unit3, u, k).mass;
        CHECK(mass < prev);
        prev = mass;
    }
    CHECK(prev < 0.02 * 4.0 * pi);
}

TEST_CASE("trace is linear") {
    const auto a = martin_sigma_field(m31, unit3), b = exit_time_field(m31, unit3);
    const auto c = ScalarField::radial(
        unit3, [&](double r) { return 2.0 * a.at_radius(r) + 3.0 * b.at_radius(r); }, "combo");
    for (int k : {3, 7}) {
        const double lhs = trace_measure(m31, unit3, c, k).mass;
        const double rhs = 2.0 * trace_measure(m31, unit3, a, k).mass + 3.0 * trace_measure(m31, unit3, b, k).mass;
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
    }
}

TEST_CASE("trace sequence certificate") {
    auto est = trace_sequence(m31, unit3, martin_sigma_field(m31, unit3), 8);
    CHECK(est.levels.size() == 8u);
    CHECK(est.converged);
    CHECK(est.limit_mass == doctest::Approx(4.0 * pi).epsilon(1e-3));
}

TEST_CASE("angular moments: radial fields are flat, a Martin kernel concentrates") {
    auto flat = trace_measure(m31, unit3, martin_sigma_field(m31, unit3), 4);
    for (int l = 1; l <= 4; ++l) CHECK(flat.moments[l] == 0.0);

    const Point z0{0.0, 0.0, 1.0};
    const auto u = ScalarField::general(unit3, [z0](const Point& x) { return martin(m31, unit3, x, z0); }, "M");
    TraceOptions o;
    o.axis = z0;
    o.rel_tol = 1e-4;
    auto lo = trace_measure(m31, unit3, u, 2, o), hi = trace_measure(m31, unit3, u, 6, o);
    // The trace of M_D(., z0) is the unit mass at z0, where every P_l equals 1.
    CHECK(lo.mass == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(hi.mass == doctest::Approx(1.0).epsilon(1e-4));
    for (int l = 1; l <= 4; ++l) {
        CHECK(hi.moments[l] > lo.moments[l]);
        CHECK(hi.moments[l] < 1.0);
    }
    CHECK(hi.moments[1] > 0.9);
    o.axis = Point{1.0, 0.0, 0.0};
    CHECK_THROWS_AS(trace_measure(m31, unit3, u, 2, o), PreconditionError);
}

TEST_CASE("normal derivative matches the modified Martin integral") {
    const Point z{1.0, 0.0, 0.0};
    CHECK(normal_derivative_dV(m31, unit3, ScalarField::zero(), z) == 0.0);
    for (Bump bp : {Bump{0.0, 0.5}, Bump{0.4, 0.2}, Bump{0.6, 0.3}}) {
        const auto psi = ScalarField::radial(unit3, [bp](double r) { return bp(r); }, "bump");
        const double dv = normal_derivative_dV(m31, unit3, psi, z);
        CHECK(dv == doctest::Approx(dV_kernel_integral(m31, unit3, psi, z)).epsilon(1e-2));
        CHECK(dv == doctest::Approx(normal_derivative_dV(m31, unit3, psi, Point{0.0, 0.6, 0.8})).epsilon(1e-6));
    }
    const Bump bp{0.0, 0.5};
    const auto gen = ScalarField::general(unit3, [bp](const Point& p) { return bp(norm(p)); }, "bump");
    const auto rad = ScalarField::radial(unit3, [bp](double r) { return bp(r); }, "bump");
    CHECK(dV_kernel_integral(m31, unit3, gen, Point{0.0, 1.0, 0.0}) ==
          doctest::Approx(dV_kernel_integral(m31, unit3, rad, z)).epsilon(1e-6));
}

TEST_CASE("boundary limit gate") {
    auto ok = boundary_limit([](double e) { return 2.0 + 3.0 * e; });
    CHECK(ok.value == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(ok.cauchy);
    CHECK_THROWS_AS(boundary_limit([](double e) { return std::sin(1.0 / e); }), LimitFailure);
}

TEST_CASE("E_D operator and the trace mass identity") {
    const double K0 = modified_martin(m31, unit3, unit3.center, Point{1.0, 0.0, 0.0});
    auto rep = ed_operator_check(m31, unit3, martin_sigma_field(m31, unit3), {Point{1.0, 0.0, 0.0}, Point{0.0, 0.0, -1.0}});
    for (double e : rep.ed) CHECK(e == doctest::Approx(1.0 / K0).epsilon(1e-6));
    CHECK(rep.mass_from_ed == doctest::Approx(4.0 * pi).epsilon(1e-6));
    CHECK(rep.mass_residual < 0.03);

    auto g = ed_operator_check(m31, unit3, exit_time_field(m31, unit3), {Point{1.0, 0.0, 0.0}});
    CHECK(std::abs(g.ed[0]) < 1e-6);
}

TEST_CASE("K_D sigma is comparable to V(delta)/delta") {
    const double K0 = modified_martin(m31, unit3, unit3.center, Point{1.0, 0.0, 0.0});
    double lo = 1e300, hi = 0.0;
    for (double del = 1e-3; del <= 1.0; del *= 1.5) {
        const double q = K0 * martin_sigma(m31, unit3, Point{1.0 - del, 0.0, 0.0}) * del / std::sqrt(del);
        lo = std::min(lo, q);
        hi = std::max(hi, q);
    }
    CHECK(hi / lo < 10.0);
}
