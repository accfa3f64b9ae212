#include <cmath>
#include <numbers>

#include "doctest.h"
#include "nonlocal/ball_kernels.hpp"
#include "nonlocal/errors.hpp"
#include "nonlocal/potentials.hpp"
#include "nonlocal/quadrature.hpp"

using namespace nonlocal;
using doctest::Approx;

namespace {
const double pi = std::numbers::pi;
}

TEST_CASE("Green potential of 1 is the expected exit time") {
    for (double a : {0.5, 1.0, 1.5})
        for (int d : {2, 3}) {
            auto m = StableModel::make(a, d);
            BallDomain b{{0, 0, 0}, 1.5, d};
            auto one = ScalarField::constant(1.0);
            for (double r : {0.0, 0.3, 1.0, 1.45, 1.499}) {
                const Point x{r, 0, 0};
                CHECK(green_potential(m, b, one, x) == Approx(expected_exit_time(m, b, x)).epsilon(1e-6));
            }
            CHECK(green_potential(m, b, ScalarField::zero(), {0.2, 0, 0}) == 0.0);
        }
}

TEST_CASE("Green potential of 1 is comparable to V(δ)") {
    auto m = StableModel::make(1.0, 3);
    auto b = BallDomain::unit(3);
    double lo = INFINITY, hi = 0;
    for (double del = 1e-3; del <= 1.0; del *= 2) {
        const double q = green_potential(m, b, ScalarField::constant(1.0), {1 - del, 0, 0}) / std::sqrt(del);
        lo = std::min(lo, q);
        hi = std::max(hi, q);
    }
    CHECK(hi / lo < 3);
}

TEST_CASE("G_D of the killing function is one") {
    for (double a : {0.5, 1.0, 1.5})
        for (int d : {2, 3}) {
            auto m = StableModel::make(a, d);
            auto b = BallDomain::unit(d);
            auto kap = ScalarField::radial(b, [&](double r) { return killing(m, b, {r, 0, 0}); }, "killing", a);
            PotentialOptions o;
            o.rel_tol = 1e-7;
            for (double r : {0.0, 0.5, 0.99}) {
                const double v = green_potential(m, b, kap, {r, 0, 0}, o);
                CHECK(v <= 1 + 1e-3);
                CHECK(v == Approx(1.0).epsilon(1e-4));
            }
        }
}

TEST_CASE("general and radial Green potential routes agree") {
    auto m = StableModel::make(1.0, 3);
    auto b = BallDomain::unit(3);
    auto rad = ScalarField::radial(b, [](double r) { return 1 + r * r; }, "q");
    auto gen = ScalarField::general(b, [](const Point& y) { return 1 + dot(y, y); }, "q");
    const Point x{0.4, 0.2, 0.1};
    CHECK(green_potential(m, b, gen, x) == Approx(green_potential(m, b, rad, x)).epsilon(1e-5));
    // Linearity.
    auto two = rad.scaled(2.0);
    CHECK(green_potential(m, b, two, x) == Approx(2 * green_potential(m, b, rad, x)).epsilon(1e-10));
}

TEST_CASE("Green potential of a divergent profile") {
    auto m = StableModel::make(1.0, 3);
    auto b = BallDomain::unit(3);
    CHECK_THROWS_AS(green_potential(m, b, ScalarField::delta_power(b, 1.0, 1.5), {0.1, 0, 0}), DivergenceError);
    CHECK_NOTHROW(green_potential(m, b, ScalarField::delta_power(b, 1.0, 1.2), {0.1, 0, 0}));
}

TEST_CASE("Poisson potential") {
    for (double a : {0.5, 1.0, 1.5})
        for (int d : {2, 3}) {
            auto m = StableModel::make(a, d);
            BallDomain b{{0, 0, 0}, 0.8, d};
            // Ũ ≡ 1 integrates the exit law.
            for (double r : {0.0, 0.5, 0.79})
                CHECK(poisson_potential(m, b, ExteriorDensity::power(0.0), {r, 0, 0}) == Approx(1.0).epsilon(1e-7));
            auto ind = ExteriorDensity::indicator(0.3, 0.9);
            const Point x{0.5, 0, 0};
            auto ref = integrate_exterior(
                [&](const Point& z) {
                    const double t = b.delta_ext(z);
                    return t > 0.3 && t < 0.9 ? poisson(m, b, x, z) : 0.0;
                },
                b, d + a, 1e-8, {Symmetry::axial, {1, 0, 0}});
            CHECK(poisson_potential(m, b, ind, x) == Approx(ref.value).epsilon(1e-5));
            CHECK(poisson_potential(m, b, ExteriorDensity::zero(), x) == 0.0);
            CHECK_THROWS_AS(poisson_potential(m, b, ExteriorDensity::power(1 - a / 2), x), DivergenceError);
            CHECK_THROWS_AS(poisson_potential(m, b, ExteriorDensity::power(-a), x), DivergenceError);
            CHECK(exterior_admissible(m, ExteriorDensity::general([](double t) { return std::pow(t, -0.1) / (1 + t); },
                                                                  "g")));
        }
    auto m = StableModel::make(1.0, 3);
    auto b = BallDomain::unit(3);
    double lo1 = INFINITY, hi1 = 0, lo2 = INFINITY, hi2 = 0;
    for (double del = 1e-3; del <= 0.5; del *= 2) {
        const Point x{1 - del, 0, 0};
        const double p1 = poisson_potential(m, b, ExteriorDensity::power(0.25), x) / std::pow(del, -0.25);
        // β = -α/2: the logarithmic regime.
        const double p2 = poisson_potential(m, b, ExteriorDensity::power(-0.5), x) / (std::sqrt(del) * std::log(1 / del));
        lo1 = std::min(lo1, p1);
        hi1 = std::max(hi1, p1);
        lo2 = std::min(lo2, p2);
        hi2 = std::max(hi2, p2);
    }
    CHECK(hi1 / lo1 < 5);
    CHECK(hi2 / lo2 < 5);
}

TEST_CASE("Martin potential") {
    auto m = StableModel::make(1.0, 3);
    auto b = BallDomain::unit(3);
    auto one = BoundaryDensity::uniform(1.0);
    CHECK(martin_potential(m, b, one, {0, 0, 0}) == Approx(4 * pi).epsilon(1e-9));
    for (double a : {0.5, 1.5})
        for (int d : {2, 3}) {
            auto md = StableModel::make(a, d);
            auto bd = BallDomain::unit(d);
            for (double r : {0.2, 0.9, 0.999}) {
                const Point x{0, r, 0};
                CHECK(martin_potential(md, bd, one, x) == Approx(martin_sigma(md, bd, x)).epsilon(1e-8));
            }
        }
    double lo = INFINITY, hi = 0;
    for (double del = 1e-3; del <= 1.0; del *= 2) {
        const double q = martin_potential(m, b, one, {1 - del, 0, 0}) * del / std::sqrt(del);
        lo = std::min(lo, q);
        hi = std::max(hi, q);
    }
    CHECK(hi / lo < 5);
    // Boundary limit for a smooth density, approached off-axis (general route) and on-axis.
    auto h = BoundaryDensity::axial({0, 0, 1}, [](const Point& z) { return 1 + 0.5 * z[2] + z[0] * z[0]; }, "h");
    for (const Point z : {Point{0, 0, 1}, Point{0.6, 0, 0.8}, Point{0, 1, 0}}) {
        const Point x = (1 - 1e-3) * z;
        const double ratio = martin_potential(m, b, h, x) / martin_potential(m, b, one, x);
        CHECK(std::abs(ratio / h(z) - 1) < 2e-2);
    }
}

TEST_CASE("Kato check") {
    auto m = StableModel::make(1.0, 3);
    auto b = BallDomain::unit(3);
    const std::vector<double> eps{1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
    auto bounded = kato_check(m, b, ScalarField::constant(2.0), eps, 40);
    CHECK(bounded.passes);
    CHECK(bounded.limit_estimate == Approx(1.0).epsilon(0.1));
    for (std::size_t i = 1; i < bounded.epsilon_profile.size(); ++i)
        CHECK(bounded.epsilon_profile[i].second >= bounded.epsilon_profile[i - 1].second);
    auto half = kato_check(m, b, ScalarField::delta_power(b, 1.0, 0.5), eps, 40);
    CHECK(half.passes);
    auto bad = kato_check(m, b, ScalarField::delta_power(b, 1.0, 1.2), eps, 40);
    CHECK_FALSE(bad.passes);
    CHECK(bad.divergent);
    // Above α but still locally integrable: m(ε) does not decay.
    auto mid = kato_check(StableModel::make(0.5, 3), b, ScalarField::delta_power(b, 1.0, 0.8), eps, 40);
    CHECK_FALSE(mid.passes);
    CHECK(kato_check(m, b, ScalarField::zero(), eps, 10).passes);
}
