#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "nonlocal/ball_kernels.hpp"
#include "nonlocal/errors.hpp"
#include "nonlocal/quadrature.hpp"
#include "oracles.hpp"

using namespace nonlocal;
using doctest::Approx;

namespace {
const double pi = std::numbers::pi;

Point random_inside(std::mt19937_64& g, const BallDomain& b) {
    std::normal_distribution<double> n;
    std::uniform_real_distribution<double> u;
    Point p{n(g), n(g), b.dim == 3 ? n(g) : 0.0};
    const double r = b.radius * std::pow(u(g), 1.0 / b.dim) * 0.999;
    return b.center + (r / norm(p)) * p;
}

double green_oracle(const StableModel& m, const BallDomain& b, const Point& x, const Point& y) {
    const double R = b.radius, rx = b.radial(x), ry = b.radial(y), w = distance(x, y);
    const double r0 = (R * R - rx * rx) * (R * R - ry * ry) / (R * R * w * w);
    return m.green_const * std::pow(w, m.alpha - m.dim) * oracle::green_integral(m.alpha, m.dim, r0);
}
}  // namespace

TEST_CASE("green closed-form value") {
    auto m = StableModel::make(1.0, 3);
    auto b = BallDomain::unit(3);
    const double g = green(m, b, {0, 0, 0}, {0.5, 0, 0});
    CHECK(g == Approx(std::sqrt(3.0) / (pi * pi)).epsilon(1e-12));
    CHECK(green_oracle(m, b, {0, 0, 0}, {0.5, 0, 0}) == Approx(std::sqrt(3.0) / (pi * pi)).epsilon(1e-10));
}

TEST_CASE("green matches the quadrature oracle and is symmetric") {
    std::mt19937_64 gen(7);
    for (double a : {0.5, 1.0, 1.5})
        for (int d : {2, 3}) {
            auto m = StableModel::make(a, d);
            BallDomain b{{0.1, -0.2, d == 3 ? 0.3 : 0.0}, 1.7, d};
            for (int i = 0; i < 25; ++i) {
                const Point x = random_inside(gen, b), y = random_inside(gen, b);
                const double g = green(m, b, x, y);
                CHECK(g == Approx(green(m, b, y, x)).epsilon(1e-12));
                CHECK(g == Approx(green_oracle(m, b, x, y)).epsilon(1e-9));
                CHECK(g > 0);
            }
            // Nearly coincident points exercise the complementary branch.
            const Point x = b.center + Point{0.3, 0.1, 0};
            const Point y = x + Point{1e-5, 0, 0};
            CHECK(green(m, b, x, y) == Approx(green_oracle(m, b, x, y)).epsilon(1e-8));
        }
    auto m = StableModel::make(1.0, 3);
    auto b = BallDomain::unit(3);
    CHECK(green(m, b, {0, 0, 0}, {1.5, 0, 0}) == 0.0);
    CHECK(green(m, b, {0, 0, 0}, {1.0, 0, 0}) == 0.0);
    CHECK_THROWS_AS(green(m, b, {0.2, 0, 0}, {0.2, 0, 0}), SingularityError);
}

TEST_CASE("poisson kernel value, normalization and blow-up") {
    auto m = StableModel::make(1.0, 3);
    auto b = BallDomain::unit(3);
    CHECK(poisson(m, b, {0, 0, 0}, {2, 0, 0}) == Approx(1.0 / (16 * std::sqrt(3.0) * pi * pi)).epsilon(1e-12));
    for (double a : {0.5, 1.5})
        for (int d : {2, 3}) {
            auto md = StableModel::make(a, d);
            auto bd = BallDomain::unit(d);
            const Point x{0.6, 0, 0};
            auto r = integrate_exterior([&](const Point& z) { return poisson(md, bd, x, z); }, bd, d + a, 1e-7,
                                        {Symmetry::axial, {1, 0, 0}}, 1'000'000, a / 2);
            CHECK(r.value == Approx(1.0).epsilon(1e-4));
        }
    const Point x{0.3, 0.2, 0}, z0{0, 0, 1};
    const double base = poisson(m, b, x, 2.0 * z0);
    for (double e : {1e-3, 1e-4, 1e-5}) CHECK(poisson(m, b, x, (1 + e) * z0) >= std::pow(e, -0.5) * base * 0.1);
    CHECK_THROWS_AS(poisson(m, b, x, z0), BoundaryBlowupError);
    CHECK_THROWS_AS(poisson(m, b, x, {0.5, 0, 0}), DomainError);
}

TEST_CASE("martin kernel") {
    auto m = StableModel::make(1.0, 3);
    auto b = BallDomain::unit(3);
    for (double th : {0.0, 0.7, 2.0, 3.1}) CHECK(martin(m, b, {0, 0, 0}, planar_direction(th)) == Approx(1.0));
    const Point x{0.2, 0.5, -0.1};
    for (double th : {0.3, 1.2, 2.5}) {
        const Point z = planar_direction(th);
        const Point y = (1 - 1e-4) * z;
        const double fd = green(m, b, x, y) / green(m, b, {0, 0, 0}, y);
        CHECK(std::abs(fd / martin(m, b, x, z) - 1) < 1e-2);
        const double shape = martin(m, b, x, z) * std::pow(distance(x, z), 3) / std::pow(1 - dot(x, x), 0.5);
        CHECK(shape == Approx(1.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(martin(m, b, x, {0.9, 0, 0}), DomainError);
    CHECK_THROWS_AS(martin(m, b, {1, 0, 0}, {0, 1, 0}), DomainError);
}

TEST_CASE("modified martin kernel") {
    for (double a : {0.5, 1.0, 1.5})
        for (int d : {2, 3}) {
            auto m = StableModel::make(a, d);
            BallDomain b{{0, 0, 0}, 1.3, d};
            const Point x{0.2, 0.5, 0};
            const double k0 = modified_martin(m, b, {0, 0, 0}, 1.3 * planar_direction(0.1));
            for (double th : {0.3, 1.2, 2.5}) {
                const Point z = 1.3 * planar_direction(th);
                CHECK(modified_martin(m, b, x, z) / modified_martin(m, b, {0, 0, 0}, z) ==
                      Approx(martin(m, b, x, z)).epsilon(1e-12));
                CHECK(modified_martin(m, b, {0, 0, 0}, z) == Approx(k0).epsilon(1e-12));
                const Point y = (1 - 1e-4) * z;
                const double fd = green(m, b, x, y) / renewal_eval(m, b.delta(y));
                CHECK(std::abs(fd / modified_martin(m, b, x, z) - 1) < 1e-2);
            }
        }
}

TEST_CASE("killing function") {
    auto m = StableModel::make(1.0, 3);
    auto b = BallDomain::unit(3);
    CHECK(killing(m, b, {0, 0, 0}) == Approx(4 / pi).epsilon(1e-12));
    for (double a : {0.5, 1.0, 1.5})
        for (int d : {2, 3}) {
            auto md = StableModel::make(a, d);
            auto bd = BallDomain::unit(d);
            for (double r : {0.0, 0.5, 0.9, 0.99}) {
                const Point x{r, 0, 0};
                auto ref = integrate_exterior([&](const Point& y) { return levy_density(md, distance(x, y)); }, bd,
                                              d + a, 1e-9, {Symmetry::axial, {1, 0, 0}});
                CHECK(killing(md, bd, x) == Approx(ref.value).epsilon(1e-6));
                CHECK(killing(md, bd, x) == Approx(killing(md, bd, {0, r, 0})).epsilon(1e-12));
            }
            double lo = INFINITY, hi = 0;
            for (double del = 1e-3; del <= 1.0; del *= 1.5) {
                const double v = renewal_eval(md, del);
                const double q = killing(md, bd, {1 - del, 0, 0}) * v * v;
                lo = std::min(lo, q);
                hi = std::max(hi, q);
            }
            CHECK(hi / lo < 20);
        }
    CHECK_THROWS_AS(killing(m, b, {1, 0, 0}), DomainError);
}

TEST_CASE("sphere averages and closed-form potentials") {
    for (double a : {0.5, 1.0, 1.5})
        for (int d : {2, 3}) {
            auto m = StableModel::make(a, d);
            BallDomain b{{0, 0, 0}, 1.2, d};
            for (auto [r, s] : {std::pair{0.3, 0.8}, {0.9, 0.2}, {1.1, 1.15}, {0.0, 0.5}}) {
                const Point x{r, 0, 0};
                BallDomain sph{{0, 0, 0}, s, d};
                auto ref = integrate_sphere([&](const Point& y) { return green(m, b, x, y); }, sph, 1e-10,
                                            {Symmetry::axial, {1, 0, 0}}, Point{s, 0, 0}, std::abs(r - s) / s);
                CHECK(green_sphere_average(m, b, r, s) * std::pow(s, d - 1) == Approx(ref.value).epsilon(1e-7));
            }
            for (double r : {0.0, 0.4, 1.1}) {
                const Point x{r, 0, 0};
                SingularitySpec sg{x, double(d) - a, SingularityKind::interior_point};
                auto g1 = integrate_ball([&](const Point& y) { return y == x ? 0.0 : green(m, b, x, y); }, b, sg,
                                         1e-8, {Symmetry::axial, {1, 0, 0}});
                CHECK(expected_exit_time(m, b, x) == Approx(g1.value).epsilon(1e-6));
                auto ms = integrate_sphere([&](const Point& z) { return martin(m, b, x, z); }, b, 1e-10,
                                           {Symmetry::axial, {1, 0, 0}}, Point{1.2, 0, 0}, b.delta(x));
                CHECK(martin_sigma(m, b, x) == Approx(ms.value).epsilon(1e-8));
            }
        }
    auto m = StableModel::make(1.0, 3);
    CHECK(expected_exit_time(m, BallDomain::unit(3), {0, 0, 0}) == Approx(0.5).epsilon(1e-14));
}

#include <boost/math/special_functions/beta.hpp>

TEST_CASE("incomplete Green integral agrees with the library incomplete beta") {
    for (double a : {0.3, 0.5, 1.0, 1.5, 1.9})
        for (int d : {2, 3}) {
            auto m = StableModel::make(a, d);
            for (double r0 = 1e-12; r0 < 1e14; r0 *= 3.7) {
                const double x = r0 / (1 + r0);
                const double ref = r0 < 1 ? boost::math::beta(a / 2, (d - a) / 2, x)
                                          : boost::math::beta(a / 2, (d - a) / 2) -
                                                boost::math::beta((d - a) / 2, a / 2, 1 / (1 + r0));
                CHECK(green_incomplete_integral(m, r0) == Approx(ref).epsilon(1e-13));
            }
        }
}
