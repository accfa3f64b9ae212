#include <cmath>

#include "doctest.h"
#include "nonlocal/errors.hpp"
#include "nonlocal/estimates.hpp"
#include "nonlocal/field.hpp"
#include "nonlocal/potentials.hpp"

using namespace nonlocal;

namespace {

const StableModel m31 = StableModel::make(1.0, 3);
const BallDomain unit3 = BallDomain::unit(3);

Point at_delta(double del) { return {1.0 - del, 0.0, 0.0}; }

}  // namespace

TEST_CASE("U conditions by exponent arithmetic") {
    auto c = check_U_conditions(m31, ProfileSpec::power(1.2));
    CHECK(c.integrable);
    CHECK(c.all());
    CHECK_FALSE(check_U_conditions(m31, ProfileSpec::power(1.5)).integrable);
    CHECK(check_U_conditions(m31, ProfileSpec::constant()).all());
}

TEST_CASE("U conditions by sampling agree with exponent arithmetic") {
    for (double beta : {0.0, 0.7, 1.2, 1.6}) {
        auto gen = ProfileSpec::general([beta](double t) { return std::pow(t, -beta); }, "power");
        auto a = check_U_conditions(m31, gen);
        auto e = check_U_conditions(m31, ProfileSpec::power(beta));
        CHECK(a.integrable == e.integrable);
        CHECK(a.almost_nonincreasing == e.almost_nonincreasing);
        CHECK(a.reverse_doubling == e.reverse_doubling);
        CHECK(a.bounded_away == e.bounded_away);
    }
    auto growing = ProfileSpec::general([](double t) { return std::pow(t, 0.5); }, "sqrt");
    CHECK_FALSE(check_U_conditions(m31, growing).almost_nonincreasing);
    auto steps = ProfileSpec::general([](double t) { return t < 0.5 ? 3.0 : 1.0; }, "step");
    CHECK(check_U_conditions(m31, steps).all());
}

TEST_CASE("green profile: constant U behaves like V(delta)") {
    const auto U = ProfileSpec::constant();
    double lo = 1e300, hi = 0.0;
    for (double del : {1e-3, 1e-2, 0.1, 0.5, 1.0}) {
        const double q = green_profile(m31, unit3, U, at_delta(del)).total() / std::sqrt(del);
        lo = std::min(lo, q);
        hi = std::max(hi, q);
    }
    CHECK(hi / lo < 10.0);
}

TEST_CASE("green profile: both terms returned and comparable to direct potential") {
    const auto U = ProfileSpec::power(1.0);
    const auto f = ScalarField::delta_power(unit3, 1.0, 1.0);
    double lo = 1e300, hi = 0.0;
    for (double del : {1e-3, 1e-2, 0.1, 0.5}) {
        auto g = green_profile(m31, unit3, U, at_delta(del));
        CHECK(g.inner > 0.0);
        CHECK(g.outer > 0.0);
        const double q = green_potential(m31, unit3, f, at_delta(del)) / g.total();
        lo = std::min(lo, q);
        hi = std::max(hi, q);
    }
    CHECK(hi / lo < 3.0);
}

TEST_CASE("green profile: closed form terms match quadrature of the general route") {
    const double beta = 0.8;
    auto gen = ProfileSpec::general([beta](double t) { return std::pow(t, -beta); }, "power");
    for (double del : {1e-3, 0.2}) {
        auto a = green_profile(m31, unit3, ProfileSpec::power(beta), at_delta(del));
        auto b = green_profile(m31, unit3, gen, at_delta(del));
        CHECK(b.inner == doctest::Approx(a.inner).epsilon(1e-8));
        CHECK(b.outer == doctest::Approx(a.outer).epsilon(1e-8));
    }
}

TEST_CASE("green profile diverges at beta = 1 + alpha/2") {
    CHECK_THROWS_AS(green_profile(m31, unit3, ProfileSpec::power(1.5), at_delta(0.1)), DivergenceError);
}

TEST_CASE("poisson profile: beta = 1/4 ratio stays in a fixed band") {
    const auto Ut = ProfileSpec::power(0.25);
    const auto g = ExteriorDensity::power(0.25);
    double lo = 1e300, hi = 0.0, bound = 0.0;
    for (double del : {1e-3, 3e-3, 1e-2, 0.03, 0.1, 0.3, 0.5}) {
        auto p = poisson_profile(m31, unit3, Ut, at_delta(del));
        const double P = poisson_potential(m31, unit3, g, at_delta(del));
        lo = std::min(lo, P / p.value);
        hi = std::max(hi, P / p.value);
        bound = std::max(bound, P / p.upper_bound);
    }
    CHECK(hi / lo < 3.0);
    CHECK(bound < 10.0);
}

TEST_CASE("poisson profile window endpoints diverge") {
    CHECK_THROWS_AS(poisson_profile(m31, unit3, ProfileSpec::power(0.5), at_delta(0.1)), DivergenceError);
    CHECK_THROWS_AS(poisson_profile(m31, unit3, ProfileSpec::power(-1.0), at_delta(0.1)), DivergenceError);
    CHECK(poisson_profile_admissible(m31, ProfileSpec::power(0.49)));
}

TEST_CASE("kernel estimate audits pass") {
    for (auto k : {EstimateKind::green, EstimateKind::poisson, EstimateKind::martin, EstimateKind::killing,
                   EstimateKind::mdsigma}) {
        auto rep = audit_kernel_estimate(m31, unit3, k);
        INFO(to_string(k) << " " << rep.ratio_min << " " << rep.ratio_max << " change " << rep.change);
        CHECK(rep.passes);
        CHECK(rep.samples >= 900);
    }
}

TEST_CASE("killing audit in the plane") {
    auto m = StableModel::make(1.5, 2);
    auto rep = audit_kernel_estimate(m, BallDomain::unit(2), EstimateKind::killing);
    CHECK(rep.passes);
}

TEST_CASE("audit rejects bad grids") {
    GridSpec g;
    g.delta_floor = 0.1;
    CHECK_THROWS_AS(audit_kernel_estimate(m31, unit3, EstimateKind::green, g), ConfigError);
}

TEST_CASE("estimate kind names round-trip") {
    for (auto k : {EstimateKind::green, EstimateKind::poisson_profile})
        CHECK(estimate_kind_from_string(to_string(k)) == k);
    CHECK_FALSE(estimate_kind_from_string("nope"));
}

TEST_CASE("region decomposition sums to the truncated potential") {
    const auto U = ProfileSpec::power(0.5);
    const double eta = 2.0 / 40.0;
    for (double del : {1e-3, 0.01, 0.3}) {
        auto parts = region_decomposition(m31, unit3, U, at_delta(del));
        CHECK(parts.near_boundary == (del < eta / 2.0));
        CHECK(parts.parts.size() == (parts.near_boundary ? 5u : 2u));
        const double direct = green_potential_radial(
            m31, unit3, [&](double s) { return 1.0 - s < eta ? U(1.0 - s) : 0.0; }, 1.0 - del);
        CHECK(parts.sum() == doctest::Approx(direct).epsilon(1e-2));
    }
}

TEST_CASE("region decomposition comparabilities") {
    const auto U = ProfileSpec::power(0.5);
    double lo3 = 1e300, hi3 = 0.0, lo2 = 1e300, hi2 = 0.0;
    for (double del : {1e-4, 1e-3, 1e-2, 0.02}) {
        auto p = region_decomposition(m31, unit3, U, at_delta(del)).parts;
        const double r15 = (p[0] + p[4]) / p[2];
        const double anchor = std::sqrt(del) * profile_moment(m31, U, 2.0 / 40.0);
        lo3 = std::min(lo3, r15);
        hi3 = std::max(hi3, r15);
        lo2 = std::min(lo2, p[1] / anchor);
        hi2 = std::max(hi2, p[1] / anchor);
    }
    CHECK(hi3 < 10.0);
    CHECK(hi2 / lo2 < 2.0);
}

TEST_CASE("region decomposition requires conditions (U)") {
    CHECK_THROWS_AS(region_decomposition(m31, unit3, ProfileSpec::power(-0.3), at_delta(0.01)), PreconditionError);
}

TEST_CASE("poisson boundary regimes") {
    for (double a : {0.5, 1.0, 1.5}) {
        const auto m = StableModel::make(a, 3);
        for (double beta : {-0.9 * a, 0.5 * (1.0 - a / 2.0), 0.0}) {
            auto r = poisson_regime_fit(m, unit3, beta);
            CHECK(std::abs(r.slope - r.predicted_slope) < 0.05);
        }
        auto above = poisson_regime_fit(m, unit3, 0.5 * (1.0 - a / 2.0));
        CHECK(above.regime == "neg_beta");
        CHECK(above.rms_power_neg_beta < above.rms_power_half);
        auto crit = poisson_regime_fit(m, unit3, -a / 2.0);
        CHECK(crit.regime == "log");
        CHECK(crit.rms_log < 0.1 * std::min(crit.rms_power_half, crit.rms_power_neg_beta));
    }
    CHECK_THROWS_AS(poisson_regime_fit(m31, unit3, 0.0, 1e-2, 1e-3), ConfigError);
}
