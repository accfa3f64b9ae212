#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "nonlocal/errors.hpp"
#include "nonlocal/geometry.hpp"

namespace nonlocal {

struct QuadratureOptions {
    double rel_tol = 1e-10;
    double abs_tol = 0.0;
    std::size_t max_evaluations = 1'000'000;
    bool throw_on_budget = false;
};

struct QuadratureResult {
    double value = 0.0;
    double abs_error_estimate = 0.0;
    std::size_t evaluations = 0;
    bool converged = true;
};

template <std::size_t N>
struct VectorQuadratureResult {
    std::array<double, N> value{};
    double abs_error_estimate = 0.0;
    std::size_t evaluations = 0;
    bool converged = true;
};

// Cascade summation; the order of the input fixes the result bit for bit.
double pairwise_sum(const double* v, std::size_t n);
inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

namespace detail {

inline constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
inline constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600525478320, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr std::array<double, 5> kWg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

template <std::size_t N>
struct Segment {
    double a, b;
    std::array<double, N> value;
    double err;
};

// One 21-point Kronrod panel with the QUADPACK error heuristic, per component.
template <std::size_t N, class F>
Segment<N> gk21(F& f, double a, double b) {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    std::array<std::array<double, N>, 21> fv;
    fv[0] = f(c);
    for (int j = 0; j < 10; ++j) {
        fv[1 + 2 * j] = f(c - h * kXgk[j]);
        fv[2 + 2 * j] = f(c + h * kXgk[j]);
    }
    Segment<N> s{a, b, {}, 0.0};
    for (std::size_t k = 0; k < N; ++k) {
        double rk = kWgk[10] * fv[0][k], rg = 0.0, rabs = std::abs(rk);
        for (int j = 0; j < 10; ++j) {
            const double f1 = fv[1 + 2 * j][k], f2 = fv[2 + 2 * j][k];
            rk += kWgk[j] * (f1 + f2);
            rabs += kWgk[j] * (std::abs(f1) + std::abs(f2));
            if (j % 2 == 1) rg += kWg[j / 2] * (f1 + f2);
        }
        const double mean = 0.5 * rk;
        double asc = kWgk[10] * std::abs(fv[0][k] - mean);
        for (int j = 0; j < 10; ++j)
            asc += kWgk[j] * (std::abs(fv[1 + 2 * j][k] - mean) + std::abs(fv[2 + 2 * j][k] - mean));
        double err = std::abs((rk - rg) * h);
        asc *= std::abs(h);
        rabs *= std::abs(h);
        if (asc != 0.0 && err != 0.0) err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
        if (rabs > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::max(50.0 * eps * rabs, err);
        if (!std::isfinite(rk)) err = std::numeric_limits<double>::infinity();
        s.value[k] = rk * h;
        s.err = std::max(s.err, err);
    }
    return s;
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod over [p0,p1]∪[p1,p2]∪...; the largest-error
// panel is bisected until the total error meets the tolerance. The state with
// the smallest total error seen is the one reported.
template <std::size_t N, class F>
VectorQuadratureResult<N> integrate_vec(F&& f, const std::vector<double>& points,
                                        const QuadratureOptions& opt = {}) {
    using Seg = detail::Segment<N>;
    auto cmp = [](const Seg& x, const Seg& y) { return x.err < y.err; };
    std::vector<Seg> heap, frozen;
    std::size_t evals = 0;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        if (points[i + 1] == points[i]) continue;
        heap.push_back(detail::gk21<N>(f, points[i], points[i + 1]));
        evals += 21;
    }
    auto totals = [&](std::array<double, N>& v, double& e) {
        std::vector<Seg> all = heap;
        all.insert(all.end(), frozen.begin(), frozen.end());
        std::sort(all.begin(), all.end(), [](const Seg& x, const Seg& y) { return x.a < y.a; });
        std::vector<double> buf(all.size());
        for (std::size_t k = 0; k < N; ++k) {
            for (std::size_t i = 0; i < all.size(); ++i) buf[i] = all[i].value[k];
            v[k] = pairwise_sum(buf);
        }
        for (std::size_t i = 0; i < all.size(); ++i) buf[i] = all[i].err;
        e = pairwise_sum(buf);
    };
    auto target = [&](const std::array<double, N>& v) {
        double mx = 0.0;
        for (double x : v) mx = std::max(mx, std::abs(x));
        return std::max(opt.abs_tol, opt.rel_tol * mx);
    };

    std::make_heap(heap.begin(), heap.end(), cmp);
    VectorQuadratureResult<N> best;
    best.abs_error_estimate = std::numeric_limits<double>::infinity();
    // Running sums for the stopping test; exact totals are recomputed at the end.
    std::array<double, N> run{};
    double run_err = 0.0;
    for (const auto& s : heap) {
        for (std::size_t k = 0; k < N; ++k) run[k] += s.value[k];
        run_err += s.err;
    }
    std::size_t since_refresh = 0;
    bool converged = false;
    while (true) {
        if (run_err <= target(run)) {
            totals(run, run_err);
            if (run_err <= target(run)) { converged = true; break; }
        }
        if (heap.empty() || evals + 42 > opt.max_evaluations) break;
        std::pop_heap(heap.begin(), heap.end(), cmp);
        Seg worst = heap.back();
        heap.pop_back();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b) ||
            std::abs(worst.b - worst.a) < 1e-14 * std::max(std::abs(worst.a), std::abs(worst.b))) {
            frozen.push_back(worst);
            continue;
        }
        Seg l = detail::gk21<N>(f, worst.a, mid), r = detail::gk21<N>(f, mid, worst.b);
        evals += 42;
        for (std::size_t k = 0; k < N; ++k) run[k] += l.value[k] + r.value[k] - worst.value[k];
        run_err += l.err + r.err - worst.err;
        heap.push_back(l);
        std::push_heap(heap.begin(), heap.end(), cmp);
        heap.push_back(r);
        std::push_heap(heap.begin(), heap.end(), cmp);
        if (++since_refresh == 64) {
            since_refresh = 0;
            totals(run, run_err);
            if (run_err < best.abs_error_estimate) {
                best.value = run;
                best.abs_error_estimate = run_err;
            }
        }
    }
    totals(run, run_err);
    VectorQuadratureResult<N> out{run, run_err, evals, converged};
    if (!converged && best.abs_error_estimate < run_err) {
        out.value = best.value;
        out.abs_error_estimate = best.abs_error_estimate;
    }
    if (!converged && opt.throw_on_budget)
        throw BudgetError("quadrature budget exhausted", out.value[0], out.abs_error_estimate);
    return out;
}

template <class F>
QuadratureResult integrate(F&& f, const std::vector<double>& points, const QuadratureOptions& opt = {}) {
    auto g = [&f](double x) { return std::array<double, 1>{f(x)}; };
    auto r = integrate_vec<1>(g, points, opt);
    return {r.value[0], r.abs_error_estimate, r.evaluations, r.converged};
}

template <class F>
QuadratureResult integrate(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
    return integrate(std::forward<F>(f), std::vector<double>{a, b}, opt);
}

// Integral over [a, inf) after the map x = a + (1-t)/t.
template <class F>
QuadratureResult integrate_to_infinity(F&& f, double a, const QuadratureOptions& opt = {}) {
    auto g = [&f, a](double t) {
        if (t <= 0.0) return 0.0;
        const double x = a + (1.0 - t) / t;
        const double v = f(x) / (t * t);
        return std::isfinite(v) ? v : 0.0;
    };
    return integrate(g, 0.0, 1.0, opt);
}

// Integral over (-inf, b].
template <class F>
QuadratureResult integrate_from_minus_infinity(F&& f, double b, const QuadratureOptions& opt = {}) {
    return integrate_to_infinity([&f, b](double y) { return f(2.0 * b - y); }, b, opt);
}

// Geometric breakpoints a + (b-a)(1 - 2^{-k}) accumulating at b, k = 1..levels.
std::vector<double> graded_points(double a, double b, int levels, bool toward_b = true);

enum class SingularityKind { interior_point, boundary_power };

struct SingularitySpec {
    Point location{};
    double exponent = 0.0;
    SingularityKind kind = SingularityKind::interior_point;
};

// Declared symmetry lets the integrators drop angular dimensions.
enum class Symmetry { none, radial, axial };

struct IntegrandSymmetry {
    Symmetry kind = Symmetry::none;
    Point axis{1.0, 0.0, 0.0};  // for axial symmetry; unit vector
};

using BallIntegrand = std::function<double(const Point&)>;

QuadratureResult integrate_ball(const BallIntegrand& f, const BallDomain& ball,
                                const std::optional<SingularitySpec>& sing, double tol,
                                IntegrandSymmetry sym = {}, std::size_t budget = 1'000'000);

// boundary_exponent: the integrand may blow up like δ_{D^c}^{-γ} at the sphere (γ < 1).
QuadratureResult integrate_exterior(const BallIntegrand& g, const BallDomain& ball, double decay_exponent,
                                    double tol, IntegrandSymmetry sym = {}, std::size_t budget = 1'000'000,
                                    double boundary_exponent = 0.0);

// Surface integral against Hausdorff measure. A pole concentrates angular
// refinement around one point of the sphere (e.g. the nearest point to a kernel peak).
QuadratureResult integrate_sphere(const BallIntegrand& h, const BallDomain& ball, double tol,
                                  IntegrandSymmetry sym = {}, std::optional<Point> pole = std::nullopt,
                                  double pole_scale = 0.0, std::size_t budget = 1'000'000);

}  // namespace nonlocal

namespace nonlocal {

// Finite/infinite decision for ∫_{0+} f or ∫^{∞} f with f ≥ 0: partial integrals
// over successive decades; the integral is declared finite when the decade
// increments shrink geometrically (mean ratio below `ratio_limit`).
struct IntegralDecision {
    bool finite = true;
    double partial_sum = 0.0;
    double mean_ratio = 0.0;
    std::vector<double> decade_increments;
};

IntegralDecision decide_integral_near_zero(const std::function<double(double)>& f, double t_hi = 1.0,
                                           double t_lo = 1e-8, double ratio_limit = 0.99);
IntegralDecision decide_integral_at_infinity(const std::function<double(double)>& f, double t_lo = 1.0,
                                             double t_hi = 1e8, double ratio_limit = 0.99);

}  // namespace nonlocal
