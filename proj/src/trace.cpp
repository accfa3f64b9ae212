#include "nonlocal/trace.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/legendre.hpp>

#include "nonlocal/ball_kernels.hpp"
#include "nonlocal/errors.hpp"
#include "nonlocal/parallel.hpp"
#include "nonlocal/potentials.hpp"
#include "nonlocal/quadrature.hpp"

namespace nonlocal {

namespace {

constexpr int kOrders = 5;  // moments 0..4
using Moments = std::array<double, kOrders>;

double harmonic(int dim, int l, double theta) {
    return dim == 3 ? boost::math::legendre_p(l, std::cos(theta)) : std::cos(l * theta);
}

Point unit(const Point& e) {
    const double n = norm(e);
    if (!(n > 0.0)) throw ConfigError("trace: axis must be nonzero");
    return (1.0 / n) * e;
}

// Two unit vectors orthogonal to e (the second is unused in the plane).
std::pair<Point, Point> frame(const Point& e, int dim) {
    if (dim == 2) return {Point{-e[1], e[0], 0.0}, Point{0.0, 0.0, 0.0}};
    const Point t = std::abs(e[0]) < 0.9 ? Point{1.0, 0.0, 0.0} : Point{0.0, 1.0, 0.0};
    Point p1 = t - dot(t, e) * e;
    p1 = (1.0 / norm(p1)) * p1;
    const Point p2{e[1] * p1[2] - e[2] * p1[1], e[2] * p1[0] - e[0] * p1[2], e[0] * p1[1] - e[1] * p1[0]};
    return {p1, p2};
}

// Angle breakpoints graded toward both poles with scale w.
std::vector<double> pole_points(double w) {
    const double pi = std::numbers::pi;
    std::vector<double> pts{0.0, pi};
    for (double t = std::max(w, 1e-12); t < pi / 2.0; t *= 4.0) {
        pts.push_back(t);
        pts.push_back(pi - t);
    }
    pts.push_back(pi / 2.0);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

// Funk-Hecke coefficients of y -> j(|r ω - s ω'|) for l = 0..4.
// sr = s - r, passed exactly.
Moments jump_coefficients(const StableModel& m, double r, double s, double sr, double rel_tol) {
    const int d = m.dim;
    auto j = [&](double w) { return m.levy_const * std::pow(w, -d - m.alpha); };
    Moments out{};
    if (r == 0.0) {
        out[0] = m.sphere_area * j(s);
        return out;
    }
    QuadratureOptions o;
    o.rel_tol = rel_tol;
    o.max_evaluations = 20000;
    if (d == 3) {
        // t = (r² + s² - w²)/(2rs), dt = -w dw/(rs), integrated in log w.
        const double wl = sr, wh = s + r;
        auto F = [&](double v) {
            const double w = std::exp(v);
            const double t = std::clamp(1.0 + (wl - w) * (wl + w) / (2.0 * r * s), -1.0, 1.0);
            const double base = 2.0 * std::numbers::pi / (r * s) * j(w) * w * w;
            Moments res;
            for (int l = 0; l < kOrders; ++l) res[l] = base * boost::math::legendre_p(l, t);
            return res;
        };
        std::vector<double> pts;
        for (double v = std::log(wl); v < std::log(wh); v += 1.0) pts.push_back(v);
        pts.push_back(std::log(wh));
        return integrate_vec<kOrders>(F, pts, o).value;
    }
    auto F = [&](double phi) {
        const double h = std::sin(0.5 * phi);
        const double w = std::sqrt(sr * sr + 4.0 * r * s * h * h);
        Moments res;
        for (int l = 0; l < kOrders; ++l) res[l] = 2.0 * j(w) * std::cos(l * phi);
        return res;
    };
    return integrate_vec<kOrders>(F, pole_points(sr / std::sqrt(r * s)), o).value;
}

// gap = s - ρ > 0, passed exactly.
Moments projection_kernels(const StableModel& m, double rho, int dim, double s, double gap, double rel_tol) {
    const BallDomain U{{0.0, 0.0, 0.0}, rho, dim};
    const Point o0{0.0, 0.0, 0.0};
    QuadratureOptions o;
    o.rel_tol = rel_tol;
    o.max_evaluations = 20000;
    // Inner integrals run tighter so their noise stays below the outer tolerance.
    const double inner_tol = std::max(1e-13, 1e-3 * rel_tol);
    // x = ρ - r in log scale; the peak sits where x ~ s - ρ.
    auto F = [&](double v) {
        const double x = std::exp(v), r = rho - x;
        if (!(r >= 0.0)) return Moments{};
        const double g = r == 0.0 ? 0.0 : green(m, U, o0, Point{r, 0.0, 0.0});
        const double wgt = std::pow(r, dim - 1) * g * x;
        auto lam = jump_coefficients(m, r, s, gap + x, inner_tol);
        for (double& c : lam) c *= wgt;
        return lam;
    };
    const double lo = std::log(1e-14 * rho), hi = std::log(rho), c = std::log(gap);
    std::vector<double> pts{lo, hi};
    for (double t = c - 3.0; t <= c + 3.0; t += 1.0)
        if (t > lo && t < hi) pts.push_back(t);
    std::sort(pts.begin(), pts.end());
    auto res = integrate_vec<kOrders>(F, pts, o).value;
    // r = 0 carries the degenerate center contribution only when ρ is tiny; ignore.
    return res;
}

// ∫_{S^{d-1}} Y_l(ω·e) u(s ω) dω for l = 0..4.
Moments angular_moments(const BallDomain& b, const ScalarField& u, double s, const Point& e, const Point& p1,
                        double rel_tol) {
    const int d = b.dim;
    Moments out{};
    if (u.is_radial()) {
        out[0] = unit_sphere_area(d) * u.at_radius(s);
        return out;
    }
    QuadratureOptions o;
    o.rel_tol = rel_tol;
    auto F = [&](double th) {
        const Point y = b.center + s * (std::cos(th) * e + std::sin(th) * p1);
        const double v = u(y) * (d == 3 ? 2.0 * std::numbers::pi * std::sin(th) : 2.0);
        Moments res;
        for (int l = 0; l < kOrders; ++l) res[l] = v * harmonic(d, l, th);
        return res;
    };
    return integrate_vec<kOrders>(F, pole_points(std::max(b.radius - s, 1e-12 * b.radius)), o).value;
}

void require_axial(const BallDomain& b, const ScalarField& u, const Point& e) {
    if (u.is_radial()) return;
    const auto [p1, p2] = frame(e, b.dim);
    for (double s : {0.3, 0.7}) {
        for (double th : {0.4, 1.9}) {
            const double r = s * b.radius;
            const Point y1 = b.center + r * (std::cos(th) * e + std::sin(th) * p1);
            const Point y2 = b.dim == 3 ? b.center + r * (std::cos(th) * e + std::sin(th) * p2)
                                        : b.center + r * (std::cos(th) * e - std::sin(th) * p1);
            const double a = u(y1), c = u(y2);
            if (std::abs(a - c) > 1e-8 * (std::abs(a) + std::abs(c)) + 1e-300)
                throw PreconditionError("trace: u must be radial or axially symmetric about the axis");
        }
    }
}

}  // namespace

double trace_projection_kernel(const StableModel& m, double rho, int dim, int l, double s, double rel_tol) {
    if (l < 0 || l >= kOrders) throw ConfigError("trace: moment order must lie in 0..4");
    if (!(s > rho)) throw DomainError("trace: s must exceed the inner radius");
    return projection_kernels(m, rho, dim, s, s - rho, rel_tol)[l];
}

TraceLevel trace_measure(const StableModel& m, const BallDomain& b, const ScalarField& u, int k,
                         const TraceOptions& opt) {
    if (k < 1 || k > 30) throw ConfigError("trace: level k must lie in 1..30");
    if (opt.max_order < 0 || opt.max_order >= kOrders) throw ConfigError("trace: max_order must lie in 0..4");
    const Point e = unit(opt.axis);
    require_axial(b, u, e);
    const auto p1 = frame(e, b.dim).first;
    const double R = b.radius, rho = R * (1.0 - std::ldexp(1.0, -k));
    const int d = b.dim;
    const bool radial = u.is_radial();
    const int orders = radial ? 1 : opt.max_order + 1;
    // gap = s - ρ is passed exactly; the centre Poisson kernel of U is written in factored form.
    auto integrand = [&](double s, double gap) {
        if (!(gap > 0.0 && R - s > 2e-12 * R)) return Moments{};
        const auto ul = angular_moments(b, u, s, e, p1, std::max(1e-10, 1e-2 * opt.rel_tol));
        Moments pk{};
        pk[0] = m.poisson_const * std::pow(rho * rho / (gap * (s + rho)), m.alpha / 2.0) * std::pow(s, -d);
        if (orders > 1) {
            const auto full = projection_kernels(m, rho, d, s, gap, std::max(1e-10, 1e-2 * opt.rel_tol));
            for (int l = 1; l < orders; ++l) pk[l] = full[l];
        }
        Moments res{};
        const double sd = std::pow(s, d - 1);
        for (int l = 0; l < orders; ++l) res[l] = sd * pk[l] * ul[l];
        return res;
    };
    // Both ends carry (distance)^{-α/2} or milder singularities; s = end ± L u^κ flattens them.
    const double kap = 4.0 / (2.0 - m.alpha), L = 0.5 * (R - rho);
    QuadratureOptions o;
    o.rel_tol = opt.rel_tol;
    o.max_evaluations = 20000;
    auto half = [&](bool inner) {
        auto G = [&](double t) {
            const double h = L * std::pow(t, kap), jac = L * kap * std::pow(t, kap - 1.0);
            auto r = inner ? integrand(rho + h, h) : integrand(R - h, (R - rho) - h);
            for (double& c : r) c *= jac;
            return r;
        };
        return integrate_vec<kOrders>(G, graded_points(0.0, 1.0, 4, false), o).value;
    };
    const auto lo = half(true);
    auto hi = half(false);
    // Power-law tail below the cut next to the outer sphere.
    {
        const double hc = 2.5e-12 * R;
        const auto f1 = integrand(R - hc, (R - rho) - hc), f2 = integrand(R - 10.0 * hc, (R - rho) - 10.0 * hc);
        for (int l = 0; l < kOrders; ++l) {
            if (f1[l] == 0.0 || f2[l] / f1[l] <= 0.0) continue;
            const double g = std::log10(f2[l] / f1[l]);
            if (g > -1.0) hi[l] += f1[l] * hc / (1.0 + g);
        }
    }
    TraceLevel out;
    out.k = k;
    out.radius = rho;
    out.moments.assign(opt.max_order + 1, 0.0);
    for (int l = 0; l <= opt.max_order; ++l) out.moments[l] = lo[l] + hi[l];
    out.mass = out.moments[0];
    if (!std::isfinite(out.mass)) throw DivergenceError("trace: inner integral diverges", "trace");
    return out;
}

TraceEstimate trace_sequence(const StableModel& m, const BallDomain& b, const ScalarField& u, int k_max,
                             const TraceOptions& opt) {
    if (k_max < 3) throw ConfigError("trace: need at least three levels");
    TraceEstimate est;
    est.levels.resize(k_max);
    parallel_for(k_max, [&](std::size_t i) { est.levels[i] = trace_measure(m, b, u, int(i) + 1, opt); });
    double scale = 0.0;
    for (const auto& l : est.levels) scale = std::max(scale, std::abs(l.mass));
    const double first = std::abs(est.levels[1].mass - est.levels[0].mass);
    const double last = std::abs(est.levels[k_max - 1].mass - est.levels[k_max - 2].mass);
    est.converged = last <= 0.1 * first || last <= 1e-3 * scale;
    est.limit_mass = est.levels.back().mass;
    return est;
}

BoundaryLimit boundary_limit(const std::function<double(double)>& q) {
    BoundaryLimit out;
    const std::array<double, 3> eps{1e-2, 1e-3, 1e-4};
    for (double e : eps) out.samples.push_back(q(e));
    const auto& v = out.samples;
    for (double x : v)
        if (!std::isfinite(x)) throw LimitFailure("boundary limit: non-finite sample");
    out.extrapolants = {(10.0 * v[1] - v[0]) / 9.0, (10.0 * v[2] - v[1]) / 9.0};
    // Quadratic in ε through the three samples, evaluated at 0.
    double val = 0.0;
    for (int i = 0; i < 3; ++i) {
        double li = 1.0;
        for (int j = 0; j < 3; ++j)
            if (j != i) li *= (0.0 - eps[j]) / (eps[i] - eps[j]);
        val += li * v[i];
    }
    out.value = val;
    double scale = 0.0;
    for (double x : v) scale = std::max(scale, std::abs(x));
    const double gap = std::abs(out.extrapolants[1] - out.extrapolants[0]);
    // A vanishing limit shows up as extrapolants that are negligible next to the samples.
    const bool vanishing = std::abs(out.extrapolants[1]) <= 1e-3 * std::abs(v[0]);
    out.cauchy = gap <= 0.01 * std::abs(out.extrapolants[1]) || vanishing || scale == 0.0;
    if (vanishing) out.value = out.extrapolants[1];
    if (!out.cauchy) {
        std::ostringstream os;
        os << "boundary limit: extrapolants " << out.extrapolants[0] << " and " << out.extrapolants[1]
           << " differ by more than 1%";
        throw LimitFailure(os.str());
    }
    return out;
}

double normal_derivative_dV(const StableModel& m, const BallDomain& b, const ScalarField& psi, const Point& z) {
    if (!b.on_sphere(z)) throw DomainError("normal_derivative_dV: z must lie on the sphere");
    if (psi.is_zero()) return 0.0;
    const double R = b.radius;
    PotentialOptions po;
    po.rel_tol = 1e-10;
    auto q = [&](double eps) {
        const double del = eps * R;
        const Point x = b.center + (1.0 - eps) * (z - b.center);
        const double g = psi.is_radial()
                             ? green_potential_radial(m, b, [&](double s) { return psi.at_radius(s); }, R - del, po)
                             : green_potential(m, b, psi, x, po);
        return g / std::pow(del, m.alpha / 2.0);
    };
    return boundary_limit(q).value;
}

double dV_kernel_integral(const StableModel& m, const BallDomain& b, const ScalarField& psi, const Point& z) {
    if (!b.on_sphere(z)) throw DomainError("dV_kernel_integral: z must lie on the sphere");
    if (psi.is_zero()) return 0.0;
    const double R = b.radius;
    const int d = b.dim;
    QuadratureOptions o;
    o.rel_tol = 1e-9;
    std::vector<double> rpts;
    for (int i = 0; i <= 16; ++i) rpts.push_back(R * (1.0 - std::pow(2.0, -i)) * (i == 0 ? 0.0 : 1.0));
    rpts.erase(std::unique(rpts.begin(), rpts.end()), rpts.end());
    if (psi.is_radial()) {
        // ∫_{S} K_D(sω, z) dω = K_D(x0, z) M_D σ(s)/R^{d-1}.
        const double K0 = modified_martin(m, b, b.center, z);
        auto F = [&](double s) {
            if (s >= R) return 0.0;
            const double v = psi.at_radius(s);
            if (v == 0.0) return 0.0;
            return v * std::pow(s, d - 1) * K0 * martin_sigma(m, b, b.center + Point{s, 0.0, 0.0}) /
                   std::pow(R, d - 1);
        };
        return integrate(F, rpts, o).value;
    }
    const Point e = unit(z - b.center);
    const auto [p1, p2] = frame(e, d);
    o.rel_tol = 1e-7;
    auto shell = [&](double s) {
        auto Fth = [&](double th) {
            const Point base = std::cos(th) * e;
            if (d == 2) {
                const Point y1 = b.center + s * (base + std::sin(th) * p1);
                const Point y2 = b.center + s * (base - std::sin(th) * p1);
                return modified_martin(m, b, y1, z) * psi(y1) + modified_martin(m, b, y2, z) * psi(y2);
            }
            auto Fph = [&](double ph) {
                const Point y = b.center + s * (base + std::sin(th) * (std::cos(ph) * p1 + std::sin(ph) * p2));
                return modified_martin(m, b, y, z) * psi(y);
            };
            return std::sin(th) * integrate(Fph, 0.0, 2.0 * std::numbers::pi, o).value;
        };
        return std::pow(s, d - 1) * integrate(Fth, pole_points(1e-2), o).value;
    };
    return integrate(shell, rpts, o).value;
}

EdReport ed_operator_check(const StableModel& m, const BallDomain& b, const ScalarField& u,
                           const std::vector<Point>& z_set, int trace_k, const TraceOptions& opt) {
    const double R = b.radius;
    const int d = b.dim;
    const double K0 = modified_martin(m, b, b.center, b.center + Point{R, 0.0, 0.0});
    auto ed_at = [&](const Point& z) {
        auto q = [&](double eps) {
            const Point x = b.center + (1.0 - eps) * (z - b.center);
            return u(x) / (K0 * martin_sigma(m, b, x));
        };
        return boundary_limit(q).value;
    };
    EdReport rep;
    rep.z = z_set;
    rep.ed.resize(z_set.size());
    parallel_for(z_set.size(), [&](std::size_t i) {
        if (!b.on_sphere(z_set[i])) throw DomainError("ed_operator_check: z must lie on the sphere");
        rep.ed[i] = ed_at(z_set[i]);
    });
    for (double v : rep.ed) rep.density.push_back(v * K0);
    const Point e = unit(opt.axis);
    const auto p1 = frame(e, d).first;
    std::vector<double> ed_moments(opt.max_order + 1, 0.0);
    const double area = unit_sphere_area(d) * std::pow(R, d - 1);
    if (u.is_radial()) {
        const double v = ed_at(b.center + Point{R, 0.0, 0.0});
        ed_moments[0] = area * v * K0;
    } else {
        require_axial(b, u, e);
        QuadratureOptions o;
        o.rel_tol = 1e-6;
        auto F = [&](double th) {
            const Point z = b.center + R * (std::cos(th) * e + std::sin(th) * p1);
            const double v = ed_at(z) * K0 * std::pow(R, d - 1) *
                             (d == 3 ? 2.0 * std::numbers::pi * std::sin(th) : 2.0);
            Moments res;
            for (int l = 0; l < kOrders; ++l) res[l] = v * harmonic(d, l, th);
            return res;
        };
        auto r = integrate_vec<kOrders>(F, pole_points(0.05), o).value;
        for (int l = 0; l <= opt.max_order; ++l) ed_moments[l] = r[l];
    }
    rep.mass_from_ed = ed_moments[0];
    const auto lvl = trace_measure(m, b, u, trace_k, opt);
    rep.trace_mass = lvl.mass;
    const double scale = std::max(std::abs(rep.trace_mass), std::abs(rep.mass_from_ed));
    rep.mass_residual = scale == 0.0 ? 0.0 : std::abs(rep.trace_mass - rep.mass_from_ed) / scale;
    for (int l = 1; l <= opt.max_order; ++l)
        rep.moment_residuals.push_back(scale == 0.0 ? 0.0 : std::abs(lvl.moments[l] - ed_moments[l]) / scale);
    return rep;
}

}  // namespace nonlocal
