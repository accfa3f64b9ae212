#include "nonlocal/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nonlocal/ball_kernels.hpp"
#include "nonlocal/errors.hpp"
#include "nonlocal/quadrature.hpp"

namespace nonlocal {

namespace {

constexpr double kPi = std::numbers::pi;

QuadratureOptions opts(const PotentialOptions& o) {
    QuadratureOptions q;
    q.rel_tol = o.rel_tol;
    q.max_evaluations = o.budget;
    return q;
}

}  // namespace

double green_potential_radial(const StableModel& m, const BallDomain& b, const std::function<double(double)>& f,
                              double r, const PotentialOptions& opt) {
    const double R = b.radius;
    const int d = m.dim;
    if (r >= R) return 0.0;
    auto q = opts(opt);
    auto dens = [&](double s) { return f(s) * std::pow(s, d - 1) * green_sphere_average(m, b, r, s); };
    auto dens_gap = [&](double s, double gap) {
        return f(s) * std::pow(s, d - 1) * green_sphere_average_gap(m, b, r, s, gap);
    };
    // s = r ∓ L u^k flattens the |s - r|^{α-1} diagonal behaviour of the sphere average.
    const double k = std::max(1.0, 2.0 / m.alpha);
    const std::vector<double> upts = graded_points(0.0, 1.0, 6, false);
    auto side = [&](double L, double sign) {
        if (L <= 0.0) return 0.0;
        return integrate(
                   [&](double u) {
                       const double gap = L * std::pow(u, k);
                       if (gap == 0.0) return 0.0;
                       return dens_gap(r + sign * gap, gap) * L * k * std::pow(u, k - 1.0);
                   },
                   upts, q)
            .value;
    };
    const double s1 = r + 0.5 * (R - r);
    double total = side(r, -1.0) + side(s1 - r, 1.0);
    // Boundary layer in v = log δ, cut where δ drops below coordinate resolution;
    // below the cut the integrand decays like e^{κ v}, integrated analytically.
    auto H = [&](double v) {
        const double del = std::exp(v), s = R - del;
        if (!(s < R)) return 0.0;
        return dens(s) * del;
    };
    const double vc = std::log(1e-11 * R);
    auto layer = integrate(H, vc, std::log(R - s1), q);
    double tail = 0.0;
    const double h0 = H(vc), h1 = H(vc + 1.0);
    if (h0 != 0.0 && h1 / h0 > 1.0) tail = h0 / std::log(h1 / h0);
    return total + layer.value + tail;
}

double green_potential(const StableModel& m, const BallDomain& b, const ScalarField& f, const Point& x,
                       const PotentialOptions& opt) {
    if (f.is_zero()) return 0.0;
    if (auto beta = f.power_exponent(); beta && *beta >= 1.0 + m.alpha / 2.0)
        throw DivergenceError("green_potential: profile violates the integrability condition (U1)", "U1");
    if (!b.inside(x)) return 0.0;
    const double r = b.radial(x);
    if (f.is_radial()) return green_potential_radial(m, b, [&](double s) { return f.at_radius(s); }, r, opt);
    SingularitySpec sg{x, double(m.dim) - m.alpha, SingularityKind::interior_point};
    auto res = integrate_ball(
        [&](const Point& y) { return y == x ? 0.0 : green(m, b, x, y) * f(y); }, b, sg,
        std::max(opt.rel_tol, 1e-6), {}, opt.budget);
    return res.value;
}

double poisson_potential_radial(const StableModel& m, const BallDomain& b, const std::function<double(double)>& F,
                                double r, const std::vector<double>& t_breaks, const PotentialOptions& opt) {
    const double R = b.radius, a = m.alpha;
    if (r >= R) throw DomainError("poisson_potential: x must lie inside the ball");
    const double del = R - r;
    auto q = opts(opt);
    auto H = [&](double v) {
        const double t = std::exp(v);
        if (!(t > 0.0) || !std::isfinite(t)) return 0.0;
        const double val = F(t) * std::pow(t * (2.0 * R + t), -a / 2.0) * (R + t) / ((del + t) * (R + r + t)) * t;
        return std::isfinite(val) ? val : 0.0;
    };
    std::vector<double> cuts{std::log(del), std::log(R)};
    for (double t : t_breaks)
        if (t > 0.0) cuts.push_back(std::log(t));
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    double total = integrate_from_minus_infinity(H, cuts.front(), q).value;
    if (cuts.size() > 1) total += integrate(H, cuts, q).value;
    total += integrate_to_infinity(H, cuts.back(), q).value;
    return m.poisson_const * m.sphere_area * std::pow((R - r) * (R + r), a / 2.0) * total;
}

bool exterior_admissible(const StableModel& m, const ExteriorDensity& g) {
    if (g.is_zero()) return true;
    const double a = m.alpha;
    if (g.power_beta) return *g.power_beta > -a && *g.power_beta < 1.0 - a / 2.0;
    auto near = decide_integral_near_zero([&](double t) { return g(t) / std::pow(t, a / 2.0); });
    auto far = decide_integral_at_infinity([&](double t) { return g(t) / (std::pow(t, a) * t); });
    return near.finite && far.finite;
}

double poisson_potential(const StableModel& m, const BallDomain& b, const ExteriorDensity& g, const Point& x,
                         const PotentialOptions& opt) {
    if (g.is_zero()) return 0.0;
    if (!exterior_admissible(m, g))
        throw DivergenceError("poisson_potential: exterior density violates the admissibility condition", "exterior");
    if (!b.inside(x)) throw DomainError("poisson_potential: x must lie strictly inside the ball");
    return poisson_potential_radial(m, b, g.profile, b.radial(x), g.breakpoints, opt);
}

double martin_potential(const StableModel& m, const BallDomain& b, const BoundaryDensity& h, const Point& x,
                        const PotentialOptions& opt) {
    if (h.is_zero()) return 0.0;
    if (!b.inside(x)) throw DomainError("martin_potential: x must lie strictly inside the ball");
    const double rx = b.radial(x);
    const double tol = std::max(opt.rel_tol, 1e-10);
    const Point e = rx > 0.0 ? (1.0 / rx) * (x - b.center) : (h.axis ? *h.axis : Point{1.0, 0.0, 0.0});
    const Point pole = b.center + b.radius * e;
    const double scale = b.delta(x) / b.radius;
    auto kern = [&](const Point& z) { return martin(m, b, x, z) * h(z); };
    bool axial = h.constant.has_value();
    if (h.axis && (rx == 0.0 || std::abs(std::abs(dot(*h.axis, e)) - 1.0) < 1e-14)) axial = true;
    IntegrandSymmetry sym{axial ? Symmetry::axial : Symmetry::none, e};
    return integrate_sphere(kern, b, tol, sym, pole, scale, opt.budget).value;
}

namespace {

// ∫_{S^{d-1}} q(|x + w ω|) dω over directions staying inside the ball, |x| = r.
double shell_mean(const StableModel& m, const BallDomain& b, const ScalarField& q, double r, double w) {
    const double R = b.radius;
    QuadratureOptions o;
    o.rel_tol = 1e-7;
    o.max_evaluations = 20000;
    const double lo = std::abs(r - w), hi = std::min(r + w, R);
    if (lo >= hi) return 0.0;
    if (m.dim == 3) {
        // Area element in s = |x + wω|: 2π s ds/(r w).
        if (r == 0.0) return m.sphere_area * std::abs(q.at_radius(w));
        auto f = [&](double s) { return std::abs(q.at_radius(s)) * s; };
        double val;
        if (hi == R && q.boundary_exponent() > 0.0) {
            const double g = q.boundary_exponent();
            const double k = 1.0 / (1.0 - std::min(g, 0.999));
            const double L = R - lo;
            val = integrate([&](double u) { const double del = L * std::pow(u, k);
                                            return f(R - del) * L * k * std::pow(u, k - 1.0); },
                            graded_points(0.0, 1.0, 8, false), o).value;
        } else {
            val = integrate(f, lo, hi, o).value;
        }
        return 2.0 * kPi / (r * w) * val;
    }
    // d = 2: s^2 = r^2 + w^2 + 2 r w cos θ.
    auto f = [&](double th) {
        const double s = std::sqrt(std::max(0.0, r * r + w * w + 2.0 * r * w * std::cos(th)));
        return s < R ? std::abs(q.at_radius(s)) : 0.0;
    };
    double thmax = kPi;
    if (r + w > R) thmax = std::acos(std::clamp((R * R - r * r - w * w) / (2.0 * r * w), -1.0, 1.0));
    if (r == 0.0) return 2.0 * kPi * std::abs(q.at_radius(w));
    return 2.0 * integrate(f, graded_points(kPi, thmax, 16, false), o).value;
}

}  // namespace

KatoReport kato_check(const StableModel& m, const BallDomain& b, const ScalarField& q,
                      const std::vector<double>& eps_list, int n_points) {
    KatoReport rep;
    const double R = b.radius, a = m.alpha;
    if (eps_list.size() < 2) throw PreconditionError("kato_check: need at least two ε values");
    if (auto beta = q.power_exponent(); beta && *beta >= 1.0) {
        rep.divergent = true;
        rep.passes = false;
        rep.note = "inner integral diverges: δ^{-β} with β ≥ 1 is not locally integrable at the boundary";
        for (double e : eps_list) rep.epsilon_profile.push_back({e, INFINITY});
        rep.limit_estimate = 0.0;
        return rep;
    }
    if (!q.is_radial() && !q.is_zero()) throw PreconditionError("kato_check: radial q required");
    std::vector<double> eps = eps_list;
    std::sort(eps.begin(), eps.end());
    // x grid: δ log-spaced from min(1e-3 R, ε_min/10) to R.
    const double dmin = std::min(1e-3 * R, eps.front() / 10.0);
    std::vector<double> radii;
    for (int i = 0; i < n_points; ++i) radii.push_back(R - dmin * std::pow(R / dmin, double(i) / (n_points - 1)));
    QuadratureOptions o;
    o.rel_tol = 1e-6;
    o.max_evaluations = 100000;
    for (double e : eps) {
        double sup = 0.0;
        if (!q.is_zero()) {
            for (double r : radii) {
                const double ww = e;
                auto inner = [&](double w) { return std::pow(w, a - 1.0) * shell_mean(m, b, q, r, w); };
                std::vector<double> pts{0.0};
                const double del = R - r;
                if (del < ww) pts.push_back(del);
                pts.push_back(ww);
                // w^{a-1} at zero: w = u^{1/a}.
                auto res = integrate(
                    [&](double u) {
                        const double w = std::pow(u, 1.0 / a);
                        return inner(w) * std::pow(w, 1.0 - a) / a;
                    },
                    [&] {
                        std::vector<double> up;
                        for (double p : pts) up.push_back(std::pow(p, a));
                        return up;
                    }(),
                    o);
                if (!std::isfinite(res.value)) {
                    rep.divergent = true;
                    sup = INFINITY;
                    break;
                }
                sup = std::max(sup, res.value);
            }
        }
        rep.epsilon_profile.push_back({e, sup});
    }
    if (rep.divergent) {
        rep.passes = false;
        rep.note = "inner integral diverged";
        return rep;
    }
    bool all_zero = std::all_of(rep.epsilon_profile.begin(), rep.epsilon_profile.end(),
                                [](const auto& p) { return p.second == 0.0; });
    if (all_zero) {
        rep.passes = true;
        rep.note = "q vanishes";
        return rep;
    }
    // Least-squares slope of log m(ε) against log ε.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(rep.epsilon_profile.size());
    for (auto [e, v] : rep.epsilon_profile) {
        const double lx = std::log(e), ly = std::log(std::max(v, 1e-300));
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    }
    rep.limit_estimate = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    rep.passes = rep.limit_estimate > 1e-2;
    rep.note = rep.passes ? "m(ε) decays as a positive power of ε" : "m(ε) does not decay";
    return rep;
}

}  // namespace nonlocal
