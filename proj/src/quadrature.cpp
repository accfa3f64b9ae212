#include "nonlocal/quadrature.hpp"

#include <numbers>

#include "nonlocal/levy.hpp"

namespace nonlocal {

namespace {

constexpr double kPi = std::numbers::pi;

// Orthonormal frame whose third vector is `axis`.
struct Frame {
    Point e1, e2, e3;
};

Frame frame_from(const Point& axis) {
    Point a = (1.0 / norm(axis)) * axis;
    Point t = std::abs(a[0]) < 0.9 ? Point{1.0, 0.0, 0.0} : Point{0.0, 1.0, 0.0};
    Point e1 = t - dot(t, a) * a;
    e1 = (1.0 / norm(e1)) * e1;
    Point e2{a[1] * e1[2] - a[2] * e1[1], a[2] * e1[0] - a[0] * e1[2], a[0] * e1[1] - a[1] * e1[0]};
    return {e1, e2, a};
}

// Unit vector in the plane (e1, e2) for d = 2, or on the sphere for d = 3.
Point dir2(const Point& a, double theta) {
    // In 2-d the rotation is within the (x, y) plane starting from a.
    const double c = std::cos(theta), s = std::sin(theta);
    return {c * a[0] - s * a[1], s * a[0] + c * a[1], 0.0};
}

Point dir3(const Frame& f, double theta, double phi) {
    const double st = std::sin(theta);
    return std::cos(theta) * f.e3 + (st * std::cos(phi)) * f.e1 + (st * std::sin(phi)) * f.e2;
}

struct Counter {
    std::size_t evals = 0;
    bool all_converged = true;
    void absorb(const QuadratureResult& r) {
        evals += r.evaluations;
        all_converged = all_converged && r.converged;
    }
};

QuadratureOptions inner_opts(double tol, std::size_t budget) {
    QuadratureOptions o;
    o.rel_tol = tol * 0.1;
    o.abs_tol = 0.0;
    o.max_evaluations = budget;
    return o;
}

QuadratureResult finish(const QuadratureResult& outer, const Counter& c, double tol) {
    QuadratureResult r = outer;
    r.evaluations = c.evals + outer.evaluations;
    r.converged = outer.converged && c.all_converged;
    if (!outer.converged) throw BudgetError("integration budget exhausted", r.value, r.abs_error_estimate);
    (void)tol;
    return r;
}

// Angular integral of a direction-dependent quantity over S^{d-1}.
// axis_sym: the quantity depends only on the angle to `axis`.
template <class G>
QuadratureResult angular(G&& g, int dim, const Point& axis, bool axis_sym, double tol, std::size_t budget,
                         Counter& cnt, const std::vector<double>& theta_pts) {
    QuadratureOptions out;
    out.rel_tol = tol;
    out.abs_tol = tol;
    out.max_evaluations = budget;
    if (dim == 2) {
        if (axis_sym) {
            auto r = integrate([&](double th) { return 2.0 * g(dir2(axis, th)); }, theta_pts, out);
            return r;
        }
        std::vector<double> pts;
        for (auto it = theta_pts.rbegin(); it != theta_pts.rend(); ++it) pts.push_back(-*it);
        for (std::size_t i = 1; i < theta_pts.size(); ++i) pts.push_back(theta_pts[i]);
        return integrate([&](double th) { return g(dir2(axis, th)); }, pts, out);
    }
    const Frame fr = frame_from(axis);
    if (axis_sym) {
        return integrate([&](double th) { return 2.0 * kPi * std::sin(th) * g(dir3(fr, th, 0.0)); }, theta_pts,
                         out);
    }
    auto inner = inner_opts(tol, budget);
    return integrate(
        [&](double th) {
            const double st = std::sin(th);
            auto r = integrate([&](double ph) { return g(dir3(fr, th, ph)); }, 0.0, 2.0 * kPi, inner);
            cnt.absorb(r);
            return st * r.value;
        },
        theta_pts, out);
}

std::vector<double> default_theta_points() { return {0.0, kPi / 2.0, kPi}; }

}  // namespace

double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t h = n / 2;
    return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

std::vector<double> graded_points(double a, double b, int levels, bool toward_b) {
    std::vector<double> p{a};
    double frac = 0.5;
    std::vector<double> mids;
    for (int k = 1; k <= levels; ++k, frac *= 0.5) mids.push_back(toward_b ? b - (b - a) * frac : a + (b - a) * frac);
    if (!toward_b) std::reverse(mids.begin(), mids.end());
    p.insert(p.end(), mids.begin(), mids.end());
    p.push_back(b);
    return p;
}

QuadratureResult integrate_ball(const BallIntegrand& f, const BallDomain& ball,
                                const std::optional<SingularitySpec>& sing, double tol, IntegrandSymmetry sym,
                                std::size_t budget) {
    if (!(tol > 0.0)) throw DomainError("integrate_ball: tol must be positive");
    const int d = ball.dim;
    const double R = ball.radius;
    Counter cnt;
    auto inner = inner_opts(tol, budget);

    if (sing && sing->kind == SingularityKind::interior_point) {
        const double g = sing->exponent;
        if (!(g < d)) throw DivergenceError("integrate_ball: point singularity not integrable");
        const Point q = sing->location - ball.center;
        const double qn = norm(q);
        if (!(qn < R)) throw DomainError("integrate_ball: singular point outside the ball");
        const double k = d - g;
        // u-breakpoints mirror a geometric grading of w toward the sphere.
        std::vector<double> upts{0.0};
        for (int j = 1; j <= 20; ++j) upts.push_back(std::pow(1.0 - std::pow(0.5, j), k));
        upts.push_back(1.0);
        auto radial = [&](const Point& om) {
            const double qo = dot(q, om);
            const double rmax = -qo + std::sqrt(std::max(0.0, R * R - qn * qn + qo * qo));
            auto r = integrate(
                [&](double u) {
                    if (u <= 0.0) return 0.0;
                    const double w = rmax * std::pow(u, 1.0 / k);
                    return f(sing->location + w * om) * std::pow(w, g);
                },
                upts, inner);
            cnt.absorb(r);
            return std::pow(rmax, k) / k * r.value;
        };
        const Point axis = qn > 0.0 ? (1.0 / qn) * q : (sym.kind == Symmetry::axial ? sym.axis : Point{1, 0, 0});
        bool axis_sym = sym.kind == Symmetry::radial ||
                        (sym.kind == Symmetry::axial && (qn == 0.0 || std::abs(std::abs(dot(axis, sym.axis)) - 1.0) < 1e-14));
        if (qn > 0.0 && sym.kind == Symmetry::radial) axis_sym = true;
        auto out = angular(radial, d, axis, axis_sym, tol, budget, cnt, default_theta_points());
        return finish(out, cnt, tol);
    }

    double gam = 0.0;
    if (sing && sing->kind == SingularityKind::boundary_power) {
        gam = sing->exponent;
        if (!(gam < 1.0)) throw DivergenceError("integrate_ball: boundary singularity not integrable");
    }
    // delta = R v^{1/(1-gam)} absorbs the boundary blow-up; without one it is the identity.
    const double kk = gam > 0.0 ? 1.0 / (1.0 - gam) : 1.0;
    std::vector<double> vpts{std::pow(1e-14, 1.0 / kk)};
    for (int j = 20; j >= 1; --j) vpts.push_back(std::pow(std::pow(0.5, j), 1.0 / kk));
    vpts.push_back(1.0);
    // Skipped layer delta < eps: integrand ~ c delta^{-gam}, integrated analytically.
    const double eps_layer = R * std::pow(vpts.front(), kk);
    auto layer_tail = [&](const Point& om) {
        const double s = R - eps_layer;
        return f(ball.center + s * om) * std::pow(s, d - 1) * eps_layer / (1.0 - gam);
    };
    auto radial = [&](const Point& om) {
        auto r = integrate(
            [&](double v) {
                const double del = R * std::pow(v, kk);
                const double s = R - del;
                if (s < 0.0) return 0.0;
                const double jac = R * kk * std::pow(v, kk - 1.0);
                return f(ball.center + s * om) * std::pow(s, d - 1) * jac;
            },
            vpts, inner);
        cnt.absorb(r);
        return r.value + layer_tail(om);
    };
    if (sym.kind == Symmetry::radial) {
        QuadratureOptions o;
        o.rel_tol = tol;
        o.abs_tol = tol;
        o.max_evaluations = budget;
        auto r = integrate([&](double v) {
            const double del = R * std::pow(v, kk);
            const double s = R - del;
            if (s < 0.0) return 0.0;
            return f(ball.center + s * Point{1, 0, 0}) * std::pow(s, d - 1) * R * kk * std::pow(v, kk - 1.0);
        }, vpts, o);
        r.value += layer_tail({1, 0, 0});
        r.value *= unit_sphere_area(d);
        r.abs_error_estimate *= unit_sphere_area(d);
        return finish(r, cnt, tol);
    }
    const bool axis_sym = sym.kind == Symmetry::axial;
    const Point axis = axis_sym ? sym.axis : Point{0, 0, 1};
    auto out = angular(radial, d, d == 2 && !axis_sym ? Point{1, 0, 0} : axis, axis_sym, tol, budget, cnt,
                       default_theta_points());
    return finish(out, cnt, tol);
}

QuadratureResult integrate_exterior(const BallIntegrand& g, const BallDomain& ball, double decay_exponent,
                                    double tol, IntegrandSymmetry sym, std::size_t budget, double boundary_exponent) {
    const int d = ball.dim;
    if (!(decay_exponent > d)) throw DivergenceError("integrate_exterior: tail decay too slow", "decay");
    if (!(boundary_exponent < 1.0)) throw DivergenceError("integrate_exterior: boundary layer not integrable");
    const double R = ball.radius;
    const double kap = decay_exponent - d;
    const double gam = std::max(0.0, boundary_exponent);
    Counter cnt;
    auto inner = inner_opts(tol, budget);
    // Shell [R, 2R] with rho = R + R v^kk (kk >= 4 keeps the layer smooth);
    // far zone rho = 2R v^{-1/kap}. The layer below 1e-11 R is added analytically.
    const double kk = std::max(4.0, 1.0 / (1.0 - gam));
    std::vector<double> vpts{std::pow(1e-11, 1.0 / kk)};
    for (int j = 20; j >= 1; --j) vpts.push_back(std::pow(std::pow(0.5, j), 1.0 / kk));
    vpts.push_back(1.0);
    const double eps_layer = R * 1e-11;
    auto radial_line = [&](const Point& om) {
        auto shell = integrate(
            [&](double v) {
                const double rho = R + R * std::pow(v, kk);
                return g(ball.center + rho * om) * std::pow(rho, d - 1) * kk * R * std::pow(v, kk - 1.0);
            },
            vpts, inner);
        const double tail = g(ball.center + (R + eps_layer) * om) * std::pow(R + eps_layer, d - 1) * eps_layer /
                            (1.0 - gam);
        auto far = integrate(
            [&](double v) {
                if (v <= 0.0) return 0.0;
                const double rho = 2.0 * R * std::pow(v, -1.0 / kap);
                if (!std::isfinite(rho)) return 0.0;
                const double val = g(ball.center + rho * om) * std::pow(rho, decay_exponent) /
                                   (kap * std::pow(2.0 * R, kap));
                return std::isfinite(val) ? val : 0.0;
            },
            graded_points(0.0, 1.0, 12, false), inner);
        cnt.absorb(shell);
        cnt.absorb(far);
        return shell.value + far.value + tail;
    };
    if (sym.kind == Symmetry::radial) {
        QuadratureOptions o;
        o.rel_tol = tol;
        o.abs_tol = tol;
        o.max_evaluations = budget;
        cnt.all_converged = true;
        QuadratureResult r{radial_line({1, 0, 0}) * unit_sphere_area(d), 0.0, 0, cnt.all_converged};
        r.abs_error_estimate = tol * std::abs(r.value);
        if (!cnt.all_converged) throw BudgetError("integration budget exhausted", r.value, r.abs_error_estimate);
        r.evaluations = cnt.evals;
        return r;
    }
    const bool axis_sym = sym.kind == Symmetry::axial;
    const Point axis = axis_sym ? sym.axis : (d == 2 ? Point{1, 0, 0} : Point{0, 0, 1});
    auto out = angular(radial_line, d, axis, axis_sym, tol, budget, cnt, default_theta_points());
    return finish(out, cnt, tol);
}

QuadratureResult integrate_sphere(const BallIntegrand& h, const BallDomain& ball, double tol, IntegrandSymmetry sym,
                                  std::optional<Point> pole, double pole_scale, std::size_t budget) {
    const int d = ball.dim;
    const double R = ball.radius;
    Counter cnt;
    Point axis = pole ? (1.0 / norm(*pole - ball.center)) * (*pole - ball.center)
                      : (sym.kind == Symmetry::axial ? sym.axis : (d == 2 ? Point{1, 0, 0} : Point{0, 0, 1}));
    std::vector<double> pts{0.0};
    if (pole_scale > 0.0) {
        for (double t = pole_scale; t < kPi / 2.0; t *= 4.0) pts.push_back(t);
    }
    pts.push_back(kPi / 2.0);
    pts.push_back(kPi);
    const bool axis_sym = sym.kind == Symmetry::radial || sym.kind == Symmetry::axial;
    auto g = [&](const Point& om) { return h(ball.center + R * om); };
    auto out = angular(g, d, axis, axis_sym, tol, budget, cnt, pts);
    const double scale = std::pow(R, d - 1);
    out.value *= scale;
    out.abs_error_estimate *= scale;
    return finish(out, cnt, tol);
}

}  // namespace nonlocal

namespace nonlocal {

namespace {
IntegralDecision decide_over_decades(const std::function<double(double)>& f, const std::vector<double>& edges,
                                     double ratio_limit) {
    IntegralDecision d;
    QuadratureOptions o;
    o.rel_tol = 1e-8;
    o.max_evaluations = 50'000;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        const double a = std::min(edges[i], edges[i + 1]), b = std::max(edges[i], edges[i + 1]);
        // Log variable keeps power laws smooth inside each decade.
        auto r = integrate([&](double v) { const double t = std::exp(v); return f(t) * t; }, std::log(a),
                           std::log(b), o);
        d.decade_increments.push_back(std::abs(r.value));
        d.partial_sum += r.value;
        if (!std::isfinite(r.value)) {
            d.finite = false;
            d.mean_ratio = INFINITY;
            return d;
        }
    }
    // Mean log-ratio over the last three decades.
    const auto& inc = d.decade_increments;
    const std::size_t n = inc.size();
    double acc = 0.0;
    int cnt = 0;
    for (std::size_t i = n >= 4 ? n - 3 : 1; i < n; ++i) {
        if (inc[i - 1] == 0.0 && inc[i] == 0.0) continue;
        if (inc[i - 1] == 0.0) { acc += 10.0; ++cnt; continue; }
        if (inc[i] == 0.0) { acc -= 10.0; ++cnt; continue; }
        acc += std::log10(inc[i] / inc[i - 1]);
        ++cnt;
    }
    d.mean_ratio = cnt ? std::pow(10.0, acc / cnt) : 0.0;
    d.finite = d.mean_ratio < ratio_limit;
    return d;
}
}  // namespace

IntegralDecision decide_integral_near_zero(const std::function<double(double)>& f, double t_hi, double t_lo,
                                           double ratio_limit) {
    std::vector<double> edges{t_hi};
    for (double t = t_hi / 10.0; t >= t_lo * (1 - 1e-12); t /= 10.0) edges.push_back(t);
    return decide_over_decades(f, edges, ratio_limit);
}

IntegralDecision decide_integral_at_infinity(const std::function<double(double)>& f, double t_lo, double t_hi,
                                             double ratio_limit) {
    std::vector<double> edges{t_lo};
    for (double t = t_lo * 10.0; t <= t_hi * (1 + 1e-12); t *= 10.0) edges.push_back(t);
    return decide_over_decades(f, edges, ratio_limit);
}

}  // namespace nonlocal
