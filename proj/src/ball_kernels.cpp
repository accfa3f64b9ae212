#include "nonlocal/ball_kernels.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include "nonlocal/errors.hpp"
#include "nonlocal/quadrature.hpp"

namespace nonlocal {

namespace {
constexpr double kPi = std::numbers::pi;
}

namespace {

// B_x(a,b) by the hypergeometric series x^a Σ (1-b)_n x^n/(n!(a+n)) for x ≤ 1/2 and
// the mirrored series for the complement otherwise; coefficients cached per (a, b).
class IncompleteBeta {
public:
    IncompleteBeta(double a, double b) : a_(a), b_(b), full_(boost::math::beta(a, b)) {
        fill(c_, a, b);
        fill(e_, b, a);
    }
    bool matches(double a, double b) const { return a == a_ && b == b_; }
    double operator()(double r0) const {
        if (r0 <= 1.0) {
            const double x = r0 / (1.0 + r0);
            return std::pow(x, a_) * series(c_, x);
        }
        if (!std::isfinite(r0)) return full_;
        const double y = 1.0 / (1.0 + r0);
        return full_ - std::pow(y, b_) * series(e_, y);
    }

private:
    static constexpr int kTerms = 64;
    static void fill(std::array<double, kTerms>& c, double a, double b) {
        double poch = 1.0;  // (1-b)_n / n!
        for (int n = 0; n < kTerms; ++n) {
            c[n] = poch / (a + n);
            poch *= (n + 1.0 - b) / (n + 1.0);
        }
    }
    static double series(const std::array<double, kTerms>& c, double x) {
        double sum = c[0], xn = 1.0;
        for (int n = 1; n < kTerms; ++n) {
            xn *= x;
            const double t = c[n] * xn;
            sum += t;
            if (std::abs(t) < 1e-17 * std::abs(sum)) break;
        }
        return sum;
    }
    double a_, b_, full_;
    std::array<double, kTerms> c_{}, e_{};
};

const IncompleteBeta& beta_for(const StableModel& m) {
    const double a = m.alpha / 2.0, b = (m.dim - m.alpha) / 2.0;
    thread_local std::vector<std::unique_ptr<IncompleteBeta>> cache;
    for (const auto& p : cache)
        if (p->matches(a, b)) return *p;
    cache.push_back(std::make_unique<IncompleteBeta>(a, b));
    return *cache.back();
}

}  // namespace

double green_incomplete_integral(const StableModel& m, double r0) {
    if (r0 <= 0.0) return 0.0;
    // With t = s/(1+s) the integral is the incomplete beta B_t(α/2, (d-α)/2).
    return beta_for(m)(r0);
}

double green_from_separation(const StableModel& m, double w, double c) {
    if (c <= 0.0) return 0.0;
    return m.green_const * std::pow(w, m.alpha - m.dim) * green_incomplete_integral(m, c / (w * w));
}

double green(const StableModel& m, const BallDomain& b, const Point& x, const Point& y) {
    const double R = b.radius;
    const double w = distance(x, y);
    if (w == 0.0) throw SingularityError("green: x == y");
    if (!b.inside(x) || !b.inside(y)) return 0.0;
    const double rx = b.radial(x), ry = b.radial(y);
    const double c = (R - rx) * (R + rx) * (R - ry) * (R + ry) / (R * R);
    return green_from_separation(m, w, c);
}

double poisson(const StableModel& m, const BallDomain& b, const Point& x, const Point& z) {
    if (!b.inside(x)) throw DomainError("poisson: x must lie strictly inside the ball");
    if (b.on_sphere(z)) throw BoundaryBlowupError("poisson: z on the boundary sphere");
    if (!b.outside(z)) throw DomainError("poisson: z must lie outside the closed ball");
    const double R = b.radius, rx = b.radial(x), rz = b.radial(z);
    const double ratio = (R - rx) * (R + rx) / ((rz - R) * (rz + R));
    return m.poisson_const * std::pow(ratio, m.alpha / 2.0) * std::pow(distance(x, z), -m.dim);
}

namespace {
void check_martin_args(const BallDomain& b, const Point& x, const Point& z) {
    if (!b.on_sphere(z)) throw DomainError("martin: z must lie on the sphere");
    if (!b.inside(x)) throw DomainError("martin: x must lie strictly inside the ball");
}
}  // namespace

double martin(const StableModel& m, const BallDomain& b, const Point& x, const Point& z) {
    check_martin_args(b, x, z);
    const double R = b.radius, rx = b.radial(x);
    return std::pow((R - rx) * (R + rx), m.alpha / 2.0) * std::pow(R, m.dim - m.alpha) *
           std::pow(distance(x, z), -m.dim);
}

double modified_martin(const StableModel& m, const BallDomain& b, const Point& x, const Point& z) {
    check_martin_args(b, x, z);
    const double R = b.radius, rx = b.radial(x), a = m.alpha;
    // Leading term of the Green integral for small r0 is (2/a) r0^{a/2}; dividing
    // by V(R-|y|) and letting y -> z leaves the factor (2R)^{a/2}.
    return (2.0 / a) * m.green_const * std::pow(2.0 * R, a / 2.0) * std::pow(R, -a) *
           std::pow((R - rx) * (R + rx), a / 2.0) * std::pow(distance(x, z), -m.dim);
}

double killing(const StableModel& m, const BallDomain& b, const Point& x) {
    if (!b.inside(x)) throw DomainError("killing: x must lie strictly inside the ball");
    const double R = b.radius, a = b.radial(x), al = m.alpha;
    const double A = (R - a) * (R + a);
    // Distance from x to the sphere along a direction making cosine c with x.
    auto rho = [&](double c) { return A / (std::sqrt(a * a * c * c + A) + a * c); };
    QuadratureOptions o;
    o.rel_tol = 1e-11;
    double integral;
    if (m.dim == 3) {
        std::vector<double> pts{-1.0, 0.0};
        if (a > 0.0) {
            for (double c = std::sqrt(A) / a; c < 1.0; c *= 4.0) pts.push_back(c);
        }
        pts.push_back(1.0);
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        integral = 2.0 * kPi * integrate([&](double c) { return std::pow(rho(c), -al); }, pts, o).value;
    } else {
        std::vector<double> pts{0.0};
        if (a > 0.0) {
            const double w = std::sqrt(A) / a;
            for (double t = w; t < kPi / 2.0; t *= 4.0) pts.push_back(kPi / 2.0 - t);
            std::sort(pts.begin(), pts.end());
        }
        pts.push_back(kPi / 2.0);
        pts.push_back(kPi);
        integral = 2.0 * integrate([&](double th) { return std::pow(rho(std::cos(th)), -al); }, pts, o).value;
    }
    return m.levy_const / al * integral;
}

double green_sphere_average(const StableModel& m, const BallDomain& b, double r, double s) {
    return green_sphere_average_gap(m, b, r, s, std::abs(r - s));
}

double green_sphere_average_gap(const StableModel& m, const BallDomain& b, double r, double s, double gap) {
    return green_sphere_window(m, b, r, s, gap, 0.0, INFINITY);
}

double green_sphere_window(const StableModel& m, const BallDomain& b, double r, double s, double gap, double w_lo,
                           double w_hi) {
    const double R = b.radius;
    if (r >= R || s >= R) return 0.0;
    const double c = (R - r) * (R + r) * (R - s) * (R + s) / (R * R);
    const double lo_w = std::max(gap, w_lo), hi_w = std::min(r + s, w_hi);
    if (r == 0.0 || s == 0.0) {
        const double w = std::max(r, s);
        return (w >= w_lo && w < w_hi) ? m.sphere_area * green_from_separation(m, w, c) : 0.0;
    }
    if (!(hi_w > lo_w)) return 0.0;
    QuadratureOptions o;
    o.rel_tol = 1e-9;
    o.max_evaluations = 20000;
    if (m.dim == 3) {
        // w = |x - y| = e^v; σ(dω) = 2π w dw/(r s).
        const double vhi = std::log(hi_w);
        if (lo_w == 0.0 && m.alpha <= 1.0) return INFINITY;
        const double lo = lo_w > 0.0 ? std::log(lo_w) : vhi - 60.0;
        std::vector<double> pts{lo};
        const double vc = 0.5 * std::log(c);
        for (double v = lo + 4.0; v < vhi; v += 4.0) pts.push_back(v);
        if (vc > lo && vc < vhi) pts.push_back(vc);
        pts.push_back(vhi);
        std::sort(pts.begin(), pts.end());
        auto res = integrate(
            [&](double v) {
                const double w = std::exp(v);
                return green_from_separation(m, w, c) * w * w;
            },
            pts, o);
        double val = res.value;
        if (lo_w == 0.0) {
            // Missing piece below w = e^{lo}: G ~ B' w^{a-3}, ∫ w^{a-1} dw.
            const double wl = std::exp(lo);
            val += green_from_separation(m, wl, c) * wl * wl / (m.alpha - 1.0);
        }
        return 2.0 * kPi / (r * s) * val;
    }
    // d = 2: w^2 = (r-s)^2 + 4 r s sin^2 φ with φ = θ/2.
    auto phi_of = [&](double w) {
        const double q = (w - gap) * (w + gap) / (4.0 * r * s);
        return std::asin(std::sqrt(std::clamp(q, 0.0, 1.0)));
    };
    const double pa = lo_w > gap ? phi_of(lo_w) : 0.0;
    const double pb = hi_w < r + s ? phi_of(hi_w) : kPi / 2.0;
    if (!(pb > pa)) return 0.0;
    const double phi0 = gap / (2.0 * std::sqrt(r * s));
    std::vector<double> cand;
    if (phi0 > 0.0)
        for (int k = 6; k >= 1; --k) cand.push_back(phi0 * std::ldexp(1.0, -k));
    for (double t = std::max(phi0, 1e-12); t < kPi / 2.0; t *= 8.0) cand.push_back(t);
    cand.push_back(std::asin(std::min(1.0, std::sqrt(c / (4.0 * r * s)))));
    std::vector<double> pts{pa, pb};
    for (double t : cand)
        if (t > pa && t < pb) pts.push_back(t);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (gap == 0.0 && pa == 0.0 && m.alpha <= 1.0) return INFINITY;
    auto res = integrate(
        [&](double phi) {
            const double sp = std::sin(phi);
            const double w = std::sqrt(gap * gap + 4.0 * r * s * sp * sp);
            if (w == 0.0) return 0.0;
            return green_from_separation(m, w, c);
        },
        pts, o);
    return 4.0 * res.value;
}

double expected_exit_time(const StableModel& m, const BallDomain& b, const Point& x) {
    if (!b.inside(x)) return 0.0;
    const double R = b.radius, r = b.radial(x);
    return m.exit_time_const * std::pow((R - r) * (R + r), m.alpha / 2.0);
}

double martin_sigma(const StableModel& m, const BallDomain& b, const Point& x) {
    if (!b.inside(x)) throw DomainError("martin_sigma: x must lie strictly inside the ball");
    const double R = b.radius, r = b.radial(x);
    // ∫_{S_R} |x-z|^{-d} σ(dz) = |S| R / (R^2 - r^2), times the Martin prefactor.
    return m.sphere_area * std::pow(R, m.dim - m.alpha + 1.0) * std::pow((R - r) * (R + r), m.alpha / 2.0 - 1.0);
}

}  // namespace nonlocal
