#include "nonlocal/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "nonlocal/ball_kernels.hpp"
#include "nonlocal/errors.hpp"
#include "nonlocal/field.hpp"
#include "nonlocal/parallel.hpp"
#include "nonlocal/potentials.hpp"
#include "nonlocal/quadrature.hpp"

namespace nonlocal {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> geomspace(double a, double b, int n) {
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = a;
        return v;
    }
    const double la = std::log(a), lb = std::log(b);
    for (int i = 0; i < n; ++i) v[i] = std::exp(la + (lb - la) * i / (n - 1));
    v.back() = b;
    return v;
}

Point dir(double theta) { return planar_direction(theta); }

// Sup over a log grid of U(t)/min_{s<=t} U(s), restricted to t in [lo, 1].
double nonincreasing_constant(const ProfileSpec& U, double lo) {
    double run_min = std::numeric_limits<double>::infinity(), worst = 0.0;
    for (double t : geomspace(lo, 1.0, 1000)) {
        const double u = U(t);
        if (!std::isfinite(u) || u < 0.0) return std::numeric_limits<double>::infinity();
        run_min = std::min(run_min, u);
        if (u > 0.0) worst = std::max(worst, run_min > 0.0 ? u / run_min : std::numeric_limits<double>::infinity());
    }
    return worst;
}

double doubling_constant(const ProfileSpec& U, double lo) {
    double worst = 0.0;
    for (double t : geomspace(lo, 0.5, 1000)) {
        const double u = U(t), u2 = U(2.0 * t);
        if (u == 0.0) continue;
        worst = std::max(worst, u2 > 0.0 ? u / u2 : std::numeric_limits<double>::infinity());
    }
    return worst;
}

double sup_on(const ProfileSpec& U, double lo, double hi) {
    double s = 0.0;
    for (double t : geomspace(lo, hi, 1000)) s = std::max(s, U(t));
    return s;
}

// Grows by less than 50% when the sampled range is extended: read as bounded.
bool stable_sup(double coarse, double fine) { return std::isfinite(fine) && fine <= 1.5 * coarse; }

double ratio_change(double cmin, double cmax, double fmin, double fmax) {
    return std::max(std::abs(fmax / cmax - 1.0), std::abs(cmin / fmin - 1.0));
}

}  // namespace

ProfileSpec ProfileSpec::power(double beta) {
    std::ostringstream os;
    os << "t^-" << beta;
    return ProfileSpec{beta, [beta](double t) { return std::pow(t, -beta); }, os.str()};
}

ProfileSpec ProfileSpec::constant(double c) {
    if (c == 1.0) return ProfileSpec{0.0, [](double) { return 1.0; }, "1"};
    return ProfileSpec{std::nullopt, [c](double) { return c; }, "const"};
}

ProfileSpec ProfileSpec::general(std::function<double(double)> U, std::string meta) {
    return ProfileSpec{std::nullopt, std::move(U), std::move(meta)};
}

UConditions check_U_conditions(const StableModel& m, const ProfileSpec& U) {
    UConditions c;
    const double a = m.alpha;
    if (U.beta) {
        const double b = *U.beta;
        c.integrable = b < 1.0 + a / 2.0;
        // t^{-β} is nonincreasing and bounded on [c, ∞) exactly when β >= 0.
        c.almost_nonincreasing = b >= 0.0;
        c.reverse_doubling = true;
        c.bounded_away = b >= 0.0;
        std::ostringstream os;
        os << "power profile: exponent of U V is " << (a / 2.0 - b);
        c.note = os.str();
        return c;
    }
    auto dec = decide_integral_near_zero([&](double t) { return U(t) * renewal_eval(m, t); });
    c.integrable = dec.finite;
    c.almost_nonincreasing = stable_sup(nonincreasing_constant(U, 1e-4), nonincreasing_constant(U, 1e-8));
    c.reverse_doubling = stable_sup(doubling_constant(U, 1e-4), doubling_constant(U, 1e-8));
    c.bounded_away = stable_sup(sup_on(U, 1e-2, 1e2), sup_on(U, 1e-2, 1e4));
    c.note = "sampled on log grids of 1000 points";
    return c;
}

double profile_moment(const StableModel& m, const ProfileSpec& U, double a) {
    const double al = m.alpha;
    if (U.beta) {
        const double e = 1.0 + al / 2.0 - *U.beta;
        if (e <= 0.0) return std::numeric_limits<double>::infinity();
        return std::pow(a, e) / e;
    }
    QuadratureOptions o;
    o.rel_tol = 1e-10;
    auto H = [&](double v) {
        const double t = std::exp(v);
        if (!(t > 0.0)) return 0.0;
        return U(t) * std::pow(t, al / 2.0) * t;
    };
    return integrate_from_minus_infinity(H, std::log(a), o).value;
}

GreenProfile green_profile(const StableModel& m, const BallDomain& b, const ProfileSpec& U, const Point& x) {
    if (!check_U_conditions(m, U).integrable)
        throw DivergenceError("green_profile: profile violates the integrability condition (U1)", "U1");
    if (!b.inside(x)) throw DomainError("green_profile: x must lie inside the ball");
    const double al = m.alpha, del = b.delta(x), D = b.diameter();
    const double Vd = std::pow(del, al / 2.0);
    GreenProfile g;
    g.inner = Vd / del * profile_moment(m, U, del);
    if (U.beta) {
        const double e = al / 2.0 - *U.beta;
        const double I = std::abs(e) < 1e-14 ? std::log(D / del) : (std::pow(D, e) - std::pow(del, e)) / e;
        g.outer = Vd * I;
    } else {
        QuadratureOptions o;
        o.rel_tol = 1e-10;
        auto H = [&](double v) {
            const double t = std::exp(v);
            return U(t) * std::pow(t, al / 2.0);
        };
        g.outer = Vd * integrate(H, std::log(del), std::log(D), o).value;
    }
    return g;
}

bool poisson_profile_admissible(const StableModel& m, const ProfileSpec& Ut) {
    const double a = m.alpha;
    if (Ut.beta) return *Ut.beta > -a && *Ut.beta < 1.0 - a / 2.0;
    auto near = decide_integral_near_zero([&](double t) { return Ut(t) / std::pow(t, a / 2.0); });
    auto far = decide_integral_at_infinity([&](double t) { return Ut(t) / (std::pow(t, a) * t); });
    return near.finite && far.finite;
}

PoissonProfile poisson_profile(const StableModel& m, const BallDomain& b, const ProfileSpec& Ut, const Point& x) {
    if (!poisson_profile_admissible(m, Ut))
        throw DivergenceError("poisson_profile: exterior profile violates the admissibility condition", "exterior");
    if (!b.inside(x)) throw DomainError("poisson_profile: x must lie inside the ball");
    const double a = m.alpha, del = b.delta(x), D = b.diameter();
    QuadratureOptions o;
    o.rel_tol = 1e-10;
    auto H = [&](double v) {
        const double t = std::exp(v);
        if (!(t > 0.0)) return 0.0;
        return Ut(t) * std::pow(t, 1.0 - a / 2.0) / (del + t);
    };
    const double lo = std::log(std::min(del, D));
    double I = integrate_from_minus_infinity(H, lo, o).value;
    if (del < D) I += integrate(H, lo, std::log(D), o).value;
    PoissonProfile p;
    p.value = std::pow(del, a / 2.0) * I;
    p.upper_bound = std::pow(del, a / 2.0) / del;
    return p;
}

const char* to_string(EstimateKind k) {
    switch (k) {
        case EstimateKind::green: return "green";
        case EstimateKind::poisson: return "poisson";
        case EstimateKind::martin: return "martin";
        case EstimateKind::killing: return "killing";
        case EstimateKind::mdsigma: return "mdsigma";
        case EstimateKind::green_profile: return "green_profile";
        case EstimateKind::poisson_profile: return "poisson_profile";
    }
    return "?";
}

std::optional<EstimateKind> estimate_kind_from_string(const std::string& s) {
    for (auto k : {EstimateKind::green, EstimateKind::poisson, EstimateKind::martin, EstimateKind::killing,
                   EstimateKind::mdsigma, EstimateKind::green_profile, EstimateKind::poisson_profile})
        if (s == to_string(k)) return k;
    return std::nullopt;
}

namespace {

std::vector<EstimateSample> audit_samples(const StableModel& m, const BallDomain& b, EstimateKind kind, int points,
                                          double floor, double beta) {
    const double R = b.radius, a = m.alpha;
    const int d = m.dim;
    auto V = [&](double t) { return std::pow(t, a / 2.0); };
    const Point e1{1.0, 0.0, 0.0};
    auto interior = [&](double del, double theta) { return b.center + (R - del) * dir(theta); };
    std::vector<EstimateSample> out;
    std::vector<std::function<void(EstimateSample&)>> jobs;

    switch (kind) {
        case EstimateKind::green: {
            const int n = std::max(2, int(std::lround(std::cbrt(double(points)))));
            const auto dels = geomspace(floor * R, R, n);
            auto th = geomspace(floor / 4.0, kPi, n - 1);
            th.insert(th.begin(), 0.0);
            for (double dx : dels)
                for (double dy : dels)
                    for (double t : th) {
                        const Point x = interior(dx, 0.0), y = interior(dy, t);
                        if (distance(x, y) < 1e-12 * R) continue;
                        jobs.push_back([=, &m, &b](EstimateSample& s) {
                            const double w = distance(x, y);
                            s.delta_x = dx;
                            s.aux = dy;
                            s.value = green(m, b, x, y);
                            s.estimate = std::min(1.0, V(dx) / V(w)) * std::min(1.0, V(dy) / V(w)) * V(w) * V(w) /
                                         std::pow(w, d);
                        });
                    }
            break;
        }
        case EstimateKind::poisson: {
            const int n = std::max(2, int(std::lround(std::cbrt(double(points)))));
            const auto dels = geomspace(floor * R, R, n);
            const auto ts = geomspace(floor * R, 100.0 * R, n);
            auto th = geomspace(floor / 4.0, kPi, n - 1);
            th.insert(th.begin(), 0.0);
            for (double dx : dels)
                for (double t : ts)
                    for (double ang : th) {
                        const Point x = interior(dx, 0.0), z = b.center + (R + t) * dir(ang);
                        jobs.push_back([=, &m, &b](EstimateSample& s) {
                            s.delta_x = dx;
                            s.aux = t;
                            s.value = poisson(m, b, x, z);
                            s.estimate = V(dx) / (V(t) * (1.0 + V(t))) / std::pow(distance(x, z), d);
                        });
                    }
            break;
        }
        case EstimateKind::martin: {
            const int n = std::max(2, int(std::lround(std::sqrt(double(points)))));
            const auto dels = geomspace(floor * R, R, n);
            auto th = geomspace(floor / 4.0, kPi, n - 1);
            th.insert(th.begin(), 0.0);
            for (double dx : dels)
                for (double ang : th) {
                    const Point x = interior(dx, 0.0), z = b.center + R * dir(ang);
                    jobs.push_back([=, &m, &b](EstimateSample& s) {
                        s.delta_x = dx;
                        s.aux = ang;
                        s.value = martin(m, b, x, z);
                        s.estimate = V(dx) / std::pow(distance(x, z), d);
                    });
                }
            break;
        }
        case EstimateKind::killing:
        case EstimateKind::mdsigma:
        case EstimateKind::green_profile:
        case EstimateKind::poisson_profile: {
            const ProfileSpec U = ProfileSpec::power(beta);
            const auto field = ScalarField::delta_power(b, 1.0, beta);
            const auto ext = ExteriorDensity::power(beta);
            for (double dx : geomspace(floor * R, R, points)) {
                const Point x = b.center + (R - dx) * e1;
                jobs.push_back([=, &m, &b](EstimateSample& s) {
                    s.delta_x = dx;
                    switch (kind) {
                        case EstimateKind::killing:
                            s.value = killing(m, b, x);
                            s.estimate = 1.0 / (V(dx) * V(dx));
                            break;
                        case EstimateKind::mdsigma:
                            s.value = martin_sigma(m, b, x);
                            s.estimate = V(dx) / dx;
                            break;
                        case EstimateKind::green_profile: {
                            PotentialOptions po;
                            po.rel_tol = 1e-7;
                            s.value = green_potential(m, b, field, x, po);
                            s.estimate = green_profile(m, b, U, x).total();
                            break;
                        }
                        default: {
                            PotentialOptions po;
                            po.rel_tol = 1e-7;
                            s.value = poisson_potential(m, b, ext, x, po);
                            s.estimate = poisson_profile(m, b, U, x).value;
                            break;
                        }
                    }
                });
            }
            break;
        }
    }
    // Profile kinds validate admissibility eagerly so the divergence surfaces as such.
    if (kind == EstimateKind::green_profile && !check_U_conditions(m, ProfileSpec::power(beta)).integrable)
        throw DivergenceError("audit: profile violates the integrability condition (U1)", "U1");
    if (kind == EstimateKind::poisson_profile && !poisson_profile_admissible(m, ProfileSpec::power(beta)))
        throw DivergenceError("audit: exterior profile violates the admissibility condition", "exterior");
    out.resize(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t i) { jobs[i](out[i]); });
    return out;
}

std::pair<double, double> ratio_range(const std::vector<EstimateSample>& rows) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& s : rows) {
        const double q = s.value / s.estimate;
        if (!std::isfinite(q) || q <= 0.0) return {std::numeric_limits<double>::quiet_NaN(), q};
        lo = std::min(lo, q);
        hi = std::max(hi, q);
    }
    return {lo, hi};
}

}  // namespace

EstimateReport audit_kernel_estimate(const StableModel& m, const BallDomain& b, EstimateKind kind,
                                     const GridSpec& grid) {
    if (!(grid.delta_floor > 0.0 && grid.delta_floor < grid.coarse_floor && grid.coarse_floor < 1.0))
        throw ConfigError("audit: need 0 < delta_floor < coarse_floor < 1");
    if (grid.points < 4) throw ConfigError("audit: grid needs at least 4 points");
    EstimateReport rep;
    rep.kind = kind;
    rep.rows = audit_samples(m, b, kind, grid.points, grid.delta_floor, grid.profile_beta);
    const auto coarse = audit_samples(m, b, kind, grid.points, grid.coarse_floor, grid.profile_beta);
    rep.samples = rep.rows.size();
    auto [fmin, fmax] = ratio_range(rep.rows);
    auto [cmin, cmax] = ratio_range(coarse);
    rep.ratio_min = fmin;
    rep.ratio_max = fmax;
    rep.coarse_min = cmin;
    rep.coarse_max = cmax;
    rep.change = ratio_change(cmin, cmax, fmin, fmax);
    std::ostringstream os;
    os << to_string(kind) << ": " << rep.samples << " samples, delta floor " << grid.delta_floor << " (coarse "
       << grid.coarse_floor << ")";
    if (kind == EstimateKind::green_profile || kind == EstimateKind::poisson_profile)
        os << ", beta " << grid.profile_beta;
    rep.grid_spec = os.str();
    rep.passes = std::isfinite(fmin) && std::isfinite(fmax) && fmin > 0.0 && std::isfinite(cmin) &&
                 fmax / fmin < 1e3 && rep.change < 0.2;
    return rep;
}

double RegionIntegrals::sum() const { return pairwise_sum(parts); }

namespace {

// ∫ over {t_a < δ_D(y) < t_b, w_lo <= |x - y| < w_hi} of G_D(x,y) U(δ_D(y)) dy, with x at radius r.
double region_integral(const StableModel& m, const BallDomain& b, const ProfileSpec& U, double r, double t_a,
                       double t_b, double w_lo, double w_hi) {
    const double R = b.radius, del = R - r;
    const int d = m.dim;
    if (!(t_b > t_a)) return 0.0;
    QuadratureOptions o;
    o.rel_tol = 1e-7;
    o.max_evaluations = 200000;
    auto H = [&](double v) {
        const double t = std::exp(v), s = R - t;
        if (!(s > 0.0) || !(t > 0.0)) return 0.0;
        const double gap = std::abs(t - del);
        const double shell = green_sphere_window(m, b, r, s, gap, w_lo, w_hi);
        if (!std::isfinite(shell)) return 0.0;
        return U(t) * std::pow(s, d - 1) * shell * t;
    };
    const double t_cut = 1e-11 * R;
    // Log-variable piece on [ta, tb] in t.
    auto log_piece = [&](double ta, double tb) {
        if (!(tb > ta)) return 0.0;
        const double lo = std::log(std::max(ta, t_cut)), hi = std::log(tb);
        std::vector<double> pts{lo, hi};
        for (double v = lo + 3.0; v < hi; v += 3.0) pts.push_back(v);
        std::sort(pts.begin(), pts.end());
        double val = integrate(H, pts, o).value;
        if (ta < t_cut) {
            // Power-law tail below the layer cut.
            const double h0 = H(lo), h1 = H(lo + 1.0);
            if (h0 > 0.0 && h1 / h0 > 1.0) val += h0 / std::log(h1 / h0);
        }
        return val;
    };
    // t = δ ± L u^k flattens the |t - δ|^{α-1} diagonal behaviour of the shell integral.
    const double k = std::max(1.0, 2.0 / m.alpha);
    const std::vector<double> upts = graded_points(0.0, 1.0, 6, false);
    auto diag_piece = [&](double L, double sign) {
        if (!(L > 0.0)) return 0.0;
        return integrate(
                   [&](double u) {
                       const double g = L * std::pow(u, k);
                       if (g == 0.0) return 0.0;
                       const double t = del + sign * g;
                       return H(std::log(t)) / t * L * k * std::pow(u, k - 1.0);
                   },
                   upts, o)
            .value;
    };
    if (!(del > t_a && del < t_b)) return log_piece(t_a, t_b);
    const double na = std::max(t_a, del / 2.0), nb = std::min(t_b, 1.5 * del);
    double val = log_piece(t_a, na) + diag_piece(del - na, -1.0) + diag_piece(nb - del, 1.0) + log_piece(nb, t_b);
    return val;
}

}  // namespace

RegionIntegrals region_decomposition(const StableModel& m, const BallDomain& b, const ProfileSpec& U, const Point& x,
                                     double eta) {
    if (!b.inside(x)) throw DomainError("region_decomposition: x must lie inside the ball");
    const auto cond = check_U_conditions(m, U);
    if (!cond.all()) throw PreconditionError("region_decomposition: profile does not satisfy conditions (U)");
    const double D = b.diameter();
    if (eta <= 0.0) eta = D / 40.0;
    if (eta >= D / 20.0) throw PreconditionError("region_decomposition: eta must be below diam/20");
    const double del = b.delta(x), r = b.radial(x), r0 = D / 10.0;
    const double inf = std::numeric_limits<double>::infinity();
    RegionIntegrals out;
    out.eta = eta;
    if (del < eta / 2.0) {
        out.near_boundary = true;
        out.parts = {
            region_integral(m, b, U, r, del / 2.0, 1.5 * del, 0.0, del / 2.0),  // D1 = B(x, δ/2)
            region_integral(m, b, U, r, 0.0, eta, r0, inf),                     // D2
            region_integral(m, b, U, r, 0.0, del / 2.0, 0.0, r0),               // D3
            region_integral(m, b, U, r, 1.5 * del, eta, 0.0, r0),               // D4
            region_integral(m, b, U, r, del / 2.0, 1.5 * del, del / 2.0, r0),   // D5
        };
    } else {
        out.parts = {
            region_integral(m, b, U, r, 0.0, eta / 4.0, 0.0, inf),
            region_integral(m, b, U, r, eta / 4.0, eta, 0.0, inf),
        };
    }
    return out;
}

RegimeFit poisson_regime_fit(const StableModel& m, const BallDomain& b, double beta, double delta_lo,
                             double delta_hi, int points) {
    if (!(delta_lo > 0.0 && delta_lo < delta_hi && delta_hi < 1.0) || points < 3)
        throw ConfigError("poisson_regime_fit: need 0 < delta_lo < delta_hi < 1 and at least 3 points");
    const double a = m.alpha;
    const auto g = ExteriorDensity::power(beta);
    RegimeFit r;
    r.beta = beta;
    const auto dels = geomspace(delta_lo, delta_hi, points);
    std::vector<double> lp(points), ld(points);
    r.samples.resize(points);
    parallel_for(points, [&](std::size_t i) {
        const double del = dels[i] * b.radius;
        const double v = poisson_potential(m, b, g, b.along(b.radius - del));
        r.samples[i] = {del, v};
        ld[i] = std::log(del);
        lp[i] = std::log(v);
    });
    const double n = points;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < points; ++i) {
        sx += ld[i];
        sy += lp[i];
        sxx += ld[i] * ld[i];
        sxy += ld[i] * lp[i];
    }
    r.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    // RMS residual of log P - log model after removing the best constant.
    auto rms = [&](auto model) {
        double mean = 0.0;
        for (int i = 0; i < points; ++i) mean += lp[i] - model(i);
        mean /= n;
        double ss = 0.0;
        for (int i = 0; i < points; ++i) ss += std::pow(lp[i] - model(i) - mean, 2);
        return std::sqrt(ss / n);
    };
    r.rms_power_neg_beta = rms([&](int i) { return -beta * ld[i]; });
    r.rms_power_half = rms([&](int i) { return a / 2.0 * ld[i]; });
    // δ^{α/2}(c1 log(R/δ) + c2): linear least squares for the two constants of P/δ^{α/2}.
    {
        double su = 0, sq = 0, suu = 0, suq = 0;
        std::vector<double> L(points), q(points);
        for (int i = 0; i < points; ++i) {
            L[i] = std::log(b.radius) - ld[i];
            q[i] = std::exp(lp[i] - a / 2.0 * ld[i]);
            su += L[i];
            sq += q[i];
            suu += L[i] * L[i];
            suq += L[i] * q[i];
        }
        const double c1 = (n * suq - su * sq) / (n * suu - su * su), c0 = (sq - c1 * su) / n;
        double ss = 0.0;
        for (int i = 0; i < points; ++i) {
            const double fit = c1 * L[i] + c0;
            ss += fit > 0.0 ? std::pow(std::log(q[i] / fit), 2) : std::numeric_limits<double>::infinity();
        }
        r.rms_log = std::sqrt(ss / n);
    }
    if (std::abs(beta + a / 2.0) < 1e-12) {
        r.regime = "log";
        r.predicted_slope = a / 2.0;
    } else if (beta > -a / 2.0) {
        r.regime = "neg_beta";
        r.predicted_slope = -beta;
    } else {
        r.regime = "half";
        r.predicted_slope = a / 2.0;
    }
    return r;
}

}  // namespace nonlocal
