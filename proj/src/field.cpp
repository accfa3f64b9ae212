#include "nonlocal/field.hpp"

#include <algorithm>
#include <cmath>

#include "nonlocal/errors.hpp"

namespace nonlocal {

FieldGrid FieldGrid::make(const BallDomain& b, int n_radial, int n_angular, double delta_min) {
    if (n_radial < 8) throw DomainError("FieldGrid: need at least 8 radial nodes");
    if (!(delta_min > 0.0 && delta_min < 0.5)) throw DomainError("FieldGrid: delta_min must lie in (0, 1/2)");
    FieldGrid g;
    g.radius = b.radius;
    g.angular = n_angular;
    g.delta_min = delta_min;
    const double R = b.radius;
    const int nu = std::max(2, n_radial / 8);
    const int ng = n_radial - nu;
    for (int i = 0; i < nu; ++i) g.radii.push_back(0.5 * R * i / nu);
    for (int k = 0; k < ng; ++k) {
        const double del = 0.5 * R * std::pow(2.0 * delta_min, double(k) / (ng - 1));
        g.radii.push_back(R - del);
    }
    return g;
}

std::vector<double> FieldGrid::deltas() const {
    std::vector<double> d;
    d.reserve(radii.size());
    for (double r : radii) d.push_back(radius - r);
    return d;
}

double interpolate_log_delta(const std::vector<double>& deltas, const std::vector<double>& values, double delta) {
    const std::size_t n = deltas.size();
    // deltas are decreasing.
    if (delta >= deltas.front()) return values.front();
    if (delta <= deltas.back()) {
        const double d1 = deltas[n - 2], d2 = deltas[n - 1], v1 = values[n - 2], v2 = values[n - 1];
        if (v1 > 0.0 && v2 > 0.0) {
            const double slope = std::log(v2 / v1) / std::log(d2 / d1);
            return v2 * std::pow(delta / d2, slope);
        }
        if (v1 < 0.0 && v2 < 0.0) {
            const double slope = std::log(v2 / v1) / std::log(d2 / d1);
            return v2 * std::pow(delta / d2, slope);
        }
        return v2;
    }
    // First index with deltas[i] < delta.
    auto it = std::upper_bound(deltas.begin(), deltas.end(), delta, std::greater<double>());
    const std::size_t i = static_cast<std::size_t>(it - deltas.begin());
    const double e0 = std::log(deltas[i - 1]), e1 = std::log(deltas[i]), e = std::log(delta);
    const double lam = (e - e0) / (e1 - e0);
    return (1.0 - lam) * values[i - 1] + lam * values[i];
}

ScalarField::ScalarField() : zero_(true) {}

ScalarField ScalarField::zero() { return ScalarField(); }

ScalarField ScalarField::constant(double c) {
    ScalarField f;
    f.zero_ = (c == 0.0);
    f.radial_ = [c](double) { return c; };
    f.power_ = 0.0;
    f.power_coef_ = c;
    f.meta_ = "constant";
    return f;
}

ScalarField ScalarField::radial(const BallDomain& b, Radial fn, std::string meta, double boundary_exponent) {
    ScalarField f;
    f.zero_ = false;
    f.ball_ = b;
    f.radial_ = std::move(fn);
    f.meta_ = std::move(meta);
    f.boundary_exponent_ = boundary_exponent;
    return f;
}

ScalarField ScalarField::delta_profile(const BallDomain& b, Radial U, std::string meta, double boundary_exponent) {
    const double R = b.radius;
    return radial(b, [U = std::move(U), R](double r) { return U(R - r); }, std::move(meta), boundary_exponent);
}

ScalarField ScalarField::delta_power(const BallDomain& b, double coef, double beta) {
    const double R = b.radius;
    ScalarField f = radial(b, [coef, beta, R](double r) { return coef * std::pow(R - r, -beta); },
                           "delta_power", std::max(0.0, beta));
    f.zero_ = (coef == 0.0);
    f.power_ = beta;
    f.power_coef_ = coef;
    return f;
}

ScalarField ScalarField::general(const BallDomain& b, Rule fn, std::string meta) {
    ScalarField f;
    f.zero_ = false;
    f.ball_ = b;
    f.rule_ = std::move(fn);
    f.meta_ = std::move(meta);
    return f;
}

ScalarField ScalarField::radial_table(const BallDomain& b, std::vector<double> radii, std::vector<double> values,
                                      std::string meta) {
    if (radii.size() != values.size() || radii.size() < 2) throw DomainError("radial_table: size mismatch");
    std::vector<double> deltas;
    for (double r : radii) deltas.push_back(b.radius - r);
    for (double v : values)
        if (!std::isfinite(v)) throw DomainError("radial_table: non-finite node value");
    const double R = b.radius;
    return radial(
        b, [deltas = std::move(deltas), values = std::move(values), R](double r) {
            return interpolate_log_delta(deltas, values, R - r);
        },
        std::move(meta));
}

double ScalarField::operator()(const Point& x) const {
    if (zero_) return 0.0;
    if (radial_) return radial_(ball_.radial(x));
    return rule_(x);
}

double ScalarField::at_radius(double r) const {
    if (zero_) return 0.0;
    if (!radial_) throw PreconditionError("at_radius: field is not radial");
    return radial_(r);
}

void ScalarField::build_cache(const FieldGrid& g) {
    if (!cache_.empty()) return;
    std::vector<double> c;
    if (zero_ || radial_) {
        for (double r : g.radii) c.push_back(zero_ ? 0.0 : radial_(r));
    } else {
        // Nodes (r_i, θ_j) in the (e1, e_d) half plane.
        for (double r : g.radii)
            for (int j = 0; j < g.angular; ++j) {
                const double th = M_PI * (j + 0.5) / g.angular;
                Point p{r * std::sin(th), 0.0, r * std::cos(th)};
                if (ball_.dim == 2) p = {r * std::cos(th), r * std::sin(th), 0.0};
                c.push_back(rule_(ball_.center + p));
            }
    }
    for (double v : c)
        if (!std::isfinite(v)) throw DomainError("ScalarField: non-finite value on grid node");
    cache_ = std::move(c);
}

ScalarField ScalarField::scaled(double s) const {
    ScalarField f = *this;
    f.cache_.clear();
    if (zero_ || s == 0.0) return ScalarField::zero();
    if (radial_) {
        auto g = radial_;
        f.radial_ = [g, s](double r) { return s * g(r); };
    } else {
        auto g = rule_;
        f.rule_ = [g, s](const Point& x) { return s * g(x); };
    }
    f.power_coef_ *= s;
    return f;
}

ExteriorDensity ExteriorDensity::zero() { return ExteriorDensity{}; }

ExteriorDensity ExteriorDensity::power(double beta, double coef) {
    ExteriorDensity g;
    g.profile = [beta, coef](double t) { return coef * std::pow(t, -beta); };
    g.decay_exponent = beta;
    g.power_beta = beta;
    g.coef = coef;
    g.meta = "power";
    return g;
}

ExteriorDensity ExteriorDensity::indicator(double t0, double t1, double value) {
    ExteriorDensity g;
    g.profile = [t0, t1, value](double t) { return (t > t0 && t < t1) ? value : 0.0; };
    g.decay_exponent = INFINITY;
    g.breakpoints = {t0, t1};
    g.meta = "indicator";
    return g;
}

ExteriorDensity ExteriorDensity::general(std::function<double(double)> f, std::string meta,
                                         std::vector<double> breakpoints) {
    ExteriorDensity g;
    g.profile = std::move(f);
    g.meta = std::move(meta);
    g.breakpoints = std::move(breakpoints);
    return g;
}

BoundaryDensity BoundaryDensity::zero() { return BoundaryDensity{}; }

BoundaryDensity BoundaryDensity::uniform(double c) {
    BoundaryDensity h;
    h.constant = c;
    h.meta = "uniform";
    return h;
}

BoundaryDensity BoundaryDensity::axial(const Point& axis, std::function<double(const Point&)> fn, std::string meta) {
    BoundaryDensity h;
    h.h = std::move(fn);
    h.axis = (1.0 / norm(axis)) * axis;
    h.meta = std::move(meta);
    return h;
}

BoundaryDensity BoundaryDensity::general(std::function<double(const Point&)> fn, std::string meta) {
    BoundaryDensity h;
    h.h = std::move(fn);
    h.meta = std::move(meta);
    return h;
}

}  // namespace nonlocal
