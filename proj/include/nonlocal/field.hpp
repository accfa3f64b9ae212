#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nonlocal/geometry.hpp"

namespace nonlocal {

// Radial node set refined toward the sphere. Nodes are radii in [0, R(1 - delta_min)];
// the angular count describes the (r, θ) cache used for non-radial fields.
struct FieldGrid {
    double radius = 1.0;
    std::vector<double> radii;
    int angular = 32;
    double delta_min = 1e-6;

    // n_radial/8 uniform nodes on [0, R/2), the rest geometric in δ from R/2 to delta_min·R.
    static FieldGrid make(const BallDomain& b, int n_radial = 64, int n_angular = 32, double delta_min = 1e-6);
    std::vector<double> deltas() const;
    std::size_t size() const { return radii.size(); }
};

// Piecewise-linear interpolation in log δ over grid values, power-law extrapolation
// below the innermost node.
double interpolate_log_delta(const std::vector<double>& deltas, const std::vector<double>& values, double delta);

// A real function on D. Radial fields are stored as functions of |x - center|.
class ScalarField {
public:
    using Rule = std::function<double(const Point&)>;
    using Radial = std::function<double(double)>;

    ScalarField();  // the zero field

    static ScalarField zero();
    static ScalarField constant(double c);
    static ScalarField radial(const BallDomain& b, Radial f, std::string meta, double boundary_exponent = 0.0);
    // U(δ_D(x)) for a rule t -> U(t).
    static ScalarField delta_profile(const BallDomain& b, Radial U, std::string meta, double boundary_exponent = 0.0);
    // c δ_D^{-β}; the exponent is kept for exact divergence arithmetic.
    static ScalarField delta_power(const BallDomain& b, double coef, double beta);
    static ScalarField general(const BallDomain& b, Rule f, std::string meta);
    static ScalarField radial_table(const BallDomain& b, std::vector<double> radii, std::vector<double> values,
                                    std::string meta);

    double operator()(const Point& x) const;
    bool is_radial() const { return static_cast<bool>(radial_); }
    bool is_zero() const { return zero_; }
    double at_radius(double r) const;  // radial fields only
    std::optional<double> power_exponent() const { return power_; }
    double power_coefficient() const { return power_coef_; }
    double boundary_exponent() const { return boundary_exponent_; }
    const std::string& meta() const { return meta_; }
    const BallDomain& ball() const { return ball_; }

    // Write-once cache of node values on a grid (radial nodes, or radial × angular).
    void build_cache(const FieldGrid& g);
    const std::vector<double>& cached() const { return cache_; }

    ScalarField scaled(double s) const;

private:
    BallDomain ball_;
    Radial radial_;
    Rule rule_;
    bool zero_ = false;
    std::optional<double> power_;
    double power_coef_ = 0.0;
    double boundary_exponent_ = 0.0;
    std::string meta_;
    std::vector<double> cache_;
};

// λ(dz) = Ũ(δ_{D^c}(z)) dz.
struct ExteriorDensity {
    std::function<double(double)> profile;
    double decay_exponent = 0.0;        // Ũ(t) ≲ t^{-decay} at infinity (informational)
    std::optional<double> power_beta;   // Ũ(t) = coef t^{-β}
    double coef = 1.0;
    std::vector<double> breakpoints;    // discontinuities of Ũ in t
    std::string meta;

    static ExteriorDensity zero();
    static ExteriorDensity power(double beta, double coef = 1.0);
    static ExteriorDensity indicator(double t0, double t1, double value = 1.0);
    static ExteriorDensity general(std::function<double(double)> f, std::string meta,
                                   std::vector<double> breakpoints = {});
    bool is_zero() const { return !profile; }
    double operator()(double t) const { return profile ? profile(t) : 0.0; }
};

// μ(dz) = h(z) σ(dz) with h continuous and nonnegative.
struct BoundaryDensity {
    std::function<double(const Point&)> h;
    std::optional<double> constant;
    std::optional<Point> axis;  // h depends only on the angle to this axis
    std::string meta;

    static BoundaryDensity zero();
    static BoundaryDensity uniform(double c);
    static BoundaryDensity axial(const Point& axis, std::function<double(const Point&)> h, std::string meta);
    static BoundaryDensity general(std::function<double(const Point&)> h, std::string meta);
    bool is_zero() const { return !h && !constant; }
    double operator()(const Point& z) const { return constant ? *constant : (h ? h(z) : 0.0); }
};

}  // namespace nonlocal
