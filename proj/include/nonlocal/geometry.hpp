#pragma once

#include <array>
#include <cmath>

namespace nonlocal {

// Points always carry three coordinates; in two dimensions the last one is zero.
using Point = std::array<double, 3>;

inline Point operator+(const Point& a, const Point& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Point operator-(const Point& a, const Point& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Point operator*(double s, const Point& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double dot(const Point& a, const Point& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Point& a) { return std::sqrt(dot(a, a)); }
inline double distance(const Point& a, const Point& b) { return norm(a - b); }

struct BallDomain {
    Point center{0.0, 0.0, 0.0};
    double radius = 1.0;
    int dim = 3;

    // Relative distance under which a point counts as lying on the sphere.
    static constexpr double boundary_tol = 1e-12;

    static BallDomain unit(int dim) { return BallDomain{{0.0, 0.0, 0.0}, 1.0, dim}; }

    double diameter() const { return 2.0 * radius; }
    double radial(const Point& x) const { return distance(x, center); }
    double delta(const Point& x) const { return radius - radial(x); }
    double delta_ext(const Point& z) const { return radial(z) - radius; }
    bool inside(const Point& x) const { return delta(x) > boundary_tol * radius; }
    bool outside(const Point& z) const { return delta_ext(z) > boundary_tol * radius; }
    bool on_sphere(const Point& z) const { return std::abs(delta(z)) <= boundary_tol * radius; }

    // Point at distance r from the center along the first axis (or along e).
    Point along(double r, const Point& e = {1.0, 0.0, 0.0}) const { return center + r * e; }
};

// Unit vector making angle theta with e1 inside the (e1, e2) plane.
inline Point planar_direction(double theta) { return {std::cos(theta), std::sin(theta), 0.0}; }

}  // namespace nonlocal
