#pragma once

#include "nonlocal/geometry.hpp"
#include "nonlocal/levy.hpp"

namespace nonlocal {

// ∫_0^{r0} s^{a/2-1}(1+s)^{-d/2} ds, the radial part of the ball Green function.
double green_incomplete_integral(const StableModel& m, double r0);

double green(const StableModel& m, const BallDomain& b, const Point& x, const Point& y);
double poisson(const StableModel& m, const BallDomain& b, const Point& x, const Point& z);
double martin(const StableModel& m, const BallDomain& b, const Point& x, const Point& z);
double modified_martin(const StableModel& m, const BallDomain& b, const Point& x, const Point& z);
double killing(const StableModel& m, const BallDomain& b, const Point& x);

// Green function of the ball centered at 0 as a function of |x|^2-free data:
// w = |x-y| and c = (R^2-|x|^2)(R^2-|y|^2)/R^2.
double green_from_separation(const StableModel& m, double w, double c);

// ∫_{S^{d-1}} G(x, s ω) σ(dω) for |x - center| = r (full sphere measure, not the mean).
double green_sphere_average(const StableModel& m, const BallDomain& b, double r, double s);
// Same with |r - s| supplied exactly (avoids cancellation when s is generated as r ± gap).
double green_sphere_average_gap(const StableModel& m, const BallDomain& b, double r, double s, double gap);
// Part of the sphere integral where w_lo <= |x - y| < w_hi.
double green_sphere_window(const StableModel& m, const BallDomain& b, double r, double s, double gap, double w_lo,
                           double w_hi);

// Closed forms used as references.
double expected_exit_time(const StableModel& m, const BallDomain& b, const Point& x);  // G_D 1
double martin_sigma(const StableModel& m, const BallDomain& b, const Point& x);        // M_D σ

}  // namespace nonlocal
