#pragma once

#include <utility>
#include <vector>

namespace nonlocal {

// Isotropic alpha-stable process in R^d with symbol |xi|^alpha.
struct StableModel {
    double alpha = 1.0;
    int dim = 3;
    double levy_const = 0.0;     // C(d,a):  j(r) = C r^{-d-a}
    double green_const = 0.0;    // B(d,a):  ball Green function prefactor
    double poisson_const = 0.0;  // C_P(d,a): ball Poisson kernel prefactor
    double exit_time_const = 0.0;  // E_x tau_B = const * (R^2-|x|^2)^{a/2}
    double sphere_area = 0.0;    // |S^{d-1}|

    static StableModel make(double alpha, int dim);
};

double phi_eval(const StableModel& m, double lam);
double renewal_eval(const StableModel& m, double t);
double levy_density(const StableModel& m, double r);

struct ScalingProbeResult {
    double delta1 = 0.0;
    double delta2 = 0.0;
    double a1 = 1.0;
    double a2 = 1.0;
};

// Exhaustive pairwise slopes of log phi; certified on the sample set.
ScalingProbeResult weak_scaling_probe(const std::vector<std::pair<double, double>>& samples,
                                      double s_min, double s_max);

double unit_sphere_area(int dim);

}  // namespace nonlocal
