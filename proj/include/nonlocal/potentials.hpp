#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "nonlocal/field.hpp"
#include "nonlocal/geometry.hpp"
#include "nonlocal/levy.hpp"

namespace nonlocal {

struct PotentialOptions {
    double rel_tol = 1e-8;
    std::size_t budget = 1'000'000;
};

// G_D f(x) = ∫_D G_D(x,y) f(y) dy.
double green_potential(const StableModel& m, const BallDomain& b, const ScalarField& f, const Point& x,
                       const PotentialOptions& opt = {});

// Radial Green potential at |x - center| = r of a radial density s -> f(s).
double green_potential_radial(const StableModel& m, const BallDomain& b, const std::function<double(double)>& f,
                              double r, const PotentialOptions& opt = {});

// P_D λ(x) for λ(dz) = Ũ(δ_{D^c}(z)) dz.
double poisson_potential(const StableModel& m, const BallDomain& b, const ExteriorDensity& g, const Point& x,
                         const PotentialOptions& opt = {});

// P_B F(x) for an exterior function F depending only on t = |z - center| - R.
double poisson_potential_radial(const StableModel& m, const BallDomain& b, const std::function<double(double)>& F,
                                double r, const std::vector<double>& t_breaks = {}, const PotentialOptions& opt = {});

// M_D μ(x) for μ(dz) = h(z) σ(dz).
double martin_potential(const StableModel& m, const BallDomain& b, const BoundaryDensity& h, const Point& x,
                        const PotentialOptions& opt = {});

// Decides condition ∫_0^1 Ũ/V + ∫_1^∞ Ũ/(V² t) < ∞.
bool exterior_admissible(const StableModel& m, const ExteriorDensity& g);

struct KatoReport {
    bool passes = false;
    bool divergent = false;
    std::vector<std::pair<double, double>> epsilon_profile;  // (ε, sup_x local mass)
    double limit_estimate = 0.0;                               // fitted log-log slope
    std::string note;
};

// Sufficient Kato-class certificate: m(ε) = sup_x ∫_{|x-y|<ε} |q(y)| |x-y|^{α-d} dy.
KatoReport kato_check(const StableModel& m, const BallDomain& b, const ScalarField& q,
                      const std::vector<double>& eps_list, int n_points = 200);

}  // namespace nonlocal
