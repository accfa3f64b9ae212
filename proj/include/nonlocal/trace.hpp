#pragma once

#include <functional>
#include <vector>

#include "nonlocal/field.hpp"
#include "nonlocal/geometry.hpp"
#include "nonlocal/levy.hpp"

namespace nonlocal {

struct TraceOptions {
    int max_order = 4;             // angular moments 0..max_order
    Point axis{1.0, 0.0, 0.0};     // symmetry axis of a non-radial u
    double rel_tol = 1e-6;
};

// η_U u for U = B(0, R(1 - 2^{-k})) and x0 = center. moments[l] = ∫ Y_l(z/|z|) η_U u(dz)
// with Y_l = P_l(cos θ) in d = 3 and cos(lθ) in d = 2; moments[0] is the total mass.
struct TraceLevel {
    int k = 0;
    double radius = 0.0;
    double mass = 0.0;
    std::vector<double> moments;
};

// u must be radial or axially symmetric about opt.axis.
TraceLevel trace_measure(const StableModel& m, const BallDomain& b, const ScalarField& u, int k,
                         const TraceOptions& opt = {});

struct TraceEstimate {
    std::vector<TraceLevel> levels;
    bool converged = false;
    double limit_mass = 0.0;  // last level
};

// Levels k = 1..k_max; converged when the last mass gap is below a tenth of the first
// (or below 1e-3 of the largest mass).
TraceEstimate trace_sequence(const StableModel& m, const BallDomain& b, const ScalarField& u, int k_max = 10,
                             const TraceOptions& opt = {});

// ∫_{U} G_U(0,z) Y_l(ẑ) j(|z - y|) dz / Y_l(ŷ) for |y| = s > ρ, by nested quadrature.
// For l = 0 this is the Poisson kernel P_U(0, y).
double trace_projection_kernel(const StableModel& m, double rho, int dim, int l, double s,
                               double rel_tol = 1e-7);

struct BoundaryLimit {
    double value = 0.0;
    std::vector<double> samples;      // q(ε) at ε = 1e-2, 1e-3, 1e-4
    std::vector<double> extrapolants; // pairwise linear Richardson values
    bool cauchy = false;
};

// lim_{ε→0} q(ε) from ε ∈ {1e-2, 1e-3, 1e-4}; throws LimitFailure when the pairwise
// extrapolants differ by more than 1%.
BoundaryLimit boundary_limit(const std::function<double(double)>& q);

// d/dV (G_D ψ)(z) as the boundary limit of G_D ψ((1-ε)z)/V(εR).
double normal_derivative_dV(const StableModel& m, const BallDomain& b, const ScalarField& psi, const Point& z);

// ∫_D K_D(y, z) ψ(y) dy with the modified Martin kernel; ψ radial or general.
double dV_kernel_integral(const StableModel& m, const BallDomain& b, const ScalarField& psi, const Point& z);

struct EdReport {
    std::vector<Point> z;
    std::vector<double> ed;       // E_D u(z)
    std::vector<double> density;  // E_D u(z) K_D(x0, z)
    double mass_from_ed = 0.0;    // ∫ E_D u K_D(x0, ·) dσ
    double trace_mass = 0.0;      // trace_measure at level trace_k
    double mass_residual = 0.0;   // relative difference of the two masses
    std::vector<double> moment_residuals;  // l = 1..max_order, absolute, scaled by the mass
};

EdReport ed_operator_check(const StableModel& m, const BallDomain& b, const ScalarField& u,
                           const std::vector<Point>& z_set, int trace_k = 8, const TraceOptions& opt = {});

}  // namespace nonlocal
