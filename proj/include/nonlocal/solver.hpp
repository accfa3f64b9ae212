#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nonlocal/estimates.hpp"
#include "nonlocal/field.hpp"
#include "nonlocal/geometry.hpp"
#include "nonlocal/levy.hpp"

namespace nonlocal {

enum class SignClass { nonnegative, nonpositive, general };

// Λ(t) = coef · t^p, or a general nondecreasing rule with a recorded doubling constant.
struct Nonlinearity {
    std::optional<double> p;
    double coef = 1.0;
    std::function<double(double)> rule;
    double doubling = 1.0;  // Λ(2t) <= doubling · Λ(t)
    std::string meta;

    static Nonlinearity power(double p, double coef = 1.0);
    static Nonlinearity general(std::function<double(double)> L, double doubling, std::string meta);
    double operator()(double t) const;
    bool is_zero() const { return coef == 0.0 || (!p && !rule); }
};

struct ProblemSpec {
    double alpha = 1.0;
    int dim = 3;
    double radius = 1.0;
    SignClass sign = SignClass::nonnegative;
    ProfileSpec W = ProfileSpec::constant();  // ρ(x) = W(δ_D(x))
    Nonlinearity Lambda = Nonlinearity::power(1.0);
    ExteriorDensity exterior = ExteriorDensity::zero();
    BoundaryDensity boundary = BoundaryDensity::zero();
    double m = 1.0;

    // f(x, t) with δ = δ_D(x): WΛ(t⁺), -WΛ(t⁺) or -W sgn(t) Λ(|t|) by sign class (m excluded).
    double f(double delta, double t) const;

    StableModel model() const { return StableModel::make(alpha, dim); }
    BallDomain ball() const { return BallDomain{{0.0, 0.0, 0.0}, radius, dim}; }

    static ProblemSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

const char* to_string(SignClass s);

enum class Criterion {
    w_kato,               // lim W V² = 0
    integral,             // ∫_0 W V Λ(V/t) < ∞
    exterior,             // ∫_0^1 Ũ/V + ∫_1^∞ Ũ/(V² t) < ∞
    poisson_dominated,    // ∫_0^diam Ũ/(V (s+t)) ⪯ Ũ(s)/V(s)
    green_dominated,      // both Green-potential domination conditions
    U_for_V_over_t,       // W Λ(V/t) satisfies (U)
    U_for_exterior,       // W Λ(Ũ) satisfies (U)
};

const char* to_string(Criterion c);
std::optional<Criterion> criterion_from_string(const std::string& s);

struct CriterionReport {
    Criterion which = Criterion::integral;
    bool finite = false;
    std::optional<double> exponent_margin;  // power families: > 0 (or >= 0 where stated) means satisfied
    std::string method;                     // "exponent" or "quadrature"
    std::string note;
};

CriterionReport integral_criterion(const StableModel& m, const ProblemSpec& p, Criterion which,
                                   bool force_quadrature = false);

struct IterationTrace {
    std::vector<double> sup_norms;       // ‖u_k‖_∞ on the grid
    std::vector<double> sup_norm_diffs;  // ‖u_k - u_{k-1}‖_∞ on the grid
    bool monotone_flag = true;
    bool dominated_flag = true;
    bool converged = false;
    int k_final = 0;
    std::vector<double> final_nodes;  // u at the grid nodes
};

struct Solution {
    ScalarField u;
    IterationTrace trace;
    FieldGrid grid;
    std::vector<double> u0_nodes;
};

struct SupersolutionFit {
    double c1 = 0.0, c2 = 0.0, c4 = 0.0;
    double m1 = std::numeric_limits<double>::infinity();
    bool boundary_case = true;  // true: ū = c2 V(δ)/δ, false: ū = c2 Ũ(δ)
};

// Green operator on a radial grid: (G_D f)(r_i) ≈ Σ_j W_ij f(δ_j)/w(δ_j), where f/w is
// interpolated linearly in log δ and w is a positive weight carrying the boundary blow-up.
class RadialGreenOperator {
public:
    RadialGreenOperator(const StableModel& m, const BallDomain& b, const FieldGrid& g,
                        std::function<double(double)> weight, double rel_tol = 1e-7);
    std::vector<double> apply(const std::vector<double>& f_nodes) const;
    const FieldGrid& grid() const { return grid_; }
    const std::vector<double>& deltas() const { return deltas_; }
    double weight(double delta) const { return weight_(delta); }

private:
    FieldGrid grid_;
    std::vector<double> deltas_;
    std::function<double(double)> weight_;
    std::vector<double> matrix_;  // n x n, row-major
};

struct SolveOptions {
    int n_radial = 64;
    double delta_min = 1e-6;
    double tol = 1e-4;  // relative to ‖u_0‖_∞ on the grid
    int k_max = 200;
    // Called after every step with (k, sup diff, monotone so far, dominated so far), also on
    // the steps that end in an exception.
    std::function<void(int, double, bool, bool)> on_step;
};

// u_0 = P_D λ + M_D μ at the grid nodes (radial data only).
std::vector<double> boundary_data_nodes(const StableModel& m, const BallDomain& b, const ProblemSpec& p,
                                        const FieldGrid& g);

SupersolutionFit supersolution_fit(const StableModel& m, const BallDomain& b, const ProblemSpec& p,
                                   const SolveOptions& opt = {});

Solution monotone_solve(const StableModel& m, const BallDomain& b, const ProblemSpec& p, const SolveOptions& opt = {});

// v_0 selects the starting homogeneous part: 0 (default) or the constant C of the smallness rule.
enum class PicardStart { zero, upper };

struct PicardInfo {
    double C = 0.0, r1 = 0.0, r2 = 0.0;
};

Solution picard_solve(const StableModel& m, const BallDomain& b, const ProblemSpec& p, const SolveOptions& opt = {},
                      PicardStart start = PicardStart::zero, PicardInfo* info = nullptr);

// Radial bump ψ(x) = exp(1 - 1/(1 - ((|x| - c)/w)²)) on the shell | |x| - c | < w (a ball when c = 0).
struct Bump {
    double center = 0.0;
    double width = 0.3;
    double operator()(double r) const;
};

std::vector<Bump> default_bumps(const BallDomain& b);

std::vector<double> verify_weak_dual(const StableModel& m, const BallDomain& b, const ScalarField& u,
                                     const ProblemSpec& p, const std::vector<Bump>& tests);

struct NonexistenceReport {
    bool divergent = false;
    double growth_rate = 0.0;  // mean ratio of successive decade increments
    std::vector<std::pair<double, double>> partial;  // (ε, ∫_ε^{ε0})
    std::string note;
};

NonexistenceReport nonexistence_diagnostic(const StableModel& m, const BallDomain& b, const ProblemSpec& p,
                                           const Point& z);

// Checks u = G_A f(·, u) + P_A(u 1_D) + P_A λ on the concentric ball A of radius sub_radius;
// returns the max relative residual.
double domain_decomposition_check(const StableModel& m, const BallDomain& b, const ScalarField& u,
                                  const ProblemSpec& p, double sub_radius);

}  // namespace nonlocal
