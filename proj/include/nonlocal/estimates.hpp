#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nonlocal/geometry.hpp"
#include "nonlocal/levy.hpp"

namespace nonlocal {

// A boundary profile t -> U(t) on (0, ∞), either the power t^{-β} or a general rule.
struct ProfileSpec {
    std::optional<double> beta;
    std::function<double(double)> rule;
    std::string meta;

    static ProfileSpec power(double beta);
    static ProfileSpec constant(double c = 1.0);
    static ProfileSpec general(std::function<double(double)> U, std::string meta);

    double operator()(double t) const { return rule(t); }
};

struct UConditions {
    bool integrable = false;        // U1: ∫_0^1 U V < ∞
    bool almost_nonincreasing = false;  // U2
    bool reverse_doubling = false;  // U3
    bool bounded_away = false;      // U4
    std::string note;

    bool all() const { return integrable && almost_nonincreasing && reverse_doubling && bounded_away; }
};

UConditions check_U_conditions(const StableModel& m, const ProfileSpec& U);

// Both terms of V(δ)/δ ∫_0^δ U V dt + V(δ) ∫_δ^{diam} U V / t dt.
struct GreenProfile {
    double inner = 0.0;
    double outer = 0.0;
    double total() const { return inner + outer; }
};

GreenProfile green_profile(const StableModel& m, const BallDomain& b, const ProfileSpec& U, const Point& x);

// Admissibility of Ũ for exterior data: ∫_0^1 Ũ/V + ∫_1^∞ Ũ/(V² t) < ∞.
bool poisson_profile_admissible(const StableModel& m, const ProfileSpec& Ut);

struct PoissonProfile {
    double value = 0.0;        // V(δ) ∫_0^{diam} Ũ(t) / (V(t)(δ + t)) dt
    double upper_bound = 0.0;  // V(δ)/δ
};

PoissonProfile poisson_profile(const StableModel& m, const BallDomain& b, const ProfileSpec& Ut, const Point& x);

enum class EstimateKind { green, poisson, martin, killing, mdsigma, green_profile, poisson_profile };

const char* to_string(EstimateKind k);
std::optional<EstimateKind> estimate_kind_from_string(const std::string& s);

struct GridSpec {
    int points = 1000;
    double delta_floor = 1e-3;
    double coarse_floor = 1e-2;
    double profile_beta = 0.5;  // exponent used by the profile kinds
};

struct EstimateSample {
    double delta_x = 0.0;
    double aux = 0.0;  // δ_y, δ_{D^c}(z) or angle depending on the kind
    double value = 0.0;
    double estimate = 0.0;
};

struct EstimateReport {
    EstimateKind kind = EstimateKind::green;
    double ratio_min = 0.0, ratio_max = 0.0;
    double coarse_min = 0.0, coarse_max = 0.0;
    double change = 0.0;  // relative change of the interval endpoints between floors
    std::string grid_spec;
    std::size_t samples = 0;
    bool passes = false;
    std::vector<EstimateSample> rows;  // fine-grid samples
};

// Ratio of the computed quantity to its two-sided estimate over a grid; the pass
// rule is finite, width < 1e3 and endpoint change < 20% between the two δ-floors.
EstimateReport audit_kernel_estimate(const StableModel& m, const BallDomain& b, EstimateKind kind,
                                     const GridSpec& grid = {});

struct RegionIntegrals {
    bool near_boundary = false;  // true: I1..I5, false: J1, J2
    std::vector<double> parts;
    double eta = 0.0;
    double sum() const;
};

// Splits G_D(U(δ) 1_{δ<η})(x) over the appendix regions. eta <= 0 selects diam/40.
RegionIntegrals region_decomposition(const StableModel& m, const BallDomain& b, const ProfileSpec& U, const Point& x,
                                     double eta = 0.0);

// Boundary behaviour of P_D λ for Ũ(t) = t^{-β}: least-squares fits of log P_D λ against
// log δ over δ ∈ [delta_lo, delta_hi]·R. The predicted regime is δ^{-β} for β > -α/2,
// δ^{α/2} log(1/δ) at β = -α/2 and δ^{α/2} below.
struct RegimeFit {
    double beta = 0.0;
    double slope = 0.0;            // free-slope power fit
    double predicted_slope = 0.0;  // -β or α/2
    double rms_power_neg_beta = 0.0;  // log residuals of c δ^{-β}
    double rms_power_half = 0.0;      // log residuals of c δ^{α/2}
    double rms_log = 0.0;             // fit of δ^{α/2}(c1 log(R/δ) + c2)
    std::string regime;               // "neg_beta", "log", "half"
    std::vector<std::pair<double, double>> samples;  // (δ, P_D λ)
};

RegimeFit poisson_regime_fit(const StableModel& m, const BallDomain& b, double beta, double delta_lo = 1e-5,
                             double delta_hi = 1e-2, int points = 10);

// ∫_0^a U(t) V(t) dt by quadrature in log t.
double profile_moment(const StableModel& m, const ProfileSpec& U, double a);

}  // namespace nonlocal
