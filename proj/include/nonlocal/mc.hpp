#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "nonlocal/field.hpp"
#include "nonlocal/geometry.hpp"
#include "nonlocal/levy.hpp"

namespace nonlocal {

struct WoSConfig {
    std::uint64_t samples = 100'000;
    std::uint64_t max_steps = 10'000;
    std::uint64_t seed = 0x5eed;
    double confidence = 0.95;
    unsigned threads = 0;  // 0: worker_count()
};

struct MCEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    double truncated_fraction = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::uint64_t samples = 0;
    double mean_steps = 0.0;
    double median_steps = 0.0;
    bool bias_warning = false;  // truncated_fraction > 1e-4
};

// Stream for path i: mt19937_64 seeded with splitmix64(seed + (i + 1) * golden gamma).
std::uint64_t splitmix64(std::uint64_t x);
std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t path);

// Radial law of |X_τ| for the process started at the center of the unit ball, tabulated
// once per (α, d) on 10⁴ log-spaced nodes of |z| - 1.
class ExitRadiusTable {
public:
    static const ExitRadiusTable& get(const StableModel& m);

    double cdf(double rho) const;        // P(|Z| ≤ ρ)
    double survival(double rho) const;   // P(|Z| > ρ)
    double quantile(double u) const;     // inverse of cdf, u in (0, 1)
    double total_mass() const { return total_; }

private:
    explicit ExitRadiusTable(const StableModel& m);

    double alpha_ = 1.0;
    std::vector<double> log_t_;  // log(ρ - 1) at the nodes
    std::vector<double> lower_;  // P(|Z| - 1 ≤ t_i)
    std::vector<double> upper_;  // P(|Z| - 1 > t_i)
    std::size_t split_ = 1;      // first node with P(|Z| - 1 ≤ t) ≥ 1/2
    double total_ = 0.0;
};

// Exit point of B(0, r) for the process started at its center, relative to the center.
Point sample_exit_ball(std::mt19937_64& rng, const StableModel& m, double r);

// P_D g(x) by walk on spheres: exit the largest ball centred at the current point until
// the walk lands in D^c, then score g there.
MCEstimate wos_poisson(const StableModel& m, const BallDomain& b, const ExteriorDensity& g, const Point& x,
                       const WoSConfig& cfg = {});

// G_D f(x): each step adds G_{B(x_i, δ(x_i))} f(x_i) before jumping.
MCEstimate wos_green(const StableModel& m, const BallDomain& b, const ScalarField& f, const Point& x,
                     const WoSConfig& cfg = {});

}  // namespace nonlocal
