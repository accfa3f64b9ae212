#include "nonlocal/mc.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "nonlocal/errors.hpp"
#include "nonlocal/parallel.hpp"
#include "nonlocal/potentials.hpp"
#include "nonlocal/quadrature.hpp"

namespace nonlocal {

namespace {

constexpr int kNodes = 10'000;
constexpr double kLogTMin = -10.0 * std::numbers::ln10;  // t = |z| - 1 from 1e-10
constexpr double kLogTMax = 10.0 * std::numbers::ln10;   // to 1e10
constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

// Uniform on (0, 1) from the top 53 bits.
double open_uniform(std::mt19937_64& rng) { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; }

Point uniform_direction(std::mt19937_64& rng, int dim) {
    const double phi = 2.0 * std::numbers::pi * open_uniform(rng);
    if (dim == 2) return {std::cos(phi), std::sin(phi), 0.0};
    const double c = 2.0 * open_uniform(rng) - 1.0;
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    return {s * std::cos(phi), s * std::sin(phi), c};
}

// Index i with v[i] <= y < v[i+1] on an increasing table (or decreasing when desc).
std::size_t bracket(const std::vector<double>& v, double y, bool desc) {
    auto it = desc ? std::upper_bound(v.begin(), v.end(), y, std::greater<>())
                   : std::upper_bound(v.begin(), v.end(), y);
    const auto k = static_cast<std::size_t>(it - v.begin());
    return std::clamp<std::size_t>(k, 1, v.size() - 1) - 1;
}

struct PathResult {
    double value = 0.0;
    std::uint64_t steps = 0;
    bool truncated = false;
};

void validate(const BallDomain& b, const Point& x, const WoSConfig& cfg) {
    if (cfg.samples < 1) throw ConfigError("wos: samples must be at least 1");
    if (cfg.max_steps < 1) throw ConfigError("wos: max_steps must be at least 1");
    if (!(cfg.confidence > 0.0 && cfg.confidence < 1.0)) throw ConfigError("wos: confidence must lie in (0, 1)");
    if (!b.inside(x)) throw DomainError("wos: start point must lie strictly inside the ball");
}

MCEstimate summarize(const std::vector<PathResult>& paths, const WoSConfig& cfg) {
    const std::size_t n = paths.size();
    std::vector<double> v(n), st(n);
    std::size_t trunc = 0;
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = paths[i].value;
        st[i] = static_cast<double>(paths[i].steps);
        trunc += paths[i].truncated;
    }
    MCEstimate e;
    e.samples = n;
    e.mean = pairwise_sum(v) / static_cast<double>(n);
    e.mean_steps = pairwise_sum(st) / static_cast<double>(n);
    for (auto& x : v) x = (x - e.mean) * (x - e.mean);
    const double var = n > 1 ? pairwise_sum(v) / static_cast<double>(n - 1) : 0.0;
    e.std_error = std::sqrt(var / static_cast<double>(n));
    const double zq = boost::math::quantile(boost::math::normal(), 0.5 + 0.5 * cfg.confidence);
    e.ci_low = e.mean - zq * e.std_error;
    e.ci_high = e.mean + zq * e.std_error;
    std::nth_element(st.begin(), st.begin() + static_cast<std::ptrdiff_t>(n / 2), st.end());
    e.median_steps = st[n / 2];
    e.truncated_fraction = static_cast<double>(trunc) / static_cast<double>(n);
    e.bias_warning = e.truncated_fraction > 1e-4;
    if (e.truncated_fraction > 1e-2) {
        std::ostringstream os;
        os << "wos: " << e.truncated_fraction << " of the paths reached max_steps";
        throw BiasError(os.str());
    }
    return e;
}

// Runs one walk per path; step_score(y, r) is added before each jump and exit_score(z)
// when the walk leaves the ball.
template <class Step, class Exit>
MCEstimate run_walks(const StableModel& m, const BallDomain& b, const Point& x, const WoSConfig& cfg,
                     Step&& step_score, Exit&& exit_score) {
    ExitRadiusTable::get(m);  // build outside the workers
    std::vector<PathResult> paths(cfg.samples);
    parallel_for(
        paths.size(),
        [&](std::size_t i) {
            auto rng = path_rng(cfg.seed, i);
            PathResult& p = paths[i];
            Point y = x;
            for (;;) {
                if (p.steps == cfg.max_steps) {
                    p.truncated = true;
                    return;
                }
                // A landing point rounded onto the sphere still steps off it.
                const double r = std::max(b.delta(y), BallDomain::boundary_tol * b.radius);
                p.value += step_score(y, r);
                y = y + sample_exit_ball(rng, m, r);
                ++p.steps;
                if (b.radial(y) > b.radius) {
                    p.value += exit_score(y);
                    return;
                }
            }
        },
        cfg.threads);
    return summarize(paths, cfg);
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
    x += kGamma;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t path) {
    return std::mt19937_64(splitmix64(seed + (path + 1) * kGamma));
}

ExitRadiusTable::ExitRadiusTable(const StableModel& m) : alpha_(m.alpha) {
    const double a = m.alpha;
    const double A = m.sphere_area * m.poisson_const;
    // Radial density of |Z| - 1 in the variable s = log t.
    auto dens = [&](double s) {
        const double t = std::exp(s);
        return A * t * std::pow(t * (2.0 + t), -a / 2.0) / (1.0 + t);
    };
    log_t_.resize(kNodes);
    for (int i = 0; i < kNodes; ++i) log_t_[i] = kLogTMin + (kLogTMax - kLogTMin) * i / (kNodes - 1);

    std::vector<double> cell(kNodes - 1);
    QuadratureOptions o;
    o.rel_tol = 1e-13;
    for (int i = 0; i + 1 < kNodes; ++i) cell[i] = integrate(dens, {log_t_[i], log_t_[i + 1]}, o).value;

    // Power-law ends: t^{-a/2} 2^{-a/2} below, ρ^{-1-a} above, both to relative O(1e-10).
    const double t0 = std::exp(kLogTMin), rho1 = 1.0 + std::exp(kLogTMax);
    const double below = A * std::pow(2.0, -a / 2.0) * std::pow(t0, 1.0 - a / 2.0) / (1.0 - a / 2.0);
    const double above = A * std::pow(rho1, -a) / a;

    lower_.resize(kNodes);
    upper_.resize(kNodes);
    lower_[0] = below;
    for (int i = 1; i < kNodes; ++i) lower_[i] = lower_[i - 1] + cell[i - 1];
    upper_[kNodes - 1] = above;
    for (int i = kNodes - 2; i >= 0; --i) upper_[i] = upper_[i + 1] + cell[i];
    total_ = lower_.back() + above;
    if (std::abs(total_ - 1.0) > 1e-8) {
        std::ostringstream os;
        os << "exit law: total mass " << total_ << " differs from 1";
        throw ProbeError(os.str());
    }
    for (auto& v : lower_) v /= total_;
    for (auto& v : upper_) v /= total_;
    split_ = static_cast<std::size_t>(std::lower_bound(lower_.begin(), lower_.end(), 0.5) - lower_.begin());
    split_ = std::clamp<std::size_t>(split_, 1, kNodes - 2);
}

const ExitRadiusTable& ExitRadiusTable::get(const StableModel& m) {
    static std::mutex mu;
    static std::map<std::pair<double, int>, std::unique_ptr<ExitRadiusTable>> cache;
    std::lock_guard<std::mutex> lk(mu);
    auto& slot = cache[{m.alpha, m.dim}];
    if (!slot) slot.reset(new ExitRadiusTable(m));
    return *slot;
}

double ExitRadiusTable::survival(double rho) const {
    if (!(rho > 1.0)) return 1.0;
    const double lt = std::log(rho - 1.0);
    if (lt < log_t_[split_]) return 1.0 - cdf(rho);
    if (lt >= log_t_.back()) return upper_.back() * std::pow((1.0 + std::exp(log_t_.back())) / rho, alpha_);
    const std::size_t i = bracket(log_t_, lt, false);
    const double w = (lt - log_t_[i]) / (log_t_[i + 1] - log_t_[i]);
    return std::exp((1.0 - w) * std::log(upper_[i]) + w * std::log(upper_[i + 1]));
}

double ExitRadiusTable::cdf(double rho) const {
    if (!(rho > 1.0)) return 0.0;
    const double lt = std::log(rho - 1.0);
    if (lt <= log_t_.front()) return lower_.front() * std::exp((1.0 - alpha_ / 2.0) * (lt - log_t_.front()));
    if (lt >= log_t_[split_]) return 1.0 - survival(rho);
    const std::size_t i = bracket(log_t_, lt, false);
    const double w = (lt - log_t_[i]) / (log_t_[i + 1] - log_t_[i]);
    return std::exp((1.0 - w) * std::log(lower_[i]) + w * std::log(lower_[i + 1]));
}

double ExitRadiusTable::quantile(double u) const {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("exit law: quantile level must lie in (0, 1)");
    // Log-log interpolation of P(|Z| - 1 ≤ t) below the median node and of P(|Z| - 1 > t)
    // above it, so that each side keeps its digits.
    if (u < lower_[split_]) {
        if (u <= lower_.front())
            return 1.0 + std::exp(log_t_.front() + std::log(u / lower_.front()) / (1.0 - alpha_ / 2.0));
        const std::size_t i = std::min(bracket(lower_, u, false), split_ - 1);
        const double w = std::log(u / lower_[i]) / std::log(lower_[i + 1] / lower_[i]);
        return 1.0 + std::exp(log_t_[i] + w * (log_t_[i + 1] - log_t_[i]));
    }
    const double s = 1.0 - u;
    if (s <= upper_.back()) return (1.0 + std::exp(log_t_.back())) * std::pow(upper_.back() / s, 1.0 / alpha_);
    const std::size_t i = std::max(bracket(upper_, s, true), split_);
    const double w = std::log(s / upper_[i]) / std::log(upper_[i + 1] / upper_[i]);
    return 1.0 + std::exp(log_t_[i] + w * (log_t_[i + 1] - log_t_[i]));
}

Point sample_exit_ball(std::mt19937_64& rng, const StableModel& m, double r) {
    const double rho = ExitRadiusTable::get(m).quantile(open_uniform(rng));
    return (r * rho) * uniform_direction(rng, m.dim);
}

MCEstimate wos_poisson(const StableModel& m, const BallDomain& b, const ExteriorDensity& g, const Point& x,
                       const WoSConfig& cfg) {
    validate(b, x, cfg);
    if (!exterior_admissible(m, g)) throw PreconditionError("wos_poisson: exterior density is not admissible");
    if (g.is_zero()) {
        MCEstimate e;
        e.samples = cfg.samples;
        e.ci_low = e.ci_high = 0.0;
        return e;
    }
    return run_walks(m, b, x, cfg, [](const Point&, double) { return 0.0; },
                     [&](const Point& z) { return g(b.delta_ext(z)); });
}

MCEstimate wos_green(const StableModel& m, const BallDomain& b, const ScalarField& f, const Point& x,
                     const WoSConfig& cfg) {
    validate(b, x, cfg);
    if (f.is_zero()) {
        MCEstimate e;
        e.samples = cfg.samples;
        return e;
    }
    auto none = [](const Point&) { return 0.0; };
    if (f.power_exponent() && *f.power_exponent() == 0.0) {
        // Constant density: G_B c at the center of B(y, r) is c E τ = c κ r^α.
        const double c = f.power_coefficient() * m.exit_time_const;
        return run_walks(m, b, x, cfg, [&](const Point&, double r) { return c * std::pow(r, m.alpha); }, none);
    }
    PotentialOptions po;
    po.rel_tol = 1e-7;
    return run_walks(
        m, b, x, cfg,
        [&](const Point& y, double r) {
            const BallDomain ball{y, r, b.dim};
            const auto local = ScalarField::general(ball, [&f](const Point& p) { return f(p); }, "local");
            return green_potential(m, ball, local, y, po);
        },
        none);
}

}  // namespace nonlocal
