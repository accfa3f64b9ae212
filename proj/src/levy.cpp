#include "nonlocal/levy.hpp"

#include <cmath>
#include <numbers>

#include "nonlocal/errors.hpp"

namespace nonlocal {

double unit_sphere_area(int dim) {
    return 2.0 * std::pow(std::numbers::pi, dim / 2.0) / std::tgamma(dim / 2.0);
}

StableModel StableModel::make(double alpha, int dim) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("alpha must lie in (0,2)");
    if (dim != 2 && dim != 3) throw DomainError("dim must be 2 or 3");
    const double pi = std::numbers::pi;
    const double d = dim;
    StableModel m;
    m.alpha = alpha;
    m.dim = dim;
    m.levy_const = alpha * std::pow(2.0, alpha - 1.0) * std::tgamma((d + alpha) / 2.0) /
                   (std::pow(pi, d / 2.0) * std::tgamma(1.0 - alpha / 2.0));
    const double ga = std::tgamma(alpha / 2.0);
    m.green_const = std::tgamma(d / 2.0) / (std::pow(2.0, alpha) * std::pow(pi, d / 2.0) * ga * ga);
    m.poisson_const = std::tgamma(d / 2.0) * std::sin(pi * alpha / 2.0) / std::pow(pi, d / 2.0 + 1.0);
    m.exit_time_const = std::tgamma(d / 2.0) /
                        (std::pow(2.0, alpha) * std::tgamma(1.0 + alpha / 2.0) *
                         std::tgamma((d + alpha) / 2.0));
    m.sphere_area = unit_sphere_area(dim);
    return m;
}

double phi_eval(const StableModel& m, double lam) {
    if (!(lam > 0.0)) throw DomainError("phi_eval: lambda must be positive");
    return std::pow(lam, m.alpha / 2.0);
}

double renewal_eval(const StableModel& m, double t) {
    if (!(t >= 0.0)) throw DomainError("renewal_eval: t must be nonnegative");
    return std::pow(t, m.alpha / 2.0);
}

double levy_density(const StableModel& m, double r) {
    if (!(r > 0.0)) throw DomainError("levy_density: r must be positive");
    return m.levy_const * std::pow(r, -m.dim - m.alpha);
}

ScalingProbeResult weak_scaling_probe(const std::vector<std::pair<double, double>>& samples,
                                      double s_min, double s_max) {
    std::vector<std::pair<double, double>> in;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& [t, v] = samples[i];
        if (i > 0 && !(t > samples[i - 1].first))
            throw ProbeError("samples must be strictly increasing in t");
        if (!(v > 0.0)) throw ProbeError("phi samples must be positive");
        if (t >= s_min && t <= s_max) in.push_back({t, v});
    }
    if (in.size() < 8) throw ProbeError("need at least 8 samples inside the range");

    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = 0; i < in.size(); ++i) {
        for (std::size_t j = i + 1; j < in.size(); ++j) {
            if (in[j].second < in[i].second) throw ProbeError("phi is not monotone");
            const double slope = std::log(in[j].second / in[i].second) / std::log(in[j].first / in[i].first);
            lo = std::min(lo, slope);
            hi = std::max(hi, slope);
        }
    }
    if (!(lo > 0.0) || !(hi < 1.0))
        throw ProbeError("fitted scaling exponents fall outside (0,1)");

    // Constants for the chosen exponents; equal to 1 up to rounding by construction.
    ScalingProbeResult r{lo, hi, INFINITY, 0.0};
    for (std::size_t i = 0; i < in.size(); ++i) {
        for (std::size_t j = i; j < in.size(); ++j) {
            const double q = in[j].second / in[i].second, x = in[j].first / in[i].first;
            r.a1 = std::min(r.a1, q / std::pow(x, lo));
            r.a2 = std::max(r.a2, q / std::pow(x, hi));
        }
    }
    return r;
}

}  // namespace nonlocal
