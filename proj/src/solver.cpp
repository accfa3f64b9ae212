#include "nonlocal/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "nonlocal/ball_kernels.hpp"
#include "nonlocal/errors.hpp"
#include "nonlocal/parallel.hpp"
#include "nonlocal/potentials.hpp"
#include "nonlocal/quadrature.hpp"

namespace nonlocal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sup_abs(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

// Piecewise power law through (δ_j, |v_j|), δ decreasing; constant above δ_0,
// power-law extrapolation below the last node. Zero samples make the envelope zero.
std::function<double(double)> power_envelope(const std::vector<double>& del, const std::vector<double>& val) {
    const double top = sup_abs(val);
    if (top == 0.0) return [](double) { return 0.0; };
    std::vector<double> ld, lv;
    for (std::size_t i = 0; i < del.size(); ++i) {
        ld.push_back(std::log(del[i]));
        lv.push_back(std::log(std::max(std::abs(val[i]), 1e-300 + 1e-14 * top)));
    }
    return [ld, lv](double d) {
        const double x = std::log(d);
        const std::size_t n = ld.size();
        if (x >= ld.front()) return std::exp(lv.front());
        std::size_t k = n - 2;
        if (x > ld.back()) {
            // ld is decreasing: find k with ld[k] >= x > ld[k+1].
            auto it = std::lower_bound(ld.begin(), ld.end(), x, [](double a, double b) { return a > b; });
            k = std::size_t(it - ld.begin()) - 1;
        }
        const double t = (x - ld[k]) / (ld[k + 1] - ld[k]);
        return std::exp(lv[k] + t * (lv[k + 1] - lv[k]));
    };
}

// Sup of h over the log grid restricted to s >= lo.
bool bounded_ratio(const std::function<double(double)>& h) {
    double coarse = 0.0, fine = 0.0;
    for (int i = 0; i <= 70; ++i) {
        const double s = std::pow(10.0, -1.0 - i * 0.1);
        const double v = h(s);
        if (!std::isfinite(v)) return false;
        fine = std::max(fine, v);
        if (s >= 1e-4) coarse = std::max(coarse, v);
    }
    return fine <= 1.5 * coarse;
}

void require_radial_data(const ProblemSpec& p) {
    if (!p.boundary.is_zero() && !p.boundary.constant)
        throw PreconditionError("solver: boundary density must be constant (radial solver)");
}

}  // namespace

Nonlinearity Nonlinearity::power(double p, double coef) {
    if (p < 0.0) throw ConfigError("Lambda: power must be nonnegative");
    std::ostringstream os;
    os << coef << "*t^" << p;
    return Nonlinearity{p, coef, nullptr, std::pow(2.0, p), os.str()};
}

Nonlinearity Nonlinearity::general(std::function<double(double)> L, double doubling, std::string meta) {
    return Nonlinearity{std::nullopt, 1.0, std::move(L), doubling, std::move(meta)};
}

double Nonlinearity::operator()(double t) const {
    if (coef == 0.0) return 0.0;
    if (p) return *p == 0.0 ? coef : coef * std::pow(t, *p);
    return rule ? rule(t) : 0.0;
}

double ProblemSpec::f(double delta, double t) const {
    const double w = W(delta);
    switch (sign) {
        case SignClass::nonnegative: return w * Lambda(std::max(t, 0.0));
        case SignClass::nonpositive: return -w * Lambda(std::max(t, 0.0));
        case SignClass::general: return t == 0.0 ? 0.0 : -w * (t > 0.0 ? 1.0 : -1.0) * Lambda(std::abs(t));
    }
    return 0.0;
}

const char* to_string(SignClass s) {
    switch (s) {
        case SignClass::nonnegative: return "nonnegative";
        case SignClass::nonpositive: return "nonpositive";
        case SignClass::general: return "general";
    }
    return "?";
}

namespace {

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    std::set<std::string> ok(keys.begin(), keys.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T def) {
    if (!j.contains(key) || j.at(key).is_null()) return def;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("problem: bad value for '") + key + "': " + e.what());
    }
}

}  // namespace

ProblemSpec ProblemSpec::from_json(const nlohmann::json& j) {
    reject_unknown(j, {"alpha", "dim", "radius", "W", "Lambda", "exterior", "boundary", "m", "sign"}, "problem");
    ProblemSpec p;
    p.alpha = get_or(j, "alpha", 1.0);
    p.dim = get_or(j, "dim", 3);
    p.radius = get_or(j, "radius", 1.0);
    if (!(p.alpha > 0.0 && p.alpha < 2.0)) throw ConfigError("problem: alpha must lie in (0, 2)");
    if (p.dim != 2 && p.dim != 3) throw ConfigError("problem: dim must be 2 or 3");
    if (!(p.radius > 0.0)) throw ConfigError("problem: radius must be positive");
    p.m = get_or(j, "m", 1.0);
    if (!(p.m >= 0.0)) throw ConfigError("problem: m must be nonnegative");
    const std::string sign = get_or<std::string>(j, "sign", "nonnegative");
    if (sign == "nonnegative") p.sign = SignClass::nonnegative;
    else if (sign == "nonpositive") p.sign = SignClass::nonpositive;
    else if (sign == "general") p.sign = SignClass::general;
    else throw ConfigError("problem: sign must be nonnegative, nonpositive or general");
    if (j.contains("W") && !j["W"].is_null()) {
        const auto& w = j["W"];
        reject_unknown(w, {"type", "beta"}, "W");
        const std::string type = get_or<std::string>(w, "type", "power");
        if (type == "power") p.W = ProfileSpec::power(get_or(w, "beta", 0.0));
        else if (type == "const") p.W = ProfileSpec::constant();
        else throw ConfigError("W: type must be power or const");
    }
    if (j.contains("Lambda") && !j["Lambda"].is_null()) {
        const auto& l = j["Lambda"];
        reject_unknown(l, {"type", "p", "coef"}, "Lambda");
        if (get_or<std::string>(l, "type", "power") != "power") throw ConfigError("Lambda: type must be power");
        p.Lambda = Nonlinearity::power(get_or(l, "p", 1.0), get_or(l, "coef", 1.0));
    }
    if (j.contains("exterior") && !j["exterior"].is_null()) {
        const auto& e = j["exterior"];
        reject_unknown(e, {"type", "beta2", "coef"}, "exterior");
        if (get_or<std::string>(e, "type", "power") != "power") throw ConfigError("exterior: type must be power");
        p.exterior = ExteriorDensity::power(get_or(e, "beta2", 0.0), get_or(e, "coef", 1.0));
    }
    if (j.contains("boundary") && !j["boundary"].is_null()) {
        const auto& bd = j["boundary"];
        reject_unknown(bd, {"type", "h"}, "boundary");
        if (get_or<std::string>(bd, "type", "const") != "const") throw ConfigError("boundary: type must be const");
        const double h = get_or(bd, "h", 1.0);
        if (h < 0.0) throw ConfigError("boundary: h must be nonnegative");
        p.boundary = BoundaryDensity::uniform(h);
    }
    return p;
}

nlohmann::json ProblemSpec::to_json() const {
    nlohmann::json j;
    j["alpha"] = alpha;
    j["dim"] = dim;
    j["radius"] = radius;
    j["m"] = m;
    j["sign"] = to_string(sign);
    j["W"] = W.beta ? nlohmann::json{{"type", "power"}, {"beta", *W.beta}} : nlohmann::json{{"type", "const"}};
    if (Lambda.p) j["Lambda"] = {{"type", "power"}, {"p", *Lambda.p}, {"coef", Lambda.coef}};
    else j["Lambda"] = {{"type", "general"}, {"meta", Lambda.meta}};
    if (exterior.is_zero()) j["exterior"] = nullptr;
    else if (exterior.power_beta)
        j["exterior"] = {{"type", "power"}, {"beta2", *exterior.power_beta}, {"coef", exterior.coef}};
    else j["exterior"] = {{"type", "general"}, {"meta", exterior.meta}};
    if (boundary.is_zero()) j["boundary"] = nullptr;
    else if (boundary.constant) j["boundary"] = {{"type", "const"}, {"h", *boundary.constant}};
    else j["boundary"] = {{"type", "general"}, {"meta", boundary.meta}};
    return j;
}

const char* to_string(Criterion c) {
    switch (c) {
        case Criterion::w_kato: return "w_kato";
        case Criterion::integral: return "integral";
        case Criterion::exterior: return "exterior";
        case Criterion::poisson_dominated: return "poisson_dominated";
        case Criterion::green_dominated: return "green_dominated";
        case Criterion::U_for_V_over_t: return "U_for_V_over_t";
        case Criterion::U_for_exterior: return "U_for_exterior";
    }
    return "?";
}

std::optional<Criterion> criterion_from_string(const std::string& s) {
    for (auto c : {Criterion::w_kato, Criterion::integral, Criterion::exterior, Criterion::poisson_dominated,
                   Criterion::green_dominated, Criterion::U_for_V_over_t, Criterion::U_for_exterior})
        if (s == to_string(c)) return c;
    return std::nullopt;
}

CriterionReport integral_criterion(const StableModel& m, const ProblemSpec& p, Criterion which,
                                   bool force_quadrature) {
    CriterionReport rep;
    rep.which = which;
    const double a = m.alpha;
    const bool lam_zero = p.Lambda.is_zero();
    const bool ext_zero = p.exterior.is_zero();
    const bool needs_ext = which == Criterion::exterior || which == Criterion::poisson_dominated ||
                           which == Criterion::green_dominated || which == Criterion::U_for_exterior;
    if (needs_ext && ext_zero) {
        rep.finite = true;
        rep.method = "trivial";
        rep.note = "no exterior data";
        return rep;
    }
    if (lam_zero && which != Criterion::w_kato && which != Criterion::exterior &&
        which != Criterion::poisson_dominated) {
        rep.finite = true;
        rep.method = "trivial";
        rep.note = "Lambda vanishes";
        return rep;
    }
    const bool power = p.W.beta && p.Lambda.p && (!needs_ext || p.exterior.power_beta);
    if (power && !force_quadrature) {
        rep.method = "exponent";
        const double b1 = *p.W.beta, q = *p.Lambda.p;
        const double b2 = p.exterior.power_beta.value_or(0.0);
        double margin = 0.0;
        bool ok = false;
        switch (which) {
            case Criterion::w_kato:
                margin = a - b1;
                ok = margin > 0.0;
                break;
            case Criterion::integral:
                margin = 1.0 + a / 2.0 - b1 - q * (1.0 - a / 2.0);
                ok = margin > 0.0;
                break;
            case Criterion::exterior:
                margin = std::min(b2 + a, 1.0 - a / 2.0 - b2);
                ok = margin > 0.0;
                break;
            case Criterion::poisson_dominated:
                margin = std::min(b2 + a / 2.0, 1.0 - a / 2.0 - b2);
                ok = margin > 0.0;
                break;
            case Criterion::green_dominated: {
                const double e1 = a / 2.0 - b1 - q * b2;
                const double m7 = a - b1 - b2 * (q - 1.0);
                margin = std::min(e1 + 1.0, m7);
                ok = e1 > -1.0 && m7 >= 0.0 && (e1 < 0.0 || (e1 == 0.0 ? b2 > -a / 2.0 : b2 >= -a / 2.0));
                rep.note = "margin >= 0 suffices";
                break;
            }
            case Criterion::U_for_V_over_t:
            case Criterion::U_for_exterior: {
                const double g = which == Criterion::U_for_V_over_t ? b1 + q * (1.0 - a / 2.0) : b1 + q * b2;
                margin = 1.0 + a / 2.0 - g;
                ok = check_U_conditions(m, ProfileSpec::power(g)).all();
                std::ostringstream os;
                os << "power profile t^-" << g;
                rep.note = os.str();
                break;
            }
        }
        rep.finite = ok;
        rep.exponent_margin = margin;
        return rep;
    }
    rep.method = "quadrature";
    auto V = [a](double t) { return std::pow(t, a / 2.0); };
    const auto& W = p.W;
    const auto& L = p.Lambda;
    auto Ut = [&](double t) { return p.exterior(t); };
    const double D = 2.0 * p.radius;
    QuadratureOptions o;
    o.rel_tol = 1e-9;
    switch (which) {
        case Criterion::w_kato: {
            std::vector<double> h;
            for (int k = 1; k <= 8; ++k) {
                const double t = std::pow(10.0, -k);
                h.push_back(W(t) * V(t) * V(t));
            }
            if (h.back() == 0.0) {
                rep.finite = true;
                break;
            }
            double mean = 0.0;
            for (int k = 4; k <= 6; ++k) mean += h[k + 1] / h[k] / 3.0;
            rep.finite = mean < 0.99;
            break;
        }
        case Criterion::integral: {
            auto d = decide_integral_near_zero([&](double t) { return W(t) * V(t) * L(V(t) / t); });
            rep.finite = d.finite;
            break;
        }
        case Criterion::exterior:
            rep.finite = poisson_profile_admissible(m, ProfileSpec::general(Ut, "exterior"));
            break;
        case Criterion::poisson_dominated: {
            if (!poisson_profile_admissible(m, ProfileSpec::general(Ut, "exterior"))) {
                rep.finite = false;
                break;
            }
            auto ratio = [&](double s) {
                auto H = [&](double v) {
                    const double t = std::exp(v);
                    return Ut(t) / V(t) / (s + t) * t;
                };
                const double I = integrate_from_minus_infinity(H, std::log(s), o).value +
                                 integrate(H, std::log(s), std::log(D), o).value;
                return I / (Ut(s) / V(s));
            };
            rep.finite = bounded_ratio(ratio);
            break;
        }
        case Criterion::green_dominated: {
            auto g = [&](double t) { return W(t) * V(t) * L(Ut(t)); };
            if (!decide_integral_near_zero(g).finite) {
                rep.finite = false;
                break;
            }
            auto r7 = [&](double s) {
                const double I =
                    integrate_from_minus_infinity([&](double v) { return g(std::exp(v)) * std::exp(v); },
                                                  std::log(s), o)
                        .value;
                return I / (s * Ut(s) / V(s));
            };
            auto r8 = [&](double s) {
                const double I = integrate([&](double v) { return g(std::exp(v)); }, std::log(s), std::log(D), o).value;
                return I / (Ut(s) / V(s));
            };
            rep.finite = bounded_ratio(r7) && bounded_ratio(r8);
            break;
        }
        case Criterion::U_for_V_over_t:
            rep.finite = check_U_conditions(m, ProfileSpec::general([&](double t) { return W(t) * L(V(t) / t); }, "U"))
                             .all();
            break;
        case Criterion::U_for_exterior:
            rep.finite =
                check_U_conditions(m, ProfileSpec::general([&](double t) { return W(t) * L(Ut(t)); }, "U")).all();
            break;
    }
    return rep;
}

RadialGreenOperator::RadialGreenOperator(const StableModel& m, const BallDomain& b, const FieldGrid& g,
                                         std::function<double(double)> weight, double rel_tol)
    : grid_(g), deltas_(g.deltas()), weight_(std::move(weight)) {
    const std::size_t n = deltas_.size();
    matrix_.assign(n * n, 0.0);
    const double R = b.radius;
    const int d = m.dim;
    const double kap = std::max(1.0, 2.0 / m.alpha);
    const std::vector<double> upts = graded_points(0.0, 1.0, 6, false);
    parallel_for(n, [&](std::size_t i) {
        const double ri = g.radii[i], di = deltas_[i];
        double* row = &matrix_[i * n];
        QuadratureOptions o;
        o.rel_tol = rel_tol;
        o.max_evaluations = 20000;
        auto K = [&](double del) {
            const double s = R - del, gap = std::abs(del - di);
            if (!(s >= 0.0) || gap == 0.0) return 0.0;
            const double v = std::pow(s, d - 1) * green_sphere_average_gap(m, b, ri, s, gap) * weight_(del);
            return std::isfinite(v) ? v : 0.0;
        };
        // ∫ over [va, vb] in v = log δ of K δ times the two hat weights.
        auto panel = [&](double va, double vb, bool sing_lo, bool sing_hi) {
            auto F = [&](double v) {
                const double del = std::exp(v);
                const double val = K(del) * del, lam = (v - va) / (vb - va);
                return std::array<double, 2>{val * lam, val * (1.0 - lam)};
            };
            if (!sing_lo && !sing_hi) return integrate_vec<2>(F, {va, vb}, o).value;
            std::array<double, 2> acc{0.0, 0.0};
            const double L = sing_lo && sing_hi ? 0.5 * (vb - va) : vb - va;
            auto side = [&](double anchor, double sgn) {
                auto G = [&](double u) {
                    const double t = L * std::pow(u, kap);
                    const double jac = L * kap * std::pow(u, kap - 1.0);
                    auto r = F(anchor + sgn * t);
                    return std::array<double, 2>{r[0] * jac, r[1] * jac};
                };
                auto r = integrate_vec<2>(G, upts, o).value;
                acc[0] += r[0];
                acc[1] += r[1];
            };
            if (sing_lo) side(va, 1.0);
            if (sing_hi) side(vb, -1.0);
            return acc;
        };
        for (std::size_t k = 0; k + 1 < n; ++k) {
            const double va = std::log(deltas_[k + 1]), vb = std::log(deltas_[k]);
            auto r = panel(va, vb, i == k + 1, i == k);
            row[k] += r[0];
            row[k + 1] += r[1];
        }
        // Below the innermost node f/w is held constant.
        const double vlast = std::log(deltas_[n - 1]), vcut = std::log(1e-11 * R);
        auto H = [&](double v) {
            const double del = std::exp(v);
            return K(del) * del;
        };
        double tail;
        if (i == n - 1) {
            const double L = vlast - vcut;
            tail = integrate(
                       [&](double u) {
                           return H(vlast - L * std::pow(u, kap)) * L * kap * std::pow(u, kap - 1.0);
                       },
                       upts, o)
                       .value;
        } else {
            tail = integrate(H, vcut, vlast, o).value;
        }
        const double h0 = H(vcut), h1 = H(vcut + 1.0);
        if (h0 > 0.0 && h1 / h0 > 1.0) tail += h0 / std::log(h1 / h0);
        row[n - 1] += tail;
    });
}

std::vector<double> RadialGreenOperator::apply(const std::vector<double>& f_nodes) const {
    const std::size_t n = deltas_.size();
    if (f_nodes.size() != n) throw DomainError("RadialGreenOperator: size mismatch");
    std::vector<double> q(n), out(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double w = weight_(deltas_[j]);
        q[j] = f_nodes[j] == 0.0 ? 0.0 : f_nodes[j] / w;
    }
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += matrix_[i * n + j] * q[j];
        out[i] = s;
    }
    return out;
}

std::vector<double> boundary_data_nodes(const StableModel& m, const BallDomain& b, const ProblemSpec& p,
                                        const FieldGrid& g) {
    require_radial_data(p);
    std::vector<double> u0(g.size(), 0.0);
    parallel_for(g.size(), [&](std::size_t i) {
        const Point x = b.center + g.radii[i] * Point{1.0, 0.0, 0.0};
        double v = 0.0;
        if (!p.exterior.is_zero()) v += poisson_potential(m, b, p.exterior, x);
        if (!p.boundary.is_zero()) v += *p.boundary.constant * martin_sigma(m, b, x);
        u0[i] = v;
    });
    return u0;
}

namespace {

// u_0 at an arbitrary radius, evaluated directly.
double boundary_data_at(const StableModel& m, const BallDomain& b, const ProblemSpec& p, double r) {
    if (r >= b.radius) return 0.0;
    const Point x = b.center + r * Point{1.0, 0.0, 0.0};
    double v = 0.0;
    if (!p.exterior.is_zero()) v += poisson_potential(m, b, p.exterior, x);
    if (!p.boundary.is_zero()) v += *p.boundary.constant * martin_sigma(m, b, x);
    return v;
}

ScalarField assemble(const StableModel& m, const BallDomain& b, const ProblemSpec& p, const FieldGrid& g,
                     const std::vector<double>& u0, const std::vector<double>& u, const std::string& meta) {
    std::vector<double> v(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) v[i] = u[i] - u0[i];
    const auto dels = g.deltas();
    const double R = b.radius;
    return ScalarField::radial(
        b,
        [=](double r) {
            if (r >= R) return 0.0;
            return boundary_data_at(m, b, p, r) + interpolate_log_delta(dels, v, R - r);
        },
        meta);
}

struct Supersolution {
    SupersolutionFit fit;
    std::function<double(double)> shape;  // δ -> ū(δ)/c2
};

Supersolution fit_supersolution(const StableModel& m, const BallDomain& b, const ProblemSpec& p, const FieldGrid& g,
                                const std::vector<double>& u0) {
    if (p.sign != SignClass::nonnegative)
        throw PreconditionError("supersolution_fit: requires a nonnegative nonlinearity");
    const double a = m.alpha;
    const auto dels = g.deltas();
    Supersolution out;
    std::function<double(double)> shape;
    if (integral_criterion(m, p, Criterion::U_for_V_over_t).finite) {
        shape = [a](double del) { return std::pow(del, a / 2.0) / del; };
        out.fit.boundary_case = true;
    } else if (p.boundary.is_zero() && !p.exterior.is_zero() &&
               integral_criterion(m, p, Criterion::U_for_exterior).finite &&
               integral_criterion(m, p, Criterion::poisson_dominated).finite &&
               integral_criterion(m, p, Criterion::green_dominated).finite) {
        auto ext = p.exterior;
        shape = [ext](double del) { return ext(del); };
        out.fit.boundary_case = false;
    } else {
        throw PreconditionError("supersolution_fit: neither supersolution certificate holds");
    }
    double c1 = 0.0;
    for (std::size_t i = 0; i < dels.size(); ++i) c1 = std::max(c1, u0[i] / shape(dels[i]));
    const double c2 = c1 > 0.0 ? 2.0 * c1 : 1.0;
    out.fit.c1 = c1;
    out.fit.c2 = c2;
    if (p.Lambda.is_zero()) {
        out.fit.c4 = 0.0;
        out.fit.m1 = kInf;
    } else {
        auto fbar = [&p, shape, c2](double del) { return p.f(del, c2 * shape(del)); };
        RadialGreenOperator G(m, b, g, [fbar](double del) { return std::max(fbar(del), 1e-300); });
        std::vector<double> fn(dels.size());
        for (std::size_t i = 0; i < dels.size(); ++i) fn[i] = fbar(dels[i]);
        auto Gf = G.apply(fn);
        double c4 = 0.0;
        for (std::size_t i = 0; i < dels.size(); ++i) c4 = std::max(c4, Gf[i] / shape(dels[i]));
        out.fit.c4 = c4;
        out.fit.m1 = c4 > 0.0 ? (c2 - c1) / c4 : kInf;
    }
    out.shape = shape;
    return out;
}

}  // namespace

SupersolutionFit supersolution_fit(const StableModel& m, const BallDomain& b, const ProblemSpec& p,
                                   const SolveOptions& opt) {
    const auto g = FieldGrid::make(b, opt.n_radial, 32, opt.delta_min);
    return fit_supersolution(m, b, p, g, boundary_data_nodes(m, b, p, g)).fit;
}

Solution monotone_solve(const StableModel& m, const BallDomain& b, const ProblemSpec& p, const SolveOptions& opt) {
    if (p.sign != SignClass::nonnegative) throw PreconditionError("monotone_solve: requires a nonnegative f");
    Solution sol;
    sol.grid = FieldGrid::make(b, opt.n_radial, 32, opt.delta_min);
    const auto& g = sol.grid;
    const auto dels = g.deltas();
    const std::size_t n = dels.size();
    sol.u0_nodes = boundary_data_nodes(m, b, p, g);
    const auto& u0 = sol.u0_nodes;
    auto& tr = sol.trace;
    const double scale = sup_abs(u0) > 0.0 ? sup_abs(u0) : 1.0;
    if (p.m == 0.0 || p.Lambda.is_zero()) {
        tr.sup_norms = {sup_abs(u0)};
        tr.sup_norm_diffs = {0.0};
        tr.converged = true;
        tr.k_final = 1;
        tr.final_nodes = u0;
        if (opt.on_step) opt.on_step(1, 0.0, true, true);
        sol.u = assemble(m, b, p, g, u0, u0, "monotone");
        return sol;
    }
    const auto sup = fit_supersolution(m, b, p, g, u0);
    std::vector<double> ubar(n);
    for (std::size_t i = 0; i < n; ++i) ubar[i] = sup.fit.c2 * sup.shape(dels[i]);
    const double c2 = sup.fit.c2;
    auto shape = sup.shape;
    RadialGreenOperator G(m, b, g, [&p, shape, c2](double del) {
        return std::max(p.W(del), 1e-300) * (1.0 + p.Lambda(c2 * shape(del)));
    });
    std::vector<double> u = u0, fn(n);
    for (int k = 1; k <= opt.k_max; ++k) {
        for (std::size_t i = 0; i < n; ++i) fn[i] = p.m * p.f(dels[i], u[i]);
        auto Gf = G.apply(fn);
        std::vector<double> next(n);
        double diff = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            next[i] = u0[i] + Gf[i];
            diff = std::max(diff, std::abs(next[i] - u[i]));
            if (next[i] < u[i] - 1e-12 * std::abs(u[i])) tr.monotone_flag = false;
            if (next[i] > ubar[i] * (1.0 + 1e-9)) tr.dominated_flag = false;
        }
        u = std::move(next);
        tr.sup_norms.push_back(sup_abs(u));
        tr.sup_norm_diffs.push_back(diff);
        tr.k_final = k;
        if (opt.on_step) opt.on_step(k, diff, tr.monotone_flag, tr.dominated_flag);
        if (!tr.dominated_flag) {
            std::ostringstream os;
            os << "monotone_solve: iterate exceeds the supersolution at step " << k << " (m = " << p.m
               << ", m1 = " << sup.fit.m1 << ")";
            throw SupersolutionBreach(os.str());
        }
        if (diff <= opt.tol * scale) {
            tr.converged = true;
            break;
        }
    }
    tr.final_nodes = u;
    if (!tr.converged)
        throw ConvergenceError("monotone_solve: no convergence within k_max", tr.k_final, tr.sup_norm_diffs.back());
    sol.u = assemble(m, b, p, g, u0, u, "monotone");
    return sol;
}

Solution picard_solve(const StableModel& m, const BallDomain& b, const ProblemSpec& p, const SolveOptions& opt,
                      PicardStart start, PicardInfo* info) {
    Solution sol;
    sol.grid = FieldGrid::make(b, opt.n_radial, 32, opt.delta_min);
    const auto& g = sol.grid;
    const auto dels = g.deltas();
    const std::size_t n = dels.size();
    sol.u0_nodes = boundary_data_nodes(m, b, p, g);
    const auto& gn = sol.u0_nodes;
    auto& tr = sol.trace;
    const double scale = sup_abs(gn) > 0.0 ? sup_abs(gn) : 1.0;
    const auto env = power_envelope(dels, gn);

    // r1 = sup G_D ρ, r2 = sup G_D(ρ Λ(2 ḡ)) on the grid.
    RadialGreenOperator Gr(m, b, g, [&p](double del) { return std::max(p.W(del), 1e-300); });
    std::vector<double> rho(n), rho2(n);
    for (std::size_t i = 0; i < n; ++i) {
        rho[i] = p.W(dels[i]);
        rho2[i] = p.W(dels[i]) * p.Lambda(2.0 * std::abs(gn[i]));
    }
    PicardInfo pi;
    pi.r1 = sup_abs(Gr.apply(rho));
    {
        RadialGreenOperator G2(m, b, g, [&p, env](double del) {
            return std::max(p.W(del), 1e-300) * (1.0 + p.Lambda(2.0 * env(del)));
        });
        pi.r2 = sup_abs(G2.apply(rho2));
    }
    // Smallest C on a geometric ladder with m (Λ(2C) r1 + r2) <= C.
    double C = 0.0;
    if (p.m > 0.0 && !p.Lambda.is_zero()) {
        bool found = false;
        for (double c = 1e-8 * scale; c < 1e12 * scale; c *= 1.25) {
            if (p.m * (p.Lambda(2.0 * c) * pi.r1 + pi.r2) <= c) {
                C = c;
                found = true;
                break;
            }
        }
        if (!found) throw ContractionFailure("picard_solve: no C satisfies m (Lambda(2C) r1 + r2) <= C; m too large");
    }
    pi.C = C;
    if (info) *info = pi;
    RadialGreenOperator G(m, b, g, [&p, env, C](double del) {
        return std::max(p.W(del), 1e-300) * (1.0 + p.Lambda(env(del) + C));
    });
    auto F = [&](std::size_t i, double v) { return p.m * p.f(dels[i], gn[i] + std::clamp(v, -C, C)); };
    std::vector<double> v(n, start == PicardStart::upper ? C : 0.0), fn(n);
    for (int k = 1; k <= opt.k_max; ++k) {
        for (std::size_t i = 0; i < n; ++i) fn[i] = F(i, v[i]);
        auto next = G.apply(fn);
        double diff = 0.0;
        for (std::size_t i = 0; i < n; ++i) diff = std::max(diff, std::abs(next[i] - v[i]));
        v = std::move(next);
        const bool inside = sup_abs(v) <= C * (1.0 + 1e-9) + 1e-300;
        if (opt.on_step) opt.on_step(k, diff, false, inside);
        if (!inside) {
            std::ostringstream os;
            os << "picard_solve: iterate left the ball |v| <= C = " << C << " at step " << k;
            throw ContractionFailure(os.str());
        }
        std::vector<double> u(n);
        for (std::size_t i = 0; i < n; ++i) u[i] = gn[i] + v[i];
        tr.sup_norms.push_back(sup_abs(u));
        tr.sup_norm_diffs.push_back(diff);
        tr.k_final = k;
        if (diff <= opt.tol * scale) {
            tr.converged = true;
            break;
        }
    }
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = gn[i] + v[i];
    tr.final_nodes = u;
    tr.monotone_flag = false;
    tr.dominated_flag = true;
    if (!tr.converged)
        throw ConvergenceError("picard_solve: no convergence within k_max", tr.k_final, tr.sup_norm_diffs.back());
    sol.u = assemble(m, b, p, g, gn, u, "picard");
    return sol;
}

double Bump::operator()(double r) const {
    const double z = (r - center) / width;
    if (std::abs(z) >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - z * z));
}

std::vector<Bump> default_bumps(const BallDomain& b) {
    const double R = b.radius;
    return {{0.0, 0.3 * R}, {0.3 * R, 0.1 * R}, {0.5 * R, 0.1 * R}, {0.7 * R, 0.1 * R}, {0.85 * R, 0.1 * R}};
}

std::vector<double> verify_weak_dual(const StableModel& m, const BallDomain& b, const ScalarField& u,
                                     const ProblemSpec& p, const std::vector<Bump>& tests) {
    if (!u.is_radial()) throw PreconditionError("verify_weak_dual: the radial check needs a radial field");
    require_radial_data(p);
    const double R = b.radius, S = m.sphere_area;
    const int d = m.dim;
    std::vector<double> out(tests.size());
    QuadratureOptions o;
    o.rel_tol = 1e-8;
    for (std::size_t k = 0; k < tests.size(); ++k) {
        const Bump psi = tests[k];
        const double lo = std::max(0.0, psi.center - psi.width), hi = psi.center + psi.width;
        if (!(hi < R)) throw PreconditionError("verify_weak_dual: bump support must lie inside the ball");
        auto shell = [&](double s) { return S * std::pow(s, d - 1); };
        const std::vector<double> supp = {lo, 0.5 * (lo + hi), hi};
        const double lhs = integrate([&](double s) { return u.at_radius(s) * psi(s) * shell(s); }, supp, o).value;
        const double rhs_g =
            integrate([&](double s) { return boundary_data_at(m, b, p, s) * psi(s) * shell(s); }, supp, o).value;
        PotentialOptions po;
        po.rel_tol = 1e-9;
        // G_D ψ = (R² - s²)^{α/2} times a smooth factor, tabulated at Chebyshev nodes.
        const int nc = 48;
        std::vector<double> xs(nc), ys(nc);
        parallel_for(nc, [&](std::size_t k) {
            xs[k] = 0.5 * R * (1.0 + std::cos(std::numbers::pi * double(k) / (nc - 1)));
            // The factor at s = R is a limit; sample it just inside the sphere.
            const double x = k == 0 ? R * (1.0 - 1e-8) : xs[k];
            ys[k] = green_potential_radial(m, b, psi, x, po) / std::pow(R * R - x * x, m.alpha / 2.0);
        });
        auto Gpsi = [&](double s) {
            double num = 0.0, den = 0.0;
            for (int k = 0; k < nc; ++k) {
                const double dx = s - xs[k];
                if (dx == 0.0) return ys[k] * std::pow(R * R - s * s, m.alpha / 2.0);
                const double w = ((k % 2) ? -1.0 : 1.0) * ((k == 0 || k == nc - 1) ? 0.5 : 1.0) / dx;
                num += w * ys[k];
                den += w;
            }
            return num / den * std::pow(std::max(R * R - s * s, 0.0), m.alpha / 2.0);
        };
        auto integrand = [&](double s) {
            const double fu = p.m * p.f(R - s, u.at_radius(s));
            return fu == 0.0 ? 0.0 : fu * Gpsi(s) * shell(s);
        };
        QuadratureOptions oi;
        oi.rel_tol = 1e-6;
        oi.max_evaluations = 4000;
        std::vector<double> pts{0.0, lo, hi, 0.5 * (hi + R)};
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        double rhs_f = integrate(integrand, pts, oi).value;
        // Layer next to the sphere in v = log δ.
        const double vtop = std::log(R - pts.back()), vcut = std::log(1e-10 * R);
        auto H = [&](double v) {
            const double del = std::exp(v);
            return integrand(R - del) * del;
        };
        rhs_f += integrate(H, vcut, vtop, oi).value;
        const double h0 = H(vcut), h1 = H(vcut + 1.0);
        if (h0 != 0.0 && h1 / h0 > 1.0) rhs_f += h0 / std::log(h1 / h0);
        const double floor = 1e-12 * std::abs(lhs) + 1e-300;
        out[k] = std::abs(lhs - rhs_f - rhs_g) / (std::abs(lhs) + floor);
    }
    return out;
}

NonexistenceReport nonexistence_diagnostic(const StableModel& m, const BallDomain& b, const ProblemSpec& p,
                                           const Point& z) {
    if (p.sign != SignClass::nonpositive)
        throw PreconditionError("nonexistence_diagnostic: requires a nonpositive nonlinearity");
    if (p.boundary.is_zero()) throw PreconditionError("nonexistence_diagnostic: boundary density must be nonzero");
    if (!b.on_sphere(z)) throw DomainError("nonexistence_diagnostic: z must lie on the sphere");
    if (!(p.boundary(z) > 0.0)) throw PreconditionError("nonexistence_diagnostic: h(z) must be positive");
    NonexistenceReport rep;
    if (p.Lambda.is_zero()) {
        rep.divergent = false;
        rep.note = "Lambda vanishes";
        return rep;
    }
    const double a = m.alpha;
    auto V = [a](double t) { return std::pow(t, a / 2.0); };
    const double t_hi = std::min(1.0, b.radius);
    auto dec = decide_integral_near_zero([&](double t) { return V(t) * p.W(t) * p.Lambda(V(t) / t); }, t_hi);
    rep.divergent = !dec.finite;
    rep.growth_rate = dec.mean_ratio;
    double acc = 0.0, eps = t_hi;
    for (double inc : dec.decade_increments) {
        acc += inc;
        eps /= 10.0;
        rep.partial.emplace_back(eps, acc);
    }
    std::ostringstream os;
    if (rep.divergent)
        os << (std::abs(dec.mean_ratio - 1.0) < 0.02 ? "logarithmic divergence" : "power divergence")
           << " (decade ratio " << dec.mean_ratio << "): no nonnegative solution with E_D u defined";
    else
        os << "convergent (decade ratio " << dec.mean_ratio << ")";
    rep.note = os.str();
    return rep;
}

double domain_decomposition_check(const StableModel& m, const BallDomain& b, const ScalarField& u,
                                  const ProblemSpec& p, double sub_radius) {
    if (!u.is_radial()) throw PreconditionError("domain_decomposition_check: needs a radial field");
    const double R = b.radius, a = sub_radius;
    if (!(a > 0.0 && a < R)) throw DomainError("domain_decomposition_check: need 0 < sub_radius < R");
    const BallDomain A{b.center, a, b.dim};
    PotentialOptions po;
    po.rel_tol = 1e-9;
    auto fu = [&](double s) { return p.m * p.f(R - s, u.at_radius(s)); };
    auto outside = [&](double t) {
        const double r = a + t;
        return r < R ? u.at_radius(r) : p.exterior(r - R);
    };
    double worst = 0.0;
    for (double frac : {0.0, 0.25, 0.5, 0.75}) {
        const double r = frac * a;
        const double lhs = u.at_radius(r);
        const double rhs = green_potential_radial(m, A, fu, r, po) +
                           poisson_potential_radial(m, A, outside, r, {R - a}, po);
        const double den = std::max(std::abs(lhs), std::abs(rhs));
        if (den == 0.0) continue;
        worst = std::max(worst, std::abs(lhs - rhs) / den);
    }
    return worst;
}

}  // namespace nonlocal
