#include "rdyn/orbit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rdyn {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_abs(double x) {
    const double a = std::abs(x);
    return a == 0.0 ? -kInf : std::log(a);
}

} // namespace

SampledMap RandomOrbit::map_at(int j) const {
    return noise->map_from_draw(eps, draws[j]);
}

RandomOrbit iterate(double x0, const NoiseModel& noise, double eps, int n, RngStream rng) {
    if (x0 < 0.0 || x0 > 1.0) throw InputError("iterate: x0 must lie in [0,1]");
    if (n < 0) throw InputError("iterate: n must be >= 0");
    RandomOrbit o;
    o.noise = &noise;
    o.eps = eps;
    o.points.reserve(n + 1);
    o.draws.reserve(n + 1);
    o.log_deriv.reserve(n + 1);
    o.log_a.reserve(n + 1);
    o.dist.reserve(n + 1);

    double x = x0;
    double log_d = 0.0;
    double log_a = -kInf;
    for (int j = 0; j <= n; ++j) {
        RngStream step = rng.substream(j);
        const SampledMap g = noise.sample_map(eps, step);
        o.points.push_back(x);
        o.draws.push_back(g.draw());
        o.log_deriv.push_back(log_d);
        o.log_a.push_back(log_a);
        const double dist = g.dist_to_crit(x);
        o.dist.push_back(dist);
        if (j == n) break;
        log_a = (dist == 0.0) ? kInf : log_add_exp(log_a, log_d - std::log(dist));
        const auto d = g.eval_with_derivs(x);
        log_d += log_abs(d.df);
        x = d.f;
    }
    return o;
}

ReplayResult replay(const RandomOrbit& orbit, double y, int n) {
    if (n < 0 || n > orbit.steps()) throw InputError("replay: n out of range");
    ReplayResult r;
    r.log_a = -kInf;
    double x = y;
    for (int j = 0; j < n; ++j) {
        const SampledMap g = orbit.map_at(j);
        const double dist = g.dist_to_crit(x);
        r.log_a = (dist == 0.0) ? kInf : log_add_exp(r.log_a, r.log_deriv - std::log(dist));
        const auto d = g.eval_with_derivs(x);
        r.log_deriv += log_abs(d.df);
        x = d.f;
    }
    r.point = x;
    return r;
}

DistortionWindow distortion_window(const RandomOrbit& orbit, int n, double theta0,
                                   int probe_grid) {
    if (n < 1 || n > orbit.steps()) throw InputError("distortion_window: n out of range");
    if (theta0 <= 0.0) throw InputError("distortion_window: theta0 must be positive");
    DistortionWindow w;
    const double x = orbit.points[0];
    if (orbit.log_a[n] == kInf) {
        w.j = {x, x};
        w.degenerate = true;
        return w;
    }
    const double half = theta0 * std::exp(-orbit.log_a[n]);
    w.j = {std::max(0.0, x - half), std::min(1.0, x + half)};
    // N(g^n|J): max over probes of |d/dy log|Dg^n(y)|| times |J|, the
    // gradient expanded by the chain rule over the stored map sequence.
    double worst = 0.0;
    for (int p = 0; p < probe_grid; ++p) {
        const double y0 = w.j.lo + w.j.length() * p / (probe_grid - 1.0);
        double y = y0;
        double prod = 1.0; // Dg^j(y)
        double grad = 0.0;
        bool ok = true;
        for (int j = 0; j < n; ++j) {
            const SampledMap g = orbit.map_at(j);
            const auto d = g.eval_with_derivs(y);
            if (d.df == 0.0) { ok = false; break; }
            grad += (d.ddf / d.df) * prod;
            prod *= d.df;
            y = d.f;
        }
        if (!ok) { worst = kInf; break; }
        worst = std::max(worst, std::abs(grad));
    }
    w.nonlinearity = worst * w.j.length();
    return w;
}

nlohmann::json ReturnClassification::to_json() const {
    nlohmann::json j{{"s", s},        {"good", good},       {"close", close},
                     {"scale", scale}, {"landing", landing}, {"log_deriv", log_deriv},
                     {"log_A", log_a}, {"dist", dist_s}};
    if (component) j["component"] = *component;
    return j;
}

ReturnClassification classify_return(const RandomOrbit& orbit, int s, double delta,
                                     double theta, double tau, double theta0) {
    if (s < 1 || s > orbit.steps()) throw InputError("classify_return: s out of range");
    ReturnClassification r;
    r.s = s;
    r.log_deriv = orbit.log_deriv[s];
    r.log_a = orbit.log_a[s];
    r.dist_s = orbit.dist[s];
    const MapModel& base = orbit.noise->base();
    const double xs = orbit.points[s];
    r.component = base.btilde_component(xs, delta);
    r.landing = r.component.has_value();
    if (r.log_a == kInf) return r;
    if (r.landing) {
        const double len = base.critical_ball(*r.component, delta).length();
        r.good = std::log(theta) + r.log_deriv >= r.log_a + std::log(len);
    }
    r.close = std::log(theta) + r.log_deriv >= r.log_a + std::log(r.dist_s);
    r.scale = std::log(theta0) + r.log_deriv >= 1.0 + std::log(tau) + r.log_a;
    return r;
}

std::optional<int> first_landing(double x, const NoiseModel& noise, double eps,
                                 double delta, int cap, RngStream rng) {
    if (cap < 1) throw InputError("first_landing: cap must be >= 1");
    const MapModel& base = noise.base();
    for (int s = 0; s <= cap; ++s) {
        if (base.in_btilde(x, delta)) return s;
        if (s == cap) break;
        RngStream step = rng.substream(s);
        x = noise.sample_map(eps, step).eval_with_derivs(x).f;
    }
    return std::nullopt;
}

nlohmann::json HitTimes::to_json() const {
    auto enc = [](const std::optional<int>& v) {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    return {{"h_delta", enc(h_delta)}, {"T_tau", enc(t_tau)},
            {"inf_h", enc(inf_h)},     {"h_hat", enc(h_hat)},
            {"cap", cap}};
}

HitTimes h_t_hh(double x, const NoiseModel& noise, double eps, double delta,
                double delta0, double theta, double tau, double theta0, int cap,
                RngStream rng) {
    if (!(0.0 < delta && delta <= delta0)) throw InputError("h_t_hh: need 0 < delta <= delta0");
    if (cap < 1) throw InputError("h_t_hh: cap must be >= 1");
    const MapModel& base = noise.base();
    HitTimes out;
    out.cap = cap;
    // Good-return radii only change the verdict at the lattice {delta e^k}
    // and at the exact entry radius of the current point, so those are the
    // only scales checked.
    std::vector<double> lattice;
    for (double d = delta; d < delta0 * (1.0 + 1e-12); d *= std::exp(1.0))
        lattice.push_back(std::min(d, delta0));
    if (lattice.empty() || lattice.back() < delta0) lattice.push_back(delta0);

    double log_d = 0.0;
    double log_a = -kInf;
    for (int s = 1; s <= cap; ++s) {
        RngStream step = rng.substream(s - 1);
        const SampledMap g = noise.sample_map(eps, step);
        const double dist = g.dist_to_crit(x);
        log_a = (dist == 0.0) ? kInf : log_add_exp(log_a, log_d - std::log(dist));
        const auto d = g.eval_with_derivs(x);
        log_d += log_abs(d.df);
        x = d.f;
        if (log_a == kInf) break;

        if (!out.t_tau && std::log(theta0) + log_d >= 1.0 + std::log(tau) + log_a)
            out.t_tau = s;

        if ((!out.h_delta || !out.inf_h) && base.in_btilde(x, delta0)) {
            auto good_at = [&](double dp) {
                const auto comp = base.btilde_component(x, dp);
                if (!comp) return false;
                const double len = base.critical_ball(*comp, dp).length();
                return std::log(theta) + log_d >= log_a + std::log(len);
            };
            if (!out.h_delta && good_at(delta)) out.h_delta = s;
            if (!out.inf_h) {
                bool hit = false;
                for (double dp : lattice)
                    if (good_at(dp)) { hit = true; break; }
                if (!hit) {
                    // Exact entry radius per critical point.
                    const double fx = base.eval_with_derivs(x).f;
                    for (std::size_t ci = 0; ci < base.crit().size() && !hit; ++ci) {
                        const double r = std::abs(fx - base.critical_values()[ci]);
                        if (r >= delta && r <= delta0 && good_at(r)) hit = true;
                    }
                }
                if (hit) out.inf_h = s;
            }
        }
        if (out.t_tau && out.h_delta && out.inf_h) break;
    }
    if (out.inf_h || out.t_tau) {
        int v = cap + 1;
        if (out.inf_h) v = std::min(v, *out.inf_h);
        if (out.t_tau) v = std::min(v, *out.t_tau);
        out.h_hat = v;
    }
    return out;
}

nlohmann::json RecurrenceStats::to_json() const {
    return {{"q", q},
            {"Q", q_sum},
            {"Gamma", gamma},
            {"bad", bad},
            {"horizon_truncated", horizon_truncated}};
}

RecurrenceStats recurrence_stats(const RandomOrbit& orbit, double eps, double kappa, int m) {
    if (eps <= 0.0) throw InputError("recurrence_stats: eps must be positive");
    RecurrenceStats r;
    const MapModel& base = orbit.noise->base();
    const int n = orbit.steps();
    double q_total = 0.0;
    int gamma = 0;
    bool all_above = true;
    for (int j = 0; j <= n; ++j) {
        const double df = orbit.map_at(j).eval_with_derivs(orbit.points[j]).df;
        const double prod = std::abs(df) * orbit.dist[j];
        double q;
        if (prod == 0.0) {
            q = kInf;
        } else if (prod >= eps) {
            q = 0.0;
        } else {
            q = std::ceil(std::log(eps / prod));
        }
        r.q.push_back(q);
        q_total += q;
        r.q_sum.push_back(q_total);
        if (base.in_btilde(orbit.points[j], eps)) ++gamma;
        r.gamma.push_back(gamma);
        if (!(q_total > std::min(static_cast<double>(m), kappa * gamma))) all_above = false;
    }
    const bool reached = q_total >= m;
    r.bad = all_above && reached;
    r.horizon_truncated = all_above && !reached;
    return r;
}

nlohmann::json GrowthDiagnostic::to_json() const {
    return {{"lambda_hat", lambda_hat}, {"part2_min", part2_min},
            {"events_i", events_i},     {"events_ii", events_ii},
            {"residual_lo", residual_lo}, {"residual_hi", residual_hi}};
}

GrowthDiagnostic growth_diagnostic(const MapModel& map, const NoiseModel& noise,
                                   double eps, int trials, int cap, RngStream rng) {
    if (trials < 1000) throw InputError("growth_diagnostic: trials must be >= 1000");
    GrowthDiagnostic out;
    const double expo = 1.0 / map.ell_max() - 1.0;
    const auto& cv = map.critical_values();
    std::vector<std::pair<double, int>> events; // (log value, s) for part (i)
    for (int t = 0; t < trials; ++t) {
        RngStream s1 = rng.substream(0, t);
        const double v = cv[t % cv.size()];
        double x = std::clamp(v + s1.uniform(-4.0 * eps, 4.0 * eps), 0.0, 1.0);
        if (map.in_btilde(x, eps)) continue;
        double log_d = 0.0;
        for (int s = 1; s <= cap; ++s) {
            const SampledMap g = noise.sample_map(eps, s1);
            const auto d = g.eval_with_derivs(x);
            log_d += log_abs(d.df);
            x = d.f;
            const auto comp = map.btilde_component(x, 2.0 * eps);
            if (comp) {
                events.emplace_back(log_d + std::log(map.d_c(*comp, eps)), s);
                break;
            }
            if (map.in_btilde(x, eps)) break; // hypothesis broken without landing
        }
    }
    out.events_i = static_cast<long long>(events.size());
    if (!events.empty()) {
        double lmin = kInf;
        for (const auto& [lv, s] : events) lmin = std::min(lmin, lv);
        out.lambda_hat = std::exp(lmin);
        out.residual_lo = kInf;
        out.residual_hi = -kInf;
        for (const auto& [lv, s] : events) {
            const double res = (lv - lmin) / s;
            out.residual_lo = std::min(out.residual_lo, res);
            out.residual_hi = std::max(out.residual_hi, res);
        }
    }

    double part2_log_min = kInf;
    for (int t = 0; t < trials; ++t) {
        RngStream s2 = rng.substream(1, t);
        double x = s2.uniform01();
        if (map.in_btilde(x, eps)) continue;
        double log_d = 0.0;
        bool any = false;
        for (int s = 1; s <= cap; ++s) {
            const SampledMap g = noise.sample_map(eps, s2);
            const auto d = g.eval_with_derivs(x);
            log_d += log_abs(d.df);
            x = d.f;
            if (map.in_btilde(x, eps)) break;
            part2_log_min = std::min(part2_log_min, log_d + expo * std::log(eps));
            any = true;
        }
        if (any) ++out.events_ii;
    }
    if (part2_log_min != kInf) out.part2_min = std::exp(part2_log_min);
    return out;
}

nlohmann::json ContractionCheck::to_json() const {
    return {{"checked", checked}, {"violations", violations}};
}

ContractionCheck backward_contraction_check(const MapModel& map, const NoiseModel& noise,
                                            double eps, double xi, double xi_prime,
                                            int trials, int cap, RngStream rng) {
    if (xi >= xi_prime) throw InputError("backward_contraction_check: need xi < xi_prime");
    ContractionCheck out;
    constexpr int kMesh = 9;
    for (int t = 0; t < trials; ++t) {
        RngStream s = rng.substream(t);
        const std::size_t ci = static_cast<std::size_t>(t) % map.crit().size();
        const Interval ball = map.critical_ball(ci, xi * eps);
        const double u = s.uniform(ball.lo, ball.hi);
        const double r = s.uniform(0.05, 1.0) * ball.length();
        const Interval w{std::max(0.0, u - r), std::min(1.0, u + r)};
        double pts[kMesh];
        for (int k = 0; k < kMesh; ++k)
            pts[k] = w.lo + w.length() * k / (kMesh - 1.0);
        for (int step = 1; step <= cap; ++step) {
            const SampledMap g = noise.sample_map(eps, s);
            for (int k = 0; k < kMesh; ++k) pts[k] = g.eval_with_derivs(pts[k]).f;
            bool inside = true;
            std::optional<std::size_t> comp0;
            for (int k = 0; k < kMesh && inside; ++k) {
                const auto comp = map.btilde_component(pts[k], 2.0 * eps);
                if (!comp || (comp0 && *comp != *comp0)) inside = false;
                else comp0 = comp;
            }
            if (inside) {
                ++out.checked;
                const bool contained = map.in_btilde(w.lo, xi_prime * eps) &&
                                       map.in_btilde(w.hi, xi_prime * eps);
                if (!contained) ++out.violations;
                break;
            }
        }
    }
    return out;
}

} // namespace rdyn
