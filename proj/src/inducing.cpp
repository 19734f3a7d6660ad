#include "rdyn/inducing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace rdyn {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <typename Fn>
void for_each_index(int n, int workers, Fn&& fn) {
#if defined(_OPENMP)
    if (workers > 1) {
#pragma omp parallel for num_threads(workers) schedule(dynamic, 4)
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
#else
    (void)workers;
#endif
    for (int i = 0; i < n; ++i) fn(i);
}

// Preimage of [target] under one sampled map, one interval per monotone
// branch whose range meets the target.  Endpoints by bracketed bisection,
// clamped to the branch when the branch range ends inside the target.
std::vector<Interval> branch_preimages(const SampledMap& g, const Interval& target) {
    std::vector<double> cuts{0.0, 1.0};
    for (double c : g.crit())
        if (c > 1e-15 && c < 1.0 - 1e-15) cuts.push_back(c);
    std::sort(cuts.begin(), cuts.end());
    std::vector<Interval> out;
    for (std::size_t b = 0; b + 1 < cuts.size(); ++b) {
        const double a = cuts[b], bb = cuts[b + 1];
        if (bb - a < 1e-14) continue;
        const double va = g(a), vb = g(bb);
        const double rlo = std::min(va, vb), rhi = std::max(va, vb);
        if (rhi < target.lo || rlo > target.hi) continue;
        auto solve = [&](double t) {
            if (t <= rlo) return va <= vb ? a : bb;
            if (t >= rhi) return va <= vb ? bb : a;
            return bisect([&](double y) { return g(y) - t; }, a, bb);
        };
        double pa = solve(target.lo), pb = solve(target.hi);
        if (pa > pb) std::swap(pa, pb);
        if (pb > pa) out.push_back({pa, pb});
    }
    return out;
}

// Merge overlapping or touching intervals (gap tolerance ~1 ulp scale).
std::vector<Interval> merge_intervals(std::vector<Interval> v) {
    std::sort(v.begin(), v.end(),
              [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    std::vector<Interval> out;
    for (const auto& iv : v) {
        if (!out.empty() && iv.lo <= out.back().hi + 1e-12)
            out.back().hi = std::max(out.back().hi, iv.hi);
        else
            out.push_back(iv);
    }
    return out;
}

} // namespace

nlohmann::json NiceSet::to_json() const {
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& c : components)
        comps.push_back({{"c_index", c.ci},
                         {"lo", c.v.lo},
                         {"hi", c.v.hi},
                         {"contains_inner", c.contains_inner},
                         {"inside_outer", c.inside_outer}});
    return {{"delta", delta}, {"depth", depth}, {"components", comps},
            {"falsifications", falsifications}};
}

const NiceComponent* NiceSet::component_containing(double x) const {
    for (const auto& c : components)
        if (c.v.contains(x)) return &c;
    return nullptr;
}

double NiceSet::total_length() const {
    double s = 0.0;
    for (const auto& c : components) s += c.v.length();
    return s;
}

NiceSet nice_components(const NoiseModel& noise, double eps, double delta, int depth,
                        int grid, const std::vector<double>& draws, int offset) {
    if (depth < 0 || grid < 8) throw InputError("nice_components: depth >= 0, grid >= 8");
    if (static_cast<int>(draws.size()) < offset + depth)
        throw InputError("nice_components: draw sequence too short for the requested depth");
    (void)grid;
    const MapModel& base = noise.base();
    NiceSet out;
    out.delta = delta;
    out.depth = depth;
    const std::size_t nc = base.crit().size();

    // Deepest level: the component around c of U g^{-i}(B~(delta)) at zero
    // remaining depth is B~(c;delta) itself.  Each coarser level pulls the
    // shifted components back through one more map and re-extracts the
    // component containing c:
    //   V_c(n+1) = comp_c( B~(c;delta) u g^{-1}( U_{c'} V_{c'}(n) ) ).
    std::vector<Interval> comps(nc);
    for (std::size_t ci = 0; ci < nc; ++ci) comps[ci] = base.critical_ball(ci, delta);
    for (int k = depth - 1; k >= 0; --k) {
        const SampledMap g = noise.map_from_draw(eps, draws[offset + k]);
        std::vector<Interval> pre;
        for (std::size_t ci = 0; ci < nc; ++ci)
            for (const Interval& iv : branch_preimages(g, comps[ci])) pre.push_back(iv);
        std::vector<Interval> next(nc);
        for (std::size_t ci = 0; ci < nc; ++ci) {
            const double c = base.crit()[ci].c;
            std::vector<Interval> all = pre;
            all.push_back(base.critical_ball(ci, delta));
            for (const Interval& iv : merge_intervals(std::move(all)))
                if (iv.contains(c)) { next[ci] = iv; break; }
        }
        comps = std::move(next);
    }

    for (std::size_t ci = 0; ci < nc; ++ci) {
        const Interval inner = base.critical_ball(ci, delta);
        const Interval outer = base.critical_ball(ci, 2.0 * delta);
        NiceComponent comp;
        comp.ci = ci;
        comp.v = comps[ci];
        comp.contains_inner =
            comp.v.lo <= inner.lo + 1e-10 && comp.v.hi >= inner.hi - 1e-10;
        comp.inside_outer =
            comp.v.lo >= outer.lo - 1e-9 && comp.v.hi <= outer.hi + 1e-9;
        if (!comp.contains_inner || !comp.inside_outer) ++out.falsifications;
        out.components.push_back(comp);
    }
    return out;
}

NiceSet construct_nice_set(const NoiseModel& noise, double eps, double delta, int depth,
                           int grid, RngStream rng) {
    std::vector<double> draws(depth);
    for (int i = 0; i < depth; ++i) draws[i] = noise.sample_draw(eps, rng);
    return nice_components(noise, eps, delta, depth, grid, draws, 0);
}

nlohmann::json InducingEvent::to_json() const {
    return {{"found", found},
            {"m", m},
            {"c_index", ci},
            {"J", {j.lo, j.hi}},
            {"inf_deriv", inf_deriv},
            {"target_len", target_len},
            {"start_len", start_len},
            {"endpoint_defect", endpoint_defect}};
}

InducingEvent markov_inducing_time(double x, const NoiseModel& noise,
                                   const std::vector<double>& draws,
                                   const NiceSet& start, const InducingConfig& cfg) {
    const MapModel& base = noise.base();
    const NiceComponent* sc = start.component_containing(x);
    if (!sc) throw InputError("markov_inducing_time: x is not in the nice set");
    if (static_cast<int>(draws.size()) < cfg.cap + cfg.depth)
        throw InputError("markov_inducing_time: draw sequence shorter than cap + depth");

    InducingEvent ev;
    ev.start_len = sc->v.length();

    // Orbit of x with per-step maps cached on demand.
    std::vector<double> xs;
    xs.reserve(cfg.cap + 1);
    xs.push_back(x);

    auto g_pow = [&](double z, int m) {
        double prod = 1.0;
        for (int i = 0; i < m; ++i) {
            const auto d = noise.map_from_draw(cfg.eps, draws[i]).eval_with_derivs(z);
            prod *= d.df;
            z = d.f;
        }
        return std::pair<double, double>{z, prod};
    };

    double y = x;
    for (int m = 1; m <= cfg.cap; ++m) {
        y = noise.map_from_draw(cfg.eps, draws[m - 1]).eval_with_derivs(y).f;
        xs.push_back(y);
        if (!base.in_btilde(y, 2.0 * cfg.delta0)) continue;

        const NiceSet shifted =
            nice_components(noise, cfg.eps, cfg.delta0, cfg.depth, cfg.grid, draws, m);
        const NiceComponent* tc = shifted.component_containing(y);
        if (!tc) continue;

        // Pull the target component back along the monotone branch of g^m
        // containing x.  If at any level the branch image fails to cover the
        // running target, no interval around x maps diffeomorphically onto
        // the component at this time.
        Interval target = tc->v;
        bool ok = true;
        for (int i = m - 1; i >= 0 && ok; --i) {
            const SampledMap gi = noise.map_from_draw(cfg.eps, draws[i]);
            double a = 0.0, b = 1.0;
            for (double c : gi.crit()) {
                if (c <= xs[i] && c > a) a = c;
                if (c >= xs[i] && c < b) b = c;
            }
            if (b - a < 1e-13) { ok = false; break; }
            const double va = gi(a), vb = gi(b);
            const double rlo = std::min(va, vb), rhi = std::max(va, vb);
            if (target.lo < rlo - 1e-13 || target.hi > rhi + 1e-13) { ok = false; break; }
            auto solve = [&](double t) {
                t = std::min(std::max(t, rlo), rhi);
                if (t <= rlo) return va <= vb ? a : b;
                if (t >= rhi) return va <= vb ? b : a;
                return bisect([&](double z) { return gi(z) - t; }, a, b);
            };
            double pa = solve(target.lo), pb = solve(target.hi);
            if (pa > pb) std::swap(pa, pb);
            target = {pa, pb};
        }
        if (!ok || target.length() < 1e-13) continue;
        const Interval j{std::min(target.lo, x), std::max(target.hi, x)};

        // Certify the event on a probe grid: the total distortion of g^m on
        // J stays below 1 and the derivative clears twice the expansion
        // needed to map the starting component onto the target.
        constexpr int kProbe = 17;
        double inf_deriv = kInf;
        double max_dlog = 0.0;
        for (int k = 0; k < kProbe; ++k) {
            double z = j.lo + j.length() * k / (kProbe - 1.0);
            double prod = 1.0, dlog = 0.0;
            for (int i = 0; i < m; ++i) {
                const auto d = noise.map_from_draw(cfg.eps, draws[i]).eval_with_derivs(z);
                if (d.df == 0.0) { prod = 0.0; break; }
                dlog += (d.ddf / d.df) * prod;
                prod *= d.df;
                z = d.f;
            }
            inf_deriv = std::min(inf_deriv, std::abs(prod));
            max_dlog = std::max(max_dlog, std::abs(dlog));
        }
        if (max_dlog * j.length() > 1.0) continue;
        if (inf_deriv < 2.0 * tc->v.length() / sc->v.length()) continue;

        const double ia = g_pow(j.lo, m).first;
        const double ib = g_pow(j.hi, m).first;
        ev.found = true;
        ev.m = m;
        ev.ci = tc->ci;
        ev.j = j;
        ev.inf_deriv = inf_deriv;
        ev.target_len = tc->v.length();
        ev.endpoint_defect =
            std::max(std::abs(std::min(ia, ib) - tc->v.lo),
                     std::abs(std::max(ia, ib) - tc->v.hi));
        return ev;
    }
    ev.found = false;
    ev.m = cfg.cap;
    return ev;
}

nlohmann::json TailEstimate::to_json() const {
    return {{"trials", trials},
            {"cap", cap},
            {"censored_fraction", censored_fraction},
            {"falsifications", falsifications},
            {"degenerate", degenerate},
            {"slope", slope},
            {"intercept", intercept},
            {"fit_lo", fit_lo},
            {"fit_hi", fit_hi}};
}

TailEstimate tail_estimate(const NoiseModel& noise, double eps, double delta0,
                           double theta0, int trials, int cap, RngStream rng,
                           int workers, int depth, int grid) {
    if (trials < 1000) throw InputError("tail_estimate: trials must be >= 1000");
    if (eps > delta0) throw InputError("tail_estimate: need eps <= delta0");
    std::vector<int> result(trials, -1); // m, or -1 when censored
    std::vector<long long> fals(trials, 0);
    for_each_index(trials, workers, [&](int t) {
        RngStream s = rng.substream(t);
        std::vector<double> draws(cap + depth + 1);
        for (double& d : draws) d = noise.sample_draw(eps, s);
        const NiceSet start = nice_components(noise, eps, delta0, depth, grid, draws, 0);
        // Uniform start inside the nice set.
        double u = s.uniform01() * start.total_length();
        double x = start.components.front().v.mid();
        for (const auto& comp : start.components) {
            if (u <= comp.v.length()) { x = comp.v.lo + u; break; }
            u -= comp.v.length();
        }
        InducingConfig cfg;
        cfg.delta0 = delta0;
        cfg.theta0 = theta0;
        cfg.eps = eps;
        cfg.depth = depth;
        cfg.grid = grid;
        cfg.cap = cap;
        const InducingEvent ev = markov_inducing_time(x, noise, draws, start, cfg);
        result[t] = ev.found ? ev.m : -1;
        fals[t] = start.falsifications;
    });

    TailEstimate out;
    out.trials = trials;
    out.cap = cap;
    std::vector<long long> events_at(cap + 2, 0);
    long long censored = 0;
    for (int t = 0; t < trials; ++t) {
        if (result[t] < 0) ++censored;
        else ++events_at[result[t]];
    }
    std::vector<long long> exceed(cap + 1, 0); // #{m_V > m}
    long long running = trials;
    for (int m = 1; m <= cap; ++m) {
        running -= events_at[m];
        exceed[m] = running;
    }
    out.censored_fraction = static_cast<double>(censored) / trials;
    for (int t = 0; t < trials; ++t) out.falsifications += fals[t];
    const double z = 1.959963984540054;
    out.survival.resize(cap);
    out.wilson_lo.resize(cap);
    out.wilson_hi.resize(cap);
    for (int m = 1; m <= cap; ++m) {
        const double p = static_cast<double>(exceed[m]) / trials;
        out.survival[m - 1] = p;
        const double n = trials;
        const double denom = 1.0 + z * z / n;
        const double center = (p + z * z / (2.0 * n)) / denom;
        const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
        out.wilson_lo[m - 1] = std::max(0.0, center - half);
        out.wilson_hi[m - 1] = std::min(1.0, center + half);
    }

    // Weighted log-log fit over [max(10, m_hi/10), m_hi], m_hi the last m
    // whose survival sits clearly above the censoring floor.
    const double floor_level = std::max(out.censored_fraction * 1.25,
                                        out.censored_fraction + 3.0 / trials);
    int m_hi = 0;
    for (int m = 1; m <= cap; ++m)
        if (out.survival[m - 1] > floor_level) m_hi = m;
    const int m_lo = std::max(10, m_hi / 10);
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    int points = 0;
    for (int m = m_lo; m <= m_hi; ++m) {
        const double p = out.survival[m - 1];
        if (p <= 0.0) continue;
        const double w = p * trials;
        const double lx = std::log(static_cast<double>(m));
        const double ly = std::log(p);
        sw += w; sx += w * lx; sy += w * ly; sxx += w * lx * lx; sxy += w * lx * ly;
        ++points;
    }
    if (points < 5 || m_hi <= m_lo) {
        out.degenerate = true;
    } else {
        const double det = sw * sxx - sx * sx;
        out.slope = (sw * sxy - sx * sy) / det;
        out.intercept = (sxx * sy - sx * sxy) / det;
        out.fit_lo = m_lo;
        out.fit_hi = m_hi;
    }
    return out;
}

nlohmann::json SIntegralRow::to_json() const {
    return {{"delta", delta},
            {"S_per_c", s_per_c},
            {"S_hat", s_hat},
            {"S_hat_theta_over_e", s_hat_over_e},
            {"censored_fraction", censored_fraction},
            {"ratio", ratio}};
}

std::vector<SIntegralRow> s_integral_estimates(const NoiseModel& noise, double eps,
                                               double delta, double delta0, double theta,
                                               double tau, double theta0, double p,
                                               int trials, int cap, RngStream rng,
                                               int workers) {
    const double e1 = std::exp(1.0);
    if (!(eps <= delta && delta <= delta0 / e1))
        throw InputError("s_integral_estimates: need eps <= delta <= delta0/e");
    if (trials < 50) throw InputError("s_integral_estimates: trials must be >= 50");
    const MapModel& base = noise.base();

    std::vector<double> radii;
    for (double d = delta0 / e1; d >= delta * (1.0 - 1e-12); d /= e1) radii.push_back(d);

    std::vector<SIntegralRow> rows;
    long long censored_total = 0, samples_total = 0;
    for (std::size_t k = 0; k < radii.size(); ++k) {
        const double dr = radii[k];
        SIntegralRow row;
        row.delta = dr;
        long long censored = 0;
        // S per critical point: mean over uniform starts in B~(c;dr).
        for (std::size_t ci = 0; ci < base.crit().size(); ++ci) {
            const Interval ball = base.critical_ball(ci, dr);
            std::vector<double> vals(trials, 0.0);
            std::vector<int> cens(trials, 0);
            for_each_index(trials, workers, [&](int t) {
                RngStream s = rng.substream(2 * k, static_cast<std::uint64_t>(ci) * trials + t);
                const double x = s.uniform(ball.lo, ball.hi);
                const HitTimes ht = h_t_hh(x, noise, eps, dr, delta0, theta, tau, theta0,
                                           cap, s.substream(7));
                const int h = ht.inf_h ? *ht.inf_h : cap;
                if (!ht.inf_h) cens[t] = 1;
                vals[t] = std::pow(static_cast<double>(h), p);
            });
            double mean = 0.0;
            for (int t = 0; t < trials; ++t) { mean += vals[t]; censored += cens[t]; }
            row.s_per_c.push_back(mean / trials);
        }
        samples_total += static_cast<long long>(trials) * base.crit().size();

        // S-hat: (1/dist)-weighted over B~(delta0) \ B~(dr), inf from e*dr.
        double region = 0.0;
        std::vector<Interval> balls0;
        for (std::size_t ci = 0; ci < base.crit().size(); ++ci) {
            balls0.push_back(base.critical_ball(ci, delta0));
            region += balls0.back().length() - base.critical_ball(ci, dr).length();
        }
        double total0 = 0.0;
        for (const auto& b : balls0) total0 += b.length();
        for (int variant = 0; variant < 2; ++variant) {
            const double th = variant == 0 ? theta : theta / e1;
            std::vector<double> vals(trials, 0.0);
            std::vector<int> cens(trials, 0);
            for_each_index(trials, workers, [&](int t) {
                RngStream s = rng.substream(2 * k + 1, static_cast<std::uint64_t>(variant) * trials + t);
                double x = 0.5;
                for (int tries = 0; tries < 10000; ++tries) {
                    double u = s.uniform01() * total0;
                    for (const auto& b : balls0) {
                        if (u <= b.length()) { x = b.lo + u; break; }
                        u -= b.length();
                    }
                    if (!base.in_btilde(x, dr)) break;
                }
                const double d_lo = std::min(e1 * dr, delta0);
                const HitTimes ht = h_t_hh(x, noise, eps, d_lo, delta0, th, tau, theta0,
                                           cap, s.substream(7));
                const int h = ht.inf_h ? *ht.inf_h : cap;
                if (!ht.inf_h) cens[t] = 1;
                vals[t] = std::pow(static_cast<double>(h), p) / base.dist_to_crit(x);
            });
            double mean = 0.0;
            for (int t = 0; t < trials; ++t) { mean += vals[t]; censored += cens[t]; }
            (variant == 0 ? row.s_hat : row.s_hat_over_e) = region * mean / trials;
        }
        samples_total += 2LL * trials;
        censored_total += censored;
        row.censored_fraction =
            static_cast<double>(censored) /
            (static_cast<double>(trials) * (base.crit().size() + 2));
        if (k > 0) {
            const auto& prev = rows.back(); // radius e * dr
            const double s_prev = *std::max_element(prev.s_per_c.begin(), prev.s_per_c.end());
            const double denom = *std::max_element(row.s_per_c.begin(), row.s_per_c.end()) +
                                 2.0 * row.s_hat_over_e;
            row.ratio = denom > 0.0 ? s_prev / denom : 0.0;
        }
        rows.push_back(std::move(row));
    }
    (void)censored_total;
    (void)samples_total;
    return rows;
}

} // namespace rdyn
