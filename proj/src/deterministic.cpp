#include "rdyn/deterministic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rdyn {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

double log_add_exp(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    if (a == kInf || b == kInf) return kInf;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(std::min(a, b) - m));
}

CriticalOrbitTable critical_orbit(const MapModel& map, double v, int n) {
    if (n < 1) throw InputError("critical_orbit: horizon must be >= 1");
    CriticalOrbitTable t;
    t.v = v;
    t.points.reserve(n + 1);
    t.log_deriv.reserve(n + 1);
    t.w_partial.reserve(n + 1);
    t.log_a.reserve(n + 1);

    double x = v;
    double log_d = 0.0; // log|Df^j(v)|
    double w = 0.0;
    double log_a = -kInf;
    for (int j = 0; j <= n; ++j) {
        t.points.push_back(x);
        t.log_deriv.push_back(log_d);
        w += std::exp(-log_d);
        t.w_partial.push_back(w);
        t.log_a.push_back(log_a);
        if (j == n) break;
        const double dist = map.dist_to_crit(x);
        log_a = (dist == 0.0) ? kInf : log_add_exp(log_a, log_d - std::log(dist));
        const auto d = map.eval_with_derivs(x);
        log_d += (d.df == 0.0) ? -kInf : std::log(std::abs(d.df));
        x = d.f;
    }
    return t;
}

std::string to_string(GrowthClass cls) {
    switch (cls) {
        case GrowthClass::SummableDerivatives: return "summable-derivatives";
        case GrowthClass::LargeDerivativesOnly: return "large-derivatives-only";
        case GrowthClass::Neither: return "neither";
        case GrowthClass::Undetermined: return "undetermined";
    }
    return "?";
}

nlohmann::json GrowthReport::to_json() const {
    return {{"class", to_string(cls)},
            {"S", s_estimate},
            {"tail_bound", tail_bound},
            {"tail_ratio", tail_ratio},
            {"evidence", "finite-horizon"},
            {"note", note}};
}

GrowthReport classify_growth(const CriticalOrbitTable& table) {
    const int n = table.horizon();
    if (n < 10) throw InputError("classify_growth: need a table of length >= 10");
    GrowthReport r;
    // Inverse-derivative terms t_j; ratios over the last 10 steps.
    std::vector<double> ratios;
    for (int j = n - 10; j < n; ++j) {
        const double lr = table.log_deriv[j] - table.log_deriv[j + 1];
        ratios.push_back(std::exp(lr)); // t_{j+1} / t_j
    }
    r.tail_ratio = median(ratios);
    const double t_last = std::exp(-table.log_deriv[n]);
    if (r.tail_ratio < 0.95) {
        r.cls = GrowthClass::SummableDerivatives;
        r.tail_bound = t_last * r.tail_ratio / (1.0 - r.tail_ratio);
        r.s_estimate = table.w_partial[n] + r.tail_bound;
        r.note = "geometric tail extrapolation, ratio < 0.95";
        return r;
    }
    r.s_estimate = table.w_partial[n];
    const double slope = table.log_deriv[n] / n;
    if (slope > std::log(1.02)) {
        r.cls = GrowthClass::LargeDerivativesOnly;
        r.note = "derivatives grow but inverse sum shows no geometric decay";
    } else if (table.log_deriv[n] < 0.0 && r.tail_ratio > 1.0) {
        r.cls = GrowthClass::Neither;
        r.note = "derivatives decay along the critical orbit: hyperbolic attractor suspected";
    } else {
        r.cls = GrowthClass::Undetermined;
        r.note = "horizon inconclusive";
    }
    return r;
}

nlohmann::json ManeConstants::to_json() const {
    return {{"lambda", lambda}, {"C", c}, {"segments", segments}};
}

ManeConstants mane_constants(const MapModel& map, const std::vector<Interval>& u,
                             int horizon, int grid) {
    if (grid < 1000) throw InputError("mane_constants: grid must be >= 1000");
    if (horizon < 2) throw InputError("mane_constants: horizon must be >= 2");
    auto in_u = [&](double x) {
        for (const auto& iv : u)
            if (iv.contains(x)) return true;
        return false;
    };
    // First pass: minimal per-step growth rate over segments of length >= horizon/2.
    double min_log_rate = kInf;
    long long segments = 0;
    std::vector<std::vector<double>> all_logd(grid + 1);
    for (int i = 0; i <= grid; ++i) {
        double x = static_cast<double>(i) / grid;
        double log_d = 0.0;
        auto& logs = all_logd[i];
        for (int s = 0; s < horizon; ++s) {
            if (in_u(x)) break;
            const auto d = map.eval_with_derivs(x);
            if (d.df == 0.0) break;
            log_d += std::log(std::abs(d.df));
            logs.push_back(log_d); // log|Df^{s+1}(x)|
            x = d.f;
        }
        segments += static_cast<long long>(logs.size());
        for (std::size_t s = 0; s < logs.size(); ++s) {
            const int len = static_cast<int>(s) + 1;
            if (2 * len >= horizon) min_log_rate = std::min(min_log_rate, logs[s] / len);
        }
    }
    if (min_log_rate == kInf)
        throw ScaleError("mane_constants: no orbit segment of length >= horizon/2 avoids U");
    ManeConstants out;
    out.lambda = std::exp(min_log_rate);
    out.segments = segments;
    double min_log_c = kInf;
    for (const auto& logs : all_logd)
        for (std::size_t s = 0; s < logs.size(); ++s)
            min_log_c = std::min(min_log_c, logs[s] - (static_cast<double>(s) + 1) * min_log_rate);
    out.c = std::exp(min_log_c);
    return out;
}

nlohmann::json DerivedConstants::to_json() const {
    return {{"C", c_adm},      {"theta0", theta0},     {"theta1", theta1},
            {"theta", theta},  {"W0", w0},             {"C0", c0},
            {"eta_star", eta_star}, {"ell_max", ell_max}, {"L", big_l},
            {"zeta", zeta}};
}

DerivedConstants derive_constants(const MapModel& map, double c_adm, int horizon) {
    if (c_adm <= 0.0) throw InputError("derive_constants: C must be positive");
    DerivedConstants k;
    k.c_adm = c_adm;
    const double e = std::exp(1.0);
    k.theta0 = std::min(1.0 / (6.0 * e), 1.0 / (4.0 * e * c_adm));
    k.theta1 = k.theta0;
    double w0 = 0.0;
    for (double v : map.critical_values()) {
        const auto table = critical_orbit(map, v, horizon);
        const auto growth = classify_growth(table);
        if (growth.cls != GrowthClass::SummableDerivatives)
            throw ScaleError("derive_constants: inverse-derivative sum along the orbit of " +
                             std::to_string(v) + " shows no geometric decay (" +
                             to_string(growth.cls) + ")");
        w0 = std::max(w0, growth.s_estimate);
    }
    k.w0 = w0;
    k.c0 = map.max_abs_deriv();
    k.eta_star = map.min_crit_gap();
    k.theta = std::min(k.theta1 / (4.0 * w0), k.eta_star / (16.0 * e * w0 * k.c0));
    k.ell_max = static_cast<int>(std::lround(map.ell_max()));
    k.big_l = std::pow(2.0, k.ell_max) + 1.0;
    k.zeta = 1.0 / (2.0 * k.ell_max);
    return k;
}

nlohmann::json BindingReport::to_json() const {
    return {{"v", v},
            {"delta", delta},
            {"theta", theta},
            {"L", big_l},
            {"zeta", zeta},
            {"N", n_max},
            {"M", m},
            {"branch", branch},
            {"both_branches", both_branches},
            {"k_in", k_in},
            {"s_k", s_k},
            {"smalla", smalla},
            {"noretmv", noretmv},
            {"dermv", dermv},
            {"A_M", a_m},
            {"delta_prime", delta_prime},
            {"deriv_M_plus_1", deriv_m1}};
}

BindingReport binding_period(const MapModel& map, double v, double delta,
                             double theta, double big_l, double zeta) {
    if (delta <= 0.0 || theta <= 0.0) throw InputError("binding_period: delta, theta > 0 required");
    const double lmax = map.ell_max();
    if (big_l <= std::pow(2.0, lmax)) throw InputError("binding_period: need L > 2^{ell_max}");
    if (zeta <= 0.0 || zeta >= 1.0 / lmax) throw InputError("binding_period: need zeta in (0, 1/ell_max)");

    const double log_budget = std::log(theta / delta);
    // Grow the table until A(v,f,n) exceeds theta/delta.
    int cap = 64;
    CriticalOrbitTable t = critical_orbit(map, v, cap);
    while (t.log_a.back() <= log_budget) {
        if (cap > 100000)
            throw ScaleError("binding_period: A(v,f,n) never exceeds theta/delta within 1e5 steps");
        cap *= 2;
        t = critical_orbit(map, v, cap);
    }
    int n_max = 0;
    while (t.log_a[n_max + 1] <= log_budget) ++n_max;
    if (n_max < 1) throw ScaleError("binding_period: theta/delta too small, N < 1");

    BindingReport r;
    r.v = v;
    r.delta = delta;
    r.theta = theta;
    r.big_l = big_l;
    r.zeta = zeta;
    r.n_max = n_max;

    for (int j = 0; j < n_max; ++j)
        if (map.in_btilde(t.points[j], big_l * delta))
            throw ScaleError("binding_period: orbit of v re-enters B~(L delta) before N; "
                             "delta not small enough");
    r.noretmv = true;

    auto log_term = [&](int n) {
        const double dist = map.dist_to_crit(t.points[n]);
        return dist == 0.0 ? kInf : t.log_deriv[n] - std::log(dist);
    };

    bool out_holds = false;
    int in_k = -1;
    if (map.in_btilde(t.points[n_max], big_l * delta)) {
        r.m = n_max;
        r.branch = "landing";
    } else {
        // Dyadic scales delta_k = 2^{-k} delta_*; V_k = B~(delta_k).
        const double ds = map.delta_star();
        std::vector<int> last_visit; // s_k for k = 0..k1-1
        int k1 = 0;
        for (;; ++k1) {
            const double dk = std::ldexp(ds, -k1);
            int sk = -1;
            for (int j = 0; j <= n_max; ++j)
                if (map.in_btilde(t.points[j], dk)) sk = j;
            if (sk < 0) break;
            last_visit.push_back(sk);
        }
        const int s0 = last_visit.empty() ? -1 : last_visit[0];
        double log_out = -kInf;
        for (int n = s0 + 1; n <= n_max; ++n) log_out = log_add_exp(log_out, log_term(n));
        out_holds = log_out >= std::log(theta / (2.0 * delta));
        for (int k = 0; k < k1 && in_k < 0; ++k) {
            const int hi = last_visit[k];
            const int lo = (k + 1 < k1) ? last_visit[k + 1] : -1;
            if (hi <= lo || hi < 1) continue;
            double log_seg = -kInf;
            for (int n = lo + 1; n <= hi; ++n) log_seg = log_add_exp(log_seg, log_term(n));
            const double dk = std::ldexp(ds, -k);
            const double log_rhs = -std::log(delta) + 0.5 * zeta * std::log(delta / dk);
            if (log_seg >= log_rhs) in_k = k;
        }
        r.both_branches = out_holds && in_k >= 0;
        if (out_holds) {
            r.m = n_max;
            r.branch = "out";
            if (in_k >= 0) r.k_in = in_k, r.s_k = last_visit[in_k];
        } else if (in_k >= 0) {
            r.m = last_visit[in_k];
            r.branch = "in";
            r.k_in = in_k;
            r.s_k = last_visit[in_k];
        } else {
            throw ScaleError("binding_period: neither segment-sum case fires; delta not small enough");
        }
    }

    r.a_m = t.a(r.m);
    r.smalla = t.log_a[r.m] <= log_budget;
    r.delta_prime = std::max(map.dist_star(t.points[r.m]), delta);
    r.deriv_m1 = std::exp(t.log_deriv[r.m + 1]);
    r.dermv = t.log_deriv[r.m + 1] >= (1.0 - zeta) * std::log(r.delta_prime / delta);
    return r;
}

double lambda0(const MapModel& map, double delta, double theta, double big_l, double zeta) {
    double out = kInf;
    for (double v : map.critical_values())
        out = std::min(out, binding_period(map, v, delta, theta, big_l, zeta).deriv_m1);
    return out;
}

nlohmann::json BindingAudit::to_json() const {
    return {{"pass", pass},
            {"samples", samples},
            {"M", period},
            {"W", w},
            {"worst_margin_half_distance", worst_crit},
            {"worst_margin_deriv_lower", worst_der_lo},
            {"worst_margin_deriv_upper", worst_der_hi},
            {"worst_margin_displacement", worst_dis}};
}

BindingAudit verify_binding(const MapModel& map, const NoiseModel& noise, double v,
                            double eps, int period, int samples, double theta1,
                            RngStream& rng) {
    if (period < 1 || samples < 1) throw InputError("verify_binding: period, samples >= 1");
    const CriticalOrbitTable t = critical_orbit(map, v, period + 1);
    const double w = t.w_partial[period];
    const double a_m = t.a(period);
    if (eps > 0.0 && a_m * w > theta1 / eps)
        throw InputError("verify_binding: hypothesis A(v,f,M) W <= theta1/eps fails: A*W*eps = " +
                         std::to_string(a_m * w * eps) + " > theta1 = " + std::to_string(theta1));

    BindingAudit audit;
    audit.samples = samples;
    audit.period = period;
    audit.w = w;
    audit.worst_crit = audit.worst_der_lo = audit.worst_der_hi = audit.worst_dis = kInf;
    const double e = std::exp(1.0);
    for (int trial = 0; trial < samples; ++trial) {
        RngStream s = rng.substream(trial);
        double y = std::clamp(v + s.uniform(-eps, eps), 0.0, 1.0);
        double log_dg = 0.0;
        for (int j = 0; j < period; ++j) {
            const SampledMap g = noise.sample_map(eps, s);
            const double dist = map.dist_to_crit(t.points[j]);
            audit.worst_crit = std::min(audit.worst_crit, 1.0 - 2.0 * std::abs(y - t.points[j]) / dist);
            const auto d = g.eval_with_derivs(y);
            log_dg += std::log(std::abs(d.df));
            y = d.f;
            // Derivative margins in log units: |log(Dg^{j+1}(y)/Df^{j+1}(v))| <= 1.
            const double gap = log_dg - t.log_deriv[j + 1];
            audit.worst_der_lo = std::min(audit.worst_der_lo, 1.0 + gap);
            audit.worst_der_hi = std::min(audit.worst_der_hi, 1.0 - gap);
            if (eps > 0.0) {
                const double bound = e * w * eps * std::exp(t.log_deriv[j + 1]);
                audit.worst_dis = std::min(audit.worst_dis,
                                           1.0 - std::abs(y - t.points[j + 1]) / bound);
            }
        }
    }
    if (eps == 0.0) audit.worst_dis = 0.0;
    audit.pass = audit.worst_crit >= 0.0 && audit.worst_der_lo >= 0.0 &&
                 audit.worst_der_hi >= 0.0 && audit.worst_dis >= 0.0;
    return audit;
}

nlohmann::json LandingStats::to_json() const {
    return {{"events", events}, {"kappa0", kappa0}, {"theta_of_delta", theta_of_delta}};
}

LandingStats landing_statistics(const MapModel& map, double delta, int samples,
                                int horizon, RngStream& rng) {
    if (delta <= 0.0 || delta >= map.delta_star())
        throw InputError("landing_statistics: need 0 < delta < delta_*");
    if (samples < 100) throw InputError("landing_statistics: samples >= 100 required");
    LandingStats out;
    out.kappa0 = kInf;
    const double expo = 1.0 - 1.0 / map.ell_max();
    for (int i = 0; i < samples; ++i) {
        RngStream s = rng.substream(i);
        const double x0 = s.uniform01();
        if (map.in_btilde(x0, 2.0 * delta)) continue;
        double x = x0;
        double log_d = 0.0;
        double log_a = -kInf;
        for (int n = 1; n <= horizon; ++n) {
            const double dist = map.dist_to_crit(x);
            if (dist == 0.0) break;
            log_a = log_add_exp(log_a, log_d - std::log(dist));
            const auto d = map.eval_with_derivs(x);
            log_d += std::log(std::abs(d.df));
            x = d.f;
            const auto comp = map.btilde_component(x, 2.0 * delta);
            if (!comp) continue;
            const std::size_t ci = *comp;
            const double dpp = std::max(map.dist_to_cv(x0), delta);
            const double kappa = std::exp(log_d) * map.d_c(ci, delta) *
                                 std::pow(dpp / delta, expo);
            const double th = std::exp(log_a - log_d) * map.critical_ball(ci, delta).length();
            out.kappa0 = std::min(out.kappa0, kappa);
            out.theta_of_delta = std::max(out.theta_of_delta, th);
            ++out.events;
            break;
        }
    }
    if (out.events == 0) out.kappa0 = 0.0;
    return out;
}

} // namespace rdyn
