#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rdyn/deterministic.hpp"
#include "rdyn/map_model.hpp"
#include "rdyn/noise.hpp"
#include "rdyn/rng.hpp"

namespace rdyn {

/// One realized random orbit x_{j+1} = g_j(x_j) under a fixed noise model,
/// with enough stored data (per-step draws) to reconstruct every g_j.
/// Derivative products and the distortion sum
///   A(x,g,n) = sum_{i<n} |Dg^i(x)| / dist(x_i, Crit(g_i))
/// are held in log-space.
struct RandomOrbit {
    const NoiseModel* noise = nullptr;
    double eps = 0.0;
    std::vector<double> draws;     // g_0..g_n (one spare so x_n still has a map)
    std::vector<double> points;    // x_0..x_n
    std::vector<double> log_deriv; // log|Dg^j(x)|, j = 0..n
    std::vector<double> log_a;     // log A(x,g,j); -inf at 0, +inf if x_i hits Crit(g_i)
    std::vector<double> dist;      // dist(x_j, Crit(g_j)), j = 0..n

    int steps() const { return static_cast<int>(points.size()) - 1; }
    double a(int n) const { return std::exp(log_a[n]); }
    double deriv(int n) const { return std::exp(log_deriv[n]); }
    SampledMap map_at(int j) const;
};

RandomOrbit iterate(double x0, const NoiseModel& noise, double eps, int n, RngStream rng);

/// Re-runs the stored map sequence from a different start y, returning
/// (log|Dg^n(y)|, log A(y,g,n)). Used by the distortion-window and
/// cocycle checks.
struct ReplayResult {
    double point = 0.0;
    double log_deriv = 0.0;
    double log_a = 0.0;
};
ReplayResult replay(const RandomOrbit& orbit, double y, int n);

/// The distortion window J = [x +- theta0 / A(x,g,n)] together with the
/// measured nonlinearity N(g^n|J) = sup_J |d/dy log|Dg^n(y)|| * |J|.
struct DistortionWindow {
    Interval j;
    double nonlinearity = 0.0;
    bool degenerate = false; // A = +inf collapses J to {x}
};
DistortionWindow distortion_window(const RandomOrbit& orbit, int n, double theta0,
                                   int probe_grid = 33);

/// Return-time classification at time s, all kinds evaluated.
struct ReturnClassification {
    int s = 0;
    bool good = false;    // x_s in B~(c;delta) and theta |Dg^s| >= A |B~(c;delta)|
    bool close = false;   // theta |Dg^s| >= A dist(x_s, Crit(g_s))
    bool scale = false;   // theta0 |Dg^s| >= e tau A
    bool landing = false; // x_s in B~(delta)
    std::optional<std::size_t> component; // landing component index
    double log_deriv = 0.0;
    double log_a = 0.0;
    double dist_s = 0.0;
    nlohmann::json to_json() const;
};
ReturnClassification classify_return(const RandomOrbit& orbit, int s, double delta,
                                     double theta, double tau, double theta0);

/// First entry time into B~(delta), capped.
std::optional<int> first_landing(double x, const NoiseModel& noise, double eps,
                                 double delta, int cap, RngStream rng);

/// First hitting times of the return statistics; nullopt means the cap was
/// reached (right-censored, reported, never silently dropped).
struct HitTimes {
    std::optional<int> h_delta;   // first theta-good return at scale delta
    std::optional<int> t_tau;     // first tau-scale expansion time
    std::optional<int> inf_h;     // inf over delta' in [delta, delta0] of h_{delta'}
    std::optional<int> h_hat;     // min(inf_h, t_tau)
    int cap = 0;
    nlohmann::json to_json() const;
};
HitTimes h_t_hh(double x, const NoiseModel& noise, double eps, double delta,
                double delta0, double theta, double tau, double theta0, int cap,
                RngStream rng);

/// Per-step recurrence depth q_eps and its aggregates.
struct RecurrenceStats {
    std::vector<double> q;       // q_eps at each step (may be +inf)
    std::vector<double> q_sum;   // Q_0^s running sums
    std::vector<int> gamma;      // Gamma_0^s running counts of x_j in B~(eps)
    bool bad = false;            // Q_0^s > min(m, kappa Gamma_0^s) for all s, and Q reaches m
    bool horizon_truncated = false;
    nlohmann::json to_json() const;
};
RecurrenceStats recurrence_stats(const RandomOrbit& orbit, double eps, double kappa, int m);

/// Monte Carlo lower-bound diagnostic for derivative growth at landings:
/// part (i) scans starts near the critical values for first entries into
/// B~(c;2 eps) avoiding B~(eps); part (ii) scans derivative growth along
/// stretches avoiding B~(eps).
struct GrowthDiagnostic {
    double lambda_hat = 0.0;   // min over part (i) events of |Dg^s(x)| D_c(eps)
    double part2_min = 0.0;    // min over stretches of |Dg^s(x)| eps^{1/ell_max - 1}
    long long events_i = 0;
    long long events_ii = 0;
    double residual_lo = 0.0;  // min/max of log(|Dg^s| D_c / lambda_hat) / s
    double residual_hi = 0.0;
    nlohmann::json to_json() const;
};
GrowthDiagnostic growth_diagnostic(const MapModel& map, const NoiseModel& noise,
                                   double eps, int trials, int cap, RngStream rng);

/// Falsification counter for backward contraction: sampled intervals W
/// meeting B~(xi eps) whose s-step image fits in B~(2 eps) must satisfy
/// W inside B~(xi' eps). Expected zero violations.
struct ContractionCheck {
    long long checked = 0;
    long long violations = 0;
    nlohmann::json to_json() const;
};
ContractionCheck backward_contraction_check(const MapModel& map, const NoiseModel& noise,
                                            double eps, double xi, double xi_prime,
                                            int trials, int cap, RngStream rng);

} // namespace rdyn
