#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "rdyn/map_model.hpp"
#include "rdyn/noise.hpp"
#include "rdyn/rng.hpp"

namespace rdyn {

/// log(e^a + e^b) without overflow; identity for -inf operands.
double log_add_exp(double a, double b);

/// Orbit of a critical value v with derivative magnitudes held in log-space.
struct CriticalOrbitTable {
    double v = 0.0;
    std::vector<double> points;    // f^n(v), n = 0..N
    std::vector<double> log_deriv; // log|Df^n(v)|, log_deriv[0] = 0
    std::vector<double> w_partial; // W_n = sum_{j<=n} |Df^j(v)|^{-1}
    std::vector<double> log_a;     // log A(v,f,n); -inf at n=0, +inf if orbit hits Crit

    int horizon() const { return static_cast<int>(points.size()) - 1; }
    double deriv(int n) const { return std::exp(log_deriv[n]); }
    double a(int n) const { return std::exp(log_a[n]); }
};

CriticalOrbitTable critical_orbit(const MapModel& map, double v, int n);

enum class GrowthClass { SummableDerivatives, LargeDerivativesOnly, Neither, Undetermined };

std::string to_string(GrowthClass cls);

/// Finite-horizon growth evidence; never a proof.
struct GrowthReport {
    GrowthClass cls = GrowthClass::Undetermined;
    double s_estimate = 0.0;  // W_N plus geometric tail extrapolation
    double tail_bound = 0.0;
    double tail_ratio = 0.0;  // median of the last 10 term ratios
    std::string note;
    nlohmann::json to_json() const;
};

/// Classifies the inverse-derivative sum along the critical orbit.
/// Convergence is declared when the observed tail ratio is < 0.95 and the
/// geometric extrapolation of the remainder is finite.
GrowthReport classify_growth(const CriticalOrbitTable& table);

/// Uniform-expansion constants outside a critical neighborhood U:
/// |Df^n(x)| >= C lambda^n for orbit segments avoiding U.
struct ManeConstants {
    double lambda = 0.0;
    double c = 0.0;
    long long segments = 0; // collected (x, n) samples
    nlohmann::json to_json() const;
};

ManeConstants mane_constants(const MapModel& map, const std::vector<Interval>& u,
                             int horizon, int grid);

/// The constant budget shared by the window and binding machinery.
struct DerivedConstants {
    double c_adm = 0.0;   // distortion constant of the admissible space
    double theta0 = 0.0;  // window constant, in (0, 1/(6e))
    double theta1 = 0.0;  // binding constant, in (0, 1/(2e))
    double theta = 0.0;   // binding-period constant: 4 theta W0 <= theta1, 16 e theta W0 C0 <= eta*
    double w0 = 0.0;      // max_v sum |Df^n(v)|^{-1}
    double c0 = 0.0;      // max |Df|
    double eta_star = 0.0; // min gap between critical points (1 if unique)
    int ell_max = 0;
    double big_l = 0.0;   // L > 2^{ell_max}
    double zeta = 0.0;    // in (0, 1/ell_max)
    nlohmann::json to_json() const;
};

DerivedConstants derive_constants(const MapModel& map, double c_adm, int horizon = 80);

/// Preferred binding period for a critical value at scale delta.
struct BindingReport {
    double v = 0.0;
    double delta = 0.0;
    double theta = 0.0, big_l = 0.0, zeta = 0.0;
    int n_max = 0;            // maximal N with A(v,f,N) <= theta/delta
    int m = 0;                // the preferred period M_v(delta)
    std::string branch;       // "landing", "out", or "in"
    bool both_branches = false;
    int k_in = -1;            // dyadic index chosen by the "in" branch
    int s_k = -1;             // its last-visit time
    bool smalla = false;      // A(v,f,M) <= theta/delta
    bool noretmv = false;     // f^j(v) outside B~(L delta) for j < N
    bool dermv = false;       // |Df^{M+1}(v)| >= (delta'/delta)^{1-zeta}
    double a_m = 0.0;         // A(v,f,M)
    double delta_prime = 0.0; // max(dist_*(f^M(v), Crit), delta)
    double deriv_m1 = 0.0;    // |Df^{M+1}(v)|
    nlohmann::json to_json() const;
};

BindingReport binding_period(const MapModel& map, double v, double delta,
                             double theta, double big_l, double zeta);

/// inf over critical values of |Df^{M_v(delta)+1}(v)|.
double lambda0(const MapModel& map, double delta, double theta, double big_l, double zeta);

/// Monte Carlo audit of the shadowing inequalities over a binding period.
struct BindingAudit {
    bool pass = false;
    int samples = 0;
    int period = 0;
    double w = 0.0; // sum_{j<=M} |Df^j(v)|^{-1}
    // Worst margins, each as (bound - quantity); nonnegative means pass.
    double worst_crit = 0.0;
    double worst_der_lo = 0.0;
    double worst_der_hi = 0.0;
    double worst_dis = 0.0;
    nlohmann::json to_json() const;
};

/// Checks, for random starts |y - v| <= eps and sampled map sequences, that
/// the perturbed orbit stays bound to the orbit of v for M steps:
/// half-distance to Crit, e-comparable derivatives, and eW eps |Df^{j+1}(v)|
/// displacement. Precondition: A(v,f,M) W <= theta1 / eps.
BindingAudit verify_binding(const MapModel& map, const NoiseModel& noise, double v,
                            double eps, int period, int samples, double theta1,
                            RngStream& rng);

/// First-landing event statistics at scale delta: orbits avoiding B~(delta)
/// until entering B~(c; 2 delta) at time s.
struct LandingStats {
    long long events = 0;
    double kappa0 = 0.0;   // min |Df^s(x)| D_c(delta) (delta''/delta)^{1-1/ell_max}
    double theta_of_delta = 0.0; // max A(x,f,s) |B~(c;delta)| / |Df^s(x)|
    nlohmann::json to_json() const;
};

LandingStats landing_statistics(const MapModel& map, double delta, int samples,
                                int horizon, RngStream& rng);

} // namespace rdyn
