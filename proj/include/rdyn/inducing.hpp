#pragma once

#include <optional>
#include <vector>

#include <json.hpp>

#include "rdyn/map_model.hpp"
#include "rdyn/noise.hpp"
#include "rdyn/orbit.hpp"
#include "rdyn/rng.hpp"

namespace rdyn {

/// One connected component of the pullback union
///   V_c(n) = component of U_{i<=n} g^{-i}(B~(delta)) containing c,
/// computed for a fixed sampled map-sequence prefix.
struct NiceComponent {
    std::size_t ci = 0;
    Interval v;
    bool contains_inner = false; // B~(c;delta) inside V
    bool inside_outer = false;   // V inside B~(c;2 delta)
};

struct NiceSet {
    double delta = 0.0;
    int depth = 0;
    std::vector<NiceComponent> components;
    long long falsifications = 0; // sandwich violations, expected zero
    nlohmann::json to_json() const;

    const NiceComponent* component_containing(double x) const;
    double total_length() const;
};

/// Component extraction by escape-time membership: a point belongs to the
/// union iff some iterate within `depth` steps of the stored map sequence
/// (g_offset, g_offset+1, ...) enters B~(delta); the component boundary is
/// located by outward grid scan plus bisection.
NiceSet nice_components(const NoiseModel& noise, double eps, double delta, int depth,
                        int grid, const std::vector<double>& draws, int offset);

/// Samples a fresh map-sequence prefix and builds its nice set.
NiceSet construct_nice_set(const NoiseModel& noise, double eps, double delta, int depth,
                           int grid, RngStream rng);

struct InducingConfig {
    double delta0 = 0.0;
    double theta0 = 0.0; // distortion-window constant
    double eps = 0.0;
    int depth = 10; // pullback depth for nice components
    int grid = 96;  // scan grid per component side
    int cap = 1000;
};

/// A certified Markov inducing event: the window sub-interval J maps
/// diffeomorphically onto the target nice component with derivative at
/// least twice the length ratio.
struct InducingEvent {
    bool found = false;
    int m = 0;
    std::size_t ci = 0;
    Interval j;
    double inf_deriv = 0.0;
    double target_len = 0.0;
    double start_len = 0.0;
    double endpoint_defect = 0.0; // max |g^m(dJ) - dV|
    nlohmann::json to_json() const;
};

/// Scans m = 1..cap for the minimal Markov inducing time of (x, g). The map
/// sequence is given by `draws` (length >= cap + depth + 1); `start` is the
/// nice set of the unshifted sequence and must contain x.
InducingEvent markov_inducing_time(double x, const NoiseModel& noise,
                                   const std::vector<double>& draws,
                                   const NiceSet& start, const InducingConfig& cfg);

/// Empirical survival curve of the inducing time over uniform starts in V.
struct TailEstimate {
    long long trials = 0;
    int cap = 0;
    std::vector<double> survival;  // P(m_V > m), index m-1
    std::vector<double> wilson_lo; // 95% bands
    std::vector<double> wilson_hi;
    double censored_fraction = 0.0;
    long long falsifications = 0; // nice-set sandwich violations across trials
    bool degenerate = false;      // no fittable tail
    double slope = 0.0;      // weighted log-log least squares
    double intercept = 0.0;
    int fit_lo = 0;
    int fit_hi = 0;
    nlohmann::json to_json() const;
};

TailEstimate tail_estimate(const NoiseModel& noise, double eps, double delta0,
                           double theta0, int trials, int cap, RngStream rng,
                           int workers = 1, int depth = 10, int grid = 96);

/// Monte Carlo S-integral scan over radii delta_k = delta0 e^{-k}:
///   S_p(delta; c) : mean of (inf_{d' in [delta, delta0]} h_{d'})^p over B~(c;delta),
///   S-hat(delta)  : (1/dist)-weighted integral over B~(delta0) \ B~(delta)
///                   with the inf starting at e delta (computed at theta and
///                   at theta/e; the recursion ratio uses theta/e).
struct SIntegralRow {
    double delta = 0.0;
    std::vector<double> s_per_c;
    double s_hat = 0.0;         // at theta
    double s_hat_over_e = 0.0;  // at theta/e
    double censored_fraction = 0.0;
    double ratio = 0.0; // S(e delta) / (max_c S(delta) + 2 s_hat_over_e(delta)); 0 on first row
    nlohmann::json to_json() const;
};

std::vector<SIntegralRow> s_integral_estimates(const NoiseModel& noise, double eps,
                                               double delta, double delta0, double theta,
                                               double tau, double theta0, double p,
                                               int trials, int cap, RngStream rng,
                                               int workers = 1);

} // namespace rdyn
