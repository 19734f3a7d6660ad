#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rdyn/map_model.hpp"
#include "rdyn/noise.hpp"
#include "rdyn/orbit.hpp"
#include "rdyn/rng.hpp"

namespace rdyn {

/// Bin masses on the uniform N-bin partition of [0,1], summing to 1;
/// read as a piecewise-constant density via density_j = mass_j * N.
using DensityVector = std::vector<double>;

/// Row-stochastic Ulam discretization of a pushforward operator.
/// Stored both row-wise (P_ij) and column-wise (for race-free transposed
/// application, identical results for any worker count).
class UlamOperator {
public:
    using Entry = std::pair<int, double>;

    UlamOperator(int n_bins, std::string provenance);

    int bins() const { return n_; }
    const std::string& provenance() const { return provenance_; }
    const std::vector<Entry>& row(int i) const { return rows_[i]; }

    void set_row(int i, std::vector<Entry> entries);
    /// Builds the column-wise index; verifies row sums are 1 within tol.
    void finalize(double tol = 1e-12);

    /// d <- P^T d (mass pushforward). workers <= 1 runs serially.
    DensityVector apply_transpose(const DensityVector& d, int workers = 1) const;

    double entry(int i, int j) const;

private:
    int n_;
    std::string provenance_;
    std::vector<std::vector<Entry>> rows_;
    std::vector<std::vector<Entry>> cols_;
    bool finalized_ = false;
};

/// P_ij = |I_i intersect f^{-1}(I_j)| / |I_i|, branch-exact: bin-edge
/// preimages are located by bisection on each monotone branch.
UlamOperator build_deterministic_operator(const MapModel& map, int n_bins);

/// P_ij = (1/|I_i|) int_{I_i} p_eps(I_j | x) dx by per-bin Gauss-Legendre
/// quadrature (order >= 8) of the closed-form kernel; rows renormalized,
/// defect above 1e-10 raises. eps = 0 delegates to the branch-exact builder.
UlamOperator build_noisy_operator(const MapModel& map, const NoiseModel& noise,
                                  double eps, int n_bins, int workers = 1,
                                  int quad_order = 8);

struct StationaryResult {
    DensityVector density;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
    nlohmann::json to_json() const;
};

/// Cesaro-averaged power iteration from the uniform start.
StationaryResult stationary_density(const UlamOperator& op, double tol, int maxiter,
                                    int workers = 1);

/// Total-variation-style distance: sum over bins of |mass difference|.
double l1_distance(const DensityVector& a, const DensityVector& b);

struct StabilityPoint {
    double eps = 0.0;
    double distance = 0.0;
    double residual = 0.0;
    int iterations = 0;
};

/// L1 gap between the noisy stationary density and the deterministic Ulam
/// density at the same N, per epsilon.
std::vector<StabilityPoint> stability_curve(const MapModel& map, const NoiseModel& noise,
                                            const std::vector<double>& eps_list, int n_bins,
                                            double tol, int maxiter, int workers = 1);

/// Normalized visit histogram of a single random orbit.
DensityVector birkhoff_measure(double x0, const NoiseModel& noise, double eps,
                               long long n, int bins, RngStream rng);

/// Density of (g^n)_* (Leb|J) sampled at grid images: L(y) = 1/|Dg^n(x_y)|,
/// plus the J-normalized variant. Requires g^n monotone on J.
struct PushforwardSample {
    std::vector<double> y;       // image points g^n(x)
    std::vector<double> density; // L(y)
    std::vector<double> hatted;  // L(y)/|J|
};
PushforwardSample branch_pushforward(const RandomOrbit& orbit, const Interval& j,
                                     int n, int grid);

} // namespace rdyn
