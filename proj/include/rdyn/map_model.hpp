#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace rdyn {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double length() const { return hi - lo; }
    double mid() const { return 0.5 * (lo + hi); }
    bool contains(double x) const { return lo <= x && x <= hi; }
    bool intersects(const Interval& o) const { return lo <= o.hi && o.lo <= hi; }
};

/// Thrown when an input violates an operation's domain.
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a radius/scale parameter is too large (or too small) for the
/// requested construction to be well-defined.
struct ScaleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when a numeric procedure fails to meet its tolerance.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CriticalPoint {
    double c;     // location in (0,1)
    double order; // l_c > 1 (quadratic => 2)
};

enum class MapFamily {
    Logistic,       // f_a(x) = a x (1-x), a in (0,4]
    OffsetLogistic, // f_{a,b}(x) = b + a x (1-x), b > 0, a/4 + b < 1
    Tent,           // non-smooth; Ulam-solver oracle only, not admissible
};

std::string to_string(MapFamily family);
MapFamily map_family_from_string(const std::string& name);

/// A C^3 self-map of [0,1] with explicitly listed non-flat critical points,
/// evaluable with first and second derivatives, plus the derived critical
/// structure (critical balls, D_c, dist_*).
class MapModel {
public:
    struct Derivs {
        double f;
        double df;
        double ddf;
    };

    static MapModel logistic(double a);
    static MapModel offset_logistic(double a, double b);
    static MapModel chebyshev() { return logistic(4.0); }
    static MapModel tent();

    MapFamily family() const { return family_; }
    double param_a() const { return a_; }
    double param_b() const { return b_; }
    bool admissible_family() const { return family_ != MapFamily::Tent; }

    Derivs eval_with_derivs(double x) const;
    double operator()(double x) const { return eval_with_derivs(x).f; }
    double deriv(double x) const { return eval_with_derivs(x).df; }

    const std::vector<CriticalPoint>& crit() const { return crit_; }
    const std::vector<double>& critical_values() const { return cv_; }
    double ell_max() const;
    double delta_star() const { return delta_star_; }
    void set_delta_star(double d);

    /// B~(c;delta): the component of f^{-1}(B_delta(f(c))) containing c,
    /// endpoints located by bisection on each monotone side of c.
    Interval critical_ball(std::size_t ci, double delta) const;

    /// D_c(delta) = delta / |B~(c;delta)|.
    double d_c(std::size_t ci, double delta) const;

    /// dist_*(x, Crit): dist(f(x), CV) on B~(delta_*), delta_* outside.
    double dist_star(double x) const;

    /// Membership of x in B~(c;delta), without root finding.
    bool in_critical_ball(std::size_t ci, double x, double delta) const;
    /// Membership in B~(delta) = union of the per-c balls. Returns the
    /// index of the containing component, if any.
    std::optional<std::size_t> btilde_component(double x, double delta) const;
    bool in_btilde(double x, double delta) const {
        return btilde_component(x, delta).has_value();
    }

    double dist_to_crit(double x) const;
    double dist_to_cv(double x) const;

    /// eta_*: positive constant below the smallest gap between distinct
    /// critical points (1 when the map is unimodal).
    double min_crit_gap() const;
    /// C_0 = max |Df| over a grid.
    double max_abs_deriv(int grid = 10000) const;

    /// The isolating neighborhood of critical point ci used for bracketed
    /// root finding: bounded by midpoints to adjacent critical points or by
    /// the domain endpoints.
    Interval isolating_neighborhood(std::size_t ci) const;

    /// Monotone branch endpoints: 0, critical points, 1.
    std::vector<double> branch_breakpoints() const;

    nlohmann::json to_json() const;
    static MapModel from_json(const nlohmann::json& j);

private:
    MapModel(MapFamily family, double a, double b);

    void init_default_delta_star();
    bool delta_star_ok(double ds) const;

    MapFamily family_;
    double a_;
    double b_;
    std::vector<CriticalPoint> crit_;
    std::vector<double> cv_;
    double delta_star_;
};

struct AdmissibleSpaceParams {
    double C;                   // distortion constant of condition (i)
    std::vector<double> orders; // l_1..l_n
    double delta;               // radius for condition (ii)
    double O1;
    double O2;

    void validate() const;
};

struct AdmissibilityReport {
    bool pass_i = false;
    bool pass_ii = false;
    // Worst observed ratio of |log(Dg(x)/Dg(y))| to C dist(x,y)/dist(x,Crit)
    // over pairs with 2 dist(x,y) < dist(x,Crit); <= 1 means condition (i)
    // holds on the sample.
    double worst_ratio_i = 0.0;
    // Worst violation margins of the O1/O2 bounds near the critical points;
    // nonnegative values are violations.
    double worst_margin_lower = 0.0;
    double worst_margin_upper = 0.0;
    nlohmann::json to_json() const;
};

AdmissibilityReport check_admissibility(const AdmissibleSpaceParams& params,
                                        const std::vector<MapModel>& maps,
                                        int grid);

/// Bracketed bisection for continuous h on [lo,hi] with h(lo), h(hi) of
/// opposite sign; absolute tolerance on the bracket width.
template <typename F>
double bisect(F&& h, double lo, double hi, double tol = 1e-13) {
    double flo = h(lo);
    double fhi = h(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0) == (fhi > 0)) throw NumericError("bisect: no sign change in bracket");
    while (hi - lo > tol) {
        double mid = 0.5 * (lo + hi);
        double fm = h(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0) == (flo > 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace rdyn
