#pragma once

#include <vector>

#include <json.hpp>

#include "rdyn/map_model.hpp"
#include "rdyn/rng.hpp"

namespace rdyn {

enum class NoiseKind {
    AdditiveUniform,   // g = f + t, t ~ U[-eps, eps]; needs image margin
    AdditiveReflected, // g = reflect(f + t), folds at 0 and 1
    ParameterUniform,  // g = f_{a+s}, s ~ U[-k eps, k eps]; negative M_eps(L) example
};

std::string to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& name);

/// One realized perturbed map g in the eps-neighborhood of the base map,
/// evaluable with derivatives and carrying its own critical-point list
/// (reflected maps add fold points).
class SampledMap {
public:
    SampledMap(const MapModel& base, NoiseKind kind, double eps, double draw);

    MapModel::Derivs eval_with_derivs(double x) const;
    double operator()(double x) const { return eval_with_derivs(x).f; }
    double deriv(double x) const { return eval_with_derivs(x).df; }

    /// Critical points of g itself (empty only for degenerate models).
    const std::vector<double>& crit() const { return crit_; }
    /// dist(x, Crit(g)); 1 if Crit(g) is empty.
    double dist_to_crit(double x) const;

    double draw() const { return draw_; }
    NoiseKind kind() const { return kind_; }
    const MapModel& base() const { return *base_; }

private:
    const MapModel* base_;
    NoiseKind kind_;
    double eps_;
    double draw_; // t for additive kinds, s for parameter noise
    std::vector<double> crit_;
};

class NoiseModel {
public:
    NoiseModel(const MapModel& base, NoiseKind kind);

    const MapModel& base() const { return base_; }
    NoiseKind kind() const { return kind_; }
    /// Nominal regularity constant of the M_eps(L) certificate this model
    /// is expected to satisfy (or to fail, for the parameter kind).
    double nominal_L() const;

    /// Largest eps the model supports (margin constraints).
    double max_epsilon() const;
    void validate_epsilon(double eps) const;

    /// Draws the raw noise value (t for additive kinds, s for parameter).
    double sample_draw(double eps, RngStream& rng) const;
    SampledMap sample_map(double eps, RngStream& rng) const;
    /// The map realized by a stored draw value (orbit reconstruction).
    SampledMap map_from_draw(double eps, double draw) const;

    nlohmann::json to_json() const;

private:
    MapModel base_; // owned copy: the model must not dangle behind orbits
    NoiseKind kind_;
};

/// Transition kernel p_eps(.|x): law of g(x) when g is sampled from the
/// noise model at level eps. Closed-form interval measure per kind.
class TransitionKernel {
public:
    TransitionKernel(const NoiseModel& noise, double eps);

    double epsilon() const { return eps_; }
    const NoiseModel& noise() const { return *noise_; }

    /// p_eps(E|x) for E a finite union of disjoint intervals.
    double measure(double x, const std::vector<Interval>& sets) const;
    double measure(double x, const Interval& e) const {
        return measure(x, std::vector<Interval>{e});
    }
    /// CDF of x' at y: p_eps([0,y] | x).
    double cdf(double x, double y) const { return measure(x, Interval{0.0, y}); }

    double sample(double x, RngStream& rng) const;

private:
    const NoiseModel* noise_;
    double eps_;
};

struct RegularityCertificate {
    bool pass = false;
    double L = 0.0;
    double worst_ratio = 0.0; // max of p(E|x) / (L (|E|/2eps)^{1/L})
    double witness_x = 0.0;
    Interval witness_e;
    nlohmann::json to_json() const;
};

/// Audits p_eps(E|x) <= L (|E|/2eps)^{1/L} on an (x, E) product grid.
RegularityCertificate check_regularity(const TransitionKernel& kernel, double L,
                                       int x_grid, int e_grid);

} // namespace rdyn
