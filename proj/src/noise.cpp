#include "rdyn/noise.hpp"

#include <algorithm>
#include <cmath>

namespace rdyn {
namespace {

// Parameter noise s ~ U[-k eps, k eps] over the logistic family; k chosen so
// sup|g-f| + sup|g'-f'| = 1.25 |s| stays within eps.
constexpr double kParamScale = 0.8;

double reflect01(double y) {
    if (y < 0.0) return -y;
    if (y > 1.0) return 2.0 - y;
    return y;
}

} // namespace

std::string to_string(NoiseKind kind) {
    switch (kind) {
        case NoiseKind::AdditiveUniform: return "additive-uniform";
        case NoiseKind::AdditiveReflected: return "additive-reflected";
        case NoiseKind::ParameterUniform: return "parameter-uniform";
    }
    return "?";
}

NoiseKind noise_kind_from_string(const std::string& name) {
    if (name == "additive-uniform") return NoiseKind::AdditiveUniform;
    if (name == "additive-reflected") return NoiseKind::AdditiveReflected;
    if (name == "parameter-uniform") return NoiseKind::ParameterUniform;
    throw InputError("unknown noise kind: " + name);
}

SampledMap::SampledMap(const MapModel& base, NoiseKind kind, double eps, double draw)
    : base_(&base), kind_(kind), eps_(eps), draw_(draw) {
    for (const auto& c : base.crit()) crit_.push_back(c.c);
    if (kind_ == NoiseKind::AdditiveReflected && draw_ != 0.0) {
        // Fold points: transversal crossings of f(x) + t through 0 or 1,
        // solved in closed form per family.
        for (double level : {-draw_, 1.0 - draw_}) {
            if (base.family() == MapFamily::Tent) {
                if (level <= 0.0 || level >= 1.0) continue;
                crit_.push_back(0.5 * level);
                crit_.push_back(1.0 - 0.5 * level);
            } else {
                // b + a x (1 - x) = level
                const double disc = 1.0 - 4.0 * (level - base.param_b()) / base.param_a();
                if (disc <= 0.0) continue;
                const double r = 0.5 * std::sqrt(disc);
                for (double x : {0.5 - r, 0.5 + r})
                    if (x > 0.0 && x < 1.0) crit_.push_back(x);
            }
        }
        std::sort(crit_.begin(), crit_.end());
    }
}

MapModel::Derivs SampledMap::eval_with_derivs(double x) const {
    const MapModel::Derivs d = base_->eval_with_derivs(x);
    switch (kind_) {
        case NoiseKind::AdditiveUniform:
            return {d.f + draw_, d.df, d.ddf};
        case NoiseKind::AdditiveReflected: {
            const double y = d.f + draw_;
            if (y < 0.0) return {-y, -d.df, -d.ddf};
            if (y > 1.0) return {2.0 - y, -d.df, -d.ddf};
            return {y, d.df, d.ddf};
        }
        case NoiseKind::ParameterUniform:
            return {d.f + draw_ * x * (1.0 - x), d.df + draw_ * (1.0 - 2.0 * x), d.ddf - 2.0 * draw_};
    }
    throw NumericError("unreachable");
}

double SampledMap::dist_to_crit(double x) const {
    if (crit_.empty()) return 1.0;
    double d = std::numeric_limits<double>::infinity();
    for (double c : crit_) d = std::min(d, std::abs(x - c));
    return d;
}

NoiseModel::NoiseModel(const MapModel& base, NoiseKind kind) : base_(base), kind_(kind) {
    if (kind == NoiseKind::ParameterUniform && base.family() != MapFamily::Logistic)
        throw InputError("parameter-uniform noise is defined over the logistic family");
}

double NoiseModel::nominal_L() const {
    switch (kind_) {
        case NoiseKind::AdditiveUniform: return 1.0;
        case NoiseKind::AdditiveReflected: return 2.0;
        case NoiseKind::ParameterUniform: return 2.0; // expected to fail
    }
    return 1.0;
}

double NoiseModel::max_epsilon() const {
    switch (kind_) {
        case NoiseKind::AdditiveUniform: {
            const double f0 = base_.eval_with_derivs(0.0).f;
            const double f1 = base_.eval_with_derivs(1.0).f;
            double fmin = std::min(f0, f1);
            double fmax = f0;
            for (const auto& c : base_.crit())
                fmax = std::max(fmax, base_.eval_with_derivs(c.c).f);
            return std::max(0.0, std::min(fmin, 1.0 - fmax));
        }
        case NoiseKind::AdditiveReflected:
            return 0.5;
        case NoiseKind::ParameterUniform:
            return std::max(0.0, (4.0 - base_.param_a()) / kParamScale);
    }
    return 0.0;
}

void NoiseModel::validate_epsilon(double eps) const {
    if (eps < 0.0) throw InputError("epsilon must be nonnegative");
    const double m = max_epsilon();
    if (eps > m)
        throw InputError("epsilon " + std::to_string(eps) + " exceeds the " +
                         to_string(kind_) + " validity bound " + std::to_string(m));
}

double NoiseModel::sample_draw(double eps, RngStream& rng) const {
    validate_epsilon(eps);
    if (eps == 0.0) return 0.0;
    const double scale = (kind_ == NoiseKind::ParameterUniform) ? kParamScale * eps : eps;
    return rng.uniform(-scale, scale);
}

SampledMap NoiseModel::sample_map(double eps, RngStream& rng) const {
    return SampledMap(base_, kind_, eps, sample_draw(eps, rng));
}

SampledMap NoiseModel::map_from_draw(double eps, double draw) const {
    return SampledMap(base_, kind_, eps, draw);
}

nlohmann::json NoiseModel::to_json() const {
    return {{"kind", to_string(kind_)}, {"L", nominal_L()}};
}

TransitionKernel::TransitionKernel(const NoiseModel& noise, double eps)
    : noise_(&noise), eps_(eps) {
    noise.validate_epsilon(eps);
}

double TransitionKernel::measure(double x, const std::vector<Interval>& sets) const {
    for (std::size_t i = 0; i < sets.size(); ++i) {
        if (sets[i].hi < sets[i].lo) throw InputError("kernel_measure: empty/inverted interval");
        for (std::size_t j = i + 1; j < sets.size(); ++j)
            if (sets[i].intersects(sets[j]) &&
                std::min(sets[i].hi, sets[j].hi) > std::max(sets[i].lo, sets[j].lo))
                throw InputError("kernel_measure: overlapping intervals in E");
    }
    const double fx = noise_->base().eval_with_derivs(x).f;
    auto overlap = [](double lo, double hi, const Interval& e) {
        return std::max(0.0, std::min(hi, e.hi) - std::max(lo, e.lo));
    };
    double total = 0.0;
    for (const auto& e : sets) {
        switch (noise_->kind()) {
            case NoiseKind::AdditiveUniform:
                if (eps_ == 0.0) {
                    total += e.contains(fx) ? 1.0 : 0.0;
                } else {
                    total += overlap(fx - eps_, fx + eps_, e) / (2.0 * eps_);
                }
                break;
            case NoiseKind::AdditiveReflected: {
                if (eps_ == 0.0) {
                    total += e.contains(fx) ? 1.0 : 0.0;
                    break;
                }
                // t-sets with reflect(fx + t) in e: the direct band plus its
                // mirror images across 0 and 1.
                double len = overlap(e.lo - fx, e.hi - fx, {-eps_, eps_});
                len += overlap(-e.hi - fx, -e.lo - fx, {-eps_, eps_});
                len += overlap(2.0 - e.hi - fx, 2.0 - e.lo - fx, {-eps_, eps_});
                total += len / (2.0 * eps_);
                break;
            }
            case NoiseKind::ParameterUniform: {
                const double w = kParamScale * eps_ * x * (1.0 - x);
                if (w == 0.0) {
                    total += e.contains(fx) ? 1.0 : 0.0;
                } else {
                    total += overlap(fx - w, fx + w, e) / (2.0 * w);
                }
                break;
            }
        }
    }
    return total;
}

double TransitionKernel::sample(double x, RngStream& rng) const {
    const SampledMap g = noise_->sample_map(eps_, rng);
    return g.eval_with_derivs(x).f;
}

nlohmann::json RegularityCertificate::to_json() const {
    return {{"pass", pass},
            {"L", L},
            {"worst_ratio", worst_ratio},
            {"witness_x", witness_x},
            {"witness_E", {witness_e.lo, witness_e.hi}}};
}

RegularityCertificate check_regularity(const TransitionKernel& kernel, double L,
                                       int x_grid, int e_grid) {
    if (x_grid < 100 || e_grid < 100)
        throw InputError("check_regularity: grids must be >= 100");
    const double eps = kernel.epsilon();
    RegularityCertificate cert;
    cert.L = L;
    for (int i = 0; i <= x_grid; ++i) {
        const double x = static_cast<double>(i) / x_grid;
        const double fx = kernel.noise().base().eval_with_derivs(x).f;
        // E lengths log-spaced in [1e-6 * 2eps, 2eps]; positions span the
        // support band of p_eps(.|x).
        const int n_len = e_grid / 10;
        const int n_pos = 10;
        for (int k = 0; k <= n_len; ++k) {
            const double len = 2.0 * eps * std::pow(1e-6, 1.0 - static_cast<double>(k) / n_len);
            for (int p = 0; p < n_pos; ++p) {
                double lo = fx - eps + (2.0 * eps - len) * p / (n_pos - 1.0);
                lo = std::clamp(lo, 0.0, 1.0 - len);
                const Interval e{lo, lo + len};
                const double pe = kernel.measure(x, e);
                const double bound = L * std::pow(e.length() / (2.0 * eps), 1.0 / L);
                if (bound <= 0.0) continue;
                const double ratio = pe / bound;
                if (ratio > cert.worst_ratio) {
                    cert.worst_ratio = ratio;
                    cert.witness_x = x;
                    cert.witness_e = e;
                }
            }
        }
    }
    cert.pass = cert.worst_ratio <= 1.0 + 1e-12;
    return cert;
}

} // namespace rdyn
