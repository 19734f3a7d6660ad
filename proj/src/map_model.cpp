#include "rdyn/map_model.hpp"

#include <algorithm>
#include <cmath>

namespace rdyn {

std::string to_string(MapFamily family) {
    switch (family) {
        case MapFamily::Logistic: return "logistic";
        case MapFamily::OffsetLogistic: return "offset-logistic";
        case MapFamily::Tent: return "tent";
    }
    return "?";
}

MapFamily map_family_from_string(const std::string& name) {
    if (name == "logistic") return MapFamily::Logistic;
    if (name == "offset-logistic") return MapFamily::OffsetLogistic;
    if (name == "tent") return MapFamily::Tent;
    throw InputError("unknown map family: " + name);
}

MapModel::MapModel(MapFamily family, double a, double b)
    : family_(family), a_(a), b_(b), delta_star_(0.0) {
    switch (family_) {
        case MapFamily::Logistic:
            if (!(a > 0.0 && a <= 4.0)) throw InputError("logistic: need a in (0,4]");
            crit_ = {{0.5, 2.0}};
            break;
        case MapFamily::OffsetLogistic:
            if (!(b > 0.0 && a > 0.0 && a / 4.0 + b < 1.0))
                throw InputError("offset-logistic: need b > 0 and a/4 + b < 1");
            crit_ = {{0.5, 2.0}};
            break;
        case MapFamily::Tent:
            crit_ = {{0.5, 1.0}}; // turning point; the family is not admissible
            break;
    }
    cv_.clear();
    for (const auto& c : crit_) cv_.push_back(eval_with_derivs(c.c).f);
    init_default_delta_star();
}

MapModel MapModel::logistic(double a) { return MapModel(MapFamily::Logistic, a, 0.0); }
MapModel MapModel::offset_logistic(double a, double b) {
    return MapModel(MapFamily::OffsetLogistic, a, b);
}
MapModel MapModel::tent() { return MapModel(MapFamily::Tent, 2.0, 0.0); }

MapModel::Derivs MapModel::eval_with_derivs(double x) const {
    if (!(x >= 0.0 && x <= 1.0)) throw InputError("eval: x outside [0,1]");
    switch (family_) {
        case MapFamily::Logistic:
            return {a_ * x * (1.0 - x), a_ * (1.0 - 2.0 * x), -2.0 * a_};
        case MapFamily::OffsetLogistic:
            return {b_ + a_ * x * (1.0 - x), a_ * (1.0 - 2.0 * x), -2.0 * a_};
        case MapFamily::Tent:
            if (x < 0.5) return {2.0 * x, 2.0, 0.0};
            return {2.0 - 2.0 * x, -2.0, 0.0};
    }
    throw NumericError("unreachable");
}

double MapModel::ell_max() const {
    double m = 1.0;
    for (const auto& c : crit_) m = std::max(m, c.order);
    return m;
}

void MapModel::set_delta_star(double d) {
    if (!(d > 0.0)) throw InputError("delta_star must be positive");
    delta_star_ = d;
}

Interval MapModel::isolating_neighborhood(std::size_t ci) const {
    const double c = crit_.at(ci).c;
    double lo = 0.0;
    double hi = 1.0;
    for (std::size_t k = 0; k < crit_.size(); ++k) {
        if (k == ci) continue;
        const double other = crit_[k].c;
        if (other < c) lo = std::max(lo, 0.5 * (other + c));
        if (other > c) hi = std::min(hi, 0.5 * (other + c));
    }
    return {lo, hi};
}

Interval MapModel::critical_ball(std::size_t ci, double delta) const {
    if (!(delta > 0.0)) throw InputError("critical_ball: delta must be positive");
    const double c = crit_.at(ci).c;
    const double v = cv_.at(ci);
    const Interval nbhd = isolating_neighborhood(ci);
    auto side = [&](double inner, double outer) -> double {
        // Solve dist(f(x), v) = delta on the monotone side [inner..outer].
        auto h = [&](double x) { return std::abs(eval_with_derivs(x).f - v) - delta; };
        const double at_outer = h(outer);
        if (at_outer < 0.0) {
            // f never reaches distance delta on this side of the isolating
            // neighborhood.
            if (outer == 0.0 || outer == 1.0) return outer; // ball hits the domain endpoint
            throw ScaleError("critical_ball: delta too large, component escapes the isolating neighborhood");
        }
        return bisect(h, std::min(inner, outer), std::max(inner, outer));
    };
    return {side(c, nbhd.lo), side(c, nbhd.hi)};
}

double MapModel::d_c(std::size_t ci, double delta) const {
    const Interval b = critical_ball(ci, delta);
    return delta / b.length();
}

double MapModel::dist_to_crit(double x) const {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& c : crit_) d = std::min(d, std::abs(x - c.c));
    return d;
}

double MapModel::dist_to_cv(double x) const {
    double d = std::numeric_limits<double>::infinity();
    for (double v : cv_) d = std::min(d, std::abs(x - v));
    return d;
}

bool MapModel::in_critical_ball(std::size_t ci, double x, double delta) const {
    if (!isolating_neighborhood(ci).contains(x)) return false;
    return std::abs(eval_with_derivs(x).f - cv_.at(ci)) <= delta;
}

std::optional<std::size_t> MapModel::btilde_component(double x, double delta) const {
    for (std::size_t ci = 0; ci < crit_.size(); ++ci)
        if (in_critical_ball(ci, x, delta)) return ci;
    return std::nullopt;
}

double MapModel::dist_star(double x) const {
    if (delta_star_ <= 0.0) throw NumericError("dist_star: delta_star not set");
    if (in_btilde(x, delta_star_)) return dist_to_cv(eval_with_derivs(x).f);
    return delta_star_;
}

double MapModel::min_crit_gap() const {
    if (crit_.size() <= 1) return 1.0;
    double gap = 1.0;
    for (std::size_t i = 1; i < crit_.size(); ++i)
        gap = std::min(gap, crit_[i].c - crit_[i - 1].c);
    return gap;
}

double MapModel::max_abs_deriv(int grid) const {
    double m = 0.0;
    for (int i = 0; i <= grid; ++i) {
        const double x = static_cast<double>(i) / grid;
        m = std::max(m, std::abs(eval_with_derivs(x).df));
    }
    return m;
}

std::vector<double> MapModel::branch_breakpoints() const {
    std::vector<double> bp = {0.0};
    for (const auto& c : crit_)
        if (c.c > 0.0 && c.c < 1.0) bp.push_back(c.c);
    bp.push_back(1.0);
    std::sort(bp.begin(), bp.end());
    return bp;
}

bool MapModel::delta_star_ok(double ds) const {
    // Disjointness of the B~(c; 2 delta_*) and the derivative bound
    // |Df(x)| >= D_c(dist_*(x)) spot-checked on a 10^3 grid.
    std::vector<Interval> balls;
    try {
        for (std::size_t ci = 0; ci < crit_.size(); ++ci)
            balls.push_back(critical_ball(ci, 2.0 * ds));
    } catch (const ScaleError&) {
        return false;
    }
    for (std::size_t i = 0; i + 1 < balls.size(); ++i)
        if (balls[i].hi >= balls[i + 1].lo) return false;
    if (family_ == MapFamily::Tent) return true; // oracle-only family
    for (std::size_t ci = 0; ci < crit_.size(); ++ci) {
        const Interval b = critical_ball(ci, ds);
        for (int k = 0; k <= 1000; ++k) {
            const double x = b.lo + b.length() * k / 1000.0;
            const double d = dist_to_cv(eval_with_derivs(x).f);
            if (d <= 0.0) continue;
            if (std::abs(eval_with_derivs(x).df) < d_c(ci, d) * (1.0 - 1e-9)) return false;
        }
    }
    return true;
}

void MapModel::init_default_delta_star() {
    double ds = 0.25;
    while (ds > 1e-6) {
        if (delta_star_ok(ds)) {
            delta_star_ = ds;
            return;
        }
        ds *= 0.5;
    }
    throw NumericError("no admissible delta_star found for this map");
}

nlohmann::json MapModel::to_json() const {
    nlohmann::json j;
    j["family"] = to_string(family_);
    j["params"] = {{"a", a_}, {"b", b_}};
    j["delta_star"] = delta_star_;
    nlohmann::json cps = nlohmann::json::array();
    for (const auto& c : crit_) cps.push_back({{"c", c.c}, {"order", c.order}});
    j["critical_points"] = cps;
    return j;
}

MapModel MapModel::from_json(const nlohmann::json& j) {
    const MapFamily family = map_family_from_string(j.at("family").get<std::string>());
    const double a = j.at("params").value("a", 0.0);
    const double b = j.at("params").value("b", 0.0);
    MapModel m(family, a, b);
    if (j.contains("delta_star")) m.set_delta_star(j["delta_star"].get<double>());
    return m;
}

void AdmissibleSpaceParams::validate() const {
    if (!(C > 0.0 && delta > 0.0 && O1 > 0.0 && O2 > 0.0))
        throw InputError("admissible params: C, delta, O1, O2 must be positive");
    if (!(O1 <= O2)) throw InputError("admissible params: need O1 <= O2");
    for (double l : orders)
        if (!(l > 1.0)) throw InputError("admissible params: orders must exceed 1");
}

nlohmann::json AdmissibilityReport::to_json() const {
    return {{"pass_i", pass_i},
            {"pass_ii", pass_ii},
            {"worst_ratio_i", worst_ratio_i},
            {"worst_margin_lower", worst_margin_lower},
            {"worst_margin_upper", worst_margin_upper}};
}

AdmissibilityReport check_admissibility(const AdmissibleSpaceParams& params,
                                        const std::vector<MapModel>& maps,
                                        int grid) {
    params.validate();
    if (maps.empty()) throw InputError("check_admissibility: empty map sample");
    if (grid < 2) throw InputError("check_admissibility: grid must be >= 2");

    AdmissibilityReport report;
    report.worst_margin_lower = -std::numeric_limits<double>::infinity();
    report.worst_margin_upper = -std::numeric_limits<double>::infinity();

    for (const auto& g : maps) {
        // Condition (i): 2 dist(x,y) < dist(x, Crit(g)) implies
        // |log(Dg(x)/Dg(y))| <= C dist(x,y)/dist(x, Crit(g)).
        for (int i = 0; i <= grid; ++i) {
            const double x = static_cast<double>(i) / grid;
            const double dc = g.dist_to_crit(x);
            const double dgx = std::abs(g.eval_with_derivs(x).df);
            if (dgx == 0.0) continue;
            for (int k = 1; k <= 8; ++k) {
                const double r = dc / 2.0 * k / 9.0; // dist(x,y) < dist(x,Crit)/2
                for (double y : {x - r, x + r}) {
                    if (y < 0.0 || y > 1.0 || y == x) continue;
                    const double dgy = std::abs(g.eval_with_derivs(y).df);
                    if (dgy == 0.0) continue;
                    const double lhs = std::abs(std::log(dgx / dgy));
                    const double rhs = params.C * std::abs(x - y) / dc;
                    if (rhs > 0.0) report.worst_ratio_i = std::max(report.worst_ratio_i, lhs / rhs);
                }
            }
        }
        // Condition (ii): O1 d^{l-1} <= |Dg| <= O2 d^{l-1} for d < delta.
        const auto& crit = g.crit();
        const std::size_t n = std::min(crit.size(), params.orders.size());
        for (std::size_t ci = 0; ci < n; ++ci) {
            const double l = params.orders[ci];
            for (int k = 1; k <= grid; ++k) {
                const double d = params.delta * k / (grid + 1.0);
                for (double x : {crit[ci].c - d, crit[ci].c + d}) {
                    if (x < 0.0 || x > 1.0) continue;
                    const double dg = std::abs(g.eval_with_derivs(x).df);
                    const double pw = std::pow(d, l - 1.0);
                    report.worst_margin_lower =
                        std::max(report.worst_margin_lower, params.O1 * pw - dg);
                    report.worst_margin_upper =
                        std::max(report.worst_margin_upper, dg - params.O2 * pw);
                }
            }
        }
    }
    report.pass_i = report.worst_ratio_i <= 1.0 + 1e-12;
    report.pass_ii = report.worst_margin_lower <= 1e-12 && report.worst_margin_upper <= 1e-12;
    return report;
}

} // namespace rdyn
