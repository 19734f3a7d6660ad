#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rdyn/deterministic.hpp"
#include "rdyn/map_model.hpp"
#include "rdyn/rng.hpp"

using namespace rdyn;

TEST_CASE("distortion sum on the Chebyshev fixed critical orbit") {
    // From x = 0: orbit 0, 0, 0, ... with |Df| = 4 and dist = 0.5 each step,
    // so A(0, f, n) = sum_{i<n} 4^i / 0.5 = 2 (4^n - 1) / 3.
    const MapModel f = MapModel::chebyshev();
    const auto table = critical_orbit(f, 0.0, 10);
    CHECK(table.a(3) == doctest::Approx(42.0).epsilon(1e-12));
    CHECK(table.a(5) == doctest::Approx(2.0 * (std::pow(4.0, 5) - 1.0) / 3.0).epsilon(1e-12));
}

TEST_CASE("inverse-derivative sum W_N converges to 4/3 on Chebyshev") {
    const MapModel f = MapModel::chebyshev();
    const auto table = critical_orbit(f, f.critical_values()[0], 20);
    // v = 1 maps to 0 and stays: |Df^0| = 1, |Df^j| = 4^{j-1} * 4 afterwards?
    // Orbit of v = 1: 1 -> 0 -> 0 ... with |Df(1)| = 4, |Df(0)| = 4.
    // W_20 = sum_{j=0}^{20} 4^{-j} -> 4/3.
    CHECK(table.w_partial[20] == doctest::Approx(4.0 / 3.0).epsilon(1e-9));
    const auto g = classify_growth(table);
    CHECK(g.cls == GrowthClass::SummableDerivatives);
    CHECK(g.s_estimate == doctest::Approx(4.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("growth classification flags non-expanding parameters") {
    // a = 3.2 has an attracting 2-cycle: derivatives along the critical
    // orbit decay, so the verdict is Neither.
    const MapModel f = MapModel::logistic(3.2);
    const auto table = critical_orbit(f, f.critical_values()[0], 60);
    CHECK(classify_growth(table).cls == GrowthClass::Neither);
}

TEST_CASE("derived constants are positive and ordered") {
    const MapModel f = MapModel::chebyshev();
    const auto k = derive_constants(f, 16.0);
    CHECK(k.theta0 > 0.0);
    CHECK(k.theta1 == k.theta0);
    CHECK(k.theta > 0.0);
    CHECK(k.theta <= k.theta1);
    CHECK(k.big_l >= 3.0);
    CHECK(k.zeta > 0.0);
    CHECK(k.zeta <= 0.5);
    CHECK(k.w0 >= 4.0 / 3.0 - 1e-6);
    CHECK(k.c0 == doctest::Approx(4.0).epsilon(1e-3));
}

TEST_CASE("preferred binding period: out branch on Chebyshev") {
    MapModel f = MapModel::chebyshev();
    f.set_delta_star(0.05);
    // A(1, f, n) grows like 4^n; theta/delta = 1e4 is crossed between
    // n = 6 (A ~ 2.7e3) and n = 7, so N = 6; the orbit 1 -> 0 -> 0 never
    // re-enters B~(L delta) and the out-branch sum is huge, giving M = N.
    const auto rep = binding_period(f, 1.0, 1e-6, 0.01, 9.0, 0.25);
    CHECK(rep.n_max == 6);
    CHECK(rep.m == 6);
    CHECK(rep.branch == "out");
    CHECK(rep.smalla);
    CHECK(rep.noretmv);
    CHECK(rep.dermv);
}

TEST_CASE("binding period grows as delta shrinks") {
    MapModel f = MapModel::offset_logistic(3.9, 0.01);
    f.set_delta_star(0.02);
    const auto k = derive_constants(f, 16.0);
    int last = 0;
    for (double delta : {1e-4, 1e-6, 1e-7}) {
        const auto rep = binding_period(f, f.critical_values()[0], delta, k.theta, k.big_l, k.zeta);
        CHECK(rep.m >= last);
        CHECK(rep.smalla);
        last = rep.m;
    }
}

TEST_CASE("expansion constants outside a critical neighbourhood") {
    const MapModel f = MapModel::chebyshev();
    const std::vector<Interval> u = {f.critical_ball(0, 0.04)};
    const auto mc = mane_constants(f, u, 40, 4000);
    CHECK(mc.lambda > 1.0);
    CHECK(mc.c > 0.0);
}

TEST_CASE("shadowing audit passes under the smallness precondition") {
    MapModel f = MapModel::chebyshev();
    f.set_delta_star(0.05);
    const NoiseModel noise(f, NoiseKind::AdditiveReflected);
    const auto k = derive_constants(f, 16.0);
    const double delta = 1e-4;
    const auto rep = binding_period(f, 1.0, delta, k.theta, k.big_l, k.zeta);
    RngStream rng(2024);
    const auto audit = verify_binding(f, noise, 1.0, 1e-5, rep.m, 500, k.theta1, rng);
    CHECK(audit.pass);
    CHECK(audit.worst_crit >= 0.0);
    CHECK(audit.worst_der_lo >= 0.0);
    CHECK(audit.worst_der_hi >= 0.0);
    CHECK(audit.worst_dis >= 0.0);
    // A period far past the smallness bound must be rejected up front.
    CHECK_THROWS_AS(verify_binding(f, noise, 1.0, 1e-5, 4 * rep.m + 40, 10, k.theta1, rng),
                    InputError);
}

TEST_CASE("landing statistics produce events with positive floor") {
    MapModel f = MapModel::chebyshev();
    f.set_delta_star(0.05);
    RngStream rng(7);
    const auto stats = landing_statistics(f, 1e-3, 2000, 2000, rng);
    CHECK(stats.events > 100);
    CHECK(stats.kappa0 > 0.0);
    CHECK(stats.theta_of_delta > 0.0);
}

TEST_CASE("log_add_exp handles extreme ranges") {
    CHECK(log_add_exp(0.0, 0.0) == doctest::Approx(std::log(2.0)));
    CHECK(log_add_exp(1000.0, 0.0) == doctest::Approx(1000.0));
    const double inf = std::numeric_limits<double>::infinity();
    CHECK(log_add_exp(-inf, 3.0) == 3.0);
    CHECK(log_add_exp(inf, 3.0) == inf);
}
