#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "rdyn/map_model.hpp"
#include "rdyn/noise.hpp"
#include "rdyn/orbit.hpp"
#include "rdyn/rng.hpp"
#include "rdyn/ulam.hpp"

using namespace rdyn;

TEST_CASE("tent map rows on a dyadic grid split mass evenly") {
    // Each dyadic cell maps affinely with slope 2 onto a union covering two
    // cells, so every row has exactly two entries of 1/2.
    const MapModel f = MapModel::tent();
    const int n = 64;
    const auto op = build_deterministic_operator(f, n);
    for (int i = 0; i < n; ++i) {
        int halves = 0;
        double total = 0.0;
        for (int j = 0; j < n; ++j) {
            const double e = op.entry(i, j);
            total += e;
            if (std::abs(e - 0.5) < 1e-12) ++halves;
            else CHECK(std::abs(e) < 1e-12);
        }
        CHECK(halves == 2);
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("tent map stationary density is uniform") {
    const auto op = build_deterministic_operator(MapModel::tent(), 128);
    const auto res = stationary_density(op, 1e-12, 50000);
    CHECK(res.converged);
    for (double m : res.density) CHECK(std::abs(m - 1.0 / 128.0) < 1e-10);
}

TEST_CASE("rows are stochastic for the noisy builder") {
    const MapModel f = MapModel::logistic(4.0);
    const NoiseModel noise(f, NoiseKind::AdditiveReflected);
    const auto op = build_noisy_operator(f, noise, 0.02, 200);
    for (int i = 0; i < 200; ++i) {
        double total = 0.0;
        for (int j = 0; j < 200; ++j) {
            CHECK(op.entry(i, j) >= 0.0);
            total += op.entry(i, j);
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("zero-noise builder agrees with the branch-exact one") {
    const MapModel f = MapModel::logistic(3.9);
    const NoiseModel noise(f, NoiseKind::AdditiveReflected);
    const auto det = build_deterministic_operator(f, 128);
    const auto noisy = build_noisy_operator(f, noise, 0.0, 128);
    for (int i = 0; i < 128; ++i)
        for (int j = 0; j < 128; ++j)
            CHECK(std::abs(det.entry(i, j) - noisy.entry(i, j)) < 1e-12);
}

TEST_CASE("small-noise operator converges to the quadrature of the kernel") {
    // At N = 64 with eps = 0.05, row i integrates the closed-form kernel;
    // check one row against direct kernel interval measures.
    const MapModel f = MapModel::logistic(4.0);
    const NoiseModel noise(f, NoiseKind::AdditiveReflected);
    const double eps = 0.05;
    const int n = 64;
    const auto op = build_noisy_operator(f, noise, eps, n);
    const TransitionKernel k(noise, eps);
    // Midpoint-rule reference with a fine subgrid inside bin i.
    const int i = 20, sub = 200;
    std::vector<double> ref(n, 0.0);
    for (int s = 0; s < sub; ++s) {
        const double x = (i + (s + 0.5) / sub) / n;
        for (int j = 0; j < n; ++j)
            ref[j] += k.measure(x, Interval{static_cast<double>(j) / n, (j + 1.0) / n}) / sub;
    }
    double err = 0.0;
    for (int j = 0; j < n; ++j) err = std::max(err, std::abs(ref[j] - op.entry(i, j)));
    CHECK(err < 1e-3);
}

TEST_CASE("parallel assembly and iteration match the serial path") {
    const MapModel f = MapModel::logistic(4.0);
    const NoiseModel noise(f, NoiseKind::AdditiveReflected);
    const auto a = build_noisy_operator(f, noise, 0.01, 256, 1);
    const auto b = build_noisy_operator(f, noise, 0.01, 256, 4);
    for (int i = 0; i < 256; ++i)
        for (int j = 0; j < 256; ++j)
            CHECK(a.entry(i, j) == b.entry(i, j));
    const auto s1 = stationary_density(a, 1e-10, 20000, 1);
    const auto s4 = stationary_density(a, 1e-10, 20000, 4);
    for (int i = 0; i < 256; ++i) CHECK(s1.density[i] == s4.density[i]);
}

TEST_CASE("l1 distance extremes") {
    DensityVector a(10, 0.1), b(10, 0.0);
    b[0] = 1.0;
    CHECK(l1_distance(a, a) == 0.0);
    CHECK(l1_distance(a, b) == doctest::Approx(1.8).epsilon(1e-14));
}

TEST_CASE("Chebyshev stationary density approximates the arcsine law") {
    const MapModel f = MapModel::chebyshev();
    const int n = 1024;
    const auto op = build_deterministic_operator(f, n);
    const auto res = stationary_density(op, 1e-10, 40000);
    // Exact bin masses of dx / (pi sqrt(x(1-x))): difference of arcsin cdf.
    auto cdf = [](double x) { return 2.0 / M_PI * std::asin(std::sqrt(x)); };
    double l1 = 0.0;
    for (int i = 0; i < n; ++i)
        l1 += std::abs(res.density[i] - (cdf((i + 1.0) / n) - cdf(static_cast<double>(i) / n)));
    CHECK(l1 < 0.05);
}

TEST_CASE("birkhoff histogram conserves mass and matches the stationary law") {
    const MapModel f = MapModel::chebyshev();
    const NoiseModel noise(f, NoiseKind::AdditiveReflected);
    RngStream rng(31337);
    const auto hist = birkhoff_measure(0.2, noise, 0.01, 200000, 64, rng);
    CHECK(std::accumulate(hist.begin(), hist.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    const auto op = build_noisy_operator(f, noise, 0.01, 64);
    const auto st = stationary_density(op, 1e-10, 40000);
    CHECK(l1_distance(hist, st.density) < 0.1);
}

TEST_CASE("pushforward density of a monotone branch") {
    // Deterministic Chebyshev on J = [0.6, 0.7]: one step is monotone with
    // |Df| = 8 |x - 0.5|, so the pushforward density is 1 / (8 |x - 0.5|).
    MapModel m = MapModel::chebyshev();
    m.set_delta_star(0.05);
    const NoiseModel noise(m, NoiseKind::AdditiveReflected);
    RngStream rng(1);
    const auto orbit = iterate(0.65, noise, 0.0, 4, rng);
    const auto push = branch_pushforward(orbit, Interval{0.6, 0.7}, 1, 51);
    for (std::size_t i = 0; i < push.y.size(); ++i) {
        const double x = 0.6 + 0.1 * static_cast<double>(i) / (push.y.size() - 1);
        CHECK(push.density[i] == doctest::Approx(1.0 / (8.0 * std::abs(x - 0.5))).epsilon(1e-10));
        CHECK(push.hatted[i] == doctest::Approx(push.density[i] / 0.1).epsilon(1e-10));
    }
    // Mass conservation: integral of the pushforward density over the image
    // equals |J|.
    double mass = 0.0;
    for (std::size_t i = 0; i + 1 < push.y.size(); ++i)
        mass += 0.5 * (push.density[i] + push.density[i + 1]) *
                std::abs(push.y[i + 1] - push.y[i]);
    CHECK(mass == doctest::Approx(0.1).epsilon(1e-4));
}
