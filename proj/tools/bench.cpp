#include <chrono>
#include <cstdio>
#include <string>

#include "rdyn/inducing.hpp"
#include "rdyn/map_model.hpp"
#include "rdyn/noise.hpp"
#include "rdyn/rng.hpp"
#include "rdyn/ulam.hpp"

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

void report(const char* name, double serial_ms, double parallel_ms, int workers,
            double max_diff) {
    std::printf("%-24s serial %9.1f ms   %d workers %9.1f ms   speedup %5.2fx   max |diff| %.3e\n",
                name, serial_ms, workers, parallel_ms, serial_ms / parallel_ms, max_diff);
}

} // namespace

int main(int argc, char** argv) {
    const int workers = argc > 1 ? std::atoi(argv[1]) : 4;
    const rdyn::MapModel map = rdyn::MapModel::logistic(4.0);
    const rdyn::NoiseModel noise(map, rdyn::NoiseKind::AdditiveReflected);
    const double eps = 0.01;

    // Noisy transfer-operator assembly: rows are independent, so the parallel
    // build must match the serial one exactly.
    {
        const int n = 1024;
        auto t0 = std::chrono::steady_clock::now();
        const auto op_s = rdyn::build_noisy_operator(map, noise, eps, n, 1);
        const double serial_ms = ms_since(t0);
        t0 = std::chrono::steady_clock::now();
        const auto op_p = rdyn::build_noisy_operator(map, noise, eps, n, workers);
        const double parallel_ms = ms_since(t0);
        double max_diff = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                max_diff = std::max(max_diff, std::abs(op_s.entry(i, j) - op_p.entry(i, j)));
        report("build_noisy_operator", serial_ms, parallel_ms, workers, max_diff);

        t0 = std::chrono::steady_clock::now();
        const auto st_s = rdyn::stationary_density(op_s, 1e-9, 20000, 1);
        const double st_serial = ms_since(t0);
        t0 = std::chrono::steady_clock::now();
        const auto st_p = rdyn::stationary_density(op_s, 1e-9, 20000, workers);
        const double st_parallel = ms_since(t0);
        double st_diff = 0.0;
        for (int i = 0; i < n; ++i)
            st_diff = std::max(st_diff, std::abs(st_s.density[i] - st_p.density[i]));
        report("stationary_density", st_serial, st_parallel, workers, st_diff);
    }

    // Inducing-time tail: per-trial work is independent; survival curves must
    // agree for any worker count.
    {
        const int trials = 1000, cap = 2000;
        rdyn::RngStream rng(12345);
        auto t0 = std::chrono::steady_clock::now();
        const auto tail_s =
            rdyn::tail_estimate(noise, 0.005, 0.02, 0.06, trials, cap, rng, 1);
        const double serial_ms = ms_since(t0);
        t0 = std::chrono::steady_clock::now();
        const auto tail_p =
            rdyn::tail_estimate(noise, 0.005, 0.02, 0.06, trials, cap, rng, workers);
        const double parallel_ms = ms_since(t0);
        double max_diff = 0.0;
        for (std::size_t i = 0; i < tail_s.survival.size(); ++i)
            max_diff = std::max(max_diff, std::abs(tail_s.survival[i] - tail_p.survival[i]));
        report("tail_estimate", serial_ms, parallel_ms, workers, max_diff);
    }
    return 0;
}
