#include "rdyn/ulam.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace rdyn {
namespace {

// 8-point Gauss-Legendre rule on [-1, 1].
constexpr int kGL = 8;
constexpr double kGLNode[kGL] = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
constexpr double kGLWeight[kGL] = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

template <typename Fn>
void for_each_index(int n, int workers, Fn&& fn) {
#if defined(_OPENMP)
    if (workers > 1) {
#pragma omp parallel for num_threads(workers) schedule(static)
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
#else
    (void)workers;
#endif
    for (int i = 0; i < n; ++i) fn(i);
}

} // namespace

UlamOperator::UlamOperator(int n_bins, std::string provenance)
    : n_(n_bins), provenance_(std::move(provenance)), rows_(n_bins) {
    if (n_bins < 2) throw InputError("UlamOperator: need at least 2 bins");
}

void UlamOperator::set_row(int i, std::vector<Entry> entries) {
    rows_[i] = std::move(entries);
}

void UlamOperator::finalize(double tol) {
    cols_.assign(n_, {});
    for (int i = 0; i < n_; ++i) {
        double sum = 0.0;
        for (const auto& [j, w] : rows_[i]) {
            if (w < 0.0) throw NumericError("UlamOperator: negative entry in row " + std::to_string(i));
            sum += w;
        }
        if (std::abs(sum - 1.0) > tol)
            throw NumericError("UlamOperator: row " + std::to_string(i) + " sums to " +
                               std::to_string(sum));
        for (const auto& [j, w] : rows_[i]) cols_[j].emplace_back(i, w);
    }
    finalized_ = true;
}

DensityVector UlamOperator::apply_transpose(const DensityVector& d, int workers) const {
    if (!finalized_) throw NumericError("UlamOperator: finalize before applying");
    if (static_cast<int>(d.size()) != n_) throw InputError("apply_transpose: size mismatch");
    DensityVector out(n_, 0.0);
    for_each_index(n_, workers, [&](int j) {
        double acc = 0.0;
        for (const auto& [i, w] : cols_[j]) acc += w * d[i];
        out[j] = acc;
    });
    return out;
}

double UlamOperator::entry(int i, int j) const {
    for (const auto& [col, w] : rows_[i])
        if (col == j) return w;
    return 0.0;
}

UlamOperator build_deterministic_operator(const MapModel& map, int n_bins) {
    UlamOperator op(n_bins, "deterministic/" + to_string(map.family()));
    const double h = 1.0 / n_bins;
    std::vector<std::map<int, double>> acc(n_bins);

    const auto bp = map.branch_breakpoints();
    for (std::size_t b = 0; b + 1 < bp.size(); ++b) {
        const double bl = bp[b], br = bp[b + 1];
        const double yl = map.eval_with_derivs(bl).f;
        const double yr = map.eval_with_derivs(br).f;
        const double ylo = std::min(yl, yr), yhi = std::max(yl, yr);
        // Cell boundaries: branch endpoints plus preimages of interior bin edges.
        std::vector<double> cuts{bl, br};
        for (int j = 1; j < n_bins; ++j) {
            const double e = j * h;
            if (e <= ylo || e >= yhi) continue;
            cuts.push_back(bisect([&](double x) { return map.eval_with_derivs(x).f - e; }, bl, br));
        }
        std::sort(cuts.begin(), cuts.end());
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
            const double p = cuts[k], q = cuts[k + 1];
            if (q <= p) continue;
            const double fm = map.eval_with_derivs(0.5 * (p + q)).f;
            const int j = std::clamp(static_cast<int>(fm * n_bins), 0, n_bins - 1);
            const int i_lo = std::clamp(static_cast<int>(p * n_bins), 0, n_bins - 1);
            const int i_hi = std::clamp(static_cast<int>(q * n_bins), 0, n_bins - 1);
            for (int i = i_lo; i <= i_hi; ++i) {
                const double overlap = std::min(q, (i + 1) * h) - std::max(p, i * h);
                if (overlap > 0.0) acc[i][j] += overlap * n_bins;
            }
        }
    }
    for (int i = 0; i < n_bins; ++i) {
        std::vector<UlamOperator::Entry> row(acc[i].begin(), acc[i].end());
        op.set_row(i, std::move(row));
    }
    op.finalize(1e-10);
    return op;
}

UlamOperator build_noisy_operator(const MapModel& map, const NoiseModel& noise,
                                  double eps, int n_bins, int workers, int quad_order) {
    if (quad_order < 8) throw InputError("build_noisy_operator: quadrature order must be >= 8");
    if (eps == 0.0) return build_deterministic_operator(map, n_bins);
    const TransitionKernel kernel(noise, eps);
    UlamOperator op(n_bins, "noisy/" + to_string(noise.kind()));
    const double h = 1.0 / n_bins;
    // Composite rule: repeat the 8-point base rule to reach the requested order.
    const int reps = (quad_order + kGL - 1) / kGL;

    std::vector<std::string> row_error(n_bins);
    std::vector<std::vector<UlamOperator::Entry>> rows(n_bins);
    for_each_index(n_bins, workers, [&](int i) {
        std::map<int, double> acc;
        for (int r = 0; r < reps; ++r) {
            const double seg_lo = (i + static_cast<double>(r) / reps) * h;
            const double seg_h = h / reps;
            for (int k = 0; k < kGL; ++k) {
                const double x = seg_lo + 0.5 * seg_h * (1.0 + kGLNode[k]);
                const double wq = 0.5 * kGLWeight[k] / reps; // normalized by |I_i|
                const double fx = map.eval_with_derivs(x).f;
                // Support of p_eps(.|x): the eps-band around f(x), mirrored
                // into [0,1] at the endpoints for reflected noise.
                std::vector<Interval> regions{{std::max(0.0, fx - eps), std::min(1.0, fx + eps)}};
                if (fx - eps < 0.0) regions.push_back({0.0, -(fx - eps)});
                if (fx + eps > 1.0) regions.push_back({2.0 - (fx + eps), 1.0});
                // Mirrored regions can overlap the base band; every bin is
                // measured at most once.
                std::vector<int> bins;
                for (const auto& reg : regions) {
                    const int j_lo = std::clamp(static_cast<int>(reg.lo * n_bins), 0, n_bins - 1);
                    const int j_hi = std::clamp(static_cast<int>(reg.hi * n_bins), 0, n_bins - 1);
                    for (int j = j_lo; j <= j_hi; ++j) bins.push_back(j);
                }
                std::sort(bins.begin(), bins.end());
                bins.erase(std::unique(bins.begin(), bins.end()), bins.end());
                for (int j : bins) {
                    const double m = kernel.measure(x, Interval{j * h, (j + 1) * h});
                    if (m > 0.0) acc[j] += wq * m;
                }
            }
        }
        double sum = 0.0;
        for (auto& [j, w] : acc) sum += w;
        if (std::abs(sum - 1.0) > 1e-10) {
            row_error[i] = "build_noisy_operator: quadrature defect " +
                           std::to_string(sum - 1.0) + " in bin " + std::to_string(i);
            return;
        }
        std::vector<UlamOperator::Entry> row;
        row.reserve(acc.size());
        for (const auto& [j, w] : acc) row.emplace_back(j, w / sum);
        rows[i] = std::move(row);
    });
    for (int i = 0; i < n_bins; ++i)
        if (!row_error[i].empty()) throw NumericError(row_error[i]);
    for (int i = 0; i < n_bins; ++i) op.set_row(i, std::move(rows[i]));
    op.finalize(1e-9);
    return op;
}

nlohmann::json StationaryResult::to_json() const {
    return {{"residual", residual}, {"iterations", iterations}, {"converged", converged}};
}

StationaryResult stationary_density(const UlamOperator& op, double tol, int maxiter,
                                    int workers) {
    const int n = op.bins();
    StationaryResult res;
    DensityVector d(n, 1.0 / n);
    DensityVector cesaro_sum(n, 0.0);
    for (int it = 1; it <= maxiter; ++it) {
        for (int j = 0; j < n; ++j) cesaro_sum[j] += d[j];
        d = op.apply_transpose(d, workers);
        res.iterations = it;
        if (it % 10 == 0 || it == maxiter) {
            DensityVector c(n);
            for (int j = 0; j < n; ++j) c[j] = cesaro_sum[j] / it;
            const DensityVector pc = op.apply_transpose(c, workers);
            res.residual = l1_distance(pc, c);
            if (res.residual <= tol) {
                res.density = std::move(c);
                res.converged = true;
                return res;
            }
            res.density = std::move(c);
        }
    }
    return res;
}

double l1_distance(const DensityVector& a, const DensityVector& b) {
    if (a.size() != b.size()) throw InputError("l1_distance: bin-count mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

std::vector<StabilityPoint> stability_curve(const MapModel& map, const NoiseModel& noise,
                                            const std::vector<double>& eps_list, int n_bins,
                                            double tol, int maxiter, int workers) {
    for (std::size_t i = 0; i + 1 < eps_list.size(); ++i)
        if (eps_list[i] <= eps_list[i + 1])
            throw InputError("stability_curve: epsilon list must be strictly decreasing");
    const UlamOperator det = build_deterministic_operator(map, n_bins);
    const StationaryResult base = stationary_density(det, tol, maxiter, workers);
    std::vector<StabilityPoint> out;
    for (double eps : eps_list) {
        const UlamOperator noisy = build_noisy_operator(map, noise, eps, n_bins, workers);
        const StationaryResult r = stationary_density(noisy, tol, maxiter, workers);
        out.push_back({eps, l1_distance(r.density, base.density), r.residual, r.iterations});
    }
    return out;
}

DensityVector birkhoff_measure(double x0, const NoiseModel& noise, double eps,
                               long long n, int bins, RngStream rng) {
    if (n < bins) throw InputError("birkhoff_measure: need n >= bins");
    DensityVector hist(bins, 0.0);
    double x = x0;
    for (long long j = 0; j < n; ++j) {
        const int b = std::clamp(static_cast<int>(x * bins), 0, bins - 1);
        hist[b] += 1.0;
        RngStream step = rng.substream(static_cast<std::uint64_t>(j));
        x = noise.sample_map(eps, step).eval_with_derivs(x).f;
    }
    for (double& m : hist) m /= static_cast<double>(n);
    return hist;
}

PushforwardSample branch_pushforward(const RandomOrbit& orbit, const Interval& j,
                                     int n, int grid) {
    if (n < 0 || n > orbit.steps()) throw InputError("branch_pushforward: n out of range");
    if (grid < 2) throw InputError("branch_pushforward: grid must be >= 2");
    PushforwardSample out;
    double sign = 0.0;
    for (int k = 0; k <= grid; ++k) {
        double x = j.lo + j.length() * k / grid;
        double prod = 1.0;
        for (int i = 0; i < n; ++i) {
            const auto d = orbit.map_at(i).eval_with_derivs(x);
            prod *= d.df;
            x = d.f;
        }
        if (prod == 0.0) throw InputError("branch_pushforward: critical point inside J");
        const double s = prod > 0.0 ? 1.0 : -1.0;
        if (sign == 0.0) sign = s;
        if (s != sign) throw InputError("branch_pushforward: g^n is not monotone on J");
        out.y.push_back(x);
        out.density.push_back(1.0 / std::abs(prod));
        out.hatted.push_back(1.0 / (std::abs(prod) * j.length()));
    }
    return out;
}

} // namespace rdyn
