#include <chrono>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rdyn/deterministic.hpp"
#include "rdyn/inducing.hpp"
#include "rdyn/io.hpp"
#include "rdyn/map_model.hpp"
#include "rdyn/noise.hpp"
#include "rdyn/orbit.hpp"
#include "rdyn/rng.hpp"
#include "rdyn/ulam.hpp"

namespace {

using nlohmann::json;
constexpr const char* kVersion = "0.1.0";

struct Options {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    int workers = 1;
};

const json& section(const json& cfg, const char* name) {
    static const json empty = json::object();
    if (cfg.contains(name) && cfg[name].is_object()) return cfg[name];
    return empty;
}

double getd(const json& sec, const char* key, double dflt) {
    return sec.contains(key) ? sec[key].get<double>() : dflt;
}
long long geti(const json& sec, const char* key, long long dflt) {
    return sec.contains(key) ? sec[key].get<long long>() : dflt;
}
std::string gets(const json& sec, const char* key, const std::string& dflt) {
    return sec.contains(key) ? sec[key].get<std::string>() : dflt;
}

rdyn::MapModel make_map(const json& cfg) {
    const json& m = section(cfg, "map");
    const std::string family = gets(m, "family", "logistic");
    if (family == "logistic") return rdyn::MapModel::logistic(getd(m, "a", 4.0));
    if (family == "offset-logistic")
        return rdyn::MapModel::offset_logistic(getd(m, "a", 3.9), getd(m, "b", 0.02));
    if (family == "tent") return rdyn::MapModel::tent();
    throw rdyn::InputError("map.family: unknown family '" + family + "'");
}

rdyn::NoiseKind make_kind(const json& cfg) {
    return rdyn::noise_kind_from_string(
        gets(section(cfg, "noise"), "kind", "additive-reflected"));
}

std::vector<double> eps_list(const json& p) {
    std::vector<double> out;
    if (p.contains("epsilons"))
        for (const auto& e : p["epsilons"]) out.push_back(e.get<double>());
    else
        out.push_back(getd(p, "epsilon", 0.01));
    return out;
}

void write_manifest(const Options& opt, const std::string& command, const json& cfg,
                    const json& extra, double wall_ms) {
    json m{{"command", command},
           {"version", kVersion},
           {"seed", opt.seed},
           {"workers", opt.workers},
           {"config", cfg},
           {"config_hash", rdyn::config_hash(cfg)},
           {"wall_ms", wall_ms}};
    if (!extra.is_null()) m["derived"] = extra;
    rdyn::write_json(opt.out_dir + "/manifest.json", m);
}

int cmd_analyze_map(const json& cfg, const Options& opt) {
    const json& p = section(cfg, "params");
    const rdyn::MapModel map = make_map(cfg);
    const int horizon = static_cast<int>(geti(p, "horizon", 60));
    const double c_adm = getd(p, "C", 16.0);

    json out{{"map", map.to_json()}};
    json growth = json::array();
    for (std::size_t i = 0; i < map.critical_values().size(); ++i) {
        const double v = map.critical_values()[i];
        const auto table = rdyn::critical_orbit(map, v, horizon);
        const auto g = rdyn::classify_growth(table);
        growth.push_back({{"v", v}, {"growth", g.to_json()}});
        rdyn::CsvWriter csv(opt.out_dir + "/critical_orbit_" + std::to_string(i) + ".csv",
                            {"n", "f_n_v", "log_deriv", "W_n", "A_n"});
        for (int n = 0; n <= table.horizon(); ++n)
            csv.row({static_cast<double>(n), table.points[n], table.log_deriv[n],
                     table.w_partial[n], table.a(n)});
    }
    out["growth"] = growth;
    if (map.admissible_family()) {
        try {
            out["constants"] = rdyn::derive_constants(map, c_adm, horizon).to_json();
        } catch (const rdyn::ScaleError& e) {
            out["constants"] = nullptr;
            out["constants_note"] = e.what();
        }
        rdyn::AdmissibleSpaceParams ap;
        ap.C = c_adm;
        for (const auto& c : map.crit()) ap.orders.push_back(c.order);
        ap.delta = getd(p, "adm_delta", 0.05);
        const double slope = 2.0 * map.param_a();
        ap.O1 = getd(p, "O1", 0.999 * slope);
        ap.O2 = getd(p, "O2", 1.001 * slope);
        out["admissibility"] =
            rdyn::check_admissibility(ap, {map}, static_cast<int>(geti(p, "adm_grid", 400)))
                .to_json();
        const double mane_delta = getd(p, "mane_delta", 0.04);
        std::vector<rdyn::Interval> u;
        for (std::size_t i = 0; i < map.crit().size(); ++i)
            u.push_back(map.critical_ball(i, mane_delta));
        out["mane"] = rdyn::mane_constants(map, u, static_cast<int>(geti(p, "mane_horizon", 40)),
                                           static_cast<int>(geti(p, "mane_grid", 10000)))
                          .to_json();
        rdyn::RngStream rng(opt.seed);
        out["landing"] = rdyn::landing_statistics(map, getd(p, "landing_delta", 1e-3),
                                                  static_cast<int>(geti(p, "landing_samples", 10000)),
                                                  static_cast<int>(geti(p, "landing_horizon", 2000)),
                                                  rng)
                             .to_json();
    }
    rdyn::write_json(opt.out_dir + "/analyze.json", out);
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_check_noise(const json& cfg, const Options& opt) {
    const json& p = section(cfg, "params");
    const rdyn::MapModel map = make_map(cfg);
    const rdyn::NoiseModel noise(map, make_kind(cfg));
    json out = json::array();
    for (double eps : eps_list(p)) {
        const rdyn::TransitionKernel kernel(noise, eps);
        const double big_l = getd(p, "L", noise.nominal_L());
        const auto cert = rdyn::check_regularity(kernel,
                                                 big_l,
                                                 static_cast<int>(geti(p, "x_grid", 200)),
                                                 static_cast<int>(geti(p, "e_grid", 200)));
        json row{{"epsilon", eps}, {"certificate", cert.to_json()}, {"noise", noise.to_json()}};
        out.push_back(row);
    }
    rdyn::write_json(opt.out_dir + "/regularity.json", out);
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_simulate(const json& cfg, const Options& opt) {
    const json& p = section(cfg, "params");
    const rdyn::MapModel map = make_map(cfg);
    const rdyn::NoiseModel noise(map, make_kind(cfg));
    const double eps = getd(p, "epsilon", 0.01);
    const int steps = static_cast<int>(geti(p, "steps", 1000));
    const double x0 = getd(p, "x0", 0.1);
    rdyn::RngStream rng(opt.seed);
    const rdyn::RandomOrbit orbit = rdyn::iterate(x0, noise, eps, steps, rng);
    const auto rec = rdyn::recurrence_stats(orbit, eps, getd(p, "kappa", 1.0),
                                            static_cast<int>(geti(p, "m", 10)));
    rdyn::CsvWriter csv(opt.out_dir + "/orbit.csv",
                        {"j", "x_j", "log_deriv", "A_j", "dist_j", "q_j", "in_Btilde_eps"});
    for (int j = 0; j <= orbit.steps(); ++j)
        csv.row({static_cast<double>(j), orbit.points[j], orbit.log_deriv[j], orbit.a(j),
                 orbit.dist[j], rec.q[j],
                 map.in_btilde(orbit.points[j], eps) ? 1.0 : 0.0});

    const double delta = getd(p, "delta", 4.0 * eps);
    const double theta0 = getd(p, "theta0", 1.0 / (6.0 * std::exp(1.0)));
    const double theta = getd(p, "theta", theta0 / 4.0);
    const double tau = getd(p, "tau", 0.25);
    std::ofstream events(opt.out_dir + "/events.jsonl");
    long long n_events = 0;
    for (int s = 1; s <= orbit.steps(); ++s) {
        const auto c = rdyn::classify_return(orbit, s, delta, theta, tau, theta0);
        if (c.good || c.close || c.scale || c.landing) {
            events << c.to_json().dump() << "\n";
            ++n_events;
        }
    }
    json out{{"steps", steps},
             {"events", n_events},
             {"Q_total", rec.q_sum.back()},
             {"Gamma_total", rec.gamma.back()},
             {"bad", rec.bad},
             {"horizon_truncated", rec.horizon_truncated}};
    rdyn::write_json(opt.out_dir + "/simulate.json", out);
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_binding(const json& cfg, const Options& opt) {
    const json& p = section(cfg, "params");
    const rdyn::MapModel map = make_map(cfg);
    const rdyn::NoiseModel noise(map, make_kind(cfg));
    const double delta = getd(p, "delta", 1e-5);
    const double eps = getd(p, "epsilon", delta);
    const int samples = static_cast<int>(geti(p, "samples", 1000));
    const auto k = rdyn::derive_constants(map, getd(p, "C", 16.0),
                                          static_cast<int>(geti(p, "horizon", 80)));
    rdyn::RngStream rng(opt.seed);
    json reports = json::array();
    bool any_fail = false;
    for (double v : map.critical_values()) {
        const auto rep = rdyn::binding_period(map, v, delta, k.theta, k.big_l, k.zeta);
        const auto audit = rdyn::verify_binding(map, noise, v, eps, rep.m, samples,
                                                k.theta1, rng);
        if (!audit.pass) any_fail = true;
        reports.push_back({{"report", rep.to_json()}, {"audit", audit.to_json()}});
    }
    json out{{"constants", k.to_json()},
             {"reports", reports},
             {"Lambda0", rdyn::lambda0(map, delta, k.theta, k.big_l, k.zeta)}};
    rdyn::write_json(opt.out_dir + "/binding.json", out);
    std::cout << out.dump(2) << "\n";
    return any_fail ? 4 : 0;
}

int cmd_stationary(const json& cfg, const Options& opt) {
    const json& p = section(cfg, "params");
    const rdyn::MapModel map = make_map(cfg);
    const int n = static_cast<int>(geti(p, "N", 2048));
    const double eps = getd(p, "epsilon", 0.0);
    const double tol = getd(p, "tol", 1e-8);
    const int maxiter = static_cast<int>(geti(p, "maxiter", 10000));
    rdyn::UlamOperator op = [&] {
        if (eps == 0.0) return rdyn::build_deterministic_operator(map, n);
        const rdyn::NoiseModel noise(map, make_kind(cfg));
        return rdyn::build_noisy_operator(map, noise, eps, n, opt.workers);
    }();
    const auto res = rdyn::stationary_density(op, tol, maxiter, opt.workers);
    rdyn::CsvWriter csv(opt.out_dir + "/density.csv",
                        {"bin_left", "bin_right", "mass", "density"});
    for (int i = 0; i < n; ++i)
        csv.row({static_cast<double>(i) / n, static_cast<double>(i + 1) / n,
                 res.density[i], res.density[i] * n});
    json out = res.to_json();
    out["N"] = n;
    out["epsilon"] = eps;
    rdyn::write_json(opt.out_dir + "/stationary.json", out);
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_stability_curve(const json& cfg, const Options& opt) {
    const json& p = section(cfg, "params");
    const rdyn::MapModel map = make_map(cfg);
    const rdyn::NoiseModel noise(map, make_kind(cfg));
    const auto res = rdyn::stability_curve(map, noise, eps_list(p),
                                           static_cast<int>(geti(p, "N", 2048)),
                                           getd(p, "tol", 1e-8),
                                           static_cast<int>(geti(p, "maxiter", 10000)),
                                           opt.workers);
    rdyn::CsvWriter csv(opt.out_dir + "/stability_curve.csv",
                        {"epsilon", "l1_distance", "residual", "iterations"});
    json out = json::array();
    for (const auto& r : res) {
        csv.row({r.eps, r.distance, r.residual, static_cast<double>(r.iterations)});
        out.push_back({{"epsilon", r.eps}, {"l1_distance", r.distance},
                       {"residual", r.residual}, {"iterations", r.iterations}});
    }
    rdyn::write_json(opt.out_dir + "/stability_curve.json", out);
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_diagnostics(const json& cfg, const Options& opt) {
    const json& p = section(cfg, "params");
    const rdyn::MapModel map = make_map(cfg);
    const rdyn::NoiseModel noise(map, make_kind(cfg));
    const int trials = static_cast<int>(geti(p, "trials", 2000));
    const int cap = static_cast<int>(geti(p, "cap", 2000));
    rdyn::RngStream rng(opt.seed);
    json out = json::array();
    long long violations = 0;
    rdyn::CsvWriter csv(opt.out_dir + "/diagnostics.csv",
                        {"epsilon", "lambda_hat", "part2_min", "events_i", "events_ii"});
    std::size_t idx = 0;
    for (double eps : eps_list(p)) {
        const auto g = rdyn::growth_diagnostic(map, noise, eps, trials, cap,
                                               rng.substream(idx));
        const auto bc = rdyn::backward_contraction_check(map, noise, eps,
                                                         getd(p, "xi", 1.0),
                                                         getd(p, "xi_prime", 4.0),
                                                         trials, cap,
                                                         rng.substream(idx + 1000));
        violations += bc.violations;
        csv.row({eps, g.lambda_hat, g.part2_min, static_cast<double>(g.events_i),
                 static_cast<double>(g.events_ii)});
        out.push_back({{"epsilon", eps}, {"growth", g.to_json()},
                       {"backward_contraction", bc.to_json()}});
        ++idx;
    }
    rdyn::write_json(opt.out_dir + "/diagnostics.json", out);
    std::cout << out.dump(2) << "\n";
    return violations > 0 ? 4 : 0;
}

int cmd_inducing_tail(const json& cfg, const Options& opt) {
    const json& p = section(cfg, "params");
    const rdyn::MapModel map = make_map(cfg);
    const rdyn::NoiseModel noise(map, make_kind(cfg));
    const double eps = getd(p, "epsilon", 0.005);
    const double delta0 = getd(p, "delta0", 0.02);
    if (eps > delta0)
        throw rdyn::InputError("inducing-tail: requires epsilon <= delta0 "
                               "(standing hypothesis 0 < eps <= delta <= delta0/e)");
    const auto k = rdyn::derive_constants(map, getd(p, "C", 16.0));
    rdyn::RngStream rng(opt.seed);
    const auto tail = rdyn::tail_estimate(noise, eps, delta0,
                                          getd(p, "theta0", k.theta0),
                                          static_cast<int>(geti(p, "trials", 10000)),
                                          static_cast<int>(geti(p, "cap", 10000)),
                                          rng, opt.workers,
                                          static_cast<int>(geti(p, "depth", 10)),
                                          static_cast<int>(geti(p, "grid", 96)));
    rdyn::CsvWriter csv(opt.out_dir + "/tail.csv",
                        {"m", "survival", "wilson_lo", "wilson_hi"});
    for (int m = 1; m <= tail.cap; ++m)
        csv.row({static_cast<double>(m), tail.survival[m - 1], tail.wilson_lo[m - 1],
                 tail.wilson_hi[m - 1]});
    json out = tail.to_json();
    out["constants"] = k.to_json();
    rdyn::write_json(opt.out_dir + "/tail.json", out);
    std::cout << out.dump(2) << "\n";
    return tail.falsifications > 0 ? 4 : 0;
}

int cmd_s_integrals(const json& cfg, const Options& opt) {
    const json& p = section(cfg, "params");
    const rdyn::MapModel map = make_map(cfg);
    const rdyn::NoiseModel noise(map, make_kind(cfg));
    const double eps = getd(p, "epsilon", 0.003);
    const double delta = getd(p, "delta", eps);
    const double delta0 = getd(p, "delta0", 0.05);
    if (!(eps <= delta && delta <= delta0 / std::exp(1.0)))
        throw rdyn::InputError("s-integrals: requires epsilon <= delta <= delta0/e "
                               "(standing hypothesis 0 < eps <= delta <= delta0/e)");
    const auto k = rdyn::derive_constants(map, getd(p, "C", 16.0));
    rdyn::RngStream rng(opt.seed);
    const auto rows = rdyn::s_integral_estimates(noise, eps, delta, delta0,
                                                 getd(p, "theta", k.theta0 / 4.0),
                                                 getd(p, "tau", 0.25),
                                                 getd(p, "theta0", k.theta0),
                                                 getd(p, "p", 1.0),
                                                 static_cast<int>(geti(p, "trials", 200)),
                                                 static_cast<int>(geti(p, "cap", 2000)),
                                                 rng, opt.workers);
    rdyn::CsvWriter csv(opt.out_dir + "/s_integrals.csv",
                        {"delta", "S_max", "S_hat", "S_hat_theta_over_e",
                         "censored_fraction", "ratio"});
    json out = json::array();
    for (const auto& r : rows) {
        csv.row({r.delta, *std::max_element(r.s_per_c.begin(), r.s_per_c.end()),
                 r.s_hat, r.s_hat_over_e, r.censored_fraction, r.ratio});
        out.push_back(r.to_json());
    }
    rdyn::write_json(opt.out_dir + "/s_integrals.json", out);
    std::cout << out.dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random perturbations of interval maps: simulation and statistics"};
    app.require_subcommand(1);

    Options opt;
    std::vector<std::pair<std::string, int (*)(const json&, const Options&)>> commands = {
        {"analyze-map", cmd_analyze_map},       {"check-noise", cmd_check_noise},
        {"simulate", cmd_simulate},             {"binding", cmd_binding},
        {"stationary", cmd_stationary},         {"stability-curve", cmd_stability_curve},
        {"diagnostics-thm21", cmd_diagnostics}, {"inducing-tail", cmd_inducing_tail},
        {"s-integrals", cmd_s_integrals}};

    std::string chosen;
    for (auto& [name, fn] : commands) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", opt.config_path, "TOML or JSON experiment config");
        sub->add_option("--seed", opt.seed, "master seed (results depend only on config + seed)")
            ->required();
        sub->add_option("--out-dir", opt.out_dir, "output directory");
        sub->add_option("--workers", opt.workers, "worker threads for parallel kernels");
        sub->callback([&chosen, name = name] { chosen = name; });
    }
    CLI11_PARSE(app, argc, argv);

    try {
        std::filesystem::create_directories(opt.out_dir);
        json cfg = json::object();
        if (!opt.config_path.empty()) cfg = rdyn::load_config(opt.config_path);
        const auto t0 = std::chrono::steady_clock::now();
        int rc = 2;
        for (auto& [name, fn] : commands)
            if (name == chosen) rc = fn(cfg, opt);
        const double wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        write_manifest(opt, chosen, cfg, nullptr, wall_ms);
        return rc;
    } catch (const rdyn::InputError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const rdyn::ScaleError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const rdyn::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    }
}
