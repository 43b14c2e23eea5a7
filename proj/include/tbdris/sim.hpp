// SPDX-License-Identifier: Apache-2.0
//
// tbdris - transmissive beyond-diagonal RIS link optimization
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <atomic>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "optimizer.hpp"

namespace tbdris {

inline constexpr const char* kCodeVersion = "tbdris 1.0.0";

enum class SweepKind { power, elements };

inline const char* sweep_name(SweepKind k) {
    return k == SweepKind::power ? "power_sweep" : "element_sweep";
}

struct ExperimentConfig {
    SweepKind kind = SweepKind::power;
    std::vector<double> sweep_values; // watts, or element counts (square grids)
    int trials = 500;

    double altitude_m = 500e3;
    double carrier_hz = 18e9;
    double bandwidth_hz = 20e6;
    double sigma2 = 1e-5;
    double r_min_bps_hz = 0.1;
    double reference_snr_db = 10.0;
    double pathloss_exponent = 2.0;
    std::size_t k_x = 8;
    std::size_t k_y = 8;
    double p_t_w = 20.0;
    double p_max_w = 30.0;
    std::uint64_t master_seed = 1;
    int workers = 0; // 0: hardware concurrency

    AltConfig alt;

    std::vector<double> effective_sweep_values() const {
        if (!sweep_values.empty()) return sweep_values;
        if (kind == SweepKind::power) return {5, 10, 15, 20, 25, 30};
        return {16, 36, 64, 100, 144};
    }

    std::vector<std::string> validate() const {
        std::vector<std::string> errs;
        if (trials < 1) errs.push_back("trials must be >= 1");
        const auto vals = effective_sweep_values();
        for (std::size_t i = 0; i + 1 < vals.size(); ++i)
            if (vals[i] >= vals[i + 1]) {
                errs.push_back("sweep values must be strictly increasing");
                break;
            }
        if (kind == SweepKind::elements) {
            for (double v : vals) {
                const auto side = static_cast<std::size_t>(std::llround(std::sqrt(v)));
                if (v < 1.0 || static_cast<double>(side * side) != v) {
                    errs.push_back("element sweep values must be perfect squares");
                    break;
                }
            }
        } else {
            for (double v : vals)
                if (v <= 0.0) {
                    errs.push_back("power sweep values must be positive");
                    break;
                }
        }
        if (altitude_m <= 0.0) errs.push_back("altitude_m must be > 0");
        if (carrier_hz <= 0.0) errs.push_back("carrier_hz must be > 0");
        if (bandwidth_hz <= 0.0) errs.push_back("bandwidth_hz must be > 0");
        if (sigma2 <= 0.0) errs.push_back("sigma2 must be > 0");
        if (r_min_bps_hz < 0.0) errs.push_back("r_min_bps_hz must be >= 0");
        if (pathloss_exponent < 0.0) errs.push_back("pathloss_exponent must be >= 0");
        if (k_x < 1 || k_y < 1) errs.push_back("k_x and k_y must be >= 1");
        if (p_t_w <= 0.0) errs.push_back("p_t_w must be > 0");
        if (p_max_w <= 0.0) errs.push_back("p_max_w must be > 0");
        try {
            alt.validate();
        } catch (const std::exception& e) {
            errs.push_back(e.what());
        }
        return errs;
    }

    // Common channel scale: the identity-phase single-user SNR at full power
    // and nominal geometry equals reference_snr_db.
    double gain_scale() const {
        const double snr = std::pow(10.0, reference_snr_db / 10.0);
        const double k = static_cast<double>(k_x * k_y);
        return std::sqrt(snr * sigma2 * std::pow(altitude_m, pathloss_exponent) /
                         (k * p_t_w));
    }
};

struct TrialResult {
    double sweep_value = 0.0;
    int trial = 0;
    std::uint64_t seed = 0;
    double se_optimal = 0.0;
    double se_benchmark = 0.0;
    double r_strong = 0.0;
    double r_weak = 0.0;
    double p_strong = 0.0;
    int outer_iters = 0;
    bool converged = false;
    bool outage = false;       // either framework infeasible; excluded from means
    bool bench_outage = false; // fixed split specifically infeasible
};

struct PointAggregate {
    double sweep_value = 0.0;
    double mean_se_optimal = 0.0;
    double mean_se_benchmark = 0.0;
    double stderr_se_optimal = 0.0;
    double stderr_se_benchmark = 0.0;
    double mean_gap = 0.0;
    double stderr_gap = 0.0; // paired, for the trend-within-one-stderr checks
    int outage_count = 0;
    int counted_trials = 0;
    double mean_outer_iters = 0.0;
};

struct SweepResult {
    ExperimentConfig config;
    std::vector<std::vector<TrialResult>> trials; // [point][trial]
    std::vector<PointAggregate> points;
    std::string code_version = kCodeVersion;
    std::uint64_t config_hash = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace detail

// Point-independent trial seed: the same trial index reuses the same channel
// draws at every sweep point (common random numbers).
inline std::uint64_t trial_seed(std::uint64_t master_seed, int trial) {
    return detail::splitmix64(master_seed ^ detail::splitmix64(static_cast<std::uint64_t>(trial)));
}

struct TrialSetup {
    ChannelVector h_a;
    ChannelVector h_b;
    PowerBudget budget;
    QosSpec qos;
    std::uint64_t seed = 0;
};

inline TrialSetup make_trial_setup(const ExperimentConfig& cfg, double sweep_value, int trial) {
    TrialSetup ts;
    ts.seed = trial_seed(cfg.master_seed, trial);

    std::size_t kx = cfg.k_x, ky = cfg.k_y;
    double pt = cfg.p_t_w;
    if (cfg.kind == SweepKind::elements) {
        kx = ky = static_cast<std::size_t>(std::llround(std::sqrt(sweep_value)));
    } else {
        pt = sweep_value;
    }
    const ArrayGeometry geom = ArrayGeometry::half_wavelength(kx, ky, cfg.carrier_hz);
    const double scale = cfg.gain_scale();

    std::mt19937_64 rng(ts.seed);
    std::uniform_real_distribution<double> elev(-M_PI / 3.0, M_PI / 3.0);
    std::uniform_real_distribution<double> azim(0.0, 2.0 * M_PI);

    auto draw_link = [&]() {
        LinkGeometry link;
        link.elevation_rad = elev(rng);
        link.azimuth_rad = azim(rng);
        link.distance_m = cfg.altitude_m / std::cos(link.elevation_rad);
        link.pathloss_exponent = cfg.pathloss_exponent;
        link.gain_scale = scale;
        return link;
    };
    const LinkGeometry link_a = draw_link();
    ts.h_a = generate_channel(geom, link_a, rng);
    const LinkGeometry link_b = draw_link();
    ts.h_b = generate_channel(geom, link_b, rng);

    ts.qos = QosSpec{cfg.r_min_bps_hz, cfg.sigma2};
    ts.budget = PowerBudget{pt, cfg.p_max_w};
    return ts;
}

inline TrialResult run_trial(const ExperimentConfig& cfg, double sweep_value, int trial) {
    TrialResult tr;
    tr.sweep_value = sweep_value;
    tr.trial = trial;

    const TrialSetup ts = make_trial_setup(cfg, sweep_value, trial);
    tr.seed = ts.seed;

    const SolveReport bench = benchmark(ts.h_a, ts.h_b, ts.qos, ts.budget, cfg.alt);
    const SolveReport opt = optimize(ts.h_a, ts.h_b, ts.qos, ts.budget, cfg.alt, &bench);

    tr.se_optimal = opt.se_bps_hz;
    tr.se_benchmark = bench.se_bps_hz;
    tr.r_strong = opt.r_strong;
    tr.r_weak = opt.r_weak;
    tr.p_strong = opt.split.p_strong;
    tr.outer_iters = opt.outer_iters;
    tr.converged = opt.converged;
    tr.bench_outage = bench.outage;
    tr.outage = opt.outage || bench.outage;
    return tr;
}

inline PointAggregate aggregate_point(const std::vector<TrialResult>& trials) {
    PointAggregate a;
    if (trials.empty()) return a;
    a.sweep_value = trials.front().sweep_value;
    double so = 0, sb = 0, so2 = 0, sb2 = 0, sg = 0, sg2 = 0, iters = 0;
    for (const auto& t : trials) {
        if (t.outage) {
            ++a.outage_count;
            continue;
        }
        ++a.counted_trials;
        so += t.se_optimal;
        sb += t.se_benchmark;
        so2 += t.se_optimal * t.se_optimal;
        sb2 += t.se_benchmark * t.se_benchmark;
        const double g = t.se_optimal - t.se_benchmark;
        sg += g;
        sg2 += g * g;
        iters += t.outer_iters;
    }
    const int n = a.counted_trials;
    if (n > 0) {
        a.mean_se_optimal = so / n;
        a.mean_se_benchmark = sb / n;
        a.mean_gap = sg / n;
        a.mean_outer_iters = iters / n;
    }
    if (n > 1) {
        auto se = [n](double s, double s2, double mean) {
            const double var = std::max(0.0, (s2 - s * s / n) / (n - 1));
            (void)mean;
            return std::sqrt(var / n);
        };
        a.stderr_se_optimal = se(so, so2, a.mean_se_optimal);
        a.stderr_se_benchmark = se(sb, sb2, a.mean_se_benchmark);
        a.stderr_gap = se(sg, sg2, a.mean_gap);
    }
    return a;
}

// ---- config (de)serialization ------------------------------------------

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["sweep_kind"] = c.kind == SweepKind::power ? "power" : "elements";
    j["sweep_values"] = c.sweep_values;
    j["trials"] = c.trials;
    j["altitude_m"] = c.altitude_m;
    j["carrier_hz"] = c.carrier_hz;
    j["bandwidth_hz"] = c.bandwidth_hz;
    j["sigma2"] = c.sigma2;
    j["r_min_bps_hz"] = c.r_min_bps_hz;
    j["reference_snr_db"] = c.reference_snr_db;
    j["pathloss_exponent"] = c.pathloss_exponent;
    j["k_x"] = c.k_x;
    j["k_y"] = c.k_y;
    j["p_t_w"] = c.p_t_w;
    j["p_max_w"] = c.p_max_w;
    j["master_seed"] = c.master_seed;
    j["workers"] = c.workers;
    j["solver"] = {
        {"max_outer_iters", c.alt.max_outer_iters},
        {"outer_tol", c.alt.outer_tol},
        {"benchmark_p_strong", c.alt.benchmark_p_strong},
        {"benchmark_p_weak", c.alt.benchmark_p_weak},
        {"benchmark_floor", c.alt.benchmark_floor},
        {"fw_max_iters", c.alt.sdr.max_fw_iters},
        {"fw_gap_tol", c.alt.sdr.gap_tol},
        {"sca_max_iters", c.alt.sdr.max_sca_iters},
        {"sca_tol", c.alt.sdr.sca_tol},
        {"power_max_iters", c.alt.power.max_iters},
        {"power_step0", c.alt.power.step0},
    };
    return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    if (j.contains("sweep_kind"))
        c.kind = j.at("sweep_kind").get<std::string>() == "elements" ? SweepKind::elements
                                                                     : SweepKind::power;
    auto get = [&j](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("sweep_values", c.sweep_values);
    get("trials", c.trials);
    get("altitude_m", c.altitude_m);
    get("carrier_hz", c.carrier_hz);
    get("bandwidth_hz", c.bandwidth_hz);
    get("sigma2", c.sigma2);
    get("r_min_bps_hz", c.r_min_bps_hz);
    get("reference_snr_db", c.reference_snr_db);
    get("pathloss_exponent", c.pathloss_exponent);
    get("k_x", c.k_x);
    get("k_y", c.k_y);
    get("p_t_w", c.p_t_w);
    get("p_max_w", c.p_max_w);
    get("master_seed", c.master_seed);
    get("workers", c.workers);
    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        auto gs = [&s](const char* key, auto& field) {
            if (s.contains(key)) field = s.at(key).get<std::decay_t<decltype(field)>>();
        };
        gs("max_outer_iters", c.alt.max_outer_iters);
        gs("outer_tol", c.alt.outer_tol);
        gs("benchmark_p_strong", c.alt.benchmark_p_strong);
        gs("benchmark_p_weak", c.alt.benchmark_p_weak);
        gs("benchmark_floor", c.alt.benchmark_floor);
        gs("fw_max_iters", c.alt.sdr.max_fw_iters);
        gs("fw_gap_tol", c.alt.sdr.gap_tol);
        gs("sca_max_iters", c.alt.sdr.max_sca_iters);
        gs("sca_tol", c.alt.sdr.sca_tol);
        gs("power_max_iters", c.alt.power.max_iters);
        gs("power_step0", c.alt.power.step0);
    }
    return c;
}

inline std::uint64_t config_hash(const ExperimentConfig& c) {
    const std::string s = config_to_json(c).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---- sweep execution ----------------------------------------------------

inline SweepResult run_sweep(const ExperimentConfig& cfg) {
    {
        const auto errs = cfg.validate();
        if (!errs.empty()) throw dimension_error("invalid config: " + errs.front());
    }
    SweepResult res;
    res.config = cfg;
    res.config_hash = config_hash(cfg);
    const auto values = cfg.effective_sweep_values();
    res.trials.assign(values.size(), std::vector<TrialResult>(cfg.trials));

    struct Item {
        std::size_t point;
        int trial;
    };
    std::vector<Item> items;
    items.reserve(values.size() * cfg.trials);
    for (std::size_t p = 0; p < values.size(); ++p)
        for (int t = 0; t < cfg.trials; ++t) items.push_back({p, t});

    unsigned n_workers = cfg.workers > 0 ? static_cast<unsigned>(cfg.workers)
                                         : std::thread::hardware_concurrency();
    if (n_workers == 0) n_workers = 1;
    n_workers = std::min<unsigned>(n_workers, items.size());

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= items.size() || failed.load()) return;
            try {
                const Item it = items[i];
                res.trials[it.point][it.trial] = run_trial(cfg, values[it.point], it.trial);
            } catch (...) {
                failed.store(true);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w + 1 < n_workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (failed.load()) throw solver_error("run_sweep: a trial failed", 0.0);

    for (const auto& point_trials : res.trials)
        res.points.push_back(aggregate_point(point_trials));
    return res;
}

inline SweepResult run_power_sweep(ExperimentConfig cfg) {
    cfg.kind = SweepKind::power;
    return run_sweep(cfg);
}

inline SweepResult run_element_sweep(ExperimentConfig cfg) {
    cfg.kind = SweepKind::elements;
    return run_sweep(cfg);
}

// ---- persistence --------------------------------------------------------

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

} // namespace detail

inline nlohmann::json summary_json(const SweepResult& res) {
    nlohmann::json j;
    j["config"] = config_to_json(res.config);
    j["provenance"] = {{"config_hash", res.config_hash},
                       {"master_seed", res.config.master_seed},
                       {"code_version", res.code_version}};
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : res.points) {
        pts.push_back({{"sweep_value", p.sweep_value},
                       {"mean_se_optimal", p.mean_se_optimal},
                       {"mean_se_benchmark", p.mean_se_benchmark},
                       {"stderr_se_optimal", p.stderr_se_optimal},
                       {"stderr_se_benchmark", p.stderr_se_benchmark},
                       {"mean_gap", p.mean_gap},
                       {"stderr_gap", p.stderr_gap},
                       {"outage_count", p.outage_count},
                       {"counted_trials", p.counted_trials},
                       {"mean_outer_iters", p.mean_outer_iters}});
    }
    j["points"] = pts;
    return j;
}

inline nlohmann::json report_to_json(const SolveReport& r) {
    return nlohmann::json{
        {"se_bps_hz", r.se_bps_hz},
        {"r_strong", r.r_strong},
        {"r_weak", r.r_weak},
        {"surrogate_final", r.surrogate_final},
        {"surrogate_trace", r.surrogate_trace},
        {"true_se_trace", r.true_se_trace},
        {"p_strong", r.split.p_strong},
        {"p_weak", r.split.p_weak},
        {"total_power_w", r.split.total_power_w},
        {"psi_strong", r.psi_strong},
        {"psi_weak", r.psi_weak},
        {"outer_iters", r.outer_iters},
        {"converged", r.converged},
        {"outage", r.outage},
        {"benchmark_floor_used", r.benchmark_floor_used},
        {"strong_index", r.strong_index},
        {"phase",
         {{"sca_iterations", r.phase_diag.sca_iterations},
          {"fw_iterations", r.phase_diag.fw_iterations},
          {"gap", r.phase_diag.gap},
          {"rank", r.phase_diag.rank},
          {"converged", r.phase_diag.converged},
          {"used_rank1", r.phase_diag.used_rank1}}},
    };
}

struct WrittenFiles {
    std::filesystem::path csv;
    std::filesystem::path json;
};

inline WrittenFiles write_results(const SweepResult& res, const std::filesystem::path& dir,
                                  const std::string& tag) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    const std::string base = std::string(sweep_name(res.config.kind)) + "_" + tag;
    WrittenFiles files{dir / (base + ".csv"), dir / (base + ".json")};

    const char* var = res.config.kind == SweepKind::power ? "p_t_w" : "elements";
    std::ofstream csv(files.csv);
    if (!csv) throw std::runtime_error("write_results: cannot open " + files.csv.string());
    csv << "sweep_var,value,trial,seed,se_optimal,se_benchmark,r_strong,r_weak,"
           "p_strong,outer_iters,converged,outage\n";
    for (const auto& point : res.trials) {
        for (const auto& t : point) {
            csv << var << ',' << detail::fmt_double(t.sweep_value) << ',' << t.trial << ','
                << t.seed << ',' << detail::fmt_double(t.se_optimal) << ','
                << detail::fmt_double(t.se_benchmark) << ',' << detail::fmt_double(t.r_strong)
                << ',' << detail::fmt_double(t.r_weak) << ',' << detail::fmt_double(t.p_strong)
                << ',' << t.outer_iters << ',' << (t.converged ? 1 : 0) << ','
                << (t.outage ? 1 : 0) << '\n';
        }
    }
    csv.close();
    if (!csv) throw std::runtime_error("write_results: write failed for " + files.csv.string());

    std::ofstream js(files.json);
    if (!js) throw std::runtime_error("write_results: cannot open " + files.json.string());
    js << summary_json(res).dump(2) << '\n';
    js.close();
    if (!js) throw std::runtime_error("write_results: write failed for " + files.json.string());
    return files;
}

} // namespace tbdris
