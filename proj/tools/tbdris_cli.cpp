// SPDX-License-Identifier: Apache-2.0
//
// tbdris - transmissive beyond-diagonal RIS link optimization
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tbdris/tbdris.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitIo = 4;

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::string out_dir = "results";
    std::string tag = "run";
    bool verbose = false;
    bool strict = false;
};

tbdris::ExperimentConfig load_config(const CommonOpts& o) {
    tbdris::ExperimentConfig cfg;
    if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        if (!in) throw std::runtime_error("cannot read config file: " + o.config_path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw tbdris::dimension_error("config parse error in " + o.config_path + ": " +
                                          e.what());
        }
        cfg = tbdris::config_from_json(j);
    }
    if (o.seed) cfg.master_seed = *o.seed;
    if (o.trials) cfg.trials = *o.trials;
    if (const char* env = std::getenv("TBDRIS_WORKERS"); env != nullptr && *env != '\0')
        cfg.workers = std::atoi(env);
    return cfg;
}

int validate_or_die(const tbdris::ExperimentConfig& cfg) {
    const auto errs = cfg.validate();
    if (errs.empty()) return kExitOk;
    for (const auto& e : errs) std::cerr << "config error: " << e << '\n';
    return kExitConfig;
}

int run_sweep_command(const CommonOpts& o, tbdris::SweepKind kind) {
    auto cfg = load_config(o);
    cfg.kind = kind;
    if (const int rc = validate_or_die(cfg); rc != kExitOk) return rc;
    const tbdris::SweepResult res = tbdris::run_sweep(cfg);
    const tbdris::WrittenFiles files = tbdris::write_results(res, o.out_dir, o.tag);
    if (o.verbose) {
        for (const auto& p : res.points)
            std::cout << tbdris::sweep_name(kind) << " value=" << p.sweep_value
                      << " mean_se_optimal=" << p.mean_se_optimal
                      << " mean_se_benchmark=" << p.mean_se_benchmark
                      << " outages=" << p.outage_count << '\n';
    }
    std::cout << "wrote " << files.csv.string() << " and " << files.json.string() << '\n';
    if (o.strict) {
        for (const auto& point : res.trials)
            for (const auto& t : point)
                if (!t.converged && !t.outage) {
                    std::cerr << "solver error: trial " << t.trial << " at value "
                              << t.sweep_value << " did not converge\n";
                    return kExitSolver;
                }
    }
    return kExitOk;
}

int run_single_trial(const CommonOpts& o) {
    auto cfg = load_config(o);
    if (const int rc = validate_or_die(cfg); rc != kExitOk) return rc;
    const double value = cfg.kind == tbdris::SweepKind::power
                             ? cfg.p_t_w
                             : static_cast<double>(cfg.k_x * cfg.k_y);
    const tbdris::TrialSetup ts = tbdris::make_trial_setup(cfg, value, 0);
    const tbdris::SolveReport bench =
        tbdris::benchmark(ts.h_a, ts.h_b, ts.qos, ts.budget, cfg.alt);
    const tbdris::SolveReport opt =
        tbdris::optimize(ts.h_a, ts.h_b, ts.qos, ts.budget, cfg.alt, &bench);
    if (o.verbose) {
        for (std::size_t i = 0; i < opt.surrogate_trace.size(); ++i)
            std::cout << "iter " << (i + 1) << ": surrogate=" << opt.surrogate_trace[i]
                      << " true_se=" << opt.true_se_trace[i] << '\n';
    }
    nlohmann::json out;
    out["seed"] = ts.seed;
    out["optimal"] = tbdris::report_to_json(opt);
    out["benchmark"] = tbdris::report_to_json(bench);
    std::cout << out.dump(2) << '\n';
    if (o.strict && !opt.converged && !opt.outage) {
        std::cerr << "solver error: trial did not converge\n";
        return kExitSolver;
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tbdris: NOMA LEO link optimization with a transmissive "
                 "beyond-diagonal RIS"};
    app.require_subcommand(1);

    CommonOpts o;
    auto add_common = [&o](CLI::App* sub, bool with_out) {
        sub->add_option("--config", o.config_path, "JSON config file");
        sub->add_option("--seed", o.seed, "master seed override");
        sub->add_option("--trials", o.trials, "trials per sweep point override");
        if (with_out) {
            sub->add_option("--out", o.out_dir, "output directory");
            sub->add_option("--tag", o.tag, "output file tag");
        }
        sub->add_flag("-v,--verbose", o.verbose, "verbose progress output");
        sub->add_flag("--strict", o.strict, "nonzero exit on solver non-convergence");
    };

    auto* sweep_power = app.add_subcommand("sweep-power", "transmit-power sweep");
    auto* sweep_elements = app.add_subcommand("sweep-elements", "surface-element sweep");
    auto* single = app.add_subcommand("single-trial", "one seeded trial with a full report");
    auto* validate = app.add_subcommand("validate-config", "check a config file");
    add_common(sweep_power, true);
    add_common(sweep_elements, true);
    add_common(single, false);
    validate->add_option("--config", o.config_path, "JSON config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (sweep_power->parsed()) return run_sweep_command(o, tbdris::SweepKind::power);
        if (sweep_elements->parsed()) return run_sweep_command(o, tbdris::SweepKind::elements);
        if (single->parsed()) return run_single_trial(o);
        if (validate->parsed()) {
            const auto cfg = load_config(o);
            const int rc = validate_or_die(cfg);
            if (rc == kExitOk) std::cout << "config ok\n";
            return rc;
        }
    } catch (const tbdris::dimension_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const tbdris::solver_error& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kExitIo;
    }
    return kExitOk;
}
