// SPDX-License-Identifier: Apache-2.0
//
// capa-lib: continuous-aperture-array uplink channel and capacity analysis
// Copyright (C) 2026 The capa-lib authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// Command-line experiment runner.
//   capa <gain|sweep-aperture|sweep-occupancy|region|verify> [--config PATH] [--out PATH]
//        [--seed N] [--grid N] [--trials N]
// Exit codes: 0 ok, 1 usage, 2 quadrature convergence failure, 3 verification failure.

#include "capa/config.hpp"
#include "capa/errors.hpp"
#include "capa/experiments.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace
{
    enum ExitCode
    {
        exit_ok = 0,
        exit_usage = 1,
        exit_convergence = 2,
        exit_verification = 3
    };

    template <typename Rows>
    void emit(const capa::ExperimentConfig &cfg, const Rows &rows)
    {
        if (cfg.output_path.empty())
        {
            capa::write_csv(std::cout, rows);
            std::cout.flush();
            return;
        }
        std::ofstream f(cfg.output_path, std::ios::binary);
        if (!f)
            throw capa::UsageError("cannot open output file '" + cfg.output_path + "'");
        capa::write_csv(f, rows);
        if (!f)
            throw std::runtime_error("failed writing '" + cfg.output_path + "'");
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"Continuous-aperture uplink channel and capacity experiments"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> grid;
    std::optional<std::size_t> trials;
    app.add_option("--config", config_path, "Configuration file (defaults to the built-in study parameters)");
    app.add_option("--out", out_path, "CSV output path (defaults to standard output)");
    app.add_option("--seed", seed, "Base seed of the oracle random streams");
    app.add_option("--grid", grid, "Oracle grid points per aperture axis")->check(CLI::Range(2, 4096));
    app.add_option("--trials", trials, "Monte Carlo trials of the oracle suites")->check(CLI::PositiveNumber);

    auto *gain = app.add_subcommand("gain", "Channel gains by quadrature against the closed forms");
    auto *sweep_ap = app.add_subcommand("sweep-aperture", "Rates and sum-rate capacity over the aperture side");
    auto *sweep_oc = app.add_subcommand("sweep-occupancy", "SPD sum-rate capacity over the occupation ratio");
    auto *region = app.add_subcommand("region", "Capacity-region boundary points");
    auto *verify = app.add_subcommand("verify", "Operator-level oracle suites; exit status 3 on any failure");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        return app.exit(e) == 0 ? exit_ok : exit_usage;
    }

    try
    {
        capa::ExperimentConfig cfg = config_path.empty() ? capa::default_config() : capa::load_config(config_path);
        if (!out_path.empty())
            cfg.output_path = out_path;
        if (seed)
            cfg.oracle.seed = *seed;
        if (grid)
            cfg.oracle.grid = *grid;
        if (trials)
            cfg.oracle.trials = *trials;
        cfg.validate();

        if (*gain)
        {
            auto rows = capa::run_gain(cfg);
            emit(cfg, rows);
            for (const auto &r : rows)
                if (r.status != "ok")
                {
                    std::cerr << "capa: quadrature did not converge for at least one row\n";
                    return exit_convergence;
                }
        }
        else if (*sweep_ap)
            emit(cfg, capa::run_sweep_aperture(cfg));
        else if (*sweep_oc)
            emit(cfg, capa::run_sweep_occupancy(cfg));
        else if (*region)
            emit(cfg, capa::run_region(cfg));
        else if (*verify)
        {
            auto checks = capa::run_verify(cfg);
            emit(cfg, checks);
            std::size_t failed = 0;
            for (const auto &c : checks)
                if (!c.pass)
                {
                    ++failed;
                    std::cerr << "FAIL " << c.suite << "/" << c.check << " = " << c.value << " not in [" << c.lower
                              << ", " << c.upper << "]\n";
                }
            std::cerr << "verify: " << checks.size() - failed << "/" << checks.size() << " checks passed\n";
            if (failed)
                return exit_verification;
        }
        return exit_ok;
    }
    catch (const capa::UsageError &e)
    {
        std::cerr << "capa: " << e.what() << "\n";
        return exit_usage;
    }
    catch (const capa::ConvergenceError &e)
    {
        std::cerr << "capa: " << e.what() << " (last estimates " << e.previous_estimate << ", " << e.last_estimate
                  << ")\n";
        return exit_convergence;
    }
    catch (const capa::InvariantViolation &e)
    {
        std::cerr << "capa: " << e.what() << "\n";
        return exit_verification;
    }
    catch (const capa::DomainError &e)
    {
        std::cerr << "capa: " << e.what() << "\n";
        return exit_usage;
    }
}
