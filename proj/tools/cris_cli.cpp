// SPDX-License-Identifier: Apache-2.0
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

// Command-line front end: run a scenario to CSV or produce the validation report.
//
// Exit status: 0 success, 1 validation failure, 2 configuration error,
// 3 any other runtime error.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include <cris/cris.hpp>

int main(int argc, char** argv) {
    CLI::App app{"Continuous RIS statistics: closed forms and Monte Carlo"};
    app.set_version_flag("--version", std::string(cris::version));

    std::string config_path, scenario, out_path, grid;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replicates;
    std::optional<unsigned> workers;
    bool run_validation = false;

    app.add_option("--config", config_path, "JSON experiment configuration")->check(CLI::ExistingFile);
    app.add_option("--scenario", scenario, "fig2, fig3, fig4, fig5 or table1")
        ->check(CLI::IsMember({"fig2", "fig3", "fig4", "fig5", "table1"}));
    app.add_option("--seed", seed, "master seed (overrides the config)");
    app.add_option("--replicates", replicates, "Monte Carlo replicates (overrides the config)");
    app.add_option("--grid", grid, "surface grid as <nx>x<ny> (overrides the config)");
    app.add_option("--workers", workers, "worker threads, 0 = all cores; does not change results");
    app.add_option("--out", out_path, "output file (CSV, or JSON for --validate); stdout if omitted");
    app.add_flag("--validate", run_validation, "run the cross-oracle checks instead of a scenario");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    if (run_validation == !scenario.empty()) {
        std::cerr << "error: give exactly one of --scenario or --validate\n";
        return 2;
    }

    cris::ExperimentConfig cfg;
    try {
        if (!config_path.empty())
            cfg = cris::load_config(config_path);
        else if (!scenario.empty())
            cfg = cris::default_experiment(scenario);
        if (seed)
            cfg.seed = *seed;
        if (replicates) {
            if (*replicates < 1)
                throw cris::ConfigError("replicates must be at least 1");
            cfg.replicates = *replicates;
        }
        if (!grid.empty())
            cfg.grid = cris::parse_grid(grid);
        if (workers)
            cfg.workers = *workers;
        // The config's output key names the scenario CSV; reports only go where --out says.
        if (out_path.empty() && !run_validation)
            out_path = cfg.output_path;
    } catch (const cris::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (run_validation) {
            const auto report = cris::validate(cfg);
            const std::string text = report.to_json().dump(2) + "\n";
            if (out_path.empty()) {
                std::cout << text;
            } else {
                std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
                if (!(out << text))
                    throw cris::IoError("cannot write '" + out_path + "'");
            }
            for (const auto& c : report.checks)
                std::cerr << (c.passed ? "PASS " : "FAIL ") << c.name << " measured=" << c.measured
                          << " threshold=" << c.threshold << (c.detail.empty() ? "" : " (" + c.detail + ")") << '\n';
            return report.passed() ? 0 : 1;
        }
        const auto table = cris::run_scenario(scenario, cfg);
        if (out_path.empty())
            std::cout << cris::to_csv(table);
        else
            cris::emit(table, out_path);
        return 0;
    } catch (const cris::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const cris::Error& e) {
        std::cerr << e.kind() << ": " << e.what() << '\n';
        return 3;
    }
}
