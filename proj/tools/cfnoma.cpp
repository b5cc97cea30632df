// SPDX-License-Identifier: Apache-2.0
//
// cfnoma: cell-free massive MIMO-NOMA simulation and power allocation
// Copyright (C) 2026 The cfnoma Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "cfnoma/scenario.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace
{
constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kFailures = 3;

void write_file(const std::filesystem::path &path, const std::string &text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::string read_file(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw cfnoma::InvalidInput("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}
} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Cell-free massive MIMO-NOMA experiment driver"};
    app.set_version_flag("--version", std::string(cfnoma::version()));
    app.require_subcommand(1);

    std::string config_path, out_dir, in_csv, out_csv;
    int threads = 1;

    auto *run = app.add_subcommand("run", "Run a sweep and write results.csv, users.csv and manifest.json");
    run->add_option("--config", config_path, "Scenario config or run manifest (JSON)")->required();
    run->add_option("--out", out_dir, "Output directory (defaults to the config's output)");
    run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

    auto *reduce = app.add_subcommand("reduce", "Average results per sweep point with 95% confidence intervals");
    reduce->add_option("--in", in_csv, "results.csv from a run")->required();
    reduce->add_option("--out", out_csv, "Summary CSV")->required();

    auto *verify = app.add_subcommand("verify", "Check the closed-form SINR terms against Monte Carlo");
    verify->add_option("--config", config_path, "Scenario config or run manifest (JSON)")->required();
    verify->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (*run)
        {
            const auto cfg = cfnoma::parse_config(config_path);
            const std::filesystem::path dir = out_dir.empty() ? cfg.output : out_dir;
            std::filesystem::create_directories(dir);
            const auto res = cfnoma::run_sweep(cfg, threads);
            write_file(dir / "results.csv", cfnoma::format_results_csv(res.rows));
            write_file(dir / "users.csv", cfnoma::format_user_csv(res.rows));
            write_file(dir / "manifest.json", res.manifest + "\n");
            std::cout << res.rows.size() << " rows, " << res.failures << " failed, written to " << dir.string() << "\n";
            return res.failures > 0 ? kFailures : kOk;
        }
        if (*reduce)
        {
            const auto rows = cfnoma::parse_results_csv(read_file(in_csv));
            const auto summary = cfnoma::reduce_results(rows);
            write_file(out_csv, cfnoma::format_summary_csv(summary));
            std::cout << summary.size() << " groups written to " << out_csv << "\n";
            return kOk;
        }
        if (*verify)
        {
            const auto cfg = cfnoma::parse_config(config_path);
            const auto rows = cfnoma::run_verify(cfg, threads);
            int failed = 0;
            std::printf("scenario,seed,ds,bu,ici,rici,ui,se,pass\n");
            for (const auto &r : rows)
            {
                std::printf("%d,%llu,%.4g,%.4g,%.4g,%.4g,%.4g,%.4g,%s\n", r.scenario, (unsigned long long)r.seed,
                            r.term_error[0], r.term_error[1], r.term_error[2], r.term_error[3], r.term_error[4],
                            r.se_error, r.pass ? "yes" : "no");
                if (!r.message.empty())
                    std::fprintf(stderr, "scenario %d seed %llu: %s\n", r.scenario, (unsigned long long)r.seed,
                                 r.message.c_str());
                failed += r.pass ? 0 : 1;
            }
            std::fprintf(stderr, "%d of %zu topologies outside tolerance %.3g\n", failed, rows.size(),
                         cfg.mc_tolerance);
            return failed > 0 ? kFailures : kOk;
        }
    }
    catch (const cfnoma::InvalidInput &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return kFailures;
    }
    return kOk;
}
