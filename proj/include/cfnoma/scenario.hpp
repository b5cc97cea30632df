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

#pragma once

#include "cfnoma/types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cfnoma
{

enum class Algorithm
{
    kmeans,   // Lloyd from uniformly drawn centroids
    kmeanspp, // farthest-first initialization
    improved, // AP-vote initialization
    near,
    far,
    random
};

enum class PaMode
{
    fixed,
    optimized
};

enum class SystemKind
{
    cellfree,
    collocated
};

const char *to_string(Algorithm a);
const char *to_string(PaMode p);
const char *to_string(SystemKind s);

// Experiment description in physical units. Lists are sweep axes; every combination is a sweep point.
struct ScenarioConfig
{
    int N = 0;
    std::vector<std::pair<int, int>> mk; // (M, K) layouts
    std::vector<int> L;                  // empty when the cluster count is chosen by silhouette
    std::pair<int, int> L_range{2, 9};
    std::vector<double> zeta;
    std::vector<double> p_total_dbm;
    std::optional<double> ap_power_dbm; // per-AP budget overriding P_total / M

    std::optional<int> pilot_len;
    int coherence_len = 200;
    double radius_km = 1.0;
    double d0_km = 0.01;
    double d1_km = 0.05;
    double min_distance_km = 0.001;
    double shadow_std_db = 8.0;
    double bandwidth_mhz = 20.0;
    double noise_dbm = -104.0;
    double ue_power_dbm = 23.0;

    std::vector<Algorithm> algorithms{Algorithm::improved};
    std::vector<PaMode> pa_modes{PaMode::fixed};
    std::vector<SystemKind> systems{SystemKind::cellfree};
    int num_topologies = 50;
    std::uint64_t master_seed = 1;
    double alpha = 1.0;
    double ia_epsilon = 1e-3;
    int ia_max_outer = 30;
    int mc_realizations = 10000;
    double mc_tolerance = 0.03;
    std::string output = "results";

    bool auto_L() const { return L.empty(); }
    double to_normalized(double dbm) const;

    // Every field spelled out, suitable for parse_config_json
    std::string to_json() const;
};

struct SweepPoint
{
    int index = 0;
    int layout = 0; // index into mk
    int M = 0, K = 0;
    int L = 0;      // 0 when chosen by silhouette per topology
    double zeta = 0.0;
    double p_total_dbm = 0.0;
};

std::vector<SweepPoint> sweep_points(const ScenarioConfig &config);

// Cell-free system parameters at a sweep point with L clusters
SystemConfig system_config(const ScenarioConfig &config, const SweepPoint &point, int L);

// Shared by every algorithm, PA mode, system, zeta, power and L at one layout
std::uint64_t topology_seed(const ScenarioConfig &config, const SweepPoint &point, int topology);

// Throws InvalidConfig naming the offending key. A run manifest is accepted through its "config" member.
ScenarioConfig parse_config_json(const std::string &text);
ScenarioConfig parse_config(const std::string &path);

struct ResultRow
{
    int scenario = 0;
    std::uint64_t seed = 0;
    std::string algorithm, pa_mode, system;
    int M = 0, K = 0, L = 0;
    double zeta = 0.0;
    double p_total_dbm = 0.0;
    double sse = 0.0;
    std::string status; // ok | not_converged | solver_failure | error
    int iters = 0;
    std::vector<double> user_se;
    std::string message;
};

extern const char *const kResultsHeader;

std::string format_results_csv(const std::vector<ResultRow> &rows);
std::string format_user_csv(const std::vector<ResultRow> &rows);
std::vector<ResultRow> parse_results_csv(const std::string &text);

struct SweepOutput
{
    std::vector<ResultRow> rows;
    std::string manifest; // JSON
    int failures = 0;
};

SweepOutput run_sweep(const ScenarioConfig &config, int threads = 1);

struct SummaryRow
{
    int scenario = 0;
    std::string algorithm, pa_mode, system;
    int M = 0, K = 0, L = 0;
    double zeta = 0.0;
    double p_total_dbm = 0.0;
    int n = 0;
    int failures = 0;
    double mean = 0.0;
    double ci_half_width = 0.0; // normal approximation, 95 %
};

// Groups by sweep point, algorithm, PA mode and system; failed rows are counted but not averaged.
// Rows chosen by silhouette with different L share a group. Throws InvalidInput on empty input.
std::vector<SummaryRow> reduce_results(const std::vector<ResultRow> &rows);
std::string format_summary_csv(const std::vector<SummaryRow> &rows);

struct VerifyRow
{
    int scenario = 0;
    std::uint64_t seed = 0;
    std::array<double, 5> term_error{};
    double se_error = 0.0;
    bool pass = false;
    std::string message;
};

// Closed form against Monte Carlo for the cell-free system with fixed powers, one row per topology
std::vector<VerifyRow> run_verify(const ScenarioConfig &config, int threads = 1);

const char *version();

} // namespace cfnoma
