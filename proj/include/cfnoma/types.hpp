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

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cfnoma
{

struct InvalidInput : std::invalid_argument
{
    using std::invalid_argument::invalid_argument;
};

struct InvalidConfig : InvalidInput
{
    using InvalidInput::InvalidInput;
};

struct InvalidClustering : InvalidInput
{
    using InvalidInput::InvalidInput;
};

struct InvalidPoint : InvalidInput
{
    using InvalidInput::InvalidInput;
};

struct EmptyCluster : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

// Powers are linear and normalized to the receiver noise power.
struct SystemConfig
{
    int num_aps = 0;      // M
    int num_ues = 0;      // N
    int num_antennas = 0; // K per AP
    int num_clusters = 0; // L
    std::optional<int> pilot_len;
    int coherence_len = 200;

    std::vector<double> sic_coeff;       // per UE, residual SIC error in [0,1]
    std::vector<double> ul_pilot_power;  // per UE
    std::vector<double> dl_power_budget; // per AP

    double radius_km = 1.0;
    double shadow_std_db = 8.0;
    double d0_km = 0.01;
    double d1_km = 0.05;
    double min_distance_km = 0.001;

    int tau_p() const { return pilot_len.value_or(num_clusters); }
    double prelog() const { return 1.0 - double(tau_p()) / double(coherence_len); }

    static SystemConfig uniform(int M, int N, int K, int L, double zeta, double pilot_power, double ap_budget);

    // Throws InvalidConfig
    void validate() const;
};

// Collocated counterpart: one site with M*K antennas and the summed budget.
SystemConfig collocated_config(const SystemConfig &cf);

// Partition of UEs into NOMA clusters. Members are kept in SIC decode order, strongest first.
struct Clustering
{
    std::vector<std::vector<int>> clusters;
    Eigen::MatrixXd centroids; // features x L

    int num_clusters() const { return int(clusters.size()); }
    int num_ues() const;

    std::vector<int> assignment() const;      // UE -> cluster
    std::vector<int> positions() const;       // UE -> index within its cluster
    std::size_t num_intra_pairs() const;      // sum_l N_l (N_l - 1) / 2

    static Clustering from_assignment(const std::vector<int> &assignment, int L);

    // Throws InvalidClustering unless every UE in [0, N) appears exactly once
    void validate(int N) const;
};

} // namespace cfnoma
