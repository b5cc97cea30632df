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

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace cfnoma
{

// Three-slope path loss in dB; distances in km. Slope terms switch off at d >= d0 and d >= d1.
double path_loss_db(double d_km, double d0_km = 0.01, double d1_km = 0.05);

struct Point
{
    double x = 0.0;
    double y = 0.0;
};

struct Topology
{
    std::vector<Point> aps;
    std::vector<Point> ues;
    std::uint64_t seed = 0;
};

// Uniform placement on a disc of radius config.radius_km
Topology generate_topology(const SystemConfig &config, std::uint64_t seed);

double distance_km(const Point &a, const Point &b);

// beta(m, n) with independent log-normal shadowing per link, M x N
Eigen::MatrixXd large_scale_fading(const Topology &topology, const SystemConfig &config, std::uint64_t seed);

// Collocated site at the disc center, one coefficient per UE
Eigen::VectorXd collocated_fading(const Topology &topology, const SystemConfig &config, std::uint64_t seed);

// MMSE estimation statistics under cluster-shared pilots
struct FadingMap
{
    Eigen::MatrixXd beta;    // M x N
    Eigen::MatrixXd gamma;   // M x N, mean-square of the estimate
    Eigen::MatrixXd upsilon; // M x N, estimator scaling
};

FadingMap estimation_stats(const Eigen::MatrixXd &beta, const Clustering &clustering, const SystemConfig &config);

// Norm of the virtual channel of each UE (column norms of gamma)
Eigen::VectorXd virtual_channel_norms(const Eigen::MatrixXd &gamma);

} // namespace cfnoma
