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

#include "cfnoma/clustering.hpp"
#include "cfnoma/core_model.hpp"
#include "cfnoma/rng.hpp"
#include "cfnoma/sse.hpp"
#include "cfnoma/types.hpp"

#include <cmath>

namespace fixtures
{

struct Instance
{
    cfnoma::SystemConfig config;
    cfnoma::Topology topology;
    Eigen::MatrixXd beta;
    cfnoma::Clustering clustering;
    cfnoma::FadingMap fading;
};

inline double dbm_to_normalized(double dbm) { return std::pow(10.0, (dbm + 104.0) / 10.0); }

inline cfnoma::SystemConfig desk_config(int M, int N, int K, int L, double zeta = 0.05, double total_dbm = 40.0)
{
    return cfnoma::SystemConfig::uniform(M, N, K, L, zeta, dbm_to_normalized(23.0), dbm_to_normalized(total_dbm) / M);
}

// Random topology clustered with the improved initialization and ordered by virtual channel
inline Instance make_instance(const cfnoma::SystemConfig &config, std::uint64_t seed,
                              cfnoma::InitMethod init = cfnoma::InitMethod::improved)
{
    using namespace cfnoma;
    Instance in;
    in.config = config;
    in.topology = generate_topology(config, seed);
    in.beta = large_scale_fading(in.topology, config, derive_seed({seed, 3}));
    auto km = cluster_ues(in.beta, config.num_clusters, init, derive_seed({seed, 4}));
    auto f0 = estimation_stats(in.beta, km.clustering, config);
    in.clustering = order_within_cluster(km.clustering, f0.gamma);
    in.fading = estimation_stats(in.beta, in.clustering, config);
    return in;
}

} // namespace fixtures
