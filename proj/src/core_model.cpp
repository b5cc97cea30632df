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

#include "cfnoma/core_model.hpp"
#include "cfnoma/rng.hpp"

#include <cmath>
#include <numbers>

namespace cfnoma
{

double path_loss_db(double d_km, double d0_km, double d1_km)
{
    if (!(d_km > 0.0) || !std::isfinite(d_km))
        throw InvalidInput("distance must be positive and finite");
    const double a0 = d_km < d0_km ? 1.0 : 0.0;
    const double a1 = d_km < d1_km ? 1.0 : 0.0;
    return -140.7 - 35.0 * std::log10(d_km) + 20.0 * a0 * std::log10(d_km / d0_km) +
           15.0 * a1 * std::log10(d_km / d1_km);
}

double distance_km(const Point &a, const Point &b)
{
    return std::hypot(a.x - b.x, a.y - b.y);
}

namespace
{
Point draw_on_disc(Rng &rng, double radius)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double r = radius * std::sqrt(u(rng));
    const double a = 2.0 * std::numbers::pi * u(rng);
    return {r * std::cos(a), r * std::sin(a)};
}
} // namespace

Topology generate_topology(const SystemConfig &config, std::uint64_t seed)
{
    if (config.num_aps < 0 || config.num_ues < 0)
        throw InvalidConfig("negative node count");
    if (!(config.radius_km > 0.0))
        throw InvalidConfig("radius must be positive");
    Topology t;
    t.seed = seed;
    Rng ap_rng(derive_seed({seed, 1}));
    Rng ue_rng(derive_seed({seed, 2}));
    for (int m = 0; m < config.num_aps; ++m)
        t.aps.push_back(draw_on_disc(ap_rng, config.radius_km));
    for (int n = 0; n < config.num_ues; ++n)
        t.ues.push_back(draw_on_disc(ue_rng, config.radius_km));
    return t;
}

Eigen::MatrixXd large_scale_fading(const Topology &topology, const SystemConfig &config, std::uint64_t seed)
{
    const auto M = Eigen::Index(topology.aps.size());
    const auto N = Eigen::Index(topology.ues.size());
    Eigen::MatrixXd beta(M, N);
    Rng rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    for (Eigen::Index n = 0; n < N; ++n)
        for (Eigen::Index m = 0; m < M; ++m)
        {
            const double d = std::max(distance_km(topology.aps[size_t(m)], topology.ues[size_t(n)]), config.min_distance_km);
            const double pl = path_loss_db(d, config.d0_km, config.d1_km);
            beta(m, n) = std::pow(10.0, (pl + config.shadow_std_db * z(rng)) / 10.0);
        }
    return beta;
}

Eigen::VectorXd collocated_fading(const Topology &topology, const SystemConfig &config, std::uint64_t seed)
{
    const auto N = Eigen::Index(topology.ues.size());
    Eigen::VectorXd beta(N);
    Rng rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    for (Eigen::Index n = 0; n < N; ++n)
    {
        const double d = std::max(distance_km(Point{}, topology.ues[size_t(n)]), config.min_distance_km);
        beta(n) = std::pow(10.0, (path_loss_db(d, config.d0_km, config.d1_km) + config.shadow_std_db * z(rng)) / 10.0);
    }
    return beta;
}

FadingMap estimation_stats(const Eigen::MatrixXd &beta, const Clustering &clustering, const SystemConfig &config)
{
    const int N = int(beta.cols());
    clustering.validate(N);
    if (int(config.ul_pilot_power.size()) != N)
        throw InvalidConfig("pilot power vector must have N entries");
    if (config.tau_p() < clustering.num_clusters())
        throw InvalidConfig("pilot length must be at least L");
    if ((beta.array() < 0.0).any() || !beta.allFinite())
        throw InvalidInput("large-scale coefficients must be non-negative and finite");

    const double tp = config.tau_p();
    FadingMap f;
    f.beta = beta;
    f.gamma.resize(beta.rows(), beta.cols());
    f.upsilon.resize(beta.rows(), beta.cols());
    for (const auto &members : clustering.clusters)
        for (Eigen::Index m = 0; m < beta.rows(); ++m)
        {
            double load = 0.0;
            for (int n : members)
                load += config.ul_pilot_power[size_t(n)] * beta(m, n);
            const double den = tp * load + 1.0;
            for (int n : members)
            {
                const double rho = config.ul_pilot_power[size_t(n)];
                f.upsilon(m, n) = std::sqrt(rho) * beta(m, n) / den;
                f.gamma(m, n) = tp * rho * beta(m, n) * beta(m, n) / den;
            }
        }
    return f;
}

Eigen::VectorXd virtual_channel_norms(const Eigen::MatrixXd &gamma)
{
    return gamma.colwise().norm().transpose();
}

} // namespace cfnoma
