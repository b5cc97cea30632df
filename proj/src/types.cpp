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

#include "cfnoma/types.hpp"

#include <numeric>

namespace cfnoma
{

SystemConfig SystemConfig::uniform(int M, int N, int K, int L, double zeta, double pilot_power, double ap_budget)
{
    SystemConfig c;
    c.num_aps = M;
    c.num_ues = N;
    c.num_antennas = K;
    c.num_clusters = L;
    c.sic_coeff.assign(std::size_t(std::max(N, 0)), zeta);
    c.ul_pilot_power.assign(std::size_t(std::max(N, 0)), pilot_power);
    c.dl_power_budget.assign(std::size_t(std::max(M, 0)), ap_budget);
    return c;
}

void SystemConfig::validate() const
{
    if (num_aps < 1)
        throw InvalidConfig("M must be positive");
    if (num_ues < 1)
        throw InvalidConfig("N must be positive");
    if (num_clusters < 1 || num_clusters > num_ues)
        throw InvalidConfig("L must lie in [1, N]");
    if (tau_p() < num_clusters)
        throw InvalidConfig("pilot length must be at least L");
    if (num_antennas <= tau_p())
        throw InvalidConfig("K must exceed the pilot length");
    if (coherence_len <= tau_p())
        throw InvalidConfig("coherence length must exceed the pilot length");
    if (int(sic_coeff.size()) != num_ues || int(ul_pilot_power.size()) != num_ues)
        throw InvalidConfig("per-UE vectors must have N entries");
    if (int(dl_power_budget.size()) != num_aps)
        throw InvalidConfig("per-AP budget vector must have M entries");
    for (double z : sic_coeff)
        if (!(z >= 0.0 && z <= 1.0))
            throw InvalidConfig("SIC coefficient outside [0, 1]");
    for (double p : ul_pilot_power)
        if (!(p >= 0.0))
            throw InvalidConfig("pilot power must be non-negative");
    for (double p : dl_power_budget)
        if (!(p >= 0.0))
            throw InvalidConfig("AP power budget must be non-negative");
    if (!(radius_km > 0.0) || !(d0_km > 0.0) || !(d1_km > d0_km) || !(min_distance_km > 0.0))
        throw InvalidConfig("invalid geometry parameters");
}

SystemConfig collocated_config(const SystemConfig &cf)
{
    SystemConfig co = cf;
    co.num_aps = 1;
    co.num_antennas = cf.num_aps * cf.num_antennas;
    co.dl_power_budget = {std::accumulate(cf.dl_power_budget.begin(), cf.dl_power_budget.end(), 0.0)};
    return co;
}

int Clustering::num_ues() const
{
    std::size_t n = 0;
    for (const auto &c : clusters)
        n += c.size();
    return int(n);
}

std::vector<int> Clustering::assignment() const
{
    std::vector<int> a(std::size_t(num_ues()), -1);
    for (std::size_t l = 0; l < clusters.size(); ++l)
        for (int n : clusters[l])
            a.at(std::size_t(n)) = int(l);
    return a;
}

std::vector<int> Clustering::positions() const
{
    std::vector<int> p(std::size_t(num_ues()), -1);
    for (const auto &c : clusters)
        for (std::size_t i = 0; i < c.size(); ++i)
            p.at(std::size_t(c[i])) = int(i);
    return p;
}

std::size_t Clustering::num_intra_pairs() const
{
    std::size_t p = 0;
    for (const auto &c : clusters)
        p += c.size() * (c.size() - (c.empty() ? 0 : 1)) / 2;
    return p;
}

Clustering Clustering::from_assignment(const std::vector<int> &assignment, int L)
{
    Clustering c;
    c.clusters.resize(std::size_t(L));
    for (std::size_t n = 0; n < assignment.size(); ++n)
    {
        int l = assignment[n];
        if (l < 0 || l >= L)
            throw InvalidClustering("assignment index out of range");
        c.clusters[std::size_t(l)].push_back(int(n));
    }
    return c;
}

void Clustering::validate(int N) const
{
    std::vector<int> seen(std::size_t(std::max(N, 0)), 0);
    for (const auto &c : clusters)
    {
        if (c.empty())
            throw InvalidClustering("empty cluster");
        for (int n : c)
        {
            if (n < 0 || n >= N)
                throw InvalidClustering("UE index out of range");
            if (seen[std::size_t(n)]++)
                throw InvalidClustering("UE assigned to more than one cluster");
        }
    }
    for (int s : seen)
        if (s == 0)
            throw InvalidClustering("UE not assigned to any cluster");
}

} // namespace cfnoma
