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

#include "cfnoma/sse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cfnoma
{

namespace
{
void check_pair(const Clustering &clustering, const std::vector<int> &assign, const std::vector<int> &pos, int target,
                int evaluator)
{
    const int N = int(assign.size());
    if (target < 0 || target >= N || evaluator < 0 || evaluator >= N)
        throw InvalidInput("UE index out of range");
    if (assign[size_t(target)] != assign[size_t(evaluator)])
        throw InvalidInput("evaluator must share the target's cluster");
    if (pos[size_t(evaluator)] > pos[size_t(target)])
        throw InvalidInput("evaluator must not be weaker than the target");
    (void)clustering;
}

void check_antennas(const SystemConfig &config)
{
    if (config.num_antennas <= config.tau_p())
        throw InvalidConfig("K must exceed the pilot length");
    if (int(config.sic_coeff.size()) != config.num_ues)
        throw InvalidConfig("SIC coefficient vector must have N entries");
}

void check_rho(const Eigen::MatrixXd &rho, Eigen::Index M, Eigen::Index N)
{
    if (rho.rows() != M || rho.cols() != N)
        throw InvalidInput("power allocation has the wrong shape");
    if (!rho.allFinite() || (rho.array() < 0.0).any())
        throw InvalidInput("power allocation must be finite and non-negative");
}
} // namespace

double eta_coeff(int interferer_cluster, int interferer_pos, int target_cluster, int target_pos, double zeta)
{
    if (interferer_cluster != target_cluster)
        return 1.0;
    return interferer_pos <= target_pos ? 1.0 : zeta;
}

SinrBreakdown sinr_cf(const FadingMap &f, const Clustering &clustering, const SystemConfig &config,
                      const Eigen::MatrixXd &rho, int target, int evaluator)
{
    check_antennas(config);
    const Eigen::Index M = f.beta.rows(), N = f.beta.cols();
    check_rho(rho, M, N);
    const auto assign = clustering.assignment();
    const auto pos = clustering.positions();
    check_pair(clustering, assign, pos, target, evaluator);

    const double kp = config.num_antennas - config.tau_p();
    const int lt = assign[size_t(target)], pt = pos[size_t(target)];
    const double zeta = config.sic_coeff[size_t(target)];

    auto coherent = [&](int j) {
        double s = 0.0;
        for (Eigen::Index m = 0; m < M; ++m)
            s += std::sqrt(rho(m, j) * f.gamma(m, evaluator));
        return kp * s * s;
    };
    auto leakage = [&](int j) {
        double s = 0.0;
        for (Eigen::Index m = 0; m < M; ++m)
            s += rho(m, j) * (f.beta(m, evaluator) - f.gamma(m, evaluator));
        return s;
    };

    SinrBreakdown b;
    b.ds = coherent(target);
    b.bu = leakage(target);
    for (int j = 0; j < int(N); ++j)
    {
        if (j == target)
            continue;
        const int lj = assign[size_t(j)], pj = pos[size_t(j)];
        const double eta = eta_coeff(lj, pj, lt, pt, zeta);
        if (lj != lt)
            b.ui += eta * leakage(j);
        else if (pj < pt)
            b.ici += eta * (coherent(j) + leakage(j));
        else
            b.rici += eta * (coherent(j) + leakage(j));
    }
    b.sinr = b.ds / (b.interference() + 1.0);
    return b;
}

double user_se_cf(const FadingMap &f, const Clustering &clustering, const SystemConfig &config,
                  const Eigen::MatrixXd &rho, int ue)
{
    const auto pos = clustering.positions();
    const auto assign = clustering.assignment();
    if (ue < 0 || ue >= int(pos.size()))
        throw InvalidInput("UE index out of range");
    const auto &members = clustering.clusters[size_t(assign[size_t(ue)])];
    double worst = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= pos[size_t(ue)]; ++k)
        worst = std::min(worst, sinr_cf(f, clustering, config, rho, ue, members[size_t(k)]).sinr);
    return config.prelog() * std::log2(1.0 + worst);
}

std::vector<double> user_se_cf_all(const FadingMap &f, const Clustering &clustering, const SystemConfig &config,
                                   const Eigen::MatrixXd &rho)
{
    std::vector<double> se(size_t(f.beta.cols()));
    for (int n = 0; n < int(se.size()); ++n)
        se[size_t(n)] = user_se_cf(f, clustering, config, rho, n);
    return se;
}

double sum_se_cf(const FadingMap &f, const Clustering &clustering, const SystemConfig &config,
                 const Eigen::MatrixXd &rho)
{
    double s = 0.0;
    for (double v : user_se_cf_all(f, clustering, config, rho))
        s += v;
    return s;
}

CollocatedStats collocated_stats(const Eigen::VectorXd &beta, const Clustering &clustering, const SystemConfig &config)
{
    const int N = int(beta.size());
    clustering.validate(N);
    if (int(config.ul_pilot_power.size()) != N)
        throw InvalidConfig("pilot power vector must have N entries");
    if ((beta.array() < 0.0).any() || !beta.allFinite())
        throw InvalidInput("large-scale coefficients must be non-negative and finite");
    const double tp = config.tau_p();
    CollocatedStats s;
    s.beta = beta;
    s.gamma.resize(N);
    for (const auto &members : clustering.clusters)
    {
        double load = 0.0;
        for (int n : members)
            load += config.ul_pilot_power[size_t(n)] * beta(n);
        for (int n : members)
            s.gamma(n) = tp * config.ul_pilot_power[size_t(n)] * beta(n) * beta(n) / (tp * load + 1.0);
    }
    return s;
}

SinrBreakdown sinr_co(const CollocatedStats &s, const Clustering &clustering, const SystemConfig &config,
                      const Eigen::VectorXd &rho, int target, int evaluator)
{
    check_antennas(config);
    const Eigen::Index N = s.beta.size();
    if (rho.size() != N || !rho.allFinite() || (rho.array() < 0.0).any())
        throw InvalidInput("power allocation must have N finite non-negative entries");
    const auto assign = clustering.assignment();
    const auto pos = clustering.positions();
    check_pair(clustering, assign, pos, target, evaluator);

    const double kp = config.num_antennas - config.tau_p();
    const double g = s.gamma(evaluator);
    const double err = s.beta(evaluator) - g;
    const int lt = assign[size_t(target)], pt = pos[size_t(target)];
    const double zeta = config.sic_coeff[size_t(target)];

    SinrBreakdown b;
    b.ds = kp * rho(target) * g;
    b.bu = rho(target) * err;
    for (int j = 0; j < int(N); ++j)
    {
        if (j == target)
            continue;
        const int lj = assign[size_t(j)], pj = pos[size_t(j)];
        if (lj != lt)
            b.ui += rho(j) * err;
        else if (pj < pt)
            b.ici += kp * rho(j) * g + rho(j) * err;
        else
            b.rici += zeta * (kp * rho(j) * g + rho(j) * err);
    }
    b.sinr = b.ds / (b.interference() + 1.0);
    return b;
}

double user_se_co(const CollocatedStats &s, const Clustering &clustering, const SystemConfig &config,
                  const Eigen::VectorXd &rho, int ue)
{
    const auto pos = clustering.positions();
    const auto assign = clustering.assignment();
    if (ue < 0 || ue >= int(pos.size()))
        throw InvalidInput("UE index out of range");
    const auto &members = clustering.clusters[size_t(assign[size_t(ue)])];
    double worst = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= pos[size_t(ue)]; ++k)
        worst = std::min(worst, sinr_co(s, clustering, config, rho, ue, members[size_t(k)]).sinr);
    return config.prelog() * std::log2(1.0 + worst);
}

double sum_se_co(const CollocatedStats &s, const Clustering &clustering, const SystemConfig &config,
                 const Eigen::VectorXd &rho)
{
    double total = 0.0;
    for (int n = 0; n < int(s.beta.size()); ++n)
        total += user_se_co(s, clustering, config, rho, n);
    return total;
}

namespace
{
// Shares of one unit of power inside each cluster
std::vector<double> cluster_shares(const Eigen::VectorXd &norms, const Clustering &clustering, double alpha)
{
    std::vector<double> share(size_t(norms.size()), 0.0);
    for (const auto &members : clustering.clusters)
    {
        bool degenerate = false;
        for (int n : members)
            degenerate = degenerate || !(norms(n) > 0.0);
        double total = 0.0;
        for (int n : members)
        {
            share[size_t(n)] = degenerate ? 1.0 : std::pow(norms(n), -alpha);
            total += share[size_t(n)];
        }
        for (int n : members)
            share[size_t(n)] /= total;
    }
    return share;
}
} // namespace

Eigen::MatrixXd fixed_pa_cf(const Eigen::MatrixXd &gamma, const Clustering &clustering, const SystemConfig &config,
                            double alpha)
{
    clustering.validate(int(gamma.cols()));
    if (int(config.dl_power_budget.size()) != gamma.rows())
        throw InvalidConfig("per-AP budget vector must have M entries");
    const auto share = cluster_shares(virtual_channel_norms(gamma), clustering, alpha);
    const double L = clustering.num_clusters();
    Eigen::MatrixXd rho(gamma.rows(), gamma.cols());
    for (Eigen::Index m = 0; m < gamma.rows(); ++m)
        for (Eigen::Index n = 0; n < gamma.cols(); ++n)
            rho(m, n) = config.dl_power_budget[size_t(m)] / L * share[size_t(n)];
    return rho;
}

Eigen::VectorXd fixed_pa_co(const Eigen::VectorXd &gamma, const Clustering &clustering, double budget, double alpha)
{
    clustering.validate(int(gamma.size()));
    const auto share = cluster_shares(gamma.cwiseAbs(), clustering, alpha);
    Eigen::VectorXd rho(gamma.size());
    for (Eigen::Index n = 0; n < gamma.size(); ++n)
        rho(n) = budget / clustering.num_clusters() * share[size_t(n)];
    return rho;
}

} // namespace cfnoma
