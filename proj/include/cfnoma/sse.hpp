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

#include "cfnoma/core_model.hpp"
#include "cfnoma/types.hpp"

#include <Eigen/Dense>

#include <vector>

namespace cfnoma
{

// Interference terms seen by one evaluating UE while decoding one target UE
struct SinrBreakdown
{
    double ds = 0.0;   // desired signal
    double bu = 0.0;   // beamforming gain uncertainty
    double ici = 0.0;  // stronger same-cluster UEs
    double rici = 0.0; // residual of weaker same-cluster UEs after SIC
    double ui = 0.0;   // other clusters
    double sinr = 0.0;

    double interference() const { return bu + ici + rici + ui; }
};

// Weight of interferer (cluster, position) when decoding target (cluster, position)
double eta_coeff(int interferer_cluster, int interferer_pos, int target_cluster, int target_pos, double zeta);

// Cell-free with per-AP rho (M x N). The evaluator must be the target or a stronger member of its cluster.
SinrBreakdown sinr_cf(const FadingMap &fading, const Clustering &clustering, const SystemConfig &config,
                      const Eigen::MatrixXd &rho, int target, int evaluator);
double user_se_cf(const FadingMap &fading, const Clustering &clustering, const SystemConfig &config,
                  const Eigen::MatrixXd &rho, int ue);
std::vector<double> user_se_cf_all(const FadingMap &fading, const Clustering &clustering, const SystemConfig &config,
                                   const Eigen::MatrixXd &rho);
double sum_se_cf(const FadingMap &fading, const Clustering &clustering, const SystemConfig &config,
                 const Eigen::MatrixXd &rho);

// Collocated array with one coefficient per UE; config carries the total antenna count
struct CollocatedStats
{
    Eigen::VectorXd beta;
    Eigen::VectorXd gamma;
};

CollocatedStats collocated_stats(const Eigen::VectorXd &beta, const Clustering &clustering, const SystemConfig &config);

SinrBreakdown sinr_co(const CollocatedStats &stats, const Clustering &clustering, const SystemConfig &config,
                      const Eigen::VectorXd &rho, int target, int evaluator);
double user_se_co(const CollocatedStats &stats, const Clustering &clustering, const SystemConfig &config,
                  const Eigen::VectorXd &rho, int ue);
double sum_se_co(const CollocatedStats &stats, const Clustering &clustering, const SystemConfig &config,
                 const Eigen::VectorXd &rho);

// Each AP splits its budget equally across clusters, then inside a cluster
// proportionally to (virtual-channel norm)^-alpha
Eigen::MatrixXd fixed_pa_cf(const Eigen::MatrixXd &gamma, const Clustering &clustering, const SystemConfig &config,
                            double alpha = 1.0);
Eigen::VectorXd fixed_pa_co(const Eigen::VectorXd &gamma, const Clustering &clustering, double budget,
                            double alpha = 1.0);

} // namespace cfnoma
