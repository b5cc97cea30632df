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

#include "cfnoma/conic.hpp"
#include "cfnoma/core_model.hpp"
#include "cfnoma/sse.hpp"
#include "cfnoma/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cfnoma
{

// Decoding pairs (target, evaluator) with the evaluator not weaker than the target,
// and amplitude keys (evaluator, interferer) for same-cluster interference.
struct PairIndex
{
    std::vector<std::pair<int, int>> pairs;
    std::vector<std::pair<int, int>> amp_keys;
    Eigen::MatrixXi pair_id; // N x N, -1 if absent
    Eigen::MatrixXi amp_id;  // N x N, -1 if absent

    static PairIndex build(const Clustering &clustering, bool with_amplitudes);
};

// Expansion point of the convexified problem. rho_hat holds square roots of powers
// (M x N for cell-free, 1 x N for collocated). varpi and amp are unused for collocated.
struct SurrogatePoint
{
    Eigen::MatrixXd rho_hat;
    Eigen::VectorXd phi;   // per UE
    Eigen::VectorXd varpi; // per pair
    Eigen::VectorXd theta; // per pair
    Eigen::VectorXd amp;   // per amplitude key
};

struct VariableLayout
{
    int M = 0, N = 0;
    double rho_scale = 1.0; // rho_hat = rho_scale * x
    int rho0 = 0, r0 = 0, phi0 = 0, phibar0 = 0, varpi0 = -1, theta0 = 0, amp0 = -1;

    int rho(int m, int n) const { return rho0 + n * M + m; }
};

struct Subproblem
{
    ConicProgram program;
    VariableLayout layout;
    PairIndex index;
    bool cell_free = true;
};

// Concave lower bound of ln(1 + phi) expanded at phi_k > 0, tight at phi = phi_k
double log_surrogate(double phi, double phi_k);
// Affine lower bound of kp * varpi^2 / (theta + 1) expanded at (varpi_k, theta_k), tight there
double ratio_surrogate(double varpi, double theta, double varpi_k, double theta_k, double kp);

struct Tally
{
    long variables = 0;
    long constraints = 0;
};

// Complexity tallies quoted for the cell-free and collocated subproblems
Tally reference_tally_cf(const Clustering &clustering, int M);
Tally reference_tally_co(const Clustering &clustering);

// Tight expansion point derived from rho_hat
SurrogatePoint derive_point_cf(const Eigen::MatrixXd &rho_hat, const FadingMap &fading, const Clustering &clustering,
                               const SystemConfig &config);
SurrogatePoint derive_point_co(const Eigen::VectorXd &rho_hat, const CollocatedStats &stats,
                               const Clustering &clustering, const SystemConfig &config);

// Throws InvalidPoint when the point is outside the convexified feasible set
Subproblem build_cf_subproblem(const SurrogatePoint &point, const FadingMap &fading, const Clustering &clustering,
                               const SystemConfig &config);
Subproblem build_co_subproblem(const SurrogatePoint &point, const CollocatedStats &stats,
                               const Clustering &clustering, const SystemConfig &config);

// rho_hat (unscaled) from a subproblem solution
Eigen::MatrixXd solution_rho_hat(const Subproblem &sub, const ConicSolution &sol);

// Power projection: clamps round-off negatives, restores SIC order, rescales budgets
Eigen::MatrixXd project_powers(const Eigen::MatrixXd &rho, const Clustering &clustering,
                               const std::vector<double> &budgets);

struct IaOptions
{
    double epsilon = 1e-3;
    int max_outer = 30;
    double alpha = 1.0;
    double init_fraction = 0.9;
    std::optional<std::uint64_t> random_init_seed;
    SolverOptions solver;
};

enum class IaStatus
{
    converged,
    max_outer,
    subproblem_failure
};

const char *to_string(IaStatus s);

struct IaHistory
{
    std::vector<double> objective; // prelog * sum of rates at each tight iterate; index 0 is the initial point
    std::vector<double> surrogate; // optimal value of each convex subproblem (0 for the initial point)
    std::vector<double> sse;       // exact SSE of each iterate
    std::vector<std::string> solver_status;
    std::vector<int> solver_iterations;

    std::string to_csv() const;
};

struct IaResult
{
    Eigen::MatrixXd rho; // M x N, or 1 x N for collocated
    double sse = 0.0;
    int iterations = 0;
    IaStatus status = IaStatus::converged;
    std::string warning;
    IaHistory history;
};

IaResult ia_maximize_cf(const FadingMap &fading, const Clustering &clustering, const SystemConfig &config,
                        const IaOptions &options = {});
IaResult ia_maximize_co(const CollocatedStats &stats, const Clustering &clustering, const SystemConfig &config,
                        const IaOptions &options = {});

} // namespace cfnoma
