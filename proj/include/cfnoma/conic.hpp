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

#include <string>
#include <utility>
#include <vector>

namespace cfnoma
{

struct AffineExpr
{
    std::vector<std::pair<int, double>> terms;
    double constant = 0.0;

    AffineExpr &add(int var, double coef)
    {
        terms.emplace_back(var, coef);
        return *this;
    }
    double eval(const Eigen::VectorXd &x) const;
};

// expr <= 0, or expr == 0
struct LinearConstraint
{
    AffineExpr expr;
    bool equality = false;
    std::string tag;
};

// ||lhs||_2 <= rhs
struct SocConstraint
{
    std::vector<AffineExpr> lhs;
    AffineExpr rhs;
    std::string tag;
};

// minimize cost' x subject to linear and second-order cone constraints
struct ConicProgram
{
    std::vector<std::string> names;
    std::vector<double> cost;
    std::vector<LinearConstraint> linear;
    std::vector<SocConstraint> soc;

    int add_variable(std::string name, double c = 0.0);
    int num_variables() const { return int(cost.size()); }
    std::size_t num_constraints() const { return linear.size() + soc.size(); }

    void add_le(AffineExpr expr, std::string tag);
    void add_eq(AffineExpr expr, std::string tag);
    void add_soc(std::vector<AffineExpr> lhs, AffineExpr rhs, std::string tag);

    double objective(const Eigen::VectorXd &x) const;
    double max_violation(const Eigen::VectorXd &x) const;

    // Throws InvalidInput on malformed programs
    void validate() const;

    // Canonical plain-text form
    std::string dump() const;
};

enum class SolveStatus
{
    optimal,
    infeasible,
    unbounded,
    max_iters
};

const char *to_string(SolveStatus s);

struct SolverOptions
{
    double feas_tol = 1e-8;
    double gap_tol = 1e-8;
    int max_iters = 100;
    double step_fraction = 0.99;
};

struct ConicSolution
{
    SolveStatus status = SolveStatus::max_iters;
    Eigen::VectorXd x;
    double objective = 0.0;
    double duality_gap = 0.0;     // (s'z) / max(1, |objective|)
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double complementarity = 0.0; // max over cones of |s_k' z_k|, scaled like duality_gap
    int iterations = 0;
    std::string diagnostics;

    Eigen::VectorXd eq_duals;   // one per equality
    Eigen::VectorXd cone_duals; // linear inequalities first, then each cone in order
};

ConicSolution solve_conic(const ConicProgram &program, const SolverOptions &options = {});

} // namespace cfnoma
