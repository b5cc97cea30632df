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

#include "cfnoma/conic.hpp"
#include "cfnoma/rng.hpp"
#include "cfnoma/types.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <random>

using namespace cfnoma;

namespace
{
AffineExpr var(int i, double c = 1.0, double k = 0.0)
{
    AffineExpr e;
    e.add(i, c);
    e.constant = k;
    return e;
}

// Brute-force LP optimum over all vertices defined by n active constraints.
double lp_vertex_optimum(const Eigen::MatrixXd &A, const Eigen::VectorXd &b, const Eigen::VectorXd &c)
{
    const int m = int(A.rows()), n = int(A.cols());
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> pick(static_cast<size_t>(n));
    std::function<void(int, int)> rec = [&](int start, int depth) {
        if (depth == n)
        {
            Eigen::MatrixXd S(n, n);
            Eigen::VectorXd r(n);
            for (int i = 0; i < n; ++i)
            {
                S.row(i) = A.row(pick[size_t(i)]);
                r(i) = b(pick[size_t(i)]);
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
            if (lu.rank() < n)
                return;
            Eigen::VectorXd x = lu.solve(r);
            if (((A * x - b).array() <= 1e-9).all())
                best = std::min(best, c.dot(x));
            return;
        }
        for (int i = start; i < m; ++i)
        {
            pick[size_t(depth)] = i;
            rec(i + 1, depth + 1);
        }
    };
    rec(0, 0);
    return best;
}
} // namespace

TEST_CASE("conic: simple LP")
{
    ConicProgram p;
    int x = p.add_variable("x", 1.0), y = p.add_variable("y", 1.0);
    p.add_le(var(x, -1.0, 1.0), "x>=1");
    p.add_le(var(y, -1.0, 2.0), "y>=2");
    auto s = solve_conic(p);
    REQUIRE(s.status == SolveStatus::optimal);
    CHECK(s.objective == doctest::Approx(3.0).epsilon(1e-7));
    CHECK(s.x(x) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(s.x(y) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("conic: cone with equality pins the norm")
{
    ConicProgram p;
    int x1 = p.add_variable("x1", 1.0), x2 = p.add_variable("x2"), x3 = p.add_variable("x3");
    p.add_soc({var(x2), var(x3)}, var(x1), "cone");
    p.add_eq(var(x2, 1.0, -3.0), "x2=3");
    auto s = solve_conic(p);
    REQUIRE(s.status == SolveStatus::optimal);
    CHECK(s.x(x1) == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(std::abs(s.x(x3)) < 1e-4);
    CHECK(s.duality_gap <= 1e-8);
}

TEST_CASE("conic: boundary optimum of a scalar cone")
{
    // minimize -x subject to x^2 <= 4
    ConicProgram p;
    int x = p.add_variable("x", -1.0);
    AffineExpr two;
    two.constant = 2.0;
    p.add_soc({var(x)}, two, "x^2<=4");
    auto s = solve_conic(p);
    REQUIRE(s.status == SolveStatus::optimal);
    CHECK(s.x(x) == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(s.primal_residual <= 1e-8);
    CHECK(s.dual_residual <= 1e-8);
    CHECK(s.complementarity <= 1e-7);
}

TEST_CASE("conic: linear objective over a ball")
{
    Rng rng(7);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial)
    {
        const int n = 2 + trial % 5;
        Eigen::VectorXd a(n), c(n);
        for (int i = 0; i < n; ++i)
        {
            a(i) = g(rng);
            c(i) = g(rng);
        }
        const double r = 0.5 + std::abs(g(rng));
        ConicProgram p;
        for (int i = 0; i < n; ++i)
            p.add_variable("x" + std::to_string(i), c(i));
        std::vector<AffineExpr> lhs;
        for (int i = 0; i < n; ++i)
            lhs.push_back(var(i, 1.0, -a(i)));
        AffineExpr rhs;
        rhs.constant = r;
        p.add_soc(lhs, rhs, "ball");
        auto s = solve_conic(p);
        REQUIRE(s.status == SolveStatus::optimal);
        const double expect = c.dot(a) - r * c.norm();
        CHECK(s.objective == doctest::Approx(expect).epsilon(1e-7));
        Eigen::VectorXd xs = a - r * c / c.norm();
        CHECK((s.x - xs).norm() < 1e-4 * (1.0 + xs.norm()));
        CHECK(s.complementarity <= 1e-7);
        CHECK(p.max_violation(s.x) <= 1e-7);
    }
}

TEST_CASE("conic: hyperbolic constraint")
{
    // minimize t subject to t >= x^2 written as ||(x, (t-1)/2)|| <= (t+1)/2, x = 2
    ConicProgram p;
    int t = p.add_variable("t", 1.0), x = p.add_variable("x");
    p.add_soc({var(x), var(t, 0.5, -0.5)}, var(t, 0.5, 0.5), "hyp");
    p.add_eq(var(x, 1.0, -2.0), "x=2");
    auto s = solve_conic(p);
    REQUIRE(s.status == SolveStatus::optimal);
    CHECK(s.objective == doctest::Approx(4.0).epsilon(1e-7));
}

TEST_CASE("conic: random LPs match vertex enumeration")
{
    Rng rng(11);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    for (int trial = 0; trial < 30; ++trial)
    {
        const int n = 2 + trial % 3, m = n + 2 + trial % 4;
        Eigen::MatrixXd A(m + 2 * n, n);
        Eigen::VectorXd b(m + 2 * n), c(n);
        for (int i = 0; i < m; ++i)
        {
            for (int j = 0; j < n; ++j)
                A(i, j) = g(rng);
            b(i) = u(rng);
        }
        // bounding box keeps the problem bounded
        A.bottomRows(2 * n).setZero();
        for (int j = 0; j < n; ++j)
        {
            A(m + 2 * j, j) = 1.0;
            A(m + 2 * j + 1, j) = -1.0;
            b(m + 2 * j) = 5.0;
            b(m + 2 * j + 1) = 5.0;
        }
        for (int j = 0; j < n; ++j)
            c(j) = g(rng);
        ConicProgram p;
        for (int j = 0; j < n; ++j)
            p.add_variable("x" + std::to_string(j), c(j));
        for (int i = 0; i < A.rows(); ++i)
        {
            AffineExpr e;
            for (int j = 0; j < n; ++j)
                e.add(j, A(i, j));
            e.constant = -b(i);
            p.add_le(e, "row");
        }
        auto s = solve_conic(p);
        REQUIRE(s.status == SolveStatus::optimal);
        const double expect = lp_vertex_optimum(A, b, c);
        CHECK(s.objective == doctest::Approx(expect).epsilon(1e-6));
        CHECK(p.max_violation(s.x) < 1e-6);
    }
}

TEST_CASE("conic: infeasible program is detected")
{
    ConicProgram p;
    int x = p.add_variable("x", 1.0);
    p.add_le(var(x, 1.0, 1.0), "x<=-1");
    p.add_le(var(x, -1.0, 1.0), "x>=1");
    CHECK(solve_conic(p).status == SolveStatus::infeasible);
}

TEST_CASE("conic: infeasible cone program is detected")
{
    ConicProgram p;
    int x = p.add_variable("x"), y = p.add_variable("y");
    AffineExpr one;
    one.constant = 1.0;
    p.add_soc({var(x), var(y)}, one, "unit ball");
    p.add_eq(var(x, 1.0, -2.0), "x=2");
    CHECK(solve_conic(p).status == SolveStatus::infeasible);
}

TEST_CASE("conic: unbounded program is detected")
{
    ConicProgram p;
    int x = p.add_variable("x", -1.0);
    p.add_le(var(x, -1.0), "x>=0");
    CHECK(solve_conic(p).status == SolveStatus::unbounded);
}

TEST_CASE("conic: malformed programs are rejected")
{
    ConicProgram p;
    p.add_variable("x", 1.0);
    p.add_le(var(3), "bad index");
    CHECK_THROWS_AS(p.validate(), InvalidInput);
    CHECK_THROWS_AS(solve_conic(p), InvalidInput);

    ConicProgram q;
    q.add_variable("x", std::numeric_limits<double>::quiet_NaN());
    CHECK_THROWS_AS(q.validate(), InvalidInput);
}

TEST_CASE("conic: dump is deterministic")
{
    ConicProgram p;
    int x = p.add_variable("x", 1.0);
    p.add_le(var(x, -1.0, 1.0), "x>=1");
    CHECK(p.dump() == p.dump());
    CHECK(p.dump().rfind("conic-program 1", 0) == 0);
}
