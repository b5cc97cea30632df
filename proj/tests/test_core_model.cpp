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
#include "cfnoma/types.hpp"

#include <doctest.h>

#include <cmath>

using namespace cfnoma;

namespace
{
SystemConfig small_config(int M, int N, int L, int K = 8)
{
    auto c = SystemConfig::uniform(M, N, K, L, 0.05, 1.0, 1.0);
    return c;
}
} // namespace

TEST_CASE("path loss reference values")
{
    CHECK(path_loss_db(1.0) == doctest::Approx(-140.7).epsilon(1e-12));
    CHECK(path_loss_db(0.05) == doctest::Approx(-95.164).epsilon(1e-4));
    CHECK(path_loss_db(0.005) == doctest::Approx(-81.185).epsilon(1e-4));
    CHECK_THROWS_AS(path_loss_db(0.0), InvalidInput);
    CHECK_THROWS_AS(path_loss_db(-1.0), InvalidInput);
}

TEST_CASE("path loss is continuous at the knees")
{
    for (double dj : {0.01, 0.05})
    {
        const double eps = 1e-12;
        CHECK(std::abs(path_loss_db(dj - eps) - path_loss_db(dj + eps)) < 1e-6);
        CHECK(std::abs(path_loss_db(dj) - path_loss_db(dj + eps)) < 1e-6);
    }
}

TEST_CASE("topology generation")
{
    auto c = small_config(32, 10, 2);
    auto t1 = generate_topology(c, 123), t2 = generate_topology(c, 123);
    REQUIRE(t1.aps.size() == 32);
    REQUIRE(t1.ues.size() == 10);
    for (size_t i = 0; i < t1.aps.size(); ++i)
    {
        CHECK(t1.aps[i].x == t2.aps[i].x);
        CHECK(t1.aps[i].y == t2.aps[i].y);
        CHECK(std::hypot(t1.aps[i].x, t1.aps[i].y) <= 1.0);
    }
    for (const auto &u : t1.ues)
        CHECK(std::hypot(u.x, u.y) <= 1.0);

    auto e = small_config(0, 3, 1);
    CHECK(generate_topology(e, 1).aps.empty());

    auto other = generate_topology(c, 124);
    CHECK(other.aps[0].x != t1.aps[0].x);
}

TEST_CASE("large-scale fading is deterministic and positive")
{
    auto c = small_config(8, 6, 3);
    auto t = generate_topology(c, 5);
    auto b1 = large_scale_fading(t, c, 9), b2 = large_scale_fading(t, c, 9);
    CHECK(b1 == b2);
    CHECK((b1.array() > 0.0).all());
    c.shadow_std_db = 0.0;
    auto b0 = large_scale_fading(t, c, 9);
    const double d = std::max(distance_km(t.aps[0], t.ues[0]), c.min_distance_km);
    CHECK(b0(0, 0) == doctest::Approx(std::pow(10.0, path_loss_db(d) / 10.0)).epsilon(1e-12));
}

TEST_CASE("estimation statistics oracles")
{
    SUBCASE("singleton cluster")
    {
        auto c = small_config(1, 1, 1, 2);
        Clustering cl;
        cl.clusters = {{0}};
        Eigen::MatrixXd beta(1, 1);
        beta << 1.0;
        auto f = estimation_stats(beta, cl, c);
        CHECK(f.gamma(0, 0) == doctest::Approx(0.5));
        CHECK(f.upsilon(0, 0) == doctest::Approx(0.5));
    }
    SUBCASE("two UEs sharing a pilot")
    {
        auto c = small_config(1, 2, 1, 4);
        c.pilot_len = 2;
        Clustering cl;
        cl.clusters = {{0, 1}};
        Eigen::MatrixXd beta = Eigen::MatrixXd::Ones(1, 2);
        auto f = estimation_stats(beta, cl, c);
        CHECK(f.gamma(0, 0) == doctest::Approx(0.4));
        CHECK(f.gamma(0, 1) == doctest::Approx(0.4));
    }
    SUBCASE("missing UE is rejected")
    {
        auto c = small_config(1, 2, 1, 4);
        Clustering cl;
        cl.clusters = {{0}};
        Eigen::MatrixXd beta = Eigen::MatrixXd::Ones(1, 2);
        CHECK_THROWS_AS(estimation_stats(beta, cl, c), InvalidClustering);
    }
}

TEST_CASE("estimation statistics invariants on random instances")
{
    for (std::uint64_t seed = 0; seed < 20; ++seed)
    {
        auto c = small_config(8, 6, 3);
        c.ul_pilot_power.assign(6, std::pow(10.0, 12.7));
        auto t = generate_topology(c, seed);
        auto beta = large_scale_fading(t, c, seed + 100);
        Clustering cl;
        cl.clusters = {{0, 3}, {1, 4}, {2, 5}};
        auto f = estimation_stats(beta, cl, c);
        CHECK((f.gamma.array() > 0.0).all());
        CHECK((f.gamma.array() < f.beta.array()).all());
        for (const auto &mem : cl.clusters)
            for (int m = 0; m < 8; ++m)
            {
                const int a = mem[0], b = mem[1];
                const double lhs = f.upsilon(m, a) * std::sqrt(c.ul_pilot_power[size_t(b)]) * beta(m, b);
                const double rhs = f.upsilon(m, b) * std::sqrt(c.ul_pilot_power[size_t(a)]) * beta(m, a);
                CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(rhs));
            }
        auto f2 = estimation_stats(beta, cl, c);
        CHECK(f.gamma == f2.gamma);
    }
}

TEST_CASE("config validation")
{
    auto c = small_config(4, 4, 2);
    CHECK_NOTHROW(c.validate());
    c.num_antennas = 2;
    CHECK_THROWS_AS(c.validate(), InvalidConfig);
    c = small_config(4, 4, 2);
    c.sic_coeff[0] = 1.5;
    CHECK_THROWS_AS(c.validate(), InvalidConfig);
    c = small_config(4, 4, 2);
    c.pilot_len = 1;
    CHECK_THROWS_AS(c.validate(), InvalidConfig);
    auto co = collocated_config(small_config(4, 4, 2));
    CHECK(co.num_aps == 1);
    CHECK(co.num_antennas == 32);
    CHECK(co.dl_power_budget[0] == doctest::Approx(4.0));
}
