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

#include "cfnoma/clustering.hpp"
#include "cfnoma/rng.hpp"
#include "cfnoma/types.hpp"

#include <doctest.h>

#include <algorithm>
#include <limits>
#include <random>
#include <set>

using namespace cfnoma;

namespace
{
Eigen::MatrixXd line(std::initializer_list<double> v)
{
    Eigen::MatrixXd f(1, Eigen::Index(v.size()));
    Eigen::Index i = 0;
    for (double x : v)
        f(0, i++) = x;
    return f;
}

std::set<std::set<int>> as_sets(const Clustering &c)
{
    std::set<std::set<int>> s;
    for (const auto &m : c.clusters)
        s.insert(std::set<int>(m.begin(), m.end()));
    return s;
}

Eigen::MatrixXd random_features(int dim, int N, std::uint64_t seed)
{
    Rng rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd f(dim, N);
    for (int n = 0; n < N; ++n)
        for (int d = 0; d < dim; ++d)
            f(d, n) = u(rng);
    return f;
}

double brute_force_two_partition(const Eigen::MatrixXd &f)
{
    const int N = int(f.cols());
    double best = std::numeric_limits<double>::infinity();
    for (int mask = 1; mask < (1 << N) - 1; ++mask)
    {
        std::vector<int> a(static_cast<size_t>(N));
        for (int n = 0; n < N; ++n)
            a[size_t(n)] = (mask >> n) & 1;
        best = std::min(best, within_cluster_ss(f, Clustering::from_assignment(a, 2)));
    }
    return best;
}
} // namespace

TEST_CASE("assign to nearest")
{
    auto f = line({0.0, 1.0, 5.0});
    CHECK(assign_to_nearest(f, line({3.0})) == std::vector<int>{0, 0, 0});
    CHECK(assign_to_nearest(f, line({9.0, 9.0, 5.0}))[2] == 2);
    CHECK(assign_to_nearest(line({1.0}), line({0.0, 2.0}))[0] == 0);
    CHECK_THROWS_AS(assign_to_nearest(f, Eigen::MatrixXd(1, 0)), InvalidInput);
}

TEST_CASE("update centroids")
{
    Eigen::MatrixXd f(2, 2);
    f << 0.0, 2.0, 0.0, 2.0;
    auto c = update_centroids(f, {0, 0}, 1);
    CHECK(c(0, 0) == doctest::Approx(1.0));
    CHECK(c(1, 0) == doctest::Approx(1.0));
    Eigen::MatrixXd g(2, 2);
    g << 2.0, 0.0, 2.0, 0.0;
    CHECK(update_centroids(g, {0, 0}, 1) == c);
    CHECK(update_centroids(line({4.0}), {0}, 1)(0, 0) == 4.0);
    CHECK_THROWS_AS(update_centroids(f, {0, 0}, 2), EmptyCluster);
}

TEST_CASE("kmeans on small 1-D data")
{
    auto f = line({1.0, 2.0, 10.0, 11.0});
    auto r = kmeans(f, line({1.0, 2.0}));
    CHECK(as_sets(r.clustering) == std::set<std::set<int>>{{0, 1}, {2, 3}});
    std::vector<double> c = {r.clustering.centroids(0, 0), r.clustering.centroids(0, 1)};
    std::sort(c.begin(), c.end());
    CHECK(c[0] == doctest::Approx(1.5));
    CHECK(c[1] == doctest::Approx(10.5));

    auto all = kmeans(f, f);
    CHECK(within_cluster_ss(f, all.clustering) == 0.0);

    auto one = kmeans(f, line({0.0}));
    CHECK(one.clustering.centroids(0, 0) == doctest::Approx(6.0));

    CHECK_THROWS_AS(kmeans(f, line({1, 2, 3, 4, 5})), InvalidInput);
}

TEST_CASE("Lloyd objective is non-increasing and partitions are valid")
{
    for (std::uint64_t s = 0; s < 30; ++s)
    {
        auto f = random_features(4, 20, s);
        for (auto init : {InitMethod::random, InitMethod::kmeanspp, InitMethod::improved})
        {
            auto r = cluster_ues(f, 4, init, s);
            CHECK_NOTHROW(r.clustering.validate(20));
            CHECK(r.clustering.num_clusters() == 4);
            for (size_t i = 1; i < r.objective.size(); ++i)
                CHECK(r.objective[i] <= r.objective[i - 1] * (1.0 + 1e-9));
        }
    }
}

TEST_CASE("kmeans never beats the brute-force optimum")
{
    for (std::uint64_t s = 0; s < 20; ++s)
    {
        auto f = random_features(2, 7, s);
        const double best = brute_force_two_partition(f);
        auto r = cluster_ues(f, 2, InitMethod::improved);
        CHECK(within_cluster_ss(f, r.clustering) >= best - 1e-12);
    }
}

TEST_CASE("farthest-first seeding")
{
    auto f = line({0.0, 1.0, 10.0});
    for (std::uint64_t s = 0; s < 50; ++s)
    {
        auto idx = kmeanspp_init(f, 2, s);
        if (idx[0] == 0)
            CHECK(idx[1] == 2);
        CHECK(idx[0] != idx[1]);
    }
    CHECK(kmeanspp_init(f, 1, 3).size() == 1);

    // spread beats most random subsets
    auto g = random_features(2, 40, 99);
    auto min_pair = [&](const std::vector<int> &idx) {
        double m = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < idx.size(); ++i)
            for (size_t j = i + 1; j < idx.size(); ++j)
                m = std::min(m, (g.col(idx[i]) - g.col(idx[j])).norm());
        return m;
    };
    const double pp = min_pair(kmeanspp_init(g, 5, 1));
    int beaten = 0;
    for (std::uint64_t s = 0; s < 200; ++s)
        beaten += pp >= min_pair(random_init(g, 5, s + 1000)) ? 1 : 0;
    CHECK(beaten >= 180);
}

TEST_CASE("improved seeding counts AP votes")
{
    Eigen::MatrixXd b(2, 3);
    b << 3, 1, 1, 2, 1, 1;
    CHECK(improved_kmeanspp_init(b, 1) == std::vector<int>{0});
    CHECK(improved_kmeanspp_init(b, 3) == std::vector<int>{0, 1, 2});
    CHECK(improved_kmeanspp_init(b, 2) == improved_kmeanspp_init(b, 2));
}

TEST_CASE("silhouette")
{
    Eigen::MatrixXd f(1, 4);
    f << 0, 0, 5, 5;
    Clustering good = Clustering::from_assignment({0, 0, 1, 1}, 2);
    CHECK(silhouette_score(f, good) == doctest::Approx(1.0));
    Clustering bad = Clustering::from_assignment({0, 1, 0, 1}, 2);
    CHECK(silhouette_score(f, bad) < 0.0);
    CHECK_THROWS_AS(silhouette_score(f, Clustering::from_assignment({0, 0, 0, 0}, 1)), InvalidInput);
    // UE 1 at 1 with own-cluster mean distance 1 and other-cluster mean distance 1
    Eigen::MatrixXd g(1, 3);
    g << 0, 1, 2;
    Clustering c = Clustering::from_assignment({0, 0, 1}, 2);
    const double s = silhouette_score(g, c);
    CHECK(s >= -1.0);
    CHECK(s <= 1.0);
    // coefficients: UE0 (2-1)/2=0.5, UE1 0, UE2 singleton 0
    CHECK(s == doctest::Approx(0.5 / 3.0));
}

TEST_CASE("cluster count selection")
{
    auto f = random_features(3, 12, 4);
    auto sel = select_num_clusters(f, 2, 2);
    CHECK(sel.best_L == 2);
    CHECK_THROWS_AS(select_num_clusters(f, 3, 2), InvalidInput);
    CHECK_THROWS_AS(select_num_clusters(f, 1, 5), InvalidInput);
    CHECK_THROWS_AS(select_num_clusters(f, 2, 12), InvalidInput);
}

TEST_CASE("pairing baselines")
{
    auto f = line({0.0, 1.0, 10.0, 11.0});
    CHECK(as_sets(baseline_pairing(f, PairingRule::near)) == std::set<std::set<int>>{{0, 1}, {2, 3}});
    auto far = baseline_pairing(f, PairingRule::far);
    CHECK(std::set<int>(far.clusters[0].begin(), far.clusters[0].end()) == std::set<int>{0, 3});
    for (auto rule : {PairingRule::near, PairingRule::far, PairingRule::random})
    {
        CHECK(baseline_pairing(line({0.0, 1.0}), rule, 3).num_clusters() == 1);
        auto odd = baseline_pairing(line({0, 1, 2, 3, 4}), rule, 7);
        CHECK_NOTHROW(odd.validate(5));
        CHECK(odd.num_clusters() == 2);
    }
}

TEST_CASE("decode order")
{
    Eigen::MatrixXd gamma(1, 3);
    gamma << 3.0, 5.0, 3.0;
    Clustering c;
    c.clusters = {{0, 1, 2}};
    CHECK(order_within_cluster(c, gamma).clusters[0] == std::vector<int>{1, 0, 2});
    Clustering s;
    s.clusters = {{2}, {0}, {1}};
    CHECK(order_within_cluster(s, gamma).clusters == s.clusters);
}

TEST_CASE("clustering JSON round trip")
{
    auto f = random_features(3, 6, 2);
    auto r = cluster_ues(f, 2, InitMethod::improved);
    auto back = clustering_from_json(clustering_to_json(r.clustering));
    CHECK(back.clusters == r.clustering.clusters);
    CHECK(back.centroids.isApprox(r.clustering.centroids));
    CHECK_THROWS(clustering_from_json("{\"clusters\": 3}"));
}
