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
#include "cfnoma/core_model.hpp"
#include "cfnoma/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <limits>
#include <numeric>

namespace cfnoma
{

namespace
{
void check_features(const Eigen::MatrixXd &f, int L)
{
    if (f.cols() == 0)
        throw InvalidInput("no UEs to cluster");
    if (!f.allFinite())
        throw InvalidInput("features must be finite");
    if (L < 1 || L > f.cols())
        throw InvalidInput("number of clusters must lie in [1, N]");
}

std::vector<int> assign_nearest(const Eigen::MatrixXd &f, const Eigen::MatrixXd &C, std::vector<double> &dist)
{
    const Eigen::Index N = f.cols(), L = C.cols();
    std::vector<int> a(size_t(N), 0);
    dist.assign(size_t(N), 0.0);
    for (Eigen::Index n = 0; n < N; ++n)
    {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index l = 0; l < L; ++l)
        {
            const double d = (f.col(n) - C.col(l)).squaredNorm();
            if (d < best)
            {
                best = d;
                a[size_t(n)] = int(l);
            }
        }
        dist[size_t(n)] = best;
    }
    return a;
}

Eigen::MatrixXd means(const Eigen::MatrixXd &f, const std::vector<int> &a, int L)
{
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(f.rows(), L);
    std::vector<int> cnt(size_t(L), 0);
    for (size_t n = 0; n < a.size(); ++n)
    {
        C.col(a[n]) += f.col(Eigen::Index(n));
        ++cnt[size_t(a[n])];
    }
    for (int l = 0; l < L; ++l)
        if (cnt[size_t(l)] > 0)
            C.col(l) /= double(cnt[size_t(l)]);
    return C;
}

double wcss(const Eigen::MatrixXd &f, const std::vector<int> &a, const Eigen::MatrixXd &C)
{
    double s = 0.0;
    for (size_t n = 0; n < a.size(); ++n)
        s += (f.col(Eigen::Index(n)) - C.col(a[n])).squaredNorm();
    return s;
}
} // namespace

std::vector<int> assign_to_nearest(const Eigen::MatrixXd &features, const Eigen::MatrixXd &centroids)
{
    if (centroids.cols() == 0)
        throw InvalidInput("no centroids");
    if (centroids.rows() != features.rows())
        throw InvalidInput("centroid dimension mismatch");
    std::vector<double> dist;
    return assign_nearest(features, centroids, dist);
}

Eigen::MatrixXd update_centroids(const Eigen::MatrixXd &features, const std::vector<int> &assignment, int L)
{
    if (Eigen::Index(assignment.size()) != features.cols())
        throw InvalidInput("assignment length mismatch");
    std::vector<int> cnt(size_t(std::max(L, 0)), 0);
    for (int a : assignment)
    {
        if (a < 0 || a >= L)
            throw InvalidInput("assignment index out of range");
        ++cnt[size_t(a)];
    }
    for (int c : cnt)
        if (c == 0)
            throw EmptyCluster("cluster has no members");
    return means(features, assignment, L);
}

std::vector<int> random_init(const Eigen::MatrixXd &features, int L, std::uint64_t seed)
{
    check_features(features, L);
    std::vector<int> idx(size_t(features.cols()));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    for (int i = 0; i < L; ++i)
    {
        std::uniform_int_distribution<int> u(i, int(idx.size()) - 1);
        std::swap(idx[size_t(i)], idx[size_t(u(rng))]);
    }
    idx.resize(size_t(L));
    return idx;
}

std::vector<int> kmeanspp_init(const Eigen::MatrixXd &features, int L, std::uint64_t seed)
{
    check_features(features, L);
    const Eigen::Index N = features.cols();
    Rng rng(seed);
    std::uniform_int_distribution<Eigen::Index> u(0, N - 1);
    std::vector<int> chosen{int(u(rng))};
    std::vector<double> dmin(size_t(N), std::numeric_limits<double>::infinity());
    std::vector<char> taken(size_t(N), 0);
    taken[size_t(chosen[0])] = 1;
    while (int(chosen.size()) < L)
    {
        const int last = chosen.back();
        int best = -1;
        double best_d = -1.0;
        for (Eigen::Index n = 0; n < N; ++n)
        {
            dmin[size_t(n)] = std::min(dmin[size_t(n)], (features.col(n) - features.col(last)).squaredNorm());
            if (!taken[size_t(n)] && dmin[size_t(n)] > best_d)
            {
                best_d = dmin[size_t(n)];
                best = int(n);
            }
        }
        taken[size_t(best)] = 1;
        chosen.push_back(best);
    }
    return chosen;
}

std::vector<int> improved_kmeanspp_init(const Eigen::MatrixXd &beta, int L)
{
    check_features(beta, L);
    const Eigen::Index N = beta.cols();
    std::vector<int> votes(size_t(N), 0);
    for (Eigen::Index m = 0; m < beta.rows(); ++m)
    {
        Eigen::Index arg = 0;
        for (Eigen::Index n = 1; n < N; ++n)
            if (beta(m, n) > beta(m, arg))
                arg = n;
        ++votes[size_t(arg)];
    }
    std::vector<int> order(static_cast<size_t>(N));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return votes[size_t(a)] > votes[size_t(b)]; });
    order.resize(size_t(L));
    return order;
}

Eigen::MatrixXd centroids_from_indices(const Eigen::MatrixXd &features, const std::vector<int> &indices)
{
    Eigen::MatrixXd C(features.rows(), Eigen::Index(indices.size()));
    for (size_t l = 0; l < indices.size(); ++l)
        C.col(Eigen::Index(l)) = features.col(indices[l]);
    return C;
}

KMeansResult kmeans(const Eigen::MatrixXd &features, const Eigen::MatrixXd &initial_centroids, int max_iters)
{
    const int L = int(initial_centroids.cols());
    check_features(features, L);
    if (initial_centroids.rows() != features.rows())
        throw InvalidInput("centroid dimension does not match features");
    if (max_iters < 1)
        throw InvalidInput("max_iters must be positive");

    const Eigen::Index N = features.cols();
    KMeansResult res;
    Eigen::MatrixXd C = initial_centroids;
    std::vector<int> assign;
    std::vector<double> dist;
    for (int it = 0; it < max_iters; ++it)
    {
        std::vector<int> next = assign_nearest(features, C, dist);
        res.distance_evals += std::uint64_t(N) * std::uint64_t(L);

        std::vector<int> cnt(size_t(L), 0);
        for (int l : next)
            ++cnt[size_t(l)];
        for (int l = 0; l < L; ++l)
        {
            if (cnt[size_t(l)] > 0)
                continue;
            int far = -1;
            for (Eigen::Index n = 0; n < N; ++n)
                if (cnt[size_t(next[size_t(n)])] > 1 && (far < 0 || dist[size_t(n)] > dist[size_t(far)]))
                    far = int(n);
            if (far < 0)
                throw EmptyCluster("cannot reseed an empty cluster");
            --cnt[size_t(next[size_t(far)])];
            next[size_t(far)] = l;
            dist[size_t(far)] = 0.0;
            cnt[size_t(l)] = 1;
        }

        res.iterations = it + 1;
        if (next == assign)
        {
            res.converged = true;
            break;
        }
        assign = std::move(next);
        C = means(features, assign, L);
        res.objective.push_back(wcss(features, assign, C));
    }
    res.clustering = Clustering::from_assignment(assign, L);
    res.clustering.centroids = C;
    return res;
}

KMeansResult cluster_ues(const Eigen::MatrixXd &features, int L, InitMethod init, std::uint64_t seed, int max_iters)
{
    std::vector<int> idx;
    switch (init)
    {
    case InitMethod::random:
        idx = random_init(features, L, seed);
        break;
    case InitMethod::kmeanspp:
        idx = kmeanspp_init(features, L, seed);
        break;
    case InitMethod::improved:
        idx = improved_kmeanspp_init(features, L);
        break;
    }
    return kmeans(features, centroids_from_indices(features, idx), max_iters);
}

double within_cluster_ss(const Eigen::MatrixXd &features, const Clustering &clustering)
{
    double s = 0.0;
    for (const auto &c : clustering.clusters)
    {
        if (c.empty())
            continue;
        Eigen::VectorXd mu = Eigen::VectorXd::Zero(features.rows());
        for (int n : c)
            mu += features.col(n);
        mu /= double(c.size());
        for (int n : c)
            s += (features.col(n) - mu).squaredNorm();
    }
    return s;
}

double silhouette_score(const Eigen::MatrixXd &features, const Clustering &clustering)
{
    const int N = int(features.cols());
    clustering.validate(N);
    const auto a = clustering.assignment();
    const int L = clustering.num_clusters();
    if (L < 2)
        throw InvalidInput("silhouette needs at least two clusters");

    Eigen::MatrixXd D(N, N);
    for (int i = 0; i < N; ++i)
        for (int j = i; j < N; ++j)
            D(i, j) = D(j, i) = (features.col(i) - features.col(j)).norm();

    double total = 0.0;
    for (int n = 0; n < N; ++n)
    {
        const int own = a[size_t(n)];
        if (clustering.clusters[size_t(own)].size() < 2)
            continue;
        std::vector<double> mean(size_t(L), 0.0);
        for (int j = 0; j < N; ++j)
            mean[size_t(a[size_t(j)])] += D(n, j);
        const double b = mean[size_t(own)] / double(clustering.clusters[size_t(own)].size() - 1);
        double c = std::numeric_limits<double>::infinity();
        for (int l = 0; l < L; ++l)
            if (l != own)
                c = std::min(c, mean[size_t(l)] / double(clustering.clusters[size_t(l)].size()));
        const double den = std::max(b, c);
        if (den > 0.0)
            total += (c - b) / den;
    }
    return total / double(N);
}

ClusterSelection select_num_clusters(const Eigen::MatrixXd &beta, int L_min, int L_max, int max_iters)
{
    const int N = int(beta.cols());
    if (L_min < 2 || L_max < L_min || L_max > N - 1)
        throw InvalidInput("cluster range must satisfy 2 <= L_min <= L_max <= N - 1");
    ClusterSelection sel;
    double best = -std::numeric_limits<double>::infinity();
    for (int L = L_min; L <= L_max; ++L)
    {
        auto km = cluster_ues(beta, L, InitMethod::improved, 0, max_iters);
        const double s = silhouette_score(beta, km.clustering);
        sel.candidates.push_back(L);
        sel.scores.push_back(s);
        if (s > best)
        {
            best = s;
            sel.best_L = L;
            sel.clustering = km.clustering;
        }
    }
    return sel;
}

Clustering baseline_pairing(const Eigen::MatrixXd &features, PairingRule rule, std::uint64_t seed)
{
    const int N = int(features.cols());
    if (N < 2)
        throw InvalidInput("pairing needs at least two UEs");
    Clustering c;
    if (rule == PairingRule::random)
    {
        std::vector<int> idx(static_cast<size_t>(N));
        std::iota(idx.begin(), idx.end(), 0);
        Rng rng(seed);
        std::shuffle(idx.begin(), idx.end(), rng);
        int i = 0;
        for (; N - i > 3 || N - i == 2; i += 2)
            c.clusters.push_back({idx[size_t(i)], idx[size_t(i + 1)]});
        if (i < N)
            c.clusters.push_back({idx[size_t(i)], idx[size_t(i + 1)], idx[size_t(i + 2)]});
    }
    else
    {
        std::vector<int> rest(static_cast<size_t>(N));
        std::iota(rest.begin(), rest.end(), 0);
        while (rest.size() > 3 || rest.size() == 2)
        {
            size_t bi = 0, bj = 1;
            double bd = (features.col(rest[0]) - features.col(rest[1])).squaredNorm();
            for (size_t i = 0; i < rest.size(); ++i)
                for (size_t j = i + 1; j < rest.size(); ++j)
                {
                    const double d = (features.col(rest[i]) - features.col(rest[j])).squaredNorm();
                    if (rule == PairingRule::near ? d < bd : d > bd)
                    {
                        bd = d;
                        bi = i;
                        bj = j;
                    }
                }
            c.clusters.push_back({rest[bi], rest[bj]});
            rest.erase(rest.begin() + std::ptrdiff_t(bj));
            rest.erase(rest.begin() + std::ptrdiff_t(bi));
        }
        if (!rest.empty())
            c.clusters.push_back(rest);
    }
    recompute_centroids(c, features);
    return c;
}

Clustering order_within_cluster(const Clustering &clustering, const Eigen::MatrixXd &gamma)
{
    clustering.validate(int(gamma.cols()));
    const Eigen::VectorXd norms = virtual_channel_norms(gamma);
    Clustering out = clustering;
    for (auto &members : out.clusters)
        std::sort(members.begin(), members.end(), [&](int a, int b) {
            if (norms(a) != norms(b))
                return norms(a) > norms(b);
            return a < b;
        });
    return out;
}

void recompute_centroids(Clustering &clustering, const Eigen::MatrixXd &features)
{
    clustering.centroids = Eigen::MatrixXd::Zero(features.rows(), clustering.num_clusters());
    for (int l = 0; l < clustering.num_clusters(); ++l)
    {
        const auto &c = clustering.clusters[size_t(l)];
        for (int n : c)
            clustering.centroids.col(l) += features.col(n);
        if (!c.empty())
            clustering.centroids.col(l) /= double(c.size());
    }
}

std::string clustering_to_json(const Clustering &clustering)
{
    nlohmann::ordered_json j;
    j["clusters"] = clustering.clusters;
    auto cents = nlohmann::ordered_json::array();
    for (Eigen::Index l = 0; l < clustering.centroids.cols(); ++l)
    {
        std::vector<double> v(clustering.centroids.col(l).data(), clustering.centroids.col(l).data() + clustering.centroids.rows());
        cents.push_back(v);
    }
    j["centroids"] = cents;
    return j.dump();
}

Clustering clustering_from_json(const std::string &text)
{
    Clustering c;
    try
    {
        const auto j = nlohmann::json::parse(text);
        c.clusters = j.at("clusters").get<std::vector<std::vector<int>>>();
        const auto cents = j.at("centroids").get<std::vector<std::vector<double>>>();
        const Eigen::Index dim = cents.empty() ? 0 : Eigen::Index(cents[0].size());
        c.centroids.resize(dim, Eigen::Index(cents.size()));
        for (size_t l = 0; l < cents.size(); ++l)
        {
            if (Eigen::Index(cents[l].size()) != dim)
                throw InvalidClustering("ragged centroid list");
            for (Eigen::Index k = 0; k < dim; ++k)
                c.centroids(k, Eigen::Index(l)) = cents[l][size_t(k)];
        }
    }
    catch (const nlohmann::json::exception &e)
    {
        throw InvalidClustering(std::string("malformed clustering JSON: ") + e.what());
    }
    return c;
}

} // namespace cfnoma
