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

#include "cfnoma/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace cfnoma
{

// Features are stored column-wise: one column per UE (an M-vector of large-scale coefficients).

enum class InitMethod
{
    random,         // L distinct UEs drawn uniformly
    kmeanspp,       // random first centroid, then farthest-first
    improved        // AP-vote centroids
};

struct KMeansResult
{
    Clustering clustering;
    int iterations = 0;
    bool converged = false;
    std::vector<double> objective;  // within-cluster sum of squares after each iteration
    std::uint64_t distance_evals = 0;
};

// Nearest centroid per UE; ties go to the lowest cluster index
std::vector<int> assign_to_nearest(const Eigen::MatrixXd &features, const Eigen::MatrixXd &centroids);
// Member means per cluster; throws EmptyCluster if a cluster has no members
Eigen::MatrixXd update_centroids(const Eigen::MatrixXd &features, const std::vector<int> &assignment, int L);

// Column indices of the initial centroids
std::vector<int> random_init(const Eigen::MatrixXd &features, int L, std::uint64_t seed);
std::vector<int> kmeanspp_init(const Eigen::MatrixXd &features, int L, std::uint64_t seed);
std::vector<int> improved_kmeanspp_init(const Eigen::MatrixXd &beta, int L);

Eigen::MatrixXd centroids_from_indices(const Eigen::MatrixXd &features, const std::vector<int> &indices);

// Lloyd iterations from the given centroids (features x L).
// Ties go to the lowest cluster index; an empty cluster is reseeded with the UE farthest from its centroid.
KMeansResult kmeans(const Eigen::MatrixXd &features, const Eigen::MatrixXd &initial_centroids, int max_iters = 100);

KMeansResult cluster_ues(const Eigen::MatrixXd &features, int L, InitMethod init, std::uint64_t seed = 0, int max_iters = 100);

double within_cluster_ss(const Eigen::MatrixXd &features, const Clustering &clustering);

// Mean silhouette coefficient; singletons score 0
double silhouette_score(const Eigen::MatrixXd &features, const Clustering &clustering);

struct ClusterSelection
{
    int best_L = 0;
    std::vector<int> candidates;
    std::vector<double> scores;
    Clustering clustering;
};

// Largest mean silhouette over L in [L_min, L_max] with the improved init; ties go to the smaller L
ClusterSelection select_num_clusters(const Eigen::MatrixXd &beta, int L_min, int L_max, int max_iters = 100);

enum class PairingRule
{
    near,
    far,
    random
};

// Two-UE clusters; with odd N the last three remaining UEs form one cluster
Clustering baseline_pairing(const Eigen::MatrixXd &features, PairingRule rule, std::uint64_t seed = 0);

// Decode order inside each cluster by descending virtual-channel norm, ties by UE index
Clustering order_within_cluster(const Clustering &clustering, const Eigen::MatrixXd &gamma);

void recompute_centroids(Clustering &clustering, const Eigen::MatrixXd &features);

std::string clustering_to_json(const Clustering &clustering);
Clustering clustering_from_json(const std::string &text);

} // namespace cfnoma
