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
#include "cfnoma/sse.hpp"
#include "cfnoma/types.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace cfnoma
{

struct McOptions
{
    int realizations = 10000;
    std::uint64_t seed = 1;
    int threads = 1;
    double max_condition = 1e12;
};

// Empirical counterpart of the closed forms, from explicit channel draws,
// pilot transmission, MMSE estimation and the partial zero-forcing precoder.
struct McReport
{
    std::vector<SinrBreakdown> closed_form; // own decoding, per UE
    std::vector<SinrBreakdown> empirical;
    std::vector<double> se_closed_form;
    std::vector<double> se_empirical;
    std::array<double, 5> max_term_error{}; // DS, BU, ICI, RICI, UI (relative)
    double max_se_error = 0.0;
    double max_zf_leak = 0.0;               // max |estimate^H w| across other clusters
    int resampled = 0;
    int realizations = 0;

    bool within(double tol) const;
};

McReport mc_verify(const SystemConfig &config, const Eigen::MatrixXd &beta, const Clustering &clustering,
                   const Eigen::MatrixXd &rho, const McOptions &options = {});

double relative_error(double empirical, double reference);

} // namespace cfnoma
