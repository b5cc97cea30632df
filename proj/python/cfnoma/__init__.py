# SPDX-License-Identifier: Apache-2.0
#
# cfnoma: cell-free massive MIMO-NOMA simulation and power allocation
# Copyright (C) 2026 The cfnoma Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
# ------------------------------------------------------------------------

"""Cell-free massive MIMO-NOMA simulation: clustering, spectral efficiency and power allocation."""

from ._core import (
    InitMethod,
    SystemConfig,
    __version__,
    cluster_ues,
    estimation_stats,
    fixed_pa_cf,
    generate_topology,
    ia_maximize_cf,
    large_scale_fading,
    parse_config_json,
    run_sweep,
    select_num_clusters,
    silhouette_score,
    sum_se_cf,
    user_se_cf,
)

__all__ = [
    "InitMethod",
    "SystemConfig",
    "__version__",
    "cluster_ues",
    "estimation_stats",
    "fixed_pa_cf",
    "generate_topology",
    "ia_maximize_cf",
    "large_scale_fading",
    "parse_config_json",
    "run_sweep",
    "select_num_clusters",
    "silhouette_score",
    "sum_se_cf",
    "user_se_cf",
]
