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

import json

import numpy as np
import pytest

import cfnoma


def desk_instance(seed=11):
    cfg = cfnoma.SystemConfig.uniform(8, 6, 8, 3, 0.05, 10**12.7, 10**14.4 / 8)
    beta = cfnoma.large_scale_fading(cfg, seed, seed + 1)
    clusters = cfnoma.cluster_ues(beta, 3, cfnoma.InitMethod.improved)
    clusters, gamma = cfnoma.estimation_stats(beta, clusters, cfg)
    return cfg, beta, clusters, gamma


def test_version():
    assert cfnoma.__version__ == "0.1.0"


def test_topology_shapes_and_radius():
    cfg = cfnoma.SystemConfig.uniform(8, 6, 8, 3, 0.05, 1.0, 1.0)
    aps, ues = cfnoma.generate_topology(cfg, 3)
    assert aps.shape == (8, 2)
    assert ues.shape == (6, 2)
    assert np.all(np.hypot(ues[:, 0], ues[:, 1]) <= cfg.radius_km + 1e-12)


def test_clustering_partitions_every_ue():
    _, beta, clusters, gamma = desk_instance()
    assert beta.shape == (8, 6)
    assert gamma.shape == (8, 6)
    assert sorted(n for c in clusters for n in c) == list(range(6))
    assert -1.0 <= cfnoma.silhouette_score(beta, clusters) <= 1.0


def test_optimized_powers_beat_fixed_powers():
    cfg, beta, clusters, _ = desk_instance()
    rho_fixed = cfnoma.fixed_pa_cf(beta, clusters, cfg)
    fixed = cfnoma.sum_se_cf(beta, clusters, cfg, rho_fixed)
    assert fixed == pytest.approx(sum(cfnoma.user_se_cf(beta, clusters, cfg, rho_fixed)), rel=1e-12)
    res = cfnoma.ia_maximize_cf(beta, clusters, cfg)
    assert res["sse"] >= fixed
    hist = res["objective_history"]
    assert all(b >= a - 1e-6 for a, b in zip(hist, hist[1:]))
    assert np.all(res["rho"].sum(axis=1) <= np.array(cfg.dl_power_budget) * (1 + 1e-9))


def test_sweep_is_reproducible():
    text = json.dumps({"M": 6, "N": 6, "K": 8, "L": 3, "P_total_dbm": 40, "num_topologies": 2,
                       "algorithms": ["improved", "random"]})
    a = cfnoma.run_sweep(text, 1)
    b = cfnoma.run_sweep(a[2], 2)
    assert a[0] == b[0]
    assert a[3] == 0
    assert len(a[0].strip().splitlines()) == 1 + 2 * 2


def test_bad_config_raises_value_error():
    with pytest.raises(ValueError, match="^N:"):
        cfnoma.parse_config_json('{"M": 8, "K": 8, "L": 3, "P_total_dbm": 40}')
