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
#include "cfnoma/ia.hpp"
#include "cfnoma/scenario.hpp"
#include "cfnoma/sse.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace cfnoma;

namespace
{
Clustering clustering_of(const std::vector<std::vector<int>> &clusters)
{
    Clustering c;
    c.clusters = clusters;
    return c;
}
} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Cell-free massive MIMO-NOMA core";
    m.attr("__version__") = version();

    py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);

    py::enum_<InitMethod>(m, "InitMethod")
        .value("random", InitMethod::random)
        .value("kmeanspp", InitMethod::kmeanspp)
        .value("improved", InitMethod::improved);

    py::class_<SystemConfig>(m, "SystemConfig")
        .def_static("uniform", &SystemConfig::uniform, py::arg("M"), py::arg("N"), py::arg("K"), py::arg("L"),
                    py::arg("zeta"), py::arg("pilot_power"), py::arg("ap_budget"))
        .def_readwrite("num_aps", &SystemConfig::num_aps)
        .def_readwrite("num_ues", &SystemConfig::num_ues)
        .def_readwrite("num_antennas", &SystemConfig::num_antennas)
        .def_readwrite("num_clusters", &SystemConfig::num_clusters)
        .def_readwrite("pilot_len", &SystemConfig::pilot_len)
        .def_readwrite("coherence_len", &SystemConfig::coherence_len)
        .def_readwrite("sic_coeff", &SystemConfig::sic_coeff)
        .def_readwrite("ul_pilot_power", &SystemConfig::ul_pilot_power)
        .def_readwrite("dl_power_budget", &SystemConfig::dl_power_budget)
        .def_readwrite("radius_km", &SystemConfig::radius_km)
        .def_property_readonly("prelog", &SystemConfig::prelog)
        .def("validate", &SystemConfig::validate);

    // Topology as (aps, ues) arrays of shape (count, 2)
    m.def(
        "generate_topology",
        [](const SystemConfig &c, std::uint64_t seed) {
            const Topology t = generate_topology(c, seed);
            auto pts = [](const std::vector<Point> &p) {
                Eigen::MatrixXd a(Eigen::Index(p.size()), 2);
                for (size_t i = 0; i < p.size(); ++i)
                    a.row(Eigen::Index(i)) << p[i].x, p[i].y;
                return a;
            };
            return py::make_tuple(pts(t.aps), pts(t.ues));
        },
        py::arg("config"), py::arg("seed"));

    m.def(
        "large_scale_fading",
        [](const SystemConfig &c, std::uint64_t topology_seed, std::uint64_t shadow_seed) {
            return large_scale_fading(generate_topology(c, topology_seed), c, shadow_seed);
        },
        py::arg("config"), py::arg("topology_seed"), py::arg("shadow_seed"), "M x N large-scale fading coefficients");

    m.def(
        "cluster_ues",
        [](const Eigen::MatrixXd &features, int L, InitMethod init, std::uint64_t seed) {
            return cluster_ues(features, L, init, seed).clustering.clusters;
        },
        py::arg("features"), py::arg("L"), py::arg("init") = InitMethod::improved, py::arg("seed") = 0,
        "Clusters the columns of features; returns lists of UE indices");

    m.def(
        "select_num_clusters",
        [](const Eigen::MatrixXd &features, int L_min, int L_max) {
            const auto s = select_num_clusters(features, L_min, L_max);
            return py::make_tuple(s.best_L, s.scores, s.clustering.clusters);
        },
        py::arg("features"), py::arg("L_min"), py::arg("L_max"));

    m.def(
        "silhouette_score",
        [](const Eigen::MatrixXd &features, const std::vector<std::vector<int>> &clusters) {
            return silhouette_score(features, clustering_of(clusters));
        },
        py::arg("features"), py::arg("clusters"));

    // Orders each cluster for SIC and returns (ordered clusters, gamma)
    m.def(
        "estimation_stats",
        [](const Eigen::MatrixXd &beta, const std::vector<std::vector<int>> &clusters, const SystemConfig &c) {
            Clustering cl = clustering_of(clusters);
            cl = order_within_cluster(cl, estimation_stats(beta, cl, c).gamma);
            return py::make_tuple(cl.clusters, estimation_stats(beta, cl, c).gamma);
        },
        py::arg("beta"), py::arg("clusters"), py::arg("config"));

    m.def(
        "fixed_pa_cf",
        [](const Eigen::MatrixXd &beta, const std::vector<std::vector<int>> &clusters, const SystemConfig &c,
           double alpha) {
            const Clustering cl = clustering_of(clusters);
            return fixed_pa_cf(estimation_stats(beta, cl, c).gamma, cl, c, alpha);
        },
        py::arg("beta"), py::arg("clusters"), py::arg("config"), py::arg("alpha") = 1.0);

    m.def(
        "sum_se_cf",
        [](const Eigen::MatrixXd &beta, const std::vector<std::vector<int>> &clusters, const SystemConfig &c,
           const Eigen::MatrixXd &rho) {
            const Clustering cl = clustering_of(clusters);
            return sum_se_cf(estimation_stats(beta, cl, c), cl, c, rho);
        },
        py::arg("beta"), py::arg("clusters"), py::arg("config"), py::arg("rho"));

    m.def(
        "user_se_cf",
        [](const Eigen::MatrixXd &beta, const std::vector<std::vector<int>> &clusters, const SystemConfig &c,
           const Eigen::MatrixXd &rho) {
            const Clustering cl = clustering_of(clusters);
            return user_se_cf_all(estimation_stats(beta, cl, c), cl, c, rho);
        },
        py::arg("beta"), py::arg("clusters"), py::arg("config"), py::arg("rho"));

    m.def(
        "ia_maximize_cf",
        [](const Eigen::MatrixXd &beta, const std::vector<std::vector<int>> &clusters, const SystemConfig &c,
           double epsilon, int max_outer) {
            const Clustering cl = clustering_of(clusters);
            IaOptions o;
            o.epsilon = epsilon;
            o.max_outer = max_outer;
            IaResult r;
            {
                py::gil_scoped_release release;
                r = ia_maximize_cf(estimation_stats(beta, cl, c), cl, c, o);
            }
            py::dict d;
            d["rho"] = r.rho;
            d["sse"] = r.sse;
            d["iterations"] = r.iterations;
            d["status"] = std::string(to_string(r.status));
            d["objective_history"] = r.history.objective;
            return d;
        },
        py::arg("beta"), py::arg("clusters"), py::arg("config"), py::arg("epsilon") = 1e-3, py::arg("max_outer") = 30);

    m.def(
        "parse_config_json", [](const std::string &text) { return parse_config_json(text).to_json(); },
        py::arg("text"), "Validates a scenario config and returns it with every default filled in");

    // Returns (results_csv, users_csv, manifest_json, failures)
    m.def(
        "run_sweep",
        [](const std::string &config_json, int threads) {
            const ScenarioConfig cfg = parse_config_json(config_json);
            SweepOutput out;
            {
                py::gil_scoped_release release;
                out = run_sweep(cfg, threads);
            }
            return py::make_tuple(format_results_csv(out.rows), format_user_csv(out.rows), out.manifest, out.failures);
        },
        py::arg("config_json"), py::arg("threads") = 1);
}
