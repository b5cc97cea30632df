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

#include "cfnoma/rng.hpp"
#include "cfnoma/scenario.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <tuple>

using namespace cfnoma;

namespace
{
std::string error_of(const std::string &text)
{
    try
    {
        parse_config_json(text);
    }
    catch (const InvalidConfig &e)
    {
        return e.what();
    }
    return "";
}

bool starts_with(const std::string &s, const std::string &p)
{
    return s.rfind(p, 0) == 0;
}
} // namespace

TEST_CASE("minimal config is completed with the documented defaults")
{
    const auto c = parse_config_json(R"({"M": 32, "N": 10, "K": 8, "L": 5, "P_total_dbm": 40})");
    CHECK(c.N == 10);
    REQUIRE(c.mk.size() == 1);
    CHECK(c.mk[0] == std::pair{32, 8});
    CHECK(c.L == std::vector<int>{5});
    CHECK(c.zeta == std::vector<double>{0.05});
    CHECK(c.coherence_len == 200);
    CHECK(c.noise_dbm == -104.0);
    CHECK(c.ue_power_dbm == 23.0);
    CHECK(c.bandwidth_mhz == 20.0);
    CHECK(c.radius_km == 1.0);
    CHECK(c.shadow_std_db == 8.0);
    CHECK(c.d0_km == 0.01);
    CHECK(c.d1_km == 0.05);
    CHECK(c.num_topologies == 50);
    CHECK(c.algorithms == std::vector<Algorithm>{Algorithm::improved});
    CHECK(c.pa_modes == std::vector<PaMode>{PaMode::fixed});
    CHECK(c.systems == std::vector<SystemKind>{SystemKind::cellfree});

    const auto pts = sweep_points(c);
    REQUIRE(pts.size() == 1);
    const SystemConfig s = system_config(c, pts[0], 5);
    CHECK(s.dl_power_budget.size() == 32);
    CHECK(s.dl_power_budget[0] == doctest::Approx(std::pow(10.0, 14.4) / 32.0).epsilon(1e-12));
    CHECK(s.ul_pilot_power[0] == doctest::Approx(std::pow(10.0, 12.7)).epsilon(1e-12));
    CHECK(s.sic_coeff[3] == 0.05);
    CHECK(s.tau_p() == 5);
    CHECK_NOTHROW(s.validate());
}

TEST_CASE("per-AP override sets the budget of every AP")
{
    const auto c = parse_config_json(R"({"M": 4, "N": 4, "K": 8, "L": 2, "ap_power_dbm": 20})");
    const auto pts = sweep_points(c);
    REQUIRE(pts.size() == 1);
    CHECK(pts[0].p_total_dbm == doctest::Approx(20.0 + 10.0 * std::log10(4.0)));
    CHECK(system_config(c, pts[0], 2).dl_power_budget[2] == doctest::Approx(std::pow(10.0, 12.4)));
}

TEST_CASE("config errors name the offending key")
{
    CHECK(starts_with(error_of(R"({"M": 32, "K": 8, "L": 5, "P_total_dbm": 40})"), "N:"));
    CHECK(starts_with(error_of(R"({"M": 32, "N": 10, "K": 8, "L": 5})"), "P_total_dbm:"));
    CHECK(starts_with(error_of(R"({"M": 32, "N": 10, "K": 8, "L": 5, "P_total_dbm": 40, "colour": 1})"), "colour:"));
    CHECK(starts_with(error_of(R"({"M": 32, "N": 10, "K": 8, "L": 5, "P_total_dbm": 40, "ia": {"eps": 1}})"),
                      "ia.eps:"));
    CHECK(starts_with(error_of(R"({"M": 32, "N": 10, "K": 8, "L": 5, "P_total_dbm": 40, "zeta": [0, 1.5]})"),
                      "zeta:"));
    CHECK(starts_with(error_of(R"({"M": 32, "N": 10, "K": 8, "L": 11, "P_total_dbm": 40})"), "L:"));
    CHECK(starts_with(error_of(R"({"M": 32, "N": 10, "K": 8, "L": 5, "P_total_dbm": []})"), "P_total_dbm:"));
    CHECK(starts_with(error_of(R"({"M": 32, "N": 10, "K": "8", "L": 5, "P_total_dbm": 40})"), "K:"));
    CHECK(starts_with(error_of(R"({"N": 10, "MK": [[32, 8], [16, 8]], "L": 5, "P_total_dbm": 40})"), "MK:"));
    CHECK(starts_with(error_of(R"({"M": 32, "N": 10, "MK": [[32, 8]], "L": 5, "P_total_dbm": 40})"), "MK:"));
    CHECK(starts_with(error_of(R"({"M": 32, "N": 10, "K": 8, "L": 5, "P_total_dbm": 40, "algorithms": ["best"]})"),
                      "algorithms:"));
    CHECK(starts_with(error_of(R"({"M": 32, "N": 10, "K": 8, "L": 5, "P_total_dbm": 40, "d1_km": 0.001})"),
                      "d1_km:"));
    CHECK(starts_with(error_of(R"({"M": 32, "N": 10, "K": 5, "L": 5, "P_total_dbm": 40})"), "scenario"));
    CHECK(starts_with(error_of("{not json"), "config:"));
    CHECK(starts_with(error_of("[1, 2]"), "config:"));
}

TEST_CASE("sweep axes multiply and the resolved config round-trips")
{
    const auto c = parse_config_json(R"({"N": 10, "MK": [[32, 8], [16, 16], [8, 32]], "L": [4, 5],
        "zeta": [0, 0.5, 1], "P_total_dbm": [30, 40], "algorithms": ["kmeans", "improved"],
        "pa_modes": "optimized", "systems": ["cellfree", "collocated"], "master_seed": 7, "pilot_len": 6})");
    CHECK(sweep_points(c).size() == 3 * 2 * 3 * 2);
    const auto again = parse_config_json(c.to_json());
    CHECK(again.to_json() == c.to_json());
    const auto manifest = parse_config_json(std::string(R"({"version": "x", "config": )") + c.to_json() + "}");
    CHECK(manifest.to_json() == c.to_json());
}

TEST_CASE("topology seeds are shared across zeta, power and L but not layouts")
{
    const auto c = parse_config_json(R"({"N": 6, "MK": [[8, 8], [4, 16]], "L": [2, 3], "zeta": [0, 1],
        "P_total_dbm": [30, 40]})");
    std::map<int, std::uint64_t> by_layout;
    for (const auto &pt : sweep_points(c))
    {
        const auto s = topology_seed(c, pt, 3);
        if (by_layout.count(pt.layout))
            CHECK(by_layout[pt.layout] == s);
        by_layout[pt.layout] = s;
    }
    CHECK(by_layout[0] != by_layout[1]);
}

TEST_CASE("one sweep point with one seed and fixed powers gives one row")
{
    auto c = parse_config_json(R"({"M": 8, "N": 6, "K": 8, "L": 3, "P_total_dbm": 40, "num_topologies": 1})");
    const auto out = run_sweep(c);
    REQUIRE(out.rows.size() == 1);
    CHECK(out.failures == 0);
    CHECK(out.rows[0].status == "ok");
    CHECK(out.rows[0].sse > 0.0);
    CHECK(out.rows[0].user_se.size() == 6);
    const std::string csv = format_results_csv(out.rows);
    CHECK(starts_with(csv, "scenario,seed,algorithm,pa_mode,system,M,K,L,zeta,p_total_dbm,sse_bits_per_hz,status,iters\n"));
    const auto back = parse_results_csv(csv);
    REQUIRE(back.size() == 1);
    CHECK(back[0].seed == out.rows[0].seed);
    CHECK(back[0].sse == doctest::Approx(out.rows[0].sse).epsilon(1e-11));
    CHECK_THROWS_AS(parse_results_csv("a,b\n"), InvalidInput);
}

TEST_CASE("sweeps are reproducible and independent of the thread count")
{
    auto c = parse_config_json(R"({"M": 6, "N": 6, "K": 8, "L": 3, "P_total_dbm": [30, 40], "num_topologies": 3,
        "algorithms": ["kmeans", "kmeanspp", "improved", "near", "far", "random"], "systems": ["cellfree", "collocated"]})");
    const auto a = run_sweep(c, 1);
    const auto b = run_sweep(c, 3);
    CHECK(a.rows.size() == 2 * 3 * 6 * 2);
    CHECK(format_results_csv(a.rows) == format_results_csv(b.rows));
    CHECK(format_user_csv(a.rows) == format_user_csv(b.rows));
    const auto m = parse_config_json(a.manifest);
    CHECK(format_results_csv(run_sweep(m, 2).rows) == format_results_csv(a.rows));
}

TEST_CASE("larger SIC residual never raises the sum SE of a topology")
{
    auto c = parse_config_json(R"({"M": 8, "N": 6, "K": 8, "L": [2, 3], "zeta": [0, 0.25, 0.5, 0.75, 1],
        "P_total_dbm": 40, "num_topologies": 5, "algorithms": ["improved", "random"], "systems": ["cellfree", "collocated"]})");
    const auto out = run_sweep(c);
    // Sweep points enumerate L outermost, then zeta
    std::map<std::tuple<std::uint64_t, int, std::string, std::string>, std::vector<double>> series;
    for (const auto &r : out.rows)
    {
        REQUIRE(r.status == "ok");
        series[{r.seed, r.scenario / 5, r.algorithm, r.system}].push_back(r.sse);
    }
    CHECK(series.size() == 5 * 2 * 2 * 2);
    for (const auto &[key, v] : series)
        for (size_t i = 1; i < v.size(); ++i)
            CHECK(v[i] <= v[i - 1] * (1.0 + 1e-12));
}

TEST_CASE("silhouette-chosen cluster counts are reported per row")
{
    auto c = parse_config_json(R"({"M": 8, "N": 6, "K": 8, "L": "auto", "P_total_dbm": 40, "num_topologies": 4})");
    CHECK(c.L_range == std::pair{2, 5});
    const auto out = run_sweep(c);
    for (const auto &r : out.rows)
    {
        CHECK(r.status == "ok");
        CHECK(r.L >= 2);
        CHECK(r.L <= 5);
    }
}

TEST_CASE("reducer statistics")
{
    CHECK_THROWS_AS(reduce_results({}), InvalidInput);

    ResultRow r;
    r.algorithm = "improved";
    r.pa_mode = "fixed";
    r.system = "cellfree";
    r.status = "ok";
    r.sse = 12.5;
    auto one = reduce_results({r});
    REQUIRE(one.size() == 1);
    CHECK(one[0].mean == 12.5);
    CHECK(one[0].ci_half_width == 0.0);

    auto a = r, b = r;
    a.sse = 10.0 - 3.0;
    b.sse = 10.0 + 3.0;
    auto sym = reduce_results({a, b});
    CHECK(sym[0].mean == doctest::Approx(10.0));

    auto failed = r;
    failed.status = "error";
    failed.sse = std::nan("");
    auto with_failure = reduce_results({a, b, failed});
    CHECK(with_failure[0].n == 2);
    CHECK(with_failure[0].failures == 1);

    // The interval narrows as 1/sqrt(n)
    double ratio_sum = 0.0;
    const int reps = 20;
    for (int rep = 0; rep < reps; ++rep)
    {
        Rng rng(derive_seed({99, std::uint64_t(rep)}));
        std::normal_distribution<double> g(20.0, 4.0);
        std::vector<ResultRow> rows;
        for (int i = 0; i < 125; ++i)
        {
            auto x = r;
            x.scenario = i < 25 ? 0 : 1;
            x.sse = g(rng);
            rows.push_back(x);
        }
        const auto s = reduce_results(rows);
        REQUIRE(s.size() == 2);
        CHECK(s[0].n == 25);
        CHECK(s[1].n == 100);
        const double ratio = s[0].ci_half_width / s[1].ci_half_width;
        CHECK(ratio == doctest::Approx(2.0).epsilon(0.2));
        ratio_sum += ratio;
    }
    CHECK(ratio_sum / reps == doctest::Approx(2.0).epsilon(0.05));
}
