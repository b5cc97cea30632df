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

#include "cfnoma/scenario.hpp"
#include "cfnoma/clustering.hpp"
#include "cfnoma/core_model.hpp"
#include "cfnoma/ia.hpp"
#include "cfnoma/monte_carlo.hpp"
#include "cfnoma/rng.hpp"
#include "cfnoma/sse.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#ifndef CFNOMA_VERSION
#define CFNOMA_VERSION "0.0.0"
#endif

namespace cfnoma
{

const char *version()
{
    return CFNOMA_VERSION;
}

namespace
{
using json = nlohmann::ordered_json;

template <class E, std::size_t N>
const char *enum_name(E v, const std::array<std::pair<E, const char *>, N> &table)
{
    for (const auto &[e, s] : table)
        if (e == v)
            return s;
    return "unknown";
}

constexpr std::array<std::pair<Algorithm, const char *>, 6> kAlgorithms{{{Algorithm::kmeans, "kmeans"},
                                                                          {Algorithm::kmeanspp, "kmeanspp"},
                                                                          {Algorithm::improved, "improved"},
                                                                          {Algorithm::near, "near"},
                                                                          {Algorithm::far, "far"},
                                                                          {Algorithm::random, "random"}}};
constexpr std::array<std::pair<PaMode, const char *>, 2> kPaModes{{{PaMode::fixed, "fixed"},
                                                                     {PaMode::optimized, "optimized"}}};
constexpr std::array<std::pair<SystemKind, const char *>, 2> kSystems{{{SystemKind::cellfree, "cellfree"},
                                                                         {SystemKind::collocated, "collocated"}}};
} // namespace

const char *to_string(Algorithm a)
{
    return enum_name(a, kAlgorithms);
}
const char *to_string(PaMode p)
{
    return enum_name(p, kPaModes);
}
const char *to_string(SystemKind s)
{
    return enum_name(s, kSystems);
}

double ScenarioConfig::to_normalized(double dbm) const
{
    return std::pow(10.0, (dbm - noise_dbm) / 10.0);
}

namespace
{

// Object reader that remembers which keys were consumed so leftovers can be reported
class Reader
{
  public:
    Reader(const json &j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object())
            fail("", "must be an object");
    }

    bool has(const std::string &key) const { return j_.contains(key); }

    const json &at(const std::string &key)
    {
        used_.insert(key);
        if (!j_.contains(key))
            fail(key, "required key missing");
        return j_.at(key);
    }

    [[noreturn]] void fail(const std::string &key, const std::string &what) const
    {
        throw InvalidConfig(name(key) + ": " + what);
    }

    std::string name(const std::string &key) const
    {
        if (path_.empty())
            return key.empty() ? "config" : key;
        return key.empty() ? path_ : path_ + "." + key;
    }

    double number(const std::string &key)
    {
        const json &v = at(key);
        if (!v.is_number())
            fail(key, "must be a number");
        const double d = v.get<double>();
        if (!std::isfinite(d))
            fail(key, "must be finite");
        return d;
    }

    double number(const std::string &key, double lo, double hi, bool open_lo = false)
    {
        const double d = number(key);
        if (d < lo || d > hi || (open_lo && d == lo))
            fail(key, "out of range");
        return d;
    }

    long long integer(const std::string &key, long long lo, long long hi)
    {
        return integer_value(at(key), key, lo, hi);
    }

    long long integer_value(const json &v, const std::string &key, long long lo, long long hi) const
    {
        if (!v.is_number_integer())
            fail(key, "must be an integer");
        const long long i = v.get<long long>();
        if (i < lo || i > hi)
            fail(key, "out of range");
        return i;
    }

    std::vector<double> numbers(const std::string &key, double lo, double hi)
    {
        const json &v = at(key);
        std::vector<double> out;
        auto one = [&](const json &e) {
            if (!e.is_number() || !std::isfinite(e.get<double>()))
                fail(key, "must be a number or a list of numbers");
            const double d = e.get<double>();
            if (d < lo || d > hi)
                fail(key, "out of range");
            out.push_back(d);
        };
        if (v.is_array())
        {
            for (const auto &e : v)
                one(e);
            if (out.empty())
                fail(key, "list must not be empty");
        }
        else
        {
            one(v);
        }
        return out;
    }

    std::vector<std::string> strings(const std::string &key)
    {
        const json &v = at(key);
        std::vector<std::string> out;
        auto one = [&](const json &e) {
            if (!e.is_string())
                fail(key, "must be a string or a list of strings");
            out.push_back(e.get<std::string>());
        };
        if (v.is_array())
        {
            for (const auto &e : v)
                one(e);
            if (out.empty())
                fail(key, "list must not be empty");
        }
        else
        {
            one(v);
        }
        return out;
    }

    void finish() const
    {
        for (const auto &[k, v] : j_.items())
            if (!used_.count(k))
                fail(k, "unknown key");
    }

  private:
    const json &j_;
    std::string path_;
    std::set<std::string> used_;
};

template <class E, std::size_t N>
std::vector<E> parse_enum_list(Reader &r, const std::string &key, const std::array<std::pair<E, const char *>, N> &table)
{
    std::vector<E> out;
    for (const auto &s : r.strings(key))
    {
        bool found = false;
        for (const auto &[e, name] : table)
            if (s == name)
            {
                if (std::find(out.begin(), out.end(), e) == out.end())
                    out.push_back(e);
                found = true;
            }
        if (!found)
            r.fail(key, "unknown value \"" + s + "\"");
    }
    return out;
}

void check_point_systems(const ScenarioConfig &c)
{
    for (const auto &pt : sweep_points(c))
    {
        std::vector<int> Ls;
        if (pt.L > 0)
            Ls.push_back(pt.L);
        else
            Ls = {c.L_range.first, c.L_range.second};
        for (int L : Ls)
        {
            try
            {
                system_config(c, pt, L).validate();
            }
            catch (const InvalidConfig &e)
            {
                throw InvalidConfig(std::string("scenario (M=") + std::to_string(pt.M) + ", K=" + std::to_string(pt.K) +
                                    ", L=" + std::to_string(L) + "): " + e.what());
            }
        }
    }
}

} // namespace

ScenarioConfig parse_config_json(const std::string &text)
{
    json doc;
    try
    {
        doc = json::parse(text);
    }
    catch (const json::parse_error &e)
    {
        throw InvalidConfig(std::string("config: malformed JSON: ") + e.what());
    }
    if (doc.is_object() && doc.contains("config") && doc.contains("version"))
        doc = json(doc.at("config"));

    Reader r(doc, "");
    ScenarioConfig c;
    c.N = int(r.integer("N", 1, 100000));

    if (r.has("MK"))
    {
        if (r.has("M") || r.has("K"))
            r.fail("MK", "cannot be combined with M or K");
        const json &v = r.at("MK");
        if (!v.is_array() || v.empty())
            r.fail("MK", "must be a non-empty list of [M, K] pairs");
        for (const auto &e : v)
        {
            if (!e.is_array() || e.size() != 2)
                r.fail("MK", "must be a non-empty list of [M, K] pairs");
            c.mk.emplace_back(int(r.integer_value(e[0], "MK", 1, 100000)), int(r.integer_value(e[1], "MK", 1, 100000)));
        }
        for (const auto &[M, K] : c.mk)
            if (long(M) * K != long(c.mk.front().first) * c.mk.front().second)
                r.fail("MK", "every pair must have the same product M*K");
    }
    else
    {
        c.mk.emplace_back(int(r.integer("M", 1, 100000)), int(r.integer("K", 1, 100000)));
    }

    {
        const json &v = r.at("L");
        if (v.is_string())
        {
            if (v.get<std::string>() != "auto")
                r.fail("L", "must be an integer, a list of integers or \"auto\"");
        }
        else if (v.is_array())
        {
            if (v.empty())
                r.fail("L", "list must not be empty");
            for (const auto &e : v)
                c.L.push_back(int(r.integer_value(e, "L", 1, c.N)));
        }
        else
        {
            c.L.push_back(int(r.integer_value(v, "L", 1, c.N)));
        }
    }
    if (r.has("L_range"))
    {
        const json &v = r.at("L_range");
        if (!v.is_array() || v.size() != 2)
            r.fail("L_range", "must be a pair [min, max]");
        c.L_range = {int(r.integer_value(v[0], "L_range", 2, c.N)), int(r.integer_value(v[1], "L_range", 2, c.N))};
        if (c.L_range.first > c.L_range.second)
            r.fail("L_range", "min must not exceed max");
    }
    if (c.auto_L() && c.L_range.second > c.N - 1)
    {
        if (r.has("L_range") || c.L_range.first > c.N - 1)
            r.fail("L_range", "max must be below N");
        c.L_range.second = c.N - 1;
    }

    if (r.has("ap_power_dbm"))
    {
        if (r.has("P_total_dbm"))
            r.fail("ap_power_dbm", "cannot be combined with P_total_dbm");
        c.ap_power_dbm = r.number("ap_power_dbm", -300.0, 300.0);
    }
    else
    {
        c.p_total_dbm = r.numbers("P_total_dbm", -300.0, 300.0);
    }
    c.zeta = r.has("zeta") ? r.numbers("zeta", 0.0, 1.0) : std::vector<double>{0.05};

    if (r.has("pilot_len"))
        c.pilot_len = int(r.integer("pilot_len", 1, 1000000));
    if (r.has("coherence_len"))
        c.coherence_len = int(r.integer("coherence_len", 1, 1000000));
    if (r.has("radius_km"))
        c.radius_km = r.number("radius_km", 0.0, 1e6, true);
    if (r.has("d0_km"))
        c.d0_km = r.number("d0_km", 0.0, 1e6, true);
    if (r.has("d1_km"))
        c.d1_km = r.number("d1_km", 0.0, 1e6, true);
    if (!(c.d1_km > c.d0_km))
        r.fail("d1_km", "must exceed d0_km");
    if (r.has("min_distance_km"))
        c.min_distance_km = r.number("min_distance_km", 0.0, 1e6, true);
    if (r.has("shadow_std_db"))
        c.shadow_std_db = r.number("shadow_std_db", 0.0, 100.0);
    if (r.has("bandwidth_mhz"))
        c.bandwidth_mhz = r.number("bandwidth_mhz", 0.0, 1e6, true);
    if (r.has("noise_dbm"))
        c.noise_dbm = r.number("noise_dbm", -300.0, 300.0);
    if (r.has("ue_power_dbm"))
        c.ue_power_dbm = r.number("ue_power_dbm", -300.0, 300.0);

    if (r.has("algorithms"))
        c.algorithms = parse_enum_list(r, "algorithms", kAlgorithms);
    if (r.has("pa_modes"))
        c.pa_modes = parse_enum_list(r, "pa_modes", kPaModes);
    if (r.has("systems"))
        c.systems = parse_enum_list(r, "systems", kSystems);
    if (r.has("num_topologies"))
        c.num_topologies = int(r.integer("num_topologies", 1, 100000000));
    if (r.has("master_seed"))
    {
        const json &v = r.at("master_seed");
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
            r.fail("master_seed", "must be a non-negative integer");
        c.master_seed = v.get<std::uint64_t>();
    }
    if (r.has("alpha"))
        c.alpha = r.number("alpha", 0.0, 100.0);
    if (r.has("ia"))
    {
        Reader ia(r.at("ia"), "ia");
        if (ia.has("epsilon"))
            c.ia_epsilon = ia.number("epsilon", 0.0, 1.0, true);
        if (ia.has("max_outer"))
            c.ia_max_outer = int(ia.integer("max_outer", 1, 100000));
        ia.finish();
    }
    if (r.has("mc"))
    {
        Reader mc(r.at("mc"), "mc");
        if (mc.has("realizations"))
            c.mc_realizations = int(mc.integer("realizations", 1, 100000000));
        if (mc.has("tolerance"))
            c.mc_tolerance = mc.number("tolerance", 0.0, 1e6, true);
        mc.finish();
    }
    if (r.has("output"))
    {
        const json &v = r.at("output");
        if (!v.is_string())
            r.fail("output", "must be a string");
        c.output = v.get<std::string>();
    }
    r.finish();
    check_point_systems(c);
    return c;
}

ScenarioConfig parse_config(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw InvalidConfig("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_json(ss.str());
}

std::string ScenarioConfig::to_json() const
{
    json j;
    j["N"] = N;
    json mkj = json::array();
    for (const auto &[M, K] : mk)
        mkj.push_back({M, K});
    j["MK"] = mkj;
    if (auto_L())
    {
        j["L"] = "auto";
        j["L_range"] = {L_range.first, L_range.second};
    }
    else
    {
        j["L"] = L;
    }
    if (ap_power_dbm)
        j["ap_power_dbm"] = *ap_power_dbm;
    else
        j["P_total_dbm"] = p_total_dbm;
    j["zeta"] = zeta;
    if (pilot_len)
        j["pilot_len"] = *pilot_len;
    j["coherence_len"] = coherence_len;
    j["radius_km"] = radius_km;
    j["d0_km"] = d0_km;
    j["d1_km"] = d1_km;
    j["min_distance_km"] = min_distance_km;
    j["shadow_std_db"] = shadow_std_db;
    j["bandwidth_mhz"] = bandwidth_mhz;
    j["noise_dbm"] = noise_dbm;
    j["ue_power_dbm"] = ue_power_dbm;
    json a = json::array(), p = json::array(), s = json::array();
    for (auto v : algorithms)
        a.push_back(to_string(v));
    for (auto v : pa_modes)
        p.push_back(to_string(v));
    for (auto v : systems)
        s.push_back(to_string(v));
    j["algorithms"] = a;
    j["pa_modes"] = p;
    j["systems"] = s;
    j["num_topologies"] = num_topologies;
    j["master_seed"] = master_seed;
    j["alpha"] = alpha;
    j["ia"] = {{"epsilon", ia_epsilon}, {"max_outer", ia_max_outer}};
    j["mc"] = {{"realizations", mc_realizations}, {"tolerance", mc_tolerance}};
    j["output"] = output;
    return j.dump(2);
}

std::vector<SweepPoint> sweep_points(const ScenarioConfig &config)
{
    std::vector<SweepPoint> pts;
    const std::vector<int> Ls = config.auto_L() ? std::vector<int>{0} : config.L;
    for (size_t layout = 0; layout < config.mk.size(); ++layout)
    {
        const auto [M, K] = config.mk[layout];
        const std::vector<double> powers =
            config.ap_power_dbm ? std::vector<double>{*config.ap_power_dbm + 10.0 * std::log10(double(M))}
                                : config.p_total_dbm;
        for (int L : Ls)
            for (double z : config.zeta)
                for (double p : powers)
                {
                    SweepPoint s;
                    s.index = int(pts.size());
                    s.layout = int(layout);
                    s.M = M;
                    s.K = K;
                    s.L = L;
                    s.zeta = z;
                    s.p_total_dbm = p;
                    pts.push_back(s);
                }
    }
    return pts;
}

SystemConfig system_config(const ScenarioConfig &config, const SweepPoint &point, int L)
{
    const double ap_budget = config.ap_power_dbm ? config.to_normalized(*config.ap_power_dbm)
                                                 : config.to_normalized(point.p_total_dbm) / point.M;
    SystemConfig s = SystemConfig::uniform(point.M, config.N, point.K, L, point.zeta,
                                           config.to_normalized(config.ue_power_dbm), ap_budget);
    s.pilot_len = config.pilot_len;
    s.coherence_len = config.coherence_len;
    s.radius_km = config.radius_km;
    s.d0_km = config.d0_km;
    s.d1_km = config.d1_km;
    s.min_distance_km = config.min_distance_km;
    s.shadow_std_db = config.shadow_std_db;
    return s;
}

std::uint64_t topology_seed(const ScenarioConfig &config, const SweepPoint &point, int topology)
{
    return derive_seed({config.master_seed, std::uint64_t(point.layout), std::uint64_t(topology)});
}

namespace
{

template <class F>
void parallel_for(int count, int threads, F &&f)
{
    threads = std::max(1, std::min(threads, count));
    if (threads == 1)
    {
        for (int i = 0; i < count; ++i)
            f(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++)
                f(i);
        });
    for (auto &th : pool)
        th.join();
}

Clustering cluster_by(Algorithm a, const Eigen::MatrixXd &features, int L, std::uint64_t seed)
{
    switch (a)
    {
    case Algorithm::kmeans:
        return cluster_ues(features, L, InitMethod::random, seed).clustering;
    case Algorithm::kmeanspp:
        return cluster_ues(features, L, InitMethod::kmeanspp, seed).clustering;
    case Algorithm::improved:
        return cluster_ues(features, L, InitMethod::improved, seed).clustering;
    case Algorithm::near:
        return baseline_pairing(features, PairingRule::near, seed);
    case Algorithm::far:
        return baseline_pairing(features, PairingRule::far, seed);
    case Algorithm::random:
        return baseline_pairing(features, PairingRule::random, seed);
    }
    throw InvalidInput("unknown algorithm");
}

struct Evaluation
{
    double sse = 0.0;
    std::vector<double> user_se;
    std::string status = "ok";
    int iters = 0;
};

const char *ia_status(IaStatus s)
{
    switch (s)
    {
    case IaStatus::converged:
        return "ok";
    case IaStatus::max_outer:
        return "not_converged";
    case IaStatus::subproblem_failure:
        return "solver_failure";
    }
    return "error";
}

IaOptions ia_options(const ScenarioConfig &config)
{
    IaOptions o;
    o.epsilon = config.ia_epsilon;
    o.max_outer = config.ia_max_outer;
    o.alpha = config.alpha;
    return o;
}

Evaluation evaluate_cf(const ScenarioConfig &config, const SystemConfig &cfg, const Eigen::MatrixXd &beta,
                       Clustering cl, PaMode pa)
{
    cl = order_within_cluster(cl, estimation_stats(beta, cl, cfg).gamma);
    const FadingMap f = estimation_stats(beta, cl, cfg);
    Evaluation ev;
    Eigen::MatrixXd rho;
    if (pa == PaMode::fixed)
    {
        rho = fixed_pa_cf(f.gamma, cl, cfg, config.alpha);
    }
    else
    {
        const IaResult r = ia_maximize_cf(f, cl, cfg, ia_options(config));
        rho = r.rho;
        ev.status = ia_status(r.status);
        ev.iters = r.iterations;
    }
    ev.user_se = user_se_cf_all(f, cl, cfg, rho);
    ev.sse = sum_se_cf(f, cl, cfg, rho);
    return ev;
}

Evaluation evaluate_co(const ScenarioConfig &config, const SystemConfig &co, const Eigen::VectorXd &beta,
                       Clustering cl, PaMode pa)
{
    cl = order_within_cluster(cl, collocated_stats(beta, cl, co).gamma.transpose());
    const CollocatedStats st = collocated_stats(beta, cl, co);
    Evaluation ev;
    Eigen::VectorXd rho;
    if (pa == PaMode::fixed)
    {
        rho = fixed_pa_co(st.gamma, cl, co.dl_power_budget[0], config.alpha);
    }
    else
    {
        const IaResult r = ia_maximize_co(st, cl, co, ia_options(config));
        rho = r.rho.row(0).transpose();
        ev.status = ia_status(r.status);
        ev.iters = r.iterations;
    }
    for (int n = 0; n < config.N; ++n)
        ev.user_se.push_back(user_se_co(st, cl, co, rho, n));
    ev.sse = sum_se_co(st, cl, co, rho);
    return ev;
}

// Every row of one (sweep point, topology) task, in configuration order
std::vector<ResultRow> run_task(const ScenarioConfig &config, const SweepPoint &pt, int topology)
{
    const std::uint64_t seed = topology_seed(config, pt, topology);
    std::vector<ResultRow> rows;
    auto base = [&](Algorithm a, PaMode p, SystemKind s) {
        ResultRow r;
        r.scenario = pt.index;
        r.seed = seed;
        r.algorithm = to_string(a);
        r.pa_mode = to_string(p);
        r.system = to_string(s);
        r.M = s == SystemKind::cellfree ? pt.M : 1;
        r.K = s == SystemKind::cellfree ? pt.K : pt.M * pt.K;
        r.L = pt.L;
        r.zeta = pt.zeta;
        r.p_total_dbm = pt.p_total_dbm;
        return r;
    };

    for (SystemKind sys : config.systems)
    {
        std::string setup_error;
        Eigen::MatrixXd features;
        Eigen::MatrixXd beta_cf;
        Eigen::VectorXd beta_co;
        int L = pt.L;
        try
        {
            const SystemConfig probe = system_config(config, pt, std::max(L, 1));
            const Topology topo = generate_topology(probe, seed);
            if (sys == SystemKind::cellfree)
            {
                beta_cf = large_scale_fading(topo, probe, derive_seed({seed, 3}));
                features = beta_cf;
            }
            else
            {
                beta_co = collocated_fading(topo, probe, derive_seed({seed, 5}));
                features = beta_co.transpose();
            }
            if (L == 0)
                L = select_num_clusters(features, config.L_range.first, config.L_range.second).best_L;
        }
        catch (const std::exception &e)
        {
            setup_error = e.what();
        }

        for (Algorithm alg : config.algorithms)
        {
            Clustering cl;
            std::string cluster_error = setup_error;
            if (cluster_error.empty())
            {
                try
                {
                    cl = cluster_by(alg, features, L, derive_seed({seed, 4}));
                }
                catch (const std::exception &e)
                {
                    cluster_error = e.what();
                }
            }
            for (PaMode pa : config.pa_modes)
            {
                ResultRow row = base(alg, pa, sys);
                if (!cluster_error.empty())
                {
                    row.status = "error";
                    row.sse = std::nan("");
                    row.message = cluster_error;
                    rows.push_back(std::move(row));
                    continue;
                }
                row.L = cl.num_clusters();
                try
                {
                    const SystemConfig cfg = system_config(config, pt, row.L);
                    cfg.validate();
                    const Evaluation ev = sys == SystemKind::cellfree
                                              ? evaluate_cf(config, cfg, beta_cf, cl, pa)
                                              : evaluate_co(config, collocated_config(cfg), beta_co, cl, pa);
                    row.sse = ev.sse;
                    row.user_se = ev.user_se;
                    row.status = ev.status;
                    row.iters = ev.iters;
                }
                catch (const std::exception &e)
                {
                    row.status = "error";
                    row.sse = std::nan("");
                    row.message = e.what();
                }
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

std::string fmt(double v, const char *format = "%.12g")
{
    if (std::isnan(v))
        return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

std::vector<std::string> split(const std::string &line, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, sep))
        out.push_back(cur);
    if (!line.empty() && line.back() == sep)
        out.emplace_back();
    return out;
}

bool failed(const std::string &status)
{
    return status != "ok" && status != "not_converged";
}

} // namespace

const char *const kResultsHeader = "scenario,seed,algorithm,pa_mode,system,M,K,L,zeta,p_total_dbm,sse_bits_per_hz,status,iters";

std::string format_results_csv(const std::vector<ResultRow> &rows)
{
    std::ostringstream os;
    os << kResultsHeader << '\n';
    for (const auto &r : rows)
        os << r.scenario << ',' << r.seed << ',' << r.algorithm << ',' << r.pa_mode << ',' << r.system << ',' << r.M
           << ',' << r.K << ',' << r.L << ',' << fmt(r.zeta) << ',' << fmt(r.p_total_dbm) << ',' << fmt(r.sse) << ','
           << r.status << ',' << r.iters << '\n';
    return os.str();
}

std::string format_user_csv(const std::vector<ResultRow> &rows)
{
    std::ostringstream os;
    os << "scenario,seed,algorithm,pa_mode,system,user_se_bits_per_hz\n";
    for (const auto &r : rows)
    {
        os << r.scenario << ',' << r.seed << ',' << r.algorithm << ',' << r.pa_mode << ',' << r.system << ",\"[";
        for (size_t i = 0; i < r.user_se.size(); ++i)
            os << (i ? "," : "") << fmt(r.user_se[i]);
        os << "]\"\n";
    }
    return os.str();
}

std::vector<ResultRow> parse_results_csv(const std::string &text)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kResultsHeader)
        throw InvalidInput("results CSV must start with the header: " + std::string(kResultsHeader));
    std::vector<ResultRow> rows;
    int lineno = 1;
    while (std::getline(in, line))
    {
        ++lineno;
        if (line.empty())
            continue;
        const auto f = split(line, ',');
        if (f.size() != 13)
            throw InvalidInput("results CSV line " + std::to_string(lineno) + ": expected 13 fields");
        try
        {
            ResultRow r;
            r.scenario = std::stoi(f[0]);
            r.seed = std::stoull(f[1]);
            r.algorithm = f[2];
            r.pa_mode = f[3];
            r.system = f[4];
            r.M = std::stoi(f[5]);
            r.K = std::stoi(f[6]);
            r.L = std::stoi(f[7]);
            r.zeta = std::stod(f[8]);
            r.p_total_dbm = std::stod(f[9]);
            r.sse = f[10] == "nan" ? std::nan("") : std::stod(f[10]);
            r.status = f[11];
            r.iters = std::stoi(f[12]);
            rows.push_back(std::move(r));
        }
        catch (const std::logic_error &)
        {
            throw InvalidInput("results CSV line " + std::to_string(lineno) + ": malformed field");
        }
    }
    return rows;
}

SweepOutput run_sweep(const ScenarioConfig &config, int threads)
{
    const auto pts = sweep_points(config);
    const int T = config.num_topologies;
    const int tasks = int(pts.size()) * T;
    std::vector<std::vector<ResultRow>> results(static_cast<size_t>(tasks));
    std::vector<double> seconds(static_cast<size_t>(tasks), 0.0);
    const auto t0 = std::chrono::steady_clock::now();
    parallel_for(tasks, threads, [&](int i) {
        const auto s = std::chrono::steady_clock::now();
        results[size_t(i)] = run_task(config, pts[size_t(i / T)], i % T);
        seconds[size_t(i)] = std::chrono::duration<double>(std::chrono::steady_clock::now() - s).count();
    });
    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    SweepOutput out;
    for (auto &r : results)
        for (auto &row : r)
        {
            if (failed(row.status))
                ++out.failures;
            out.rows.push_back(std::move(row));
        }

    json m;
    m["format"] = "cfnoma-run-manifest";
    m["version"] = version();
    m["config"] = json::parse(config.to_json());
    m["csv_header"] = kResultsHeader;
    json scen = json::array();
    for (const auto &pt : pts)
    {
        json s;
        s["scenario"] = pt.index;
        s["M"] = pt.M;
        s["K"] = pt.K;
        if (pt.L > 0)
            s["L"] = pt.L;
        else
            s["L"] = "auto";
        s["zeta"] = pt.zeta;
        s["p_total_dbm"] = pt.p_total_dbm;
        json seeds = json::array();
        double secs = 0.0;
        for (int t = 0; t < T; ++t)
        {
            seeds.push_back(topology_seed(config, pt, t));
            secs += seconds[size_t(pt.index * T + t)];
        }
        s["topology_seeds"] = seeds;
        s["wall_seconds"] = secs;
        scen.push_back(s);
    }
    m["scenarios"] = scen;
    m["rows"] = out.rows.size();
    m["failures"] = out.failures;
    json errs = json::array();
    for (const auto &row : out.rows)
        if (!row.message.empty())
            errs.push_back({{"scenario", row.scenario},
                            {"seed", row.seed},
                            {"algorithm", row.algorithm},
                            {"pa_mode", row.pa_mode},
                            {"system", row.system},
                            {"message", row.message}});
    m["errors"] = errs;
    m["threads"] = threads;
    m["wall_seconds"] = total;
    out.manifest = m.dump(2);
    return out;
}

std::vector<SummaryRow> reduce_results(const std::vector<ResultRow> &rows)
{
    if (rows.empty())
        throw InvalidInput("no result rows to reduce");
    using Key = std::tuple<int, std::string, std::string, std::string>;
    std::map<Key, std::vector<const ResultRow *>> groups;
    for (const auto &r : rows)
        groups[{r.scenario, r.algorithm, r.pa_mode, r.system}].push_back(&r);
    std::vector<SummaryRow> out;
    for (const auto &[key, members] : groups)
    {
        SummaryRow s;
        const ResultRow &first = *members.front();
        s.scenario = first.scenario;
        s.algorithm = first.algorithm;
        s.pa_mode = first.pa_mode;
        s.system = first.system;
        s.M = first.M;
        s.K = first.K;
        s.L = first.L;
        s.zeta = first.zeta;
        s.p_total_dbm = first.p_total_dbm;
        std::vector<double> v;
        for (const ResultRow *r : members)
        {
            if (r->L != s.L)
                s.L = 0;
            if (failed(r->status) || !std::isfinite(r->sse))
                ++s.failures;
            else
                v.push_back(r->sse);
        }
        s.n = int(v.size());
        if (v.empty())
        {
            s.mean = std::nan("");
            s.ci_half_width = std::nan("");
        }
        else
        {
            double sum = 0.0;
            for (double x : v)
                sum += x;
            s.mean = sum / double(v.size());
            double ss = 0.0;
            for (double x : v)
                ss += (x - s.mean) * (x - s.mean);
            const double sd = v.size() > 1 ? std::sqrt(ss / double(v.size() - 1)) : 0.0;
            s.ci_half_width = 1.959963984540054 * sd / std::sqrt(double(v.size()));
        }
        out.push_back(s);
    }
    return out;
}

std::string format_summary_csv(const std::vector<SummaryRow> &rows)
{
    std::ostringstream os;
    os << "scenario,algorithm,pa_mode,system,M,K,L,zeta,p_total_dbm,n,failures,mean_sse_bits_per_hz,ci95_low,ci95_high\n";
    for (const auto &s : rows)
        os << s.scenario << ',' << s.algorithm << ',' << s.pa_mode << ',' << s.system << ',' << s.M << ',' << s.K << ','
           << s.L << ',' << fmt(s.zeta) << ',' << fmt(s.p_total_dbm) << ',' << s.n << ',' << s.failures << ','
           << fmt(s.mean) << ',' << fmt(s.mean - s.ci_half_width) << ',' << fmt(s.mean + s.ci_half_width) << '\n';
    return os.str();
}

std::vector<VerifyRow> run_verify(const ScenarioConfig &config, int threads)
{
    const auto pts = sweep_points(config);
    const int T = config.num_topologies;
    const int tasks = int(pts.size()) * T;
    std::vector<VerifyRow> out(static_cast<size_t>(tasks));
    parallel_for(tasks, threads, [&](int i) {
        const SweepPoint &pt = pts[size_t(i / T)];
        VerifyRow &v = out[size_t(i)];
        v.scenario = pt.index;
        v.seed = topology_seed(config, pt, i % T);
        try
        {
            const SystemConfig probe = system_config(config, pt, std::max(pt.L, 1));
            const Topology topo = generate_topology(probe, v.seed);
            const Eigen::MatrixXd beta = large_scale_fading(topo, probe, derive_seed({v.seed, 3}));
            const int L0 = pt.L > 0 ? pt.L : select_num_clusters(beta, config.L_range.first, config.L_range.second).best_L;
            Clustering cl = cluster_by(config.algorithms.front(), beta, L0, derive_seed({v.seed, 4}));
            const SystemConfig cfg = system_config(config, pt, cl.num_clusters());
            cfg.validate();
            cl = order_within_cluster(cl, estimation_stats(beta, cl, cfg).gamma);
            const FadingMap f = estimation_stats(beta, cl, cfg);
            McOptions o;
            o.realizations = config.mc_realizations;
            o.seed = derive_seed({v.seed, 6});
            const McReport rep = mc_verify(cfg, beta, cl, fixed_pa_cf(f.gamma, cl, cfg, config.alpha), o);
            v.term_error = rep.max_term_error;
            v.se_error = rep.max_se_error;
            v.pass = rep.within(config.mc_tolerance);
        }
        catch (const std::exception &e)
        {
            v.message = e.what();
            v.term_error.fill(std::nan(""));
            v.se_error = std::nan("");
            v.pass = false;
        }
    });
    return out;
}

} // namespace cfnoma
