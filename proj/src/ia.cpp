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

#include "cfnoma/ia.hpp"
#include "cfnoma/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

namespace cfnoma
{

namespace
{
constexpr double kPointTol = 1e-6;
constexpr double kNearTol = 1e-6;

double kp_of(const SystemConfig &config)
{
    if (config.num_antennas <= config.tau_p())
        throw InvalidConfig("K must exceed the pilot length");
    return config.num_antennas - config.tau_p();
}

double zeta_weight(const std::vector<int> &assign, const std::vector<int> &pos, const SystemConfig &config, int j, int t)
{
    if (assign[size_t(j)] != assign[size_t(t)])
        return 1.0;
    return pos[size_t(j)] <= pos[size_t(t)] ? 1.0 : config.sic_coeff[size_t(t)];
}

double rate_expansion(double phi)
{
    return std::log1p(phi) + phi / (phi + 1.0);
}

// ||lhs||^2 <= theta, normalized by the expansion value so the cone is well scaled there
void add_interference_cone(ConicProgram &prog, std::vector<AffineExpr> lhs, int theta, double theta_k)
{
    const double scale = std::max(theta_k, 1.0);
    const double f = 1.0 / std::sqrt(scale);
    for (auto &e : lhs)
    {
        for (auto &t : e.terms)
            t.second *= f;
        e.constant *= f;
    }
    AffineExpr half_minus, half_plus;
    half_minus.add(theta, 0.5 / scale).constant = -0.5;
    half_plus.add(theta, 0.5 / scale).constant = 0.5;
    lhs.push_back(half_minus);
    prog.add_soc(std::move(lhs), half_plus, "interference");
}

void add_rate_and_hyperbolic(ConicProgram &prog, const VariableLayout &lay, const Eigen::VectorXd &phi0)
{
    for (int n = 0; n < lay.N; ++n)
    {
        const double p = phi0(n);
        AffineExpr e;
        e.add(lay.r0 + n, std::numbers::ln2).add(lay.phibar0 + n, p * p / (p + 1.0));
        e.constant = -rate_expansion(p);
        prog.add_le(std::move(e), "rate");
    }
    for (int n = 0; n < lay.N; ++n)
    {
        // phi * phibar >= 1 written as (phi / p) * (phibar * p) >= 1
        const double p = phi0(n);
        AffineExpr diff, one, sum;
        diff.add(lay.phi0 + n, 0.5 / p).add(lay.phibar0 + n, -0.5 * p);
        one.constant = 1.0;
        sum.add(lay.phi0 + n, 0.5 / p).add(lay.phibar0 + n, 0.5 * p);
        prog.add_soc({diff, one}, sum, "hyperbolic");
    }
}

void add_power_order(ConicProgram &prog, const VariableLayout &lay, const Clustering &clustering,
                     const std::vector<double> &budgets)
{
    for (int m = 0; m < lay.M; ++m)
    {
        const double cap = std::sqrt(budgets[size_t(m)]) / lay.rho_scale;
        if (cap > 0.0)
        {
            std::vector<AffineExpr> lhs;
            for (int n = 0; n < lay.N; ++n)
                lhs.push_back(AffineExpr{}.add(lay.rho(m, n), 1.0));
            AffineExpr rhs;
            rhs.constant = cap;
            prog.add_soc(std::move(lhs), rhs, "power");
        }
        else
        {
            for (int n = 0; n < lay.N; ++n)
                prog.add_eq(AffineExpr{}.add(lay.rho(m, n), 1.0), "power");
        }
    }
    for (int m = 0; m < lay.M; ++m)
        for (const auto &members : clustering.clusters)
        {
            prog.add_le(AffineExpr{}.add(lay.rho(m, members[0]), -1.0), "nonneg");
            for (size_t k = 0; k + 1 < members.size(); ++k)
                prog.add_le(AffineExpr{}.add(lay.rho(m, members[k]), 1.0).add(lay.rho(m, members[k + 1]), -1.0),
                            "order");
        }
}

void check_powers(const Eigen::MatrixXd &rho_hat, const Clustering &clustering, const std::vector<double> &budgets)
{
    if (!rho_hat.allFinite())
        throw InvalidPoint("non-finite power amplitude");
    for (Eigen::Index m = 0; m < rho_hat.rows(); ++m)
    {
        const double cap = budgets[size_t(m)];
        const double scale = std::sqrt(std::max(cap, 1e-300));
        if ((rho_hat.row(m).array() < -kPointTol * scale).any())
            throw InvalidPoint("negative power amplitude");
        if (rho_hat.row(m).squaredNorm() > cap * (1.0 + kPointTol) + 1e-300)
            throw InvalidPoint("AP power budget exceeded");
        for (const auto &members : clustering.clusters)
            for (size_t k = 0; k + 1 < members.size(); ++k)
                if (rho_hat(m, members[k]) > rho_hat(m, members[k + 1]) + kPointTol * scale)
                    throw InvalidPoint("SIC power order violated");
    }
}

double rho_scale_of(const std::vector<double> &budgets)
{
    double s = 0.0;
    for (double b : budgets)
        s = std::max(s, b);
    return s > 0.0 ? std::sqrt(s) : 1.0;
}
} // namespace

double log_surrogate(double phi, double phi_k)
{
    return rate_expansion(phi_k) - phi_k * phi_k / (phi_k + 1.0) / phi;
}

double ratio_surrogate(double varpi, double theta, double varpi_k, double theta_k, double kp)
{
    const double a = varpi_k / (theta_k + 1.0);
    return kp * (2.0 * a * varpi - a * a * (theta + 1.0));
}

PairIndex PairIndex::build(const Clustering &clustering, bool with_amplitudes)
{
    const int N = clustering.num_ues();
    PairIndex idx;
    idx.pair_id = Eigen::MatrixXi::Constant(N, N, -1);
    idx.amp_id = Eigen::MatrixXi::Constant(N, N, -1);
    for (const auto &u : clustering.clusters)
        for (size_t i = 0; i < u.size(); ++i)
            for (size_t k = 0; k <= i; ++k)
            {
                idx.pair_id(u[i], u[k]) = int(idx.pairs.size());
                idx.pairs.emplace_back(u[i], u[k]);
            }
    if (with_amplitudes)
        for (const auto &u : clustering.clusters)
            for (size_t k = 0; k < u.size(); ++k)
                for (size_t j = 0; j < u.size(); ++j)
                    if (j != k || k + 1 < u.size())
                    {
                        idx.amp_id(u[k], u[j]) = int(idx.amp_keys.size());
                        idx.amp_keys.emplace_back(u[k], u[j]);
                    }
    return idx;
}

Tally reference_tally_cf(const Clustering &clustering, int M)
{
    Tally t;
    const long N = clustering.num_ues();
    long pairs = 0, chain = 0;
    for (const auto &c : clustering.clusters)
    {
        const long nl = long(c.size());
        pairs += nl * (nl - 1) / 2;
        chain += nl - 1;
    }
    t.variables = N * M + 3 * N + 3 * pairs;
    t.constraints = 8 * (pairs + long(M) * chain) + M;
    return t;
}

Tally reference_tally_co(const Clustering &clustering)
{
    Tally t;
    const long N = clustering.num_ues();
    long pairs = 0;
    double c = 0.0;
    for (const auto &cl : clustering.clusters)
    {
        const long nl = long(cl.size());
        pairs += nl * (nl - 1) / 2;
        c += double(nl * (nl - 1)) + double((nl - 1) * (nl - 1)) / 2.0;
    }
    t.variables = 4 * N + pairs;
    t.constraints = long(std::floor(c)) + 2 * N + 1;
    return t;
}

SurrogatePoint derive_point_cf(const Eigen::MatrixXd &rho_hat, const FadingMap &f, const Clustering &clustering,
                               const SystemConfig &config)
{
    const double kp = kp_of(config);
    const int M = int(f.beta.rows()), N = int(f.beta.cols());
    if (rho_hat.rows() != M || rho_hat.cols() != N)
        throw InvalidPoint("power amplitude matrix has the wrong shape");
    const auto idx = PairIndex::build(clustering, true);
    const auto assign = clustering.assignment();
    const auto pos = clustering.positions();
    const Eigen::MatrixXd sg = f.gamma.cwiseSqrt();
    const Eigen::MatrixXd err = f.beta - f.gamma;
    const Eigen::MatrixXd q = rho_hat.transpose() * sg;                      // q(i, e)
    const Eigen::MatrixXd leak = rho_hat.cwiseAbs2().transpose() * err;     // leak(j, e)

    SurrogatePoint pt;
    pt.rho_hat = rho_hat;
    pt.varpi.resize(Eigen::Index(idx.pairs.size()));
    pt.theta.resize(Eigen::Index(idx.pairs.size()));
    pt.amp.resize(Eigen::Index(idx.amp_keys.size()));
    pt.phi = Eigen::VectorXd::Constant(N, std::numeric_limits<double>::infinity());
    for (size_t k = 0; k < idx.amp_keys.size(); ++k)
        pt.amp(Eigen::Index(k)) = q(idx.amp_keys[k].second, idx.amp_keys[k].first);
    for (size_t p = 0; p < idx.pairs.size(); ++p)
    {
        const auto [t, e] = idx.pairs[p];
        double th = 0.0;
        for (int j = 0; j < N; ++j)
        {
            const double w = zeta_weight(assign, pos, config, j, t);
            th += w * leak(j, e);
            if (j != t && assign[size_t(j)] == assign[size_t(t)])
                th += w * kp * q(j, e) * q(j, e);
        }
        pt.varpi(Eigen::Index(p)) = q(t, e);
        pt.theta(Eigen::Index(p)) = th;
        pt.phi(t) = std::min(pt.phi(t), kp * q(t, e) * q(t, e) / (th + 1.0));
    }
    return pt;
}

SurrogatePoint derive_point_co(const Eigen::VectorXd &rho_hat, const CollocatedStats &s, const Clustering &clustering,
                               const SystemConfig &config)
{
    const double kp = kp_of(config);
    const int N = int(s.beta.size());
    if (rho_hat.size() != N)
        throw InvalidPoint("power amplitude vector has the wrong size");
    const auto idx = PairIndex::build(clustering, false);
    const auto assign = clustering.assignment();
    const auto pos = clustering.positions();
    SurrogatePoint pt;
    pt.rho_hat = rho_hat.transpose();
    pt.theta.resize(Eigen::Index(idx.pairs.size()));
    pt.phi = Eigen::VectorXd::Constant(N, std::numeric_limits<double>::infinity());
    for (size_t p = 0; p < idx.pairs.size(); ++p)
    {
        const auto [t, e] = idx.pairs[p];
        double th = 0.0;
        for (int j = 0; j < N; ++j)
        {
            const double w = zeta_weight(assign, pos, config, j, t);
            const double pj = rho_hat(j) * rho_hat(j);
            th += w * pj * (s.beta(e) - s.gamma(e));
            if (j != t && assign[size_t(j)] == assign[size_t(t)])
                th += w * kp * s.gamma(e) * pj;
        }
        pt.theta(Eigen::Index(p)) = th;
        pt.phi(t) = std::min(pt.phi(t), kp * s.gamma(e) * rho_hat(t) * rho_hat(t) / (th + 1.0));
    }
    return pt;
}

Subproblem build_cf_subproblem(const SurrogatePoint &pt, const FadingMap &f, const Clustering &clustering,
                               const SystemConfig &config)
{
    const double kp = kp_of(config);
    const int M = int(f.beta.rows()), N = int(f.beta.cols());
    clustering.validate(N);
    if (int(config.dl_power_budget.size()) != M || int(config.sic_coeff.size()) != N)
        throw InvalidConfig("config does not match the fading map");

    Subproblem sub;
    sub.cell_free = true;
    sub.index = PairIndex::build(clustering, true);
    const auto &idx = sub.index;
    const auto P = Eigen::Index(idx.pairs.size());
    if (pt.rho_hat.rows() != M || pt.rho_hat.cols() != N || pt.phi.size() != N || pt.varpi.size() != P ||
        pt.theta.size() != P)
        throw InvalidPoint("expansion point has the wrong shape");
    check_powers(pt.rho_hat, clustering, config.dl_power_budget);

    const auto assign = clustering.assignment();
    const auto pos = clustering.positions();
    const Eigen::MatrixXd sg = f.gamma.cwiseSqrt();
    const Eigen::MatrixXd err = (f.beta - f.gamma).cwiseMax(0.0);
    const Eigen::MatrixXd q = pt.rho_hat.transpose() * sg;
    const Eigen::MatrixXd leak = pt.rho_hat.cwiseAbs2().transpose() * err;

    for (Eigen::Index p = 0; p < P; ++p)
    {
        const auto [t, e] = idx.pairs[size_t(p)];
        const double vp = pt.varpi(p), th = pt.theta(p), ph = pt.phi(t);
        double inter = 0.0;
        for (int j = 0; j < N; ++j)
        {
            const double w = zeta_weight(assign, pos, config, j, t);
            inter += w * leak(j, e);
            if (j != t && assign[size_t(j)] == assign[size_t(t)])
                inter += w * kp * q(j, e) * q(j, e);
        }
        if (!(ph > 0.0) || !std::isfinite(ph) || !(vp > 0.0) || !std::isfinite(th))
            throw InvalidPoint("expansion point must have positive SINR and amplitude targets");
        if (vp > q(t, e) * (1.0 + kPointTol))
            throw InvalidPoint("desired amplitude target exceeds the achieved amplitude");
        if (th < inter * (1.0 - kPointTol) - kPointTol)
            throw InvalidPoint("interference target below the achieved interference");
        if (kp * vp * vp / (th + 1.0) < ph * (1.0 - kPointTol))
            throw InvalidPoint("SINR target not supported by the expansion point");
    }

    auto &prog = sub.program;
    auto &lay = sub.layout;
    lay.M = M;
    lay.N = N;
    lay.rho_scale = rho_scale_of(config.dl_power_budget);
    const double S = lay.rho_scale;
    lay.rho0 = 0;
    for (int n = 0; n < N; ++n)
        for (int m = 0; m < M; ++m)
            prog.add_variable("rho_hat[" + std::to_string(m) + "," + std::to_string(n) + "]");
    lay.r0 = prog.num_variables();
    for (int n = 0; n < N; ++n)
        prog.add_variable("r[" + std::to_string(n) + "]", -config.prelog());
    lay.phi0 = prog.num_variables();
    for (int n = 0; n < N; ++n)
        prog.add_variable("phi[" + std::to_string(n) + "]");
    lay.phibar0 = prog.num_variables();
    for (int n = 0; n < N; ++n)
        prog.add_variable("phibar[" + std::to_string(n) + "]");
    lay.varpi0 = prog.num_variables();
    for (const auto &[t, e] : idx.pairs)
        prog.add_variable("varpi[" + std::to_string(t) + "," + std::to_string(e) + "]");
    lay.theta0 = prog.num_variables();
    for (const auto &[t, e] : idx.pairs)
        prog.add_variable("theta[" + std::to_string(t) + "," + std::to_string(e) + "]");
    lay.amp0 = prog.num_variables();
    for (const auto &[e, i] : idx.amp_keys)
        prog.add_variable("tau[" + std::to_string(e) + "," + std::to_string(i) + "]");

    for (Eigen::Index p = 0; p < P; ++p)
    {
        const auto [t, e] = idx.pairs[size_t(p)];
        AffineExpr d;
        d.add(lay.varpi0 + int(p), 1.0);
        for (int m = 0; m < M; ++m)
            if (sg(m, e) > 0.0)
                d.add(lay.rho(m, t), -S * sg(m, e));
        prog.add_le(std::move(d), "desired");
    }
    for (size_t k = 0; k < idx.amp_keys.size(); ++k)
    {
        const auto [e, i] = idx.amp_keys[k];
        AffineExpr d;
        for (int m = 0; m < M; ++m)
            if (sg(m, e) > 0.0)
                d.add(lay.rho(m, i), S * sg(m, e));
        d.add(lay.amp0 + int(k), -1.0);
        prog.add_le(std::move(d), "amplitude");
    }
    for (Eigen::Index p = 0; p < P; ++p)
    {
        const auto [t, e] = idx.pairs[size_t(p)];
        const int th = lay.theta0 + int(p);
        std::vector<AffineExpr> lhs;
        for (int i = 0; i < N; ++i)
            if (i != t && assign[size_t(i)] == assign[size_t(t)])
            {
                const double w = zeta_weight(assign, pos, config, i, t) * kp;
                if (w > 0.0)
                    lhs.push_back(AffineExpr{}.add(lay.amp0 + idx.amp_id(e, i), std::sqrt(w)));
            }
        for (int j = 0; j < N; ++j)
        {
            const double w = zeta_weight(assign, pos, config, j, t);
            for (int m = 0; m < M; ++m)
                if (w * err(m, e) > 0.0)
                    lhs.push_back(AffineExpr{}.add(lay.rho(m, j), S * std::sqrt(w * err(m, e))));
        }
        add_interference_cone(prog, std::move(lhs), th, pt.theta(p));
    }
    for (Eigen::Index p = 0; p < P; ++p)
    {
        const auto [t, e] = idx.pairs[size_t(p)];
        const double a = pt.varpi(p) / (pt.theta(p) + 1.0);
        AffineExpr d;
        d.add(lay.phi0 + t, 1.0).add(lay.varpi0 + int(p), -2.0 * kp * a).add(lay.theta0 + int(p), kp * a * a);
        d.constant = kp * a * a;
        prog.add_le(std::move(d), "ratio");
    }
    add_rate_and_hyperbolic(prog, lay, pt.phi);
    add_power_order(prog, lay, clustering, config.dl_power_budget);
    return sub;
}

Subproblem build_co_subproblem(const SurrogatePoint &pt, const CollocatedStats &s, const Clustering &clustering,
                               const SystemConfig &config)
{
    const double kp = kp_of(config);
    const int N = int(s.beta.size());
    clustering.validate(N);
    if (config.dl_power_budget.size() != 1 || int(config.sic_coeff.size()) != N)
        throw InvalidConfig("collocated config needs one budget and N SIC coefficients");

    Subproblem sub;
    sub.cell_free = false;
    sub.index = PairIndex::build(clustering, false);
    const auto &idx = sub.index;
    const auto P = Eigen::Index(idx.pairs.size());
    if (pt.rho_hat.rows() != 1 || pt.rho_hat.cols() != N || pt.phi.size() != N || pt.theta.size() != P)
        throw InvalidPoint("expansion point has the wrong shape");
    check_powers(pt.rho_hat, clustering, config.dl_power_budget);

    const auto assign = clustering.assignment();
    const auto pos = clustering.positions();
    const Eigen::VectorXd rh = pt.rho_hat.row(0).transpose();
    for (Eigen::Index p = 0; p < P; ++p)
    {
        const auto [t, e] = idx.pairs[size_t(p)];
        double inter = 0.0;
        for (int j = 0; j < N; ++j)
        {
            const double w = zeta_weight(assign, pos, config, j, t);
            inter += w * rh(j) * rh(j) * (s.beta(e) - s.gamma(e));
            if (j != t && assign[size_t(j)] == assign[size_t(t)])
                inter += w * kp * s.gamma(e) * rh(j) * rh(j);
        }
        const double th = pt.theta(p), ph = pt.phi(t);
        if (!(ph > 0.0) || !std::isfinite(ph) || !(rh(t) > 0.0) || !std::isfinite(th))
            throw InvalidPoint("expansion point must have positive SINR and power");
        if (th < inter * (1.0 - kPointTol) - kPointTol)
            throw InvalidPoint("interference target below the achieved interference");
        if (kp * s.gamma(e) * rh(t) * rh(t) / (th + 1.0) < ph * (1.0 - kPointTol))
            throw InvalidPoint("SINR target not supported by the expansion point");
    }

    auto &prog = sub.program;
    auto &lay = sub.layout;
    lay.M = 1;
    lay.N = N;
    lay.rho_scale = rho_scale_of(config.dl_power_budget);
    const double S = lay.rho_scale;
    for (int n = 0; n < N; ++n)
        prog.add_variable("rho_hat[" + std::to_string(n) + "]");
    lay.r0 = prog.num_variables();
    for (int n = 0; n < N; ++n)
        prog.add_variable("r[" + std::to_string(n) + "]", -config.prelog());
    lay.phi0 = prog.num_variables();
    for (int n = 0; n < N; ++n)
        prog.add_variable("phi[" + std::to_string(n) + "]");
    lay.phibar0 = prog.num_variables();
    for (int n = 0; n < N; ++n)
        prog.add_variable("phibar[" + std::to_string(n) + "]");
    lay.theta0 = prog.num_variables();
    for (const auto &[t, e] : idx.pairs)
        prog.add_variable("theta[" + std::to_string(t) + "," + std::to_string(e) + "]");

    for (Eigen::Index p = 0; p < P; ++p)
    {
        const auto [t, e] = idx.pairs[size_t(p)];
        const double err = std::max(s.beta(e) - s.gamma(e), 0.0);
        std::vector<AffineExpr> lhs;
        for (int j = 0; j < N; ++j)
        {
            const double w = zeta_weight(assign, pos, config, j, t);
            double coef = w * err;
            if (j != t && assign[size_t(j)] == assign[size_t(t)])
                coef += w * kp * s.gamma(e);
            if (coef > 0.0)
                lhs.push_back(AffineExpr{}.add(lay.rho(0, j), S * std::sqrt(coef)));
        }
        add_interference_cone(prog, std::move(lhs), lay.theta0 + int(p), pt.theta(p));
    }
    for (Eigen::Index p = 0; p < P; ++p)
    {
        const auto [t, e] = idx.pairs[size_t(p)];
        const double den = pt.theta(p) + 1.0;
        const double g = kp * s.gamma(e);
        const double r0 = rh(t);
        AffineExpr d;
        d.add(lay.phi0 + t, 1.0).add(lay.rho(0, t), -g * 2.0 * r0 / den * S).add(lay.theta0 + int(p), g * r0 * r0 / (den * den));
        d.constant = g * r0 * r0 / (den * den);
        prog.add_le(std::move(d), "ratio");
    }
    add_rate_and_hyperbolic(prog, lay, pt.phi);
    add_power_order(prog, lay, clustering, config.dl_power_budget);
    return sub;
}

Eigen::MatrixXd solution_rho_hat(const Subproblem &sub, const ConicSolution &sol)
{
    const auto &lay = sub.layout;
    Eigen::MatrixXd rh(lay.M, lay.N);
    for (int m = 0; m < lay.M; ++m)
        for (int n = 0; n < lay.N; ++n)
            rh(m, n) = lay.rho_scale * sol.x(lay.rho(m, n));
    return rh;
}

Eigen::MatrixXd project_powers(const Eigen::MatrixXd &rho, const Clustering &clustering,
                               const std::vector<double> &budgets)
{
    Eigen::MatrixXd out = rho.cwiseMax(0.0);
    for (Eigen::Index m = 0; m < out.rows(); ++m)
    {
        for (const auto &members : clustering.clusters)
            for (size_t k = 1; k < members.size(); ++k)
                out(m, members[k]) = std::max(out(m, members[k]), out(m, members[k - 1]));
        const double cap = budgets[size_t(m)];
        double total = out.row(m).sum();
        if (total > cap)
        {
            out.row(m) *= cap > 0.0 ? cap / total : 0.0;
            while ((total = out.row(m).sum()) > cap)
                out.row(m) *= 1.0 - 4.0 * std::numeric_limits<double>::epsilon();
        }
    }
    return out;
}

const char *to_string(IaStatus s)
{
    switch (s)
    {
    case IaStatus::converged:
        return "converged";
    case IaStatus::max_outer:
        return "max_outer";
    case IaStatus::subproblem_failure:
        return "subproblem_failure";
    }
    return "unknown";
}

std::string IaHistory::to_csv() const
{
    std::ostringstream os;
    os << "iteration,objective,surrogate,sse,solver_status,solver_iterations\n";
    char buf[160];
    for (size_t k = 0; k < objective.size(); ++k)
    {
        std::snprintf(buf, sizeof buf, "%zu,%.12g,%.12g,%.12g,", k, objective[k], surrogate[k], sse[k]);
        os << buf << solver_status[k] << ',' << solver_iterations[k] << '\n';
    }
    return os.str();
}

namespace
{
Eigen::MatrixXd random_start(const Clustering &clustering, const std::vector<double> &budgets, int N,
                             double fraction, std::uint64_t seed)
{
    const int M = int(budgets.size());
    Rng rng(seed);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Eigen::MatrixXd rho(M, N);
    for (int m = 0; m < M; ++m)
    {
        for (const auto &members : clustering.clusters)
        {
            std::vector<double> v(members.size());
            for (double &x : v)
                x = u(rng);
            std::sort(v.begin(), v.end());
            for (size_t k = 0; k < members.size(); ++k)
                rho(m, members[k]) = v[k];
        }
        rho.row(m) *= fraction * budgets[size_t(m)] / rho.row(m).sum();
    }
    return rho;
}

template <class Derive, class Build, class Score>
IaResult run_ia(const Eigen::MatrixXd &rho_init, const Clustering &clustering, const SystemConfig &config,
                const IaOptions &opt, Derive derive, Build build, Score score)
{
    IaResult res;
    const double total_budget = std::accumulate(config.dl_power_budget.begin(), config.dl_power_budget.end(), 0.0);
    res.rho = rho_init;
    res.sse = score(res.rho);
    if (!(total_budget > 0.0))
    {
        res.rho.setZero();
        res.sse = score(res.rho);
        res.history.objective.push_back(0.0);
        res.history.surrogate.push_back(0.0);
        res.history.sse.push_back(res.sse);
        res.history.solver_status.push_back("initial");
        res.history.solver_iterations.push_back(0);
        return res;
    }

    auto tight_objective = [&](const SurrogatePoint &p) {
        double v = 0.0;
        for (Eigen::Index n = 0; n < p.phi.size(); ++n)
            v += config.prelog() * std::log2(1.0 + p.phi(n));
        return v;
    };
    SurrogatePoint pt = derive(res.rho.cwiseSqrt());
    double prev = tight_objective(pt);
    res.history.objective.push_back(prev);
    res.history.surrogate.push_back(0.0);
    res.history.sse.push_back(res.sse);
    res.history.solver_status.push_back("initial");
    res.history.solver_iterations.push_back(0);

    res.status = IaStatus::max_outer;
    for (int k = 1; k <= opt.max_outer; ++k)
    {
        Subproblem sub = build(pt);
        const ConicSolution sol = solve_conic(sub.program, opt.solver);
        const bool optimal = sol.status == SolveStatus::optimal;
        // A stalled solve close to optimality is still usable when it does not lower the objective
        const bool near_optimal = sol.status == SolveStatus::max_iters && sol.primal_residual <= kNearTol &&
                                  sol.dual_residual <= kNearTol && sol.duality_gap <= kNearTol;
        auto fail = [&] {
            res.status = IaStatus::subproblem_failure;
            res.warning = std::string("subproblem ") + to_string(sol.status) + " at iteration " + std::to_string(k) +
                          ": " + sol.diagnostics;
        };
        if (!optimal && !near_optimal)
        {
            fail();
            break;
        }
        const Eigen::MatrixXd rh = solution_rho_hat(sub, sol);
        const Eigen::MatrixXd rho = project_powers(rh.cwiseAbs2(), clustering, config.dl_power_budget);
        const SurrogatePoint next = derive(rho.cwiseSqrt());
        const double obj = tight_objective(next);
        if (!optimal && !(obj >= prev))
        {
            fail();
            break;
        }
        pt = next;
        res.rho = rho;
        res.sse = score(rho);
        res.iterations = k;
        res.history.objective.push_back(obj);
        res.history.surrogate.push_back(-sol.objective);
        res.history.sse.push_back(res.sse);
        res.history.solver_status.push_back(optimal ? to_string(sol.status) : "inaccurate");
        res.history.solver_iterations.push_back(sol.iterations);
        if ((obj - prev) / std::max(std::abs(prev), 1e-12) < opt.epsilon)
        {
            res.status = IaStatus::converged;
            break;
        }
        prev = obj;
    }
    return res;
}
} // namespace

IaResult ia_maximize_cf(const FadingMap &f, const Clustering &clustering, const SystemConfig &config,
                        const IaOptions &opt)
{
    config.validate();
    clustering.validate(int(f.beta.cols()));
    if (f.beta.rows() != config.num_aps || f.beta.cols() != config.num_ues)
        throw InvalidConfig("fading map does not match the config");
    const Eigen::MatrixXd init =
        opt.random_init_seed
            ? random_start(clustering, config.dl_power_budget, config.num_ues, opt.init_fraction, *opt.random_init_seed)
            : Eigen::MatrixXd(opt.init_fraction * fixed_pa_cf(f.gamma, clustering, config, opt.alpha));
    return run_ia(
        init, clustering, config, opt,
        [&](const Eigen::MatrixXd &rh) { return derive_point_cf(rh, f, clustering, config); },
        [&](const SurrogatePoint &pt) { return build_cf_subproblem(pt, f, clustering, config); },
        [&](const Eigen::MatrixXd &rho) { return sum_se_cf(f, clustering, config, rho); });
}

IaResult ia_maximize_co(const CollocatedStats &s, const Clustering &clustering, const SystemConfig &config,
                        const IaOptions &opt)
{
    config.validate();
    clustering.validate(int(s.beta.size()));
    if (config.num_aps != 1 || config.dl_power_budget.size() != 1)
        throw InvalidConfig("collocated config must describe a single site");
    const Eigen::MatrixXd init =
        opt.random_init_seed
            ? random_start(clustering, config.dl_power_budget, config.num_ues, opt.init_fraction, *opt.random_init_seed)
            : Eigen::MatrixXd(opt.init_fraction * fixed_pa_co(s.gamma, clustering, config.dl_power_budget[0], opt.alpha).transpose());
    return run_ia(
        init, clustering, config, opt,
        [&](const Eigen::MatrixXd &rh) { return derive_point_co(rh.row(0).transpose(), s, clustering, config); },
        [&](const SurrogatePoint &pt) { return build_co_subproblem(pt, s, clustering, config); },
        [&](const Eigen::MatrixXd &rho) { return sum_se_co(s, clustering, config, rho.row(0).transpose()); });
}

} // namespace cfnoma
