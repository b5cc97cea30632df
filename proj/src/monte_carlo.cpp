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

#include "cfnoma/monte_carlo.hpp"
#include "cfnoma/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <thread>

namespace cfnoma
{

namespace
{
using cd = std::complex<double>;

struct Pair
{
    int target;
    int evaluator;
};

struct Accumulator
{
    std::vector<cd> sum_x;
    std::vector<double> sum_x2, ici, rici, ui;
    int resampled = 0;
    double zf_leak = 0.0;

    explicit Accumulator(size_t P) : sum_x(P), sum_x2(P), ici(P), rici(P), ui(P) {}

    void add(const Accumulator &o)
    {
        for (size_t p = 0; p < sum_x.size(); ++p)
        {
            sum_x[p] += o.sum_x[p];
            sum_x2[p] += o.sum_x2[p];
            ici[p] += o.ici[p];
            rici[p] += o.rici[p];
            ui[p] += o.ui[p];
        }
        resampled += o.resampled;
        zf_leak = std::max(zf_leak, o.zf_leak);
    }
};

struct Context
{
    const SystemConfig &config;
    const FadingMap &fading;
    const Eigen::MatrixXd &rho;
    std::vector<int> assign, pos;
    std::vector<Pair> pairs;
    double max_condition;
};

void run_chunk(const Context &ctx, std::uint64_t seed, int count, Accumulator &acc)
{
    const auto &beta = ctx.fading.beta;
    const int M = int(beta.rows()), N = int(beta.cols());
    const int K = ctx.config.num_antennas, tp = ctx.config.tau_p();
    const double kp = K - tp;
    const int L = int(*std::max_element(ctx.assign.begin(), ctx.assign.end())) + 1;

    Rng rng(seed);
    std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
    auto cn = [&]() { return cd(nd(rng), nd(rng)); };

    Eigen::MatrixXcd h(K, N), Y(K, tp), W(K, tp), G(N, tp), X(N, N);
    for (int r = 0; r < count; ++r)
    {
        X.setZero();
        for (int m = 0; m < M; ++m)
        {
            Eigen::MatrixXcd gram;
            for (;;)
            {
                for (int n = 0; n < N; ++n)
                    for (int k = 0; k < K; ++k)
                        h(k, n) = std::sqrt(beta(m, n)) * cn();
                for (int l = 0; l < tp; ++l)
                    for (int k = 0; k < K; ++k)
                        Y(k, l) = std::sqrt(double(tp)) * cn();
                for (int n = 0; n < N; ++n)
                    Y.col(ctx.assign[size_t(n)]) += double(tp) * std::sqrt(ctx.config.ul_pilot_power[size_t(n)]) * h.col(n);
                gram = Y.adjoint() * Y;
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram, Eigen::EigenvaluesOnly);
                const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
                if (lo > 0.0 && hi / lo <= ctx.max_condition)
                    break;
                ++acc.resampled;
            }
            W = Y * gram.ldlt().solve(Eigen::MatrixXcd::Identity(tp, tp));
            for (int l = 0; l < L; ++l)
            {
                double load = 0.0;
                for (int n = 0; n < N; ++n)
                    if (ctx.assign[size_t(n)] == l)
                        load += ctx.config.ul_pilot_power[size_t(n)] * beta(m, n);
                const double expected = 1.0 / (tp * (tp * load + 1.0) * kp);
                W.col(l) /= std::sqrt(expected);
            }
            G = h.adjoint() * W;

            for (int n = 0; n < N; ++n)
            {
                const int ln = ctx.assign[size_t(n)];
                const Eigen::VectorXcd est = ctx.fading.upsilon(m, n) * Y.col(ln);
                const double own = std::abs(est.dot(W.col(ln)));
                for (int l = 0; l < L; ++l)
                    if (l != ln && own > 0.0)
                        acc.zf_leak = std::max(acc.zf_leak, std::abs(est.dot(W.col(l))) / own);
            }
            for (int e = 0; e < N; ++e)
                for (int j = 0; j < N; ++j)
                    X(e, j) += std::sqrt(ctx.rho(m, j)) * G(e, ctx.assign[size_t(j)]);
        }

        for (size_t p = 0; p < ctx.pairs.size(); ++p)
        {
            const int t = ctx.pairs[p].target, e = ctx.pairs[p].evaluator;
            const cd x = X(e, t);
            acc.sum_x[p] += x;
            acc.sum_x2[p] += std::norm(x);
            const double zeta = ctx.config.sic_coeff[size_t(t)];
            for (int j = 0; j < N; ++j)
            {
                if (j == t)
                    continue;
                const double v = std::norm(X(e, j));
                if (ctx.assign[size_t(j)] != ctx.assign[size_t(t)])
                    acc.ui[p] += v;
                else if (ctx.pos[size_t(j)] < ctx.pos[size_t(t)])
                    acc.ici[p] += v;
                else
                    acc.rici[p] += zeta * v;
            }
        }
    }
}
} // namespace

double relative_error(double empirical, double reference)
{
    if (reference == 0.0)
        return empirical == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::abs(empirical - reference) / std::abs(reference);
}

bool McReport::within(double tol) const
{
    for (double e : max_term_error)
        if (!(e <= tol))
            return false;
    return max_se_error <= tol;
}

McReport mc_verify(const SystemConfig &config, const Eigen::MatrixXd &beta, const Clustering &clustering,
                   const Eigen::MatrixXd &rho, const McOptions &options)
{
    const int N = int(beta.cols());
    if (options.realizations < 1)
        throw InvalidInput("realizations must be positive");
    if (config.num_antennas <= config.tau_p())
        throw InvalidConfig("K must exceed the pilot length");
    const FadingMap fading = estimation_stats(beta, clustering, config);

    Context ctx{config, fading, rho, clustering.assignment(), clustering.positions(), {}, options.max_condition};
    std::vector<size_t> own_pair(static_cast<size_t>(N));
    for (const auto &members : clustering.clusters)
        for (size_t i = 0; i < members.size(); ++i)
            for (size_t k = 0; k <= i; ++k)
            {
                if (k == i)
                    own_pair[size_t(members[i])] = ctx.pairs.size();
                ctx.pairs.push_back({members[i], members[k]});
            }

    const int chunk = 250;
    const int nchunks = (options.realizations + chunk - 1) / chunk;
    std::vector<Accumulator> parts(size_t(nchunks), Accumulator(ctx.pairs.size()));
    auto work = [&](int first, int stride) {
        for (int c = first; c < nchunks; c += stride)
        {
            const int count = std::min(chunk, options.realizations - c * chunk);
            run_chunk(ctx, derive_seed({options.seed, std::uint64_t(c)}), count, parts[size_t(c)]);
        }
    };
    const int threads = std::max(1, std::min(options.threads, nchunks));
    if (threads == 1)
        work(0, 1);
    else
    {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back(work, t, threads);
        for (auto &th : pool)
            th.join();
    }
    Accumulator total(ctx.pairs.size());
    for (const auto &p : parts)
        total.add(p);

    const double R = options.realizations;
    std::vector<SinrBreakdown> emp(ctx.pairs.size());
    for (size_t p = 0; p < ctx.pairs.size(); ++p)
    {
        const cd mean = total.sum_x[p] / R;
        auto &b = emp[p];
        b.ds = std::norm(mean);
        b.bu = total.sum_x2[p] / R - b.ds;
        b.ici = total.ici[p] / R;
        b.rici = total.rici[p] / R;
        b.ui = total.ui[p] / R;
        b.sinr = b.ds / (b.interference() + 1.0);
    }

    McReport rep;
    rep.realizations = options.realizations;
    rep.resampled = total.resampled;
    rep.max_zf_leak = total.zf_leak;
    const auto &pos = ctx.pos;
    for (int n = 0; n < N; ++n)
    {
        const auto cf = sinr_cf(fading, clustering, config, rho, n, n);
        const auto &em = emp[own_pair[size_t(n)]];
        rep.closed_form.push_back(cf);
        rep.empirical.push_back(em);
        const std::array<double, 5> err{relative_error(em.ds, cf.ds), relative_error(em.bu, cf.bu),
                                        relative_error(em.ici, cf.ici), relative_error(em.rici, cf.rici),
                                        relative_error(em.ui, cf.ui)};
        for (size_t k = 0; k < 5; ++k)
            rep.max_term_error[k] = std::max(rep.max_term_error[k], err[k]);

        double worst = std::numeric_limits<double>::infinity();
        for (int k = 0; k <= pos[size_t(n)]; ++k)
            worst = std::min(worst, emp[own_pair[size_t(n)] - size_t(pos[size_t(n)] - k)].sinr);
        rep.se_empirical.push_back(config.prelog() * std::log2(1.0 + worst));
        rep.se_closed_form.push_back(user_se_cf(fading, clustering, config, rho, n));
        rep.max_se_error = std::max(rep.max_se_error, relative_error(rep.se_empirical.back(), rep.se_closed_form.back()));
    }
    return rep;
}

} // namespace cfnoma
