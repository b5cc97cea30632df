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

#include "cfnoma/conic.hpp"
#include "cfnoma/types.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace cfnoma
{

double AffineExpr::eval(const Eigen::VectorXd &x) const
{
    double v = constant;
    for (const auto &[i, c] : terms)
        v += c * x(i);
    return v;
}

int ConicProgram::add_variable(std::string name, double c)
{
    names.push_back(std::move(name));
    cost.push_back(c);
    return int(cost.size()) - 1;
}

void ConicProgram::add_le(AffineExpr expr, std::string tag)
{
    linear.push_back({std::move(expr), false, std::move(tag)});
}

void ConicProgram::add_eq(AffineExpr expr, std::string tag)
{
    linear.push_back({std::move(expr), true, std::move(tag)});
}

void ConicProgram::add_soc(std::vector<AffineExpr> lhs, AffineExpr rhs, std::string tag)
{
    soc.push_back({std::move(lhs), std::move(rhs), std::move(tag)});
}

double ConicProgram::objective(const Eigen::VectorXd &x) const
{
    double v = 0.0;
    for (int i = 0; i < num_variables(); ++i)
        v += cost[size_t(i)] * x(i);
    return v;
}

double ConicProgram::max_violation(const Eigen::VectorXd &x) const
{
    double worst = 0.0;
    for (const auto &c : linear)
    {
        const double v = c.expr.eval(x);
        worst = std::max(worst, c.equality ? std::abs(v) : v);
    }
    for (const auto &c : soc)
    {
        double sq = 0.0;
        for (const auto &e : c.lhs)
            sq += std::pow(e.eval(x), 2);
        worst = std::max(worst, std::sqrt(sq) - c.rhs.eval(x));
    }
    return worst;
}

void ConicProgram::validate() const
{
    const int n = num_variables();
    if (names.size() != cost.size())
        throw InvalidInput("variable names and costs differ in length");
    auto check = [&](const AffineExpr &e) {
        if (!std::isfinite(e.constant))
            throw InvalidInput("non-finite constant in constraint");
        for (const auto &[i, c] : e.terms)
        {
            if (i < 0 || i >= n)
                throw InvalidInput("constraint references an unknown variable");
            if (!std::isfinite(c))
                throw InvalidInput("non-finite coefficient in constraint");
        }
    };
    for (double c : cost)
        if (!std::isfinite(c))
            throw InvalidInput("non-finite objective coefficient");
    for (const auto &c : linear)
        check(c.expr);
    for (const auto &c : soc)
    {
        check(c.rhs);
        for (const auto &e : c.lhs)
            check(e);
    }
}

namespace
{
void dump_expr(std::ostringstream &os, const AffineExpr &e)
{
    char buf[64];
    os << e.terms.size();
    for (const auto &[i, c] : e.terms)
    {
        std::snprintf(buf, sizeof buf, " %d:%.17g", i, c);
        os << buf;
    }
    std::snprintf(buf, sizeof buf, " %.17g", e.constant);
    os << " const" << buf << '\n';
}
} // namespace

std::string ConicProgram::dump() const
{
    std::ostringstream os;
    char buf[64];
    os << "conic-program 1\n";
    os << "variables " << num_variables() << '\n';
    for (int i = 0; i < num_variables(); ++i)
    {
        std::snprintf(buf, sizeof buf, "%.17g", cost[size_t(i)]);
        os << i << ' ' << names[size_t(i)] << ' ' << buf << '\n';
    }
    os << "linear " << linear.size() << '\n';
    for (const auto &c : linear)
    {
        os << (c.equality ? "eq " : "le ") << (c.tag.empty() ? "-" : c.tag) << ' ';
        dump_expr(os, c.expr);
    }
    os << "soc " << soc.size() << '\n';
    for (const auto &c : soc)
    {
        os << "cone " << (c.tag.empty() ? "-" : c.tag) << ' ' << c.lhs.size() + 1 << '\n';
        os << "  rhs ";
        dump_expr(os, c.rhs);
        for (const auto &e : c.lhs)
        {
            os << "  lhs ";
            dump_expr(os, e);
        }
    }
    return os.str();
}

const char *to_string(SolveStatus s)
{
    switch (s)
    {
    case SolveStatus::optimal:
        return "optimal";
    case SolveStatus::infeasible:
        return "infeasible";
    case SolveStatus::unbounded:
        return "unbounded";
    case SolveStatus::max_iters:
        return "max_iters";
    }
    return "unknown";
}

namespace
{
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct SparseRows
{
    std::vector<std::vector<std::pair<int, double>>> rows;
    int cols = 0;

    Vec mul(const Vec &x) const
    {
        Vec y = Vec::Zero(Eigen::Index(rows.size()));
        for (size_t r = 0; r < rows.size(); ++r)
            for (const auto &[j, v] : rows[r])
                y(Eigen::Index(r)) += v * x(j);
        return y;
    }
    Vec tmul(const Vec &y) const
    {
        Vec x = Vec::Zero(cols);
        for (size_t r = 0; r < rows.size(); ++r)
            if (y(Eigen::Index(r)) != 0.0)
                for (const auto &[j, v] : rows[r])
                    x(j) += v * y(Eigen::Index(r));
        return x;
    }
    Vec tmul_range(const Vec &y, int off, int d) const
    {
        Vec x = Vec::Zero(cols);
        for (int r = 0; r < d; ++r)
            for (const auto &[j, v] : rows[size_t(off + r)])
                x(j) += v * y(r);
        return x;
    }
};

// Merges duplicate variable references
std::vector<std::pair<int, double>> compress(const AffineExpr &e, double sign)
{
    std::vector<std::pair<int, double>> t;
    for (const auto &[i, c] : e.terms)
        t.emplace_back(i, sign * c);
    std::sort(t.begin(), t.end(), [](auto a, auto b) { return a.first < b.first; });
    std::vector<std::pair<int, double>> out;
    for (const auto &p : t)
    {
        if (!out.empty() && out.back().first == p.first)
            out.back().second += p.second;
        else
            out.push_back(p);
    }
    return out;
}

struct Cones
{
    int lp = 0;
    std::vector<int> dim, off;
    int m = 0;
    int degree() const { return lp + int(dim.size()); }
};

struct Data
{
    int n = 0, p = 0;
    Vec c, b, h;
    SparseRows A, G;
    Cones K;
};

Data canonicalize(const ConicProgram &prog)
{
    Data d;
    d.n = prog.num_variables();
    d.c = Eigen::Map<const Vec>(prog.cost.data(), d.n);
    d.A.cols = d.G.cols = d.n;
    std::vector<double> b, h;
    for (const auto &lc : prog.linear)
        if (lc.equality)
        {
            d.A.rows.push_back(compress(lc.expr, 1.0));
            b.push_back(-lc.expr.constant);
        }
    for (const auto &lc : prog.linear)
        if (!lc.equality)
        {
            d.G.rows.push_back(compress(lc.expr, 1.0));
            h.push_back(-lc.expr.constant);
        }
    d.K.lp = int(h.size());
    for (const auto &sc : prog.soc)
    {
        d.K.off.push_back(int(h.size()));
        d.K.dim.push_back(int(sc.lhs.size()) + 1);
        d.G.rows.push_back(compress(sc.rhs, -1.0));
        h.push_back(sc.rhs.constant);
        for (const auto &e : sc.lhs)
        {
            d.G.rows.push_back(compress(e, -1.0));
            h.push_back(e.constant);
        }
    }
    d.K.m = int(h.size());
    d.p = int(b.size());
    d.b = Eigen::Map<Vec>(b.data(), Eigen::Index(b.size()));
    d.h = Eigen::Map<Vec>(h.data(), Eigen::Index(h.size()));
    return d;
}

struct Equilibration
{
    Vec col; // x = col .* x_scaled
    Vec eq;  // row factors of A
    Vec ineq; // row factors of G, constant within each cone
};

// Ruiz scaling towards unit infinity norms of rows and columns
Equilibration equilibrate(Data &d, int passes = 25)
{
    Equilibration q;
    q.col = Vec::Ones(d.n);
    q.eq = Vec::Ones(d.p);
    q.ineq = Vec::Ones(d.K.m);
    auto safe = [](double v) { return v > 0.0 ? 1.0 / std::sqrt(v) : 1.0; };
    for (int pass = 0; pass < passes; ++pass)
    {
        Vec cn = Vec::Zero(d.n), en = Vec::Zero(d.p), gn = Vec::Zero(d.K.m);
        for (int r = 0; r < d.p; ++r)
            for (const auto &[j, v] : d.A.rows[size_t(r)])
            {
                cn(j) = std::max(cn(j), std::abs(v));
                en(r) = std::max(en(r), std::abs(v));
            }
        for (int r = 0; r < d.K.m; ++r)
            for (const auto &[j, v] : d.G.rows[size_t(r)])
            {
                cn(j) = std::max(cn(j), std::abs(v));
                gn(r) = std::max(gn(r), std::abs(v));
            }
        for (size_t k = 0; k < d.K.dim.size(); ++k)
        {
            const double mx = gn.segment(d.K.off[k], d.K.dim[k]).maxCoeff();
            gn.segment(d.K.off[k], d.K.dim[k]).setConstant(mx);
        }
        Vec fc(d.n), fe(d.p), fg(d.K.m);
        for (int j = 0; j < d.n; ++j)
            fc(j) = safe(cn(j));
        for (int r = 0; r < d.p; ++r)
            fe(r) = safe(en(r));
        for (int r = 0; r < d.K.m; ++r)
            fg(r) = safe(gn(r));
        double change = 0.0;
        for (int r = 0; r < d.p; ++r)
            for (auto &[j, v] : d.A.rows[size_t(r)])
                v *= fe(r) * fc(j);
        for (int r = 0; r < d.K.m; ++r)
            for (auto &[j, v] : d.G.rows[size_t(r)])
                v *= fg(r) * fc(j);
        q.col.array() *= fc.array();
        q.eq.array() *= fe.array();
        q.ineq.array() *= fg.array();
        change = std::max({(fc.array() - 1.0).abs().maxCoeff(), d.p ? (fe.array() - 1.0).abs().maxCoeff() : 0.0,
                           d.K.m ? (fg.array() - 1.0).abs().maxCoeff() : 0.0});
        if (change < 1e-3)
            break;
    }
    d.c.array() *= q.col.array();
    d.b.array() *= q.eq.array();
    d.h.array() *= q.ineq.array();
    return q;
}

double soc_det(const double *v, int d)
{
    double t = 0.0;
    for (int i = 1; i < d; ++i)
        t += v[i] * v[i];
    const double nrm = std::sqrt(t);
    return (v[0] - nrm) * (v[0] + nrm);
}

double min_eig(const Cones &K, const Vec &v)
{
    double r = std::numeric_limits<double>::infinity();
    for (int i = 0; i < K.lp; ++i)
        r = std::min(r, v(i));
    for (size_t k = 0; k < K.dim.size(); ++k)
    {
        const int o = K.off[k], d = K.dim[k];
        r = std::min(r, v(o) - v.segment(o + 1, d - 1).norm());
    }
    return r;
}

void add_identity(const Cones &K, Vec &v, double a)
{
    for (int i = 0; i < K.lp; ++i)
        v(i) += a;
    for (int o : K.off)
        v(o) += a;
}

Vec identity(const Cones &K)
{
    Vec e = Vec::Zero(K.m);
    add_identity(K, e, 1.0);
    return e;
}

Vec jordan(const Cones &K, const Vec &u, const Vec &v)
{
    Vec w(K.m);
    for (int i = 0; i < K.lp; ++i)
        w(i) = u(i) * v(i);
    for (size_t k = 0; k < K.dim.size(); ++k)
    {
        const int o = K.off[k], d = K.dim[k];
        w(o) = u.segment(o, d).dot(v.segment(o, d));
        w.segment(o + 1, d - 1) = u(o) * v.segment(o + 1, d - 1) + v(o) * u.segment(o + 1, d - 1);
    }
    return w;
}

// Solves lam o x = d
Vec jordan_div(const Cones &K, const Vec &lam, const Vec &dv)
{
    Vec x(K.m);
    for (int i = 0; i < K.lp; ++i)
        x(i) = dv(i) / lam(i);
    for (size_t k = 0; k < K.dim.size(); ++k)
    {
        const int o = K.off[k], d = K.dim[k];
        const double l0 = lam(o), d0 = dv(o);
        const double ld = lam.segment(o + 1, d - 1).dot(dv.segment(o + 1, d - 1));
        const double det = soc_det(lam.data() + o, d);
        const double x0 = (l0 * d0 - ld) / det;
        x(o) = x0;
        x.segment(o + 1, d - 1) = (dv.segment(o + 1, d - 1) - x0 * lam.segment(o + 1, d - 1)) / l0;
    }
    return x;
}

struct Scaling
{
    Vec dlp;                 // W = diag(dlp) on the linear part
    std::vector<double> eta; // W = eta (2 v v' - J) per cone
    std::vector<Vec> v;
    Vec lambda;
};

bool compute_scaling(const Cones &K, const Vec &s, const Vec &z, Scaling &sc)
{
    sc.dlp.resize(K.lp);
    for (int i = 0; i < K.lp; ++i)
    {
        if (!(s(i) > 0.0 && z(i) > 0.0))
            return false;
        sc.dlp(i) = std::sqrt(s(i) / z(i));
    }
    sc.eta.resize(K.dim.size());
    sc.v.resize(K.dim.size());
    for (size_t k = 0; k < K.dim.size(); ++k)
    {
        const int o = K.off[k], d = K.dim[k];
        const double sd = soc_det(s.data() + o, d), zd = soc_det(z.data() + o, d);
        if (!(sd > 0.0 && zd > 0.0 && s(o) > 0.0 && z(o) > 0.0))
            return false;
        Vec sb = s.segment(o, d) / std::sqrt(sd);
        Vec zb = z.segment(o, d) / std::sqrt(zd);
        const double g = std::sqrt((1.0 + sb.dot(zb)) / 2.0);
        Vec w = sb;
        w(0) += zb(0);
        w.tail(d - 1) -= zb.tail(d - 1);
        w /= 2.0 * g;
        w(0) += 1.0;
        sc.v[k] = w / std::sqrt(2.0 * w(0));
        sc.eta[k] = std::pow(sd / zd, 0.25);
    }
    return true;
}

Vec apply_W(const Cones &K, const Scaling &sc, const Vec &x, bool inverse)
{
    Vec y(K.m);
    for (int i = 0; i < K.lp; ++i)
        y(i) = inverse ? x(i) / sc.dlp(i) : x(i) * sc.dlp(i);
    for (size_t k = 0; k < K.dim.size(); ++k)
    {
        const int o = K.off[k], d = K.dim[k];
        Vec u = sc.v[k];
        if (inverse)
            u.tail(d - 1) *= -1.0;
        const auto xs = x.segment(o, d);
        const double ux = u.dot(xs);
        Vec r = 2.0 * ux * u;
        r(0) -= xs(0);
        r.tail(d - 1) += xs.tail(d - 1);
        y.segment(o, d) = (inverse ? 1.0 / sc.eta[k] : sc.eta[k]) * r;
    }
    return y;
}

double max_step_soc(const double *u, const double *dv, int d)
{
    double un = 0.0, dn = 0.0, ud = 0.0;
    for (int i = 1; i < d; ++i)
    {
        un += u[i] * u[i];
        dn += dv[i] * dv[i];
        ud += u[i] * dv[i];
    }
    const double inf = std::numeric_limits<double>::infinity();
    double amax = dv[0] < 0.0 ? -u[0] / dv[0] : inf;
    const double a = dv[0] * dv[0] - dn;
    const double b = u[0] * dv[0] - ud;
    const double c = std::max(u[0] * u[0] - un, 0.0);
    double root = inf;
    if (std::abs(a) <= 1e-300)
    {
        if (b < 0.0)
            root = -c / (2.0 * b);
    }
    else
    {
        const double disc = b * b - a * c;
        if (a < 0.0)
            root = (-b - std::sqrt(std::max(disc, 0.0))) / a;
        else if (disc >= 0.0 && b < 0.0)
            root = c / (-b + std::sqrt(disc));
    }
    return std::min(amax, root);
}

double max_step(const Cones &K, const Vec &u, const Vec &dv)
{
    double a = std::numeric_limits<double>::infinity();
    for (int i = 0; i < K.lp; ++i)
        if (dv(i) < 0.0)
            a = std::min(a, -u(i) / dv(i));
    for (size_t k = 0; k < K.dim.size(); ++k)
        a = std::min(a, max_step_soc(u.data() + K.off[k], dv.data() + K.off[k], K.dim[k]));
    return a;
}

// Solves [0 A' G'; A 0 0; G 0 -W'W] [dx; dy; dz] = [rx; ry; rz] by eliminating dz and
// factoring G' W^{-2} G on the null space of A, assembled cone by cone from low-rank updates.
class Kkt
{
  public:
    explicit Kkt(const Data &d) : d_(d)
    {
        const int n = d.n, p = d.p;
        for (size_t k = 0; k < d.K.dim.size(); ++k)
        {
            const int o = d.K.off[k], dim = d.K.dim[k];
            Block b;
            for (int r = 0; r < dim; ++r)
                for (const auto &[j, v] : d.G.rows[size_t(o + r)])
                    b.cols.push_back(j);
            std::sort(b.cols.begin(), b.cols.end());
            b.cols.erase(std::unique(b.cols.begin(), b.cols.end()), b.cols.end());
            b.G = Mat::Zero(dim, Eigen::Index(b.cols.size()));
            for (int r = 0; r < dim; ++r)
                for (const auto &[j, v] : d.G.rows[size_t(o + r)])
                {
                    const auto c = std::lower_bound(b.cols.begin(), b.cols.end(), j) - b.cols.begin();
                    b.G(r, c) += v;
                }
            b.GtG = b.G.transpose() * b.G;
            blocks_.push_back(std::move(b));
        }
        if (p > 0)
        {
            Mat At = Mat::Zero(n, p);
            for (int r = 0; r < p; ++r)
                for (const auto &[j, v] : d.A.rows[size_t(r)])
                    At(j, r) += v;
            Eigen::HouseholderQR<Mat> qa(At);
            const Mat Q = qa.householderQ();
            Q1_ = Q.leftCols(p);
            Q2_ = Q.rightCols(n - p);
            R_ = qa.matrixQR().topRows(p).triangularView<Eigen::Upper>();
            a_ok_ = (R_.diagonal().array().abs() > 1e-13 * std::max(1.0, R_.diagonal().cwiseAbs().maxCoeff())).all();
        }
    }

    bool factor(const Scaling *sc)
    {
        sc_ = sc;
        if (!a_ok_)
            return false;
        if (!use_qr_ && factor_normal())
            return true;
        use_qr_ = true;
        return factor_qr();
    }

    void solve(const Vec &rx, const Vec &ry, const Vec &rz, Vec &dx, Vec &dy, Vec &dz)
    {
        if (refine(rx, ry, rz, dx, dy, dz) || use_qr_)
            return;
        // the normal equations lost too much accuracy; continue with the orthogonal factorization
        use_qr_ = true;
        if (factor_qr())
            refine(rx, ry, rz, dx, dy, dz);
    }

  private:
    static constexpr double kReg = 1e-13;
    static constexpr double kQrReg = 1e-12;
    static constexpr int kRefine = 8;
    static constexpr double kAccept = 1e-8;

    struct Block
    {
        std::vector<int> cols;
        Mat G, GtG;
    };

    bool factor_normal()
    {
        const Scaling *sc = sc_;
        const int n = d_.n;
        H_ = Mat::Zero(n, n);
        for (int r = 0; r < d_.K.lp; ++r)
        {
            const double w = sc ? 1.0 / (sc->dlp(r) * sc->dlp(r)) : 1.0;
            const auto &row = d_.G.rows[size_t(r)];
            for (const auto &[i, a] : row)
                for (const auto &[j, b] : row)
                    H_(i, j) += w * a * b;
        }
        for (size_t k = 0; k < blocks_.size(); ++k)
        {
            const auto &b = blocks_[k];
            Mat local = b.GtG;
            if (sc)
            {
                const int dim = d_.K.dim[k];
                Vec u = sc->v[k];
                u.tail(dim - 1) *= -1.0;
                Vec ju = u;
                ju.tail(dim - 1) *= -1.0;
                const Vec a = b.G.transpose() * u;
                const Vec c = b.G.transpose() * ju;
                local.noalias() += (4.0 * u.squaredNorm()) * a * a.transpose();
                local.noalias() -= 2.0 * (a * c.transpose() + c * a.transpose());
                local /= sc->eta[k] * sc->eta[k];
            }
            for (size_t i = 0; i < b.cols.size(); ++i)
                for (size_t j = 0; j < b.cols.size(); ++j)
                    H_(b.cols[i], b.cols[j]) += local(Eigen::Index(i), Eigen::Index(j));
        }
        Mat Hr = d_.p > 0 ? Mat(Q2_.transpose() * H_ * Q2_) : H_;
        const double reg = kReg * std::max(1.0, Hr.diagonal().cwiseAbs().maxCoeff());
        Hr.diagonal().array() += reg;
        chol_.compute(Hr);
        return chol_.info() == Eigen::Success;
    }

    bool factor_qr()
    {
        if (G_.size() == 0 && d_.K.m > 0)
        {
            G_ = Mat::Zero(d_.K.m, d_.n);
            for (int r = 0; r < d_.K.m; ++r)
                for (const auto &[j, v] : d_.G.rows[size_t(r)])
                    G_(r, j) += v;
        }
        Gs_ = G_;
        if (sc_)
            apply_Winv_rows(Gs_);
        const int k = d_.p > 0 ? int(Q2_.cols()) : d_.n;
        Mat B(Gs_.rows() + k, k);
        B.topRows(Gs_.rows()) = d_.p > 0 ? Mat(Gs_ * Q2_) : Gs_;
        B.bottomRows(k) = kQrReg * Mat::Identity(k, k);
        qr_.compute(B);
        R3_ = qr_.matrixQR().topRows(k).triangularView<Eigen::Upper>();
        return R3_.allFinite() && (R3_.diagonal().array().abs() > 0.0).all();
    }

    void apply_Winv_rows(Mat &X) const
    {
        const auto &K = d_.K;
        for (int i = 0; i < K.lp; ++i)
            X.row(i) /= sc_->dlp(i);
        for (size_t k = 0; k < K.dim.size(); ++k)
        {
            const int o = K.off[k], d = K.dim[k];
            Vec u = sc_->v[k];
            u.tail(d - 1) *= -1.0;
            auto B = X.middleRows(o, d);
            const Eigen::RowVectorXd ub = u.transpose() * B;
            Mat out = 2.0 * u * ub;
            out.row(0) -= B.row(0);
            out.bottomRows(d - 1) += B.bottomRows(d - 1);
            B = out / sc_->eta[k];
        }
    }

    // Returns whether the residual reached the refinement tolerance
    bool refine(const Vec &rx, const Vec &ry, const Vec &rz, Vec &dx, Vec &dy, Vec &dz) const
    {
        reduced(rx, ry, rz, dx, dy, dz);
        const double scale = 1.0 + std::max({rx.lpNorm<Eigen::Infinity>(), ry.size() ? ry.lpNorm<Eigen::Infinity>() : 0.0,
                                             winv(rz).lpNorm<Eigen::Infinity>()});
        double err = 0.0;
        for (int it = 0; it <= kRefine; ++it)
        {
            Vec ex = rx - d_.A.tmul(dy) - d_.G.tmul(dz);
            Vec ey = ry - d_.A.mul(dx);
            Vec ez = rz - d_.G.mul(dx) + wtw(dz);
            err = std::max({ex.lpNorm<Eigen::Infinity>(), ey.size() ? ey.lpNorm<Eigen::Infinity>() : 0.0,
                            winv(ez).lpNorm<Eigen::Infinity>()});
            if (err <= 1e-14 * scale || it == kRefine)
                break;
            Vec cx, cy, cz;
            reduced(ex, ey, ez, cx, cy, cz);
            dx += cx;
            dy += cy;
            dz += cz;
        }
        return std::isfinite(err) && err <= kAccept * scale;
    }

    Vec wtw(const Vec &x) const
    {
        if (!sc_)
            return x;
        return apply_W(d_.K, *sc_, apply_W(d_.K, *sc_, x, false), false);
    }
    Vec winv(const Vec &x) const
    {
        if (!sc_)
            return x;
        return apply_W(d_.K, *sc_, x, true);
    }

    void reduced(const Vec &rx, const Vec &ry, const Vec &rz, Vec &dx, Vec &dy, Vec &dz) const
    {
        if (use_qr_)
            return reduced_qr(rx, ry, rz, dx, dy, dz);
        const int p = d_.p;
        const Vec rzs = winv(rz);
        const Vec rhs = rx + d_.G.tmul(winv(rzs));
        if (p > 0)
        {
            const Vec w = R_.transpose().triangularView<Eigen::Lower>().solve(ry);
            const Vec base = Q1_ * w;
            const Vec u = chol_.solve(Q2_.transpose() * (rhs - H_ * base));
            dx = base + Q2_ * u;
        }
        else
        {
            dx = chol_.solve(rhs);
        }
        const Vec dzs = winv(d_.G.mul(dx)) - rzs;
        dz = winv(dzs);
        if (p > 0)
            dy = R_.triangularView<Eigen::Upper>().solve(Q1_.transpose() * (rx - d_.G.tmul(dz)));
        else
            dy = Vec::Zero(0);
    }

    void reduced_qr(const Vec &rx, const Vec &ry, const Vec &rz, Vec &dx, Vec &dy, Vec &dz) const
    {
        const int n = d_.n, p = d_.p;
        const int k = int(R3_.cols());
        const Vec rzs = winv(rz);
        Vec w = Vec::Zero(p);
        Vec base = Vec::Zero(n);
        if (p > 0)
        {
            w = R_.transpose().triangularView<Eigen::Lower>().solve(ry);
            base = Q1_ * w;
        }
        Vec t(Gs_.rows() + k);
        t.head(Gs_.rows()) = rzs - Gs_ * base;
        t.tail(k).setZero();
        const Vec qt = qr_.householderQ().transpose() * t;
        const Vec v = R3_.transpose().triangularView<Eigen::Lower>().solve(p > 0 ? Vec(Q2_.transpose() * rx) : rx);
        const Vec u = R3_.triangularView<Eigen::Upper>().solve(v + qt.head(k));
        dx = p > 0 ? Vec(base + Q2_ * u) : u;
        const Vec dzs = Gs_ * dx - rzs;
        if (p > 0)
            dy = R_.triangularView<Eigen::Upper>().solve(Q1_.transpose() * (rx - Gs_.transpose() * dzs));
        else
            dy = Vec::Zero(0);
        dz = winv(dzs);
    }

    const Data &d_;
    const Scaling *sc_ = nullptr;
    std::vector<Block> blocks_;
    Mat G_, Gs_, R3_;
    Eigen::HouseholderQR<Mat> qr_;
    bool use_qr_ = false;
    Mat H_, Q1_, Q2_, R_;
    Eigen::LLT<Mat> chol_;
    bool a_ok_ = true;
};

double safe_norm(const Vec &v)
{
    return v.size() ? v.norm() : 0.0;
}
} // namespace

ConicSolution solve_conic(const ConicProgram &program, const SolverOptions &opt)
{
    program.validate();
    const Data raw = canonicalize(program);
    Data scaled = raw;
    const Equilibration eq = equilibrate(scaled);
    const Data &d = scaled;
    const Cones &K = d.K;
    const int n = d.n;

    ConicSolution out;
    out.x = Vec::Zero(n);
    if (n == 0)
        throw InvalidInput("program has no variables");

    Kkt kkt(d);
    Vec x, y, z, s, tmp;
    kkt.factor(nullptr);
    kkt.solve(Vec::Zero(n), d.b, d.h, x, y, tmp);
    s = -tmp;
    {
        const double a = min_eig(K, s);
        if (K.m > 0 && a <= 0.0)
            add_identity(K, s, 1.0 - a);
    }
    Vec xd;
    kkt.solve(-d.c, Vec::Zero(d.p), Vec::Zero(K.m), xd, y, z);
    {
        const double a = min_eig(K, z);
        if (K.m > 0 && a <= 0.0)
            add_identity(K, z, 1.0 - a);
    }
    double tau = 1.0, kappa = 1.0;

    const double nb = std::max(1.0, safe_norm(raw.b)), nh = std::max(1.0, safe_norm(raw.h)),
                 nc = std::max(1.0, safe_norm(raw.c));
    const Vec e = identity(K);
    const double deg = K.degree() + 1.0;
    Scaling sc;

    for (int it = 0;; ++it)
    {
        const Vec r1 = d.A.tmul(y) + d.G.tmul(z) + d.c * tau;
        const Vec r2 = -d.A.mul(x) + d.b * tau;
        const Vec r3 = s + d.G.mul(x) - d.h * tau;
        const double cx = d.c.dot(x), by = d.b.dot(y), hz = d.h.dot(z);
        const double r4 = kappa + cx + by + hz;

        const Vec u1 = r1.cwiseQuotient(eq.col), u2 = r2.cwiseQuotient(eq.eq), u3 = r3.cwiseQuotient(eq.ineq);
        const double pres = std::max(safe_norm(u2) / nb, safe_norm(u3) / nh) / tau;
        const double dres = safe_norm(u1) / nc / tau;
        const double pcost = cx / tau;
        const double gap = s.dot(z) / (tau * tau);
        const double relgap = gap / std::max(1.0, std::abs(pcost));
        out.iterations = it;
        out.primal_residual = pres;
        out.dual_residual = dres;
        out.duality_gap = relgap;

        if (pres <= opt.feas_tol && dres <= opt.feas_tol && relgap <= opt.gap_tol)
        {
            out.status = SolveStatus::optimal;
            break;
        }
        const double pinf = safe_norm((d.A.tmul(y) + d.G.tmul(z)).cwiseQuotient(eq.col));
        if (by + hz < 0.0 && pinf / -(by + hz) <= opt.feas_tol)
        {
            out.status = SolveStatus::infeasible;
            out.diagnostics = "primal infeasibility certificate found";
            break;
        }
        const double dinf =
            std::max(safe_norm(d.A.mul(x).cwiseQuotient(eq.eq)), safe_norm((d.G.mul(x) + s).cwiseQuotient(eq.ineq)));
        if (cx < 0.0 && dinf / -cx <= opt.feas_tol)
        {
            out.status = SolveStatus::unbounded;
            out.diagnostics = "dual infeasibility certificate found";
            break;
        }
        if (it >= opt.max_iters)
        {
            out.status = SolveStatus::max_iters;
            out.diagnostics = "iteration limit reached";
            break;
        }

        if (!compute_scaling(K, s, z, sc))
        {
            out.status = SolveStatus::max_iters;
            out.diagnostics = "iterate left the cone interior";
            break;
        }
        sc.lambda = apply_W(K, sc, z, false);
        if (!kkt.factor(&sc))
        {
            out.status = SolveStatus::max_iters;
            out.diagnostics = "KKT factorization failed";
            break;
        }
        const double mu = (s.dot(z) + tau * kappa) / deg;

        Vec u1x, u1y, u1z;
        kkt.solve(-d.c, d.b, d.h, u1x, u1y, u1z);
        const double u1c = d.c.dot(u1x) + d.b.dot(u1y) + d.h.dot(u1z);

        auto direction = [&](double sigma, const Vec &ds_target, double dk_target, Vec &dx, Vec &dy, Vec &dz, Vec &ds,
                             double &dtau, double &dkap) {
            const Vec q = jordan_div(K, sc.lambda, ds_target);
            const Vec t3 = -(1.0 - sigma) * r3 - apply_W(K, sc, q, false);
            Vec u2x, u2y, u2z;
            kkt.solve(-(1.0 - sigma) * r1, (1.0 - sigma) * r2, t3, u2x, u2y, u2z);
            const double num = -(1.0 - sigma) * r4 - dk_target / tau - (d.c.dot(u2x) + d.b.dot(u2y) + d.h.dot(u2z));
            dtau = num / (u1c - kappa / tau);
            dx = u2x + dtau * u1x;
            dy = u2y + dtau * u1y;
            dz = u2z + dtau * u1z;
            ds = -(1.0 - sigma) * r3 - d.G.mul(dx) + d.h * dtau;
            dkap = (dk_target - kappa * dtau) / tau;
        };
        auto step_to_boundary = [&](const Vec &dz, const Vec &ds, double dtau, double dkap) {
            double a = std::min(max_step(K, s, ds), max_step(K, z, dz));
            if (dtau < 0.0)
                a = std::min(a, -tau / dtau);
            if (dkap < 0.0)
                a = std::min(a, -kappa / dkap);
            return a;
        };

        Vec dx, dy, dz, ds;
        double dtau = 0.0, dkap = 0.0;
        const Vec ll = jordan(K, sc.lambda, sc.lambda);
        direction(0.0, -ll, -tau * kappa, dx, dy, dz, ds, dtau, dkap);
        const double a_aff = std::min(1.0, step_to_boundary(dz, ds, dtau, dkap));
        const double sigma = std::clamp(std::pow(1.0 - a_aff, 3), 0.0, 1.0);

        const Vec corr = jordan(K, apply_W(K, sc, ds, true), apply_W(K, sc, dz, false));
        Vec target = -ll - corr;
        add_identity(K, target, sigma * mu);
        const double ktarget = -tau * kappa - dtau * dkap + sigma * mu;
        direction(sigma, target, ktarget, dx, dy, dz, ds, dtau, dkap);
        const double alpha = std::min(1.0, opt.step_fraction * step_to_boundary(dz, ds, dtau, dkap));
        if (!(alpha > 1e-14) || !dx.allFinite())
        {
            out.status = SolveStatus::max_iters;
            out.diagnostics = "step length collapsed";
            break;
        }
        x += alpha * dx;
        y += alpha * dy;
        z += alpha * dz;
        s += alpha * ds;
        tau += alpha * dtau;
        kappa += alpha * dkap;
    }

    if (out.status == SolveStatus::infeasible || out.status == SolveStatus::unbounded)
        tau = std::max(tau, 1e-300);
    out.x = x.cwiseProduct(eq.col) / tau;
    out.objective = program.objective(out.x);
    out.eq_duals = y.cwiseProduct(eq.eq) / tau;
    out.cone_duals = z.cwiseProduct(eq.ineq) / tau;
    double comp = 0.0;
    const Vec sn = s.cwiseQuotient(eq.ineq) / tau, zn = out.cone_duals;
    for (int i = 0; i < K.lp; ++i)
        comp = std::max(comp, std::abs(sn(i) * zn(i)));
    for (size_t k = 0; k < K.dim.size(); ++k)
        comp = std::max(comp, std::abs(sn.segment(K.off[k], K.dim[k]).dot(zn.segment(K.off[k], K.dim[k]))));
    out.complementarity = comp / std::max(1.0, std::abs(out.objective));
    return out;
}

} // namespace cfnoma
