// SPDX-License-Identifier: Apache-2.0
//
// bdris - reflection design for beyond-diagonal IRS aided uplink ISAC
// Copyright (C) 2026 The bdris Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "bdris/qcqp.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

namespace bdris {

Quadratic Quadratic::zero(Index n) {
    Quadratic q;
    q.b = rvec::Zero(n);
    q.factors.resize(0, n);
    return q;
}

void Quadratic::validate(Index n) const {
    if (b.size() != n)
        throw DimensionError("quadratic: linear term has wrong size");
    if (diag.size() != 0 && diag.size() != n)
        throw DimensionError("quadratic: diagonal has wrong size");
    if (dense.size() != 0 && (dense.rows() != n || dense.cols() != n))
        throw DimensionError("quadratic: dense part has wrong shape");
    if (factors.rows() > 0 && factors.cols() != n)
        throw DimensionError("quadratic: factor rows have wrong length");
    if (diag.size() != 0 && diag.minCoeff() < 0.0)
        throw DimensionError("quadratic: negative diagonal");
    if (!std::isfinite(c) || !b.allFinite())
        throw DimensionError("quadratic: non-finite data");
}

rvec Quadratic::apply(const rvec &x) const {
    rvec y = rvec::Zero(x.size());
    if (diag.size() != 0)
        y += diag.cwiseProduct(x);
    if (dense.size() != 0)
        y.noalias() += dense * x;
    if (factors.rows() > 0)
        y.noalias() += factors.transpose() * (factors * x);
    return y;
}

double Quadratic::value(const rvec &x) const { return x.dot(apply(x)) + b.dot(x) + c; }

rvec Quadratic::gradient(const rvec &x) const { return 2.0 * apply(x) + b; }

rmat Quadratic::hessian_half() const {
    const Index n = b.size();
    rmat p = rmat::Zero(n, n);
    if (diag.size() != 0)
        p.diagonal() += diag;
    if (dense.size() != 0)
        p += dense;
    if (factors.rows() > 0)
        p.noalias() += factors.transpose() * factors;
    return p;
}

void ConvexQcqp::validate() const {
    if (n < 1)
        throw DimensionError("qcqp: dimension must be positive");
    objective.validate(n);
    for (const auto &q : constraints)
        q.validate(n);
}

const char *to_string(QcqpStatus s) {
    switch (s) {
    case QcqpStatus::optimal:
        return "optimal";
    case QcqpStatus::infeasible:
        return "infeasible";
    case QcqpStatus::max_iter:
        return "max_iter";
    }
    return "unknown";
}

namespace {

constexpr double kNewtonTol = 1e-11; // on half the squared Newton decrement

// Accumulates the barrier Hessian as diag(d) + U^T U (+ dense) and solves with it.
class NewtonSystem {
public:
    explicit NewtonSystem(Index n) : n_(n), d_(rvec::Zero(n)) {}

    void add(const Quadratic &q, double weight) {
        if (q.diag.size() != 0)
            d_ += weight * q.diag;
        if (q.dense.size() != 0) {
            if (dense_.size() == 0)
                dense_ = rmat::Zero(n_, n_);
            dense_ += weight * q.dense;
        }
        if (q.factors.rows() > 0)
            blocks_.push_back(std::sqrt(weight) * q.factors);
    }
    void add_rank_one(const rvec &g) { rank_one_.push_back(g); }

    rvec solve(const rvec &rhs) {
        assemble_rows();
        if (dense_.size() == 0 && u_.rows() < n_) {
            rvec out;
            if (solve_split(rhs, out) || solve_low_rank(rhs, out))
                return out;
        }
        return solve_dense(rhs);
    }

private:
    // Coordinates that only the rank-one terms touch (epigraph variables,
    // phase-one slack). With A the rest of the Hessian and V the rank-one
    // vectors, the system is solved through the augmented form
    //   [A V; V^T -I] [x; y] = [r; 0]
    // so the tiny Schur complement of those coordinates never has to be
    // formed by subtraction.
    bool solve_split(const rvec &rhs, rvec &out) const {
        if (rank_one_.empty())
            return false;
        const double dmax = d_.maxCoeff();
        if (!(dmax > 0.0))
            return false;
        std::vector<Index> ia, iz;
        for (Index j = 0; j < n_; ++j)
            (d_(j) > 1e-13 * dmax ? ia : iz).push_back(j);
        if (iz.empty() || iz.size() > 8)
            return false;
        Index rb = 0;
        for (const auto &b : blocks_)
            rb += b.rows();
        const rmat ub = u_.topRows(rb);
        for (Index c : iz)
            if (d_(c) != 0.0 || (rb > 0 && ub.col(c).cwiseAbs().maxCoeff() != 0.0))
                return false;

        const Index na = static_cast<Index>(ia.size());
        const Index nz = static_cast<Index>(iz.size());
        const Index m = static_cast<Index>(rank_one_.size());
        // unit-norm columns keep the capacitance matrix well scaled when the
        // barrier weights make the rank-one terms huge
        rvec scale(m);
        for (Index i = 0; i < m; ++i) {
            const double nrm = rank_one_[static_cast<std::size_t>(i)].norm();
            if (!(nrm > 0.0))
                return false;
            scale(i) = 1.0 / nrm;
        }
        rmat uba(rb, na), va(na, m), vz(nz, m);
        rvec inv_da(na);
        for (Index j = 0; j < na; ++j) {
            const Index c = ia[static_cast<std::size_t>(j)];
            if (rb > 0)
                uba.col(j) = ub.col(c);
            inv_da(j) = 1.0 / d_(c);
            for (Index i = 0; i < m; ++i)
                va(j, i) = rank_one_[static_cast<std::size_t>(i)](c) * scale(i);
        }
        for (Index j = 0; j < nz; ++j)
            for (Index i = 0; i < m; ++i)
                vz(j, i) = rank_one_[static_cast<std::size_t>(i)](iz[static_cast<std::size_t>(j)]) * scale(i);

        // A_aa^{-1} by Woodbury over the factor rows, also on unit-norm rows
        rvec row_scale = rvec::Ones(rb);
        for (Index i = 0; i < rb; ++i) {
            const double nrm = uba.row(i).norm();
            if (nrm > 0.0) {
                row_scale(i) = 1.0 / nrm;
                uba.row(i) *= row_scale(i);
            }
        }
        const rmat uas = uba * inv_da.asDiagonal();
        rmat cap = rmat(row_scale.cwiseAbs2().asDiagonal());
        if (rb > 0)
            cap.noalias() += uas * uba.transpose();
        Eigen::LLT<rmat> llt(cap);
        if (llt.info() != Eigen::Success)
            return false;
        auto a_inv = [&](const rmat &v) -> rmat {
            rmat dv = inv_da.asDiagonal() * v;
            if (rb > 0)
                dv.noalias() -= uas.transpose() * llt.solve(uba * dv);
            return dv;
        };

        const rmat ainv_va = a_inv(va);
        rmat sm = rmat(scale.cwiseAbs2().asDiagonal());
        sm.noalias() += va.transpose() * ainv_va;
        Eigen::LLT<rmat> s_llt(sm);
        if (s_llt.info() != Eigen::Success)
            return false;
        const rmat sinv_vzt = s_llt.solve(vz.transpose());
        const rmat zz = vz * sinv_vzt;
        Eigen::LDLT<rmat> z_ldlt(0.5 * (zz + zz.transpose()));
        if (z_ldlt.info() != Eigen::Success || !(z_ldlt.vectorD().minCoeff() > 0.0))
            return false;

        auto apply_inverse = [&](const rvec &v) {
            rvec ra(na), rz(nz);
            for (Index j = 0; j < na; ++j)
                ra(j) = v(ia[static_cast<std::size_t>(j)]);
            for (Index j = 0; j < nz; ++j)
                rz(j) = v(iz[static_cast<std::size_t>(j)]);
            const rvec ainv_ra = a_inv(ra);
            const rvec w = s_llt.solve(va.transpose() * ainv_ra);
            const rvec xz = z_ldlt.solve(rz - vz * w);
            const rvec y = w + sinv_vzt * xz;
            const rvec xa = ainv_ra - ainv_va * y;
            rvec x(n_);
            for (Index j = 0; j < na; ++j)
                x(ia[static_cast<std::size_t>(j)]) = xa(j);
            for (Index j = 0; j < nz; ++j)
                x(iz[static_cast<std::size_t>(j)]) = xz(j);
            return x;
        };
        out = apply_inverse(rhs);
        double last = (multiply(out) - rhs).norm();
        for (int round = 0; round < 5 && !accurate(out, rhs); ++round) {
            if (!out.allFinite() || !(last < rhs.norm()))
                return false;
            out += apply_inverse(rhs - multiply(out));
            const double res = (multiply(out) - rhs).norm();
            if (!(res < 0.5 * last))
                return false;
            last = res;
        }
        return accurate(out, rhs, 1e-7);
    }

    void assemble_rows() {
        Index r = static_cast<Index>(rank_one_.size());
        for (const auto &b : blocks_)
            r += b.rows();
        u_.resize(r, n_);
        Index row = 0;
        for (const auto &b : blocks_) {
            u_.middleRows(row, b.rows()) = b;
            row += b.rows();
        }
        for (const auto &g : rank_one_)
            u_.row(row++) = g.transpose();
    }

    rvec multiply(const rvec &x) const {
        rvec y = d_.cwiseProduct(x);
        if (u_.rows() > 0)
            y.noalias() += u_.transpose() * (u_ * x);
        if (dense_.size() != 0)
            y.noalias() += dense_ * x;
        return y;
    }

    // Relative residual test with an allowance for the rounding any backward
    // stable solver makes on a badly conditioned barrier Hessian.
    bool accurate(const rvec &x, const rvec &rhs, double tol = 1e-9) const {
        if (!x.allFinite())
            return false;
        double h = d_.size() ? d_.cwiseAbs().maxCoeff() : 0.0;
        if (u_.size())
            h += u_.squaredNorm();
        if (dense_.size())
            h += dense_.norm();
        const double slack = 1e-13 * h * x.norm();
        return (multiply(x) - rhs).norm() <= tol * std::max(rhs.norm(), 1e-300) + slack;
    }

    // Woodbury on coordinates with a usable diagonal, Schur complement on the rest.
    bool solve_low_rank(const rvec &rhs, rvec &out) const {
        const double dmax = d_.size() ? d_.maxCoeff() : 0.0;
        if (!(dmax > 0.0))
            return false;
        std::vector<Index> ia, iz;
        for (Index j = 0; j < n_; ++j)
            (d_(j) > 1e-13 * dmax ? ia : iz).push_back(j);
        if (iz.size() > 8)
            return false;
        const Index na = static_cast<Index>(ia.size());
        const Index nz = static_cast<Index>(iz.size());
        const Index r = u_.rows();

        rmat ua(r, na);
        rvec inv_da(na);
        for (Index j = 0; j < na; ++j) {
            ua.col(j) = u_.col(ia[static_cast<std::size_t>(j)]);
            inv_da(j) = 1.0 / d_(ia[static_cast<std::size_t>(j)]);
        }
        const rmat uas = ua * inv_da.asDiagonal();
        rmat cap = rmat::Identity(r, r);
        cap.noalias() += uas * ua.transpose();
        Eigen::LLT<rmat> llt(cap);
        if (llt.info() != Eigen::Success)
            return false;
        auto haa_inv = [&](const rmat &v) -> rmat {
            rmat dv = inv_da.asDiagonal() * v;
            rmat corr = llt.solve(ua * dv);
            dv.noalias() -= uas.transpose() * corr;
            return dv;
        };

        auto gather = [&](const rvec &v, rvec &va) {
            va.resize(na);
            for (Index j = 0; j < na; ++j)
                va(j) = v(ia[static_cast<std::size_t>(j)]);
        };
        auto scatter = [&](const rvec &ya, rvec &dst) {
            for (Index j = 0; j < na; ++j)
                dst(ia[static_cast<std::size_t>(j)]) = ya(j);
        };

        std::function<rvec(const rvec &)> apply_inverse;
        rmat uz, haz;
        Eigen::LDLT<rmat> ldlt;
        if (nz == 0) {
            apply_inverse = [&](const rvec &v) {
                rvec va;
                gather(v, va);
                rvec y = rvec::Zero(n_);
                scatter(haa_inv(va), y);
                return y;
            };
        } else {
            uz.resize(r, nz);
            rmat hzz = rmat::Zero(nz, nz);
            for (Index j = 0; j < nz; ++j) {
                const Index c = iz[static_cast<std::size_t>(j)];
                uz.col(j) = u_.col(c);
                hzz(j, j) = d_(c);
            }
            hzz.noalias() += uz.transpose() * uz;
            haz = ua.transpose() * uz;
            const rmat x = haa_inv(haz);
            rmat schur = hzz - haz.transpose() * x;
            ldlt.compute(schur);
            if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0)) {
                // cancellation in the complement; refinement below repairs the shift
                schur.diagonal().array() += 1e-12 * hzz.diagonal().cwiseAbs().maxCoeff();
                ldlt.compute(schur);
                if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0))
                    return false;
            }
            apply_inverse = [&](const rvec &v) {
                rvec va, vz(nz);
                gather(v, va);
                for (Index j = 0; j < nz; ++j)
                    vz(j) = v(iz[static_cast<std::size_t>(j)]);
                const rvec yz = ldlt.solve(vz - haz.transpose() * haa_inv(va));
                rvec y = rvec::Zero(n_);
                scatter(haa_inv(va - haz * yz), y);
                for (Index j = 0; j < nz; ++j)
                    y(iz[static_cast<std::size_t>(j)]) = yz(j);
                return y;
            };
        }

        out = apply_inverse(rhs);
        // a few rounds of iterative refinement before giving up on the structure
        for (int round = 0; round < 3 && !accurate(out, rhs); ++round) {
            if (!out.allFinite())
                return false;
            out += apply_inverse(rhs - multiply(out));
        }
        return accurate(out, rhs, 1e-7);
    }

    rvec solve_dense(const rvec &rhs) const {
        rmat h = rmat::Zero(n_, n_);
        h.diagonal() = d_;
        if (u_.rows() > 0)
            h.noalias() += u_.transpose() * u_;
        if (dense_.size() != 0)
            h += dense_;
        // symmetric diagonal scaling first: near-active constraints put
        // weights many orders above the rest on a few directions
        rvec js(n_);
        for (Index j = 0; j < n_; ++j)
            js(j) = h(j, j) > 0.0 ? 1.0 / std::sqrt(h(j, j)) : 1.0;
        rmat hj = js.asDiagonal() * h * js.asDiagonal();
        Eigen::LLT<rmat> llt(hj);
        if (llt.info() == Eigen::Success) {
            auto apply = [&](const rvec &v) -> rvec { return js.cwiseProduct(llt.solve(js.cwiseProduct(v))); };
            rvec x = apply(rhs);
            for (int round = 0; round < 3 && !accurate(x, rhs) && x.allFinite(); ++round)
                x += apply(rhs - multiply(x));
            if (accurate(x, rhs, 1e-7))
                return x;
        }
        // singular directions: small diagonal shift
        const double scale = std::max(h.diagonal().cwiseAbs().maxCoeff(), 1e-300);
        for (double shift : {0.0, 1e-14, 1e-12, 1e-10}) {
            rmat hs = h;
            hs.diagonal().array() += shift * scale;
            Eigen::LDLT<rmat> ldlt(hs);
            if (ldlt.info() != Eigen::Success)
                continue;
            rvec x = ldlt.solve(rhs);
            if (x.allFinite())
                return x;
        }
        throw NumericalError("qcqp: Newton system could not be solved");
    }

    Index n_;
    rvec d_;
    rmat dense_;
    std::vector<rmat> blocks_;
    std::vector<rvec> rank_one_;
    rmat u_;
};

struct Barrier {
    const Quadratic &f0;
    const std::vector<Quadratic> &fi;
};

struct CenterOutcome {
    int steps = 0;
    bool converged = false;
    bool stopped_early = false;
    bool at_floor = false; // a slack reached the rounding floor of its constraint
};

// Size of the terms of q at x; a value below ~1e-13 of it is rounding noise.
double term_magnitude(const Quadratic &q, const rvec &x, double value) {
    const double lin = q.b.dot(x);
    return std::abs(value - lin - q.c) + std::abs(lin) + std::abs(q.c);
}

// no slack may shrink by more than this factor in one step; a slack at the
// rounding floor of its constraint makes every later Newton system useless
constexpr double kBoundaryFraction = 1e-2;

// Damped Newton on t f0 - sum log(-fi). `stop` is checked after each step.
template <typename Stop>
CenterOutcome center(const Barrier &bp, rvec &y, double t, const QcqpOptions &opt, Stop &&stop) {
    const Index n = y.size();
    const std::size_t m = bp.fi.size();
    CenterOutcome out;
    rvec fval(static_cast<Index>(m));
    std::vector<rvec> grads(m);
    int stalls = 0;
    double prev_lambda2 = std::numeric_limits<double>::infinity();
    for (int step = 0; step < opt.max_newton; ++step) {
        NewtonSystem sys(n);
        sys.add(bp.f0, 2.0 * t);
        rvec grad = t * bp.f0.gradient(y);
        for (std::size_t i = 0; i < m; ++i) {
            const double f = bp.fi[i].value(y);
            if (!(f < 0.0))
                throw NumericalError("qcqp: iterate left the strictly feasible region");
            fval(static_cast<Index>(i)) = f;
            grads[i] = bp.fi[i].gradient(y);
            sys.add(bp.fi[i], 2.0 / (-f));
            sys.add_rank_one(grads[i] / (-f));
            grad += grads[i] / (-f);
        }
        for (std::size_t i = 0; i < m; ++i)
            if (-fval(static_cast<Index>(i)) < 1e-13 * term_magnitude(bp.fi[i], y, fval(static_cast<Index>(i)))) {
                out.at_floor = true;
                out.converged = true;
                return out;
            }
        const rvec dy = sys.solve(-grad);
        const double lambda2 = -grad.dot(dy);
        // after many steps, accept a decrement at the rounding floor of the
        // barrier value: no further step can be verified
        double floor = 2.0 * kNewtonTol;
        if (step >= 20) {
            double magnitude = t * std::abs(bp.f0.value(y));
            for (Index i = 0; i < static_cast<Index>(m); ++i)
                magnitude += std::abs(std::log(-fval(i)));
            floor = std::max(floor, 1e-15 * magnitude);
        }
        // in the quadratic phase the decrement must keep shrinking; a stall
        // there is rounding noise
        const bool noise = step > 0 && lambda2 < 1e-4 && lambda2 > 0.25 * prev_lambda2 && prev_lambda2 < 1e-4;
        prev_lambda2 = lambda2;
        if (!(lambda2 > floor) || noise) {
            out.converged = true;
            return out;
        }

        // exact expansions along dy: f(y + s dy) = f + s a + s^2 q
        const double a0 = bp.f0.gradient(y).dot(dy);
        const double q0 = dy.dot(bp.f0.apply(dy));
        rvec ai(static_cast<Index>(m)), qi(static_cast<Index>(m));
        for (std::size_t i = 0; i < m; ++i) {
            ai(static_cast<Index>(i)) = grads[i].dot(dy);
            qi(static_cast<Index>(i)) = dy.dot(bp.fi[i].apply(dy));
        }
        auto feasible = [&](double s) {
            for (Index i = 0; i < static_cast<Index>(m); ++i)
                if (!(fval(i) + s * ai(i) + s * s * qi(i) < kBoundaryFraction * fval(i)))
                    return false;
            return true;
        };
        auto change = [&](double s) {
            double d = t * (s * a0 + s * s * q0);
            for (Index i = 0; i < static_cast<Index>(m); ++i)
                d -= std::log1p((s * ai(i) + s * s * qi(i)) / fval(i));
            return d;
        };
        double s = 1.0;
        int guard = 0;
        while (!feasible(s) && guard++ < 200)
            s *= opt.ls_beta;
        // the expansion can round differently from a direct evaluation when
        // fi is tiny next to its terms; confirm directly
        auto feasible_direct = [&](double s) {
            const rvec z = y + s * dy;
            for (std::size_t i = 0; i < m; ++i)
                if (!(bp.fi[i].value(z) < kBoundaryFraction * fval(static_cast<Index>(i))))
                    return false;
            return true;
        };
        while (!feasible_direct(s) && guard++ < 200)
            s *= opt.ls_beta;
        const double s_feasible = s;
        while (change(s) > -opt.ls_alpha * s * lambda2 && guard++ < 200)
            s *= opt.ls_beta;
        while (!feasible_direct(s) && guard++ < 200)
            s *= opt.ls_beta;
        if (guard >= 200 || s < 1e-15) {
            // Armijo test lost in rounding: close to the center the Newton
            // step itself is reliable
            if (lambda2 < 1e-6 && feasible_direct(s_feasible) && stalls++ < 3) {
                y += s_feasible * dy;
                ++out.steps;
                continue;
            }
            out.converged = lambda2 < 1e-6;
            return out;
        }
        y += s * dy;
        ++out.steps;
        if (stop(y)) {
            out.stopped_early = true;
            out.converged = true;
            return out;
        }
    }
    return out;
}

double constraint_scale(const Quadratic &q) {
    double s = std::max(std::abs(q.c), q.b.cwiseAbs().maxCoeff());
    if (q.diag.size() != 0)
        s = std::max(s, q.diag.maxCoeff());
    if (q.dense.size() != 0)
        s = std::max(s, q.dense.diagonal().cwiseAbs().maxCoeff());
    if (q.factors.rows() > 0)
        s = std::max(s, q.factors.colwise().squaredNorm().maxCoeff());
    return s > 0.0 ? s : 1.0;
}

Quadratic scaled(const Quadratic &q, double s) {
    Quadratic r = q;
    const double inv = 1.0 / s;
    if (r.diag.size() != 0)
        r.diag *= inv;
    if (r.dense.size() != 0)
        r.dense *= inv;
    if (r.factors.rows() > 0)
        r.factors *= std::sqrt(inv);
    r.b *= inv;
    r.c *= inv;
    return r;
}

Quadratic pad(const Quadratic &q, double last_linear) {
    const Index n = q.b.size();
    Quadratic r;
    if (q.diag.size() != 0) {
        r.diag = rvec::Zero(n + 1);
        r.diag.head(n) = q.diag;
    }
    if (q.dense.size() != 0) {
        r.dense = rmat::Zero(n + 1, n + 1);
        r.dense.topLeftCorner(n, n) = q.dense;
    }
    r.factors = rmat::Zero(q.factors.rows(), n + 1);
    if (q.factors.rows() > 0)
        r.factors.leftCols(n) = q.factors;
    r.b.resize(n + 1);
    r.b.head(n) = q.b;
    r.b(n) = last_linear;
    r.c = q.c;
    return r;
}

struct PhaseOne {
    rvec x;
    double slack = 0.0; // max_i fi(x) at the end (scaled units)
    bool found = false;
};

// minimize s + reg ||x - x0||^2 subject to fi(x) <= s, stopping as soon as s < 0.
PhaseOne phase_one(const std::vector<Quadratic> &fi, const rvec &x0, double reg, const QcqpOptions &opt) {
    const Index n = x0.size();
    std::vector<Quadratic> aug;
    aug.reserve(fi.size());
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto &q : fi) {
        aug.push_back(pad(q, -1.0));
        worst = std::max(worst, q.value(x0));
    }
    Quadratic obj = Quadratic::zero(n + 1);
    obj.b(n) = 1.0;
    if (reg > 0.0) {
        obj.diag = rvec::Constant(n + 1, reg);
        obj.diag(n) = 0.0;
        obj.b.head(n) = -2.0 * reg * x0;
        obj.c = reg * x0.squaredNorm();
    }
    rvec y(n + 1);
    y.head(n) = x0;
    y(n) = worst + std::max(1.0, std::abs(worst));

    const Barrier bp{obj, aug};
    const double m = static_cast<double>(aug.size());
    double t = 1.0;
    PhaseOne res;
    auto below_zero = [n](const rvec &v) { return v(n) < 0.0; };
    for (int stage = 0; stage < 60; ++stage) {
        const CenterOutcome c = center(bp, y, t, opt, below_zero);
        if (c.stopped_early || y(n) < 0.0)
            break;
        if (m / t <= 0.1 * opt.tol)
            break;
        t *= opt.mu;
    }
    res.x = y.head(n);
    res.slack = -std::numeric_limits<double>::infinity();
    for (const auto &q : fi)
        res.slack = std::max(res.slack, q.value(res.x));
    res.found = res.slack < 0.0;
    return res;
}

double max_value(const std::vector<Quadratic> &fi, const rvec &x) {
    double w = -std::numeric_limits<double>::infinity();
    for (const auto &q : fi)
        w = std::max(w, q.value(x));
    return w;
}

} // namespace

QcqpSolution solve(const ConvexQcqp &p, const QcqpOptions &opt) {
    p.validate();
    if (!(opt.tol > 0.0) || opt.max_newton < 1 || !(opt.mu > 1.0) || !(opt.t0 > 0.0))
        throw std::invalid_argument("qcqp: invalid options");
    const Index n = p.n;
    const std::size_t m = p.constraints.size();
    QcqpSolution sol;
    rvec x = rvec::Zero(n);
    if (opt.x0) {
        if (opt.x0->size() != n)
            throw DimensionError("qcqp: initial point has wrong size");
        x = *opt.x0;
    }

    if (m == 0) {
        NewtonSystem sys(n);
        sys.add(p.objective, 2.0);
        x += sys.solve(-p.objective.gradient(x));
        sol.x = x;
        sol.objective = p.objective.value(x);
        sol.stage_objectives = {sol.objective};
        sol.duals = rvec::Zero(0);
        sol.newton_steps = 1;
        const KktReport k = check_kkt(p, sol, opt.tol);
        sol.kkt_residual = k.residual;
        sol.status = k.satisfied ? QcqpStatus::optimal : QcqpStatus::max_iter;
        return sol;
    }

    std::vector<double> scale(m);
    std::vector<Quadratic> fi;
    fi.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        scale[i] = constraint_scale(p.constraints[i]);
        fi.push_back(scaled(p.constraints[i], scale[i]));
    }

    sol.phase1_slack = max_value(fi, x);
    if (!(sol.phase1_slack < 0.0)) {
        PhaseOne ph = phase_one(fi, x, 1e-8, opt);
        if (!ph.found)
            ph = phase_one(fi, ph.x, 0.0, opt);
        sol.phase1_slack = ph.slack;
        if (!ph.found && ph.slack <= 1.1 * opt.tol) {
            // marginal: relax every constraint once and retry
            for (auto &q : fi)
                q.c -= 2.2 * opt.tol;
            sol.relaxed = true;
            ph = phase_one(fi, ph.x, 0.0, opt);
        }
        if (!ph.found) {
            sol.x = ph.x;
            sol.objective = p.objective.value(ph.x);
            sol.status = QcqpStatus::infeasible;
            sol.duals = rvec::Zero(static_cast<Index>(m));
            sol.kkt_residual = std::numeric_limits<double>::infinity();
            return sol;
        }
        x = ph.x;
    }

    const Barrier bp{p.objective, fi};
    const double md = static_cast<double>(m);
    double t = opt.t0;
    bool hit_cap = false;
    auto never = [](const rvec &) { return false; };
    for (int stage = 0; stage < 200; ++stage) {
        const CenterOutcome c = center(bp, x, t, opt, never);
        sol.newton_steps += c.steps;
        sol.stage_objectives.push_back(p.objective.value(x));
        if (!c.converged && c.steps >= opt.max_newton)
            hit_cap = true;
        if (md / t <= 0.1 * opt.tol || c.at_floor)
            break;
        t *= opt.mu;
    }

    sol.x = x;
    sol.objective = p.objective.value(x);
    sol.duals.resize(static_cast<Index>(m));
    for (std::size_t i = 0; i < m; ++i)
        sol.duals(static_cast<Index>(i)) = 1.0 / (t * (-fi[i].value(x))) / scale[i];
    KktReport k = check_kkt(p, sol, opt.tol);

    // Central-path duals carry the centering error of the stiff boundary
    // directions; least-squares multipliers on the near-active set remove it.
    std::vector<Index> active;
    for (std::size_t i = 0; i < m; ++i)
        if (-fi[i].value(x) <= 1e-5)
            active.push_back(static_cast<Index>(i));
    if (!active.empty()) {
        rmat jac(n, static_cast<Index>(active.size()));
        for (std::size_t j = 0; j < active.size(); ++j)
            jac.col(static_cast<Index>(j)) = p.constraints[static_cast<std::size_t>(active[j])].gradient(x);
        const rvec lam = jac.colPivHouseholderQr().solve(-p.objective.gradient(x));
        QcqpSolution trial = sol;
        trial.duals.setZero();
        for (std::size_t j = 0; j < active.size(); ++j)
            trial.duals(active[j]) = std::max(0.0, lam(static_cast<Index>(j)));
        const KktReport kt = check_kkt(p, trial, opt.tol);
        if (trial.duals.allFinite() && kt.residual < k.residual) {
            sol.duals = trial.duals;
            k = kt;
        }
    }
    sol.kkt_residual = k.residual;
    sol.status = hit_cap ? QcqpStatus::max_iter : QcqpStatus::optimal;
    return sol;
}

KktReport check_kkt(const ConvexQcqp &p, const QcqpSolution &sol, double tol) {
    KktReport r;
    const std::size_t m = p.constraints.size();
    const rvec g0 = p.objective.gradient(sol.x);
    rvec stat = g0;
    double ref = std::max(1.0, g0.cwiseAbs().maxCoeff());
    r.violations.resize(m);
    r.complementarity.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto &q = p.constraints[i];
        const double lam = static_cast<Index>(i) < sol.duals.size() ? sol.duals(static_cast<Index>(i)) : 0.0;
        const double f = q.value(sol.x);
        const rvec gi = lam * q.gradient(sol.x);
        stat += gi;
        ref = std::max(ref, gi.cwiseAbs().maxCoeff());
        const double sc = constraint_scale(q);
        r.violations[i] = std::max(0.0, f) / sc;
        r.complementarity[i] = std::abs(lam * f);
        if (r.violations[i] > r.max_violation) {
            r.max_violation = r.violations[i];
            r.worst_constraint = static_cast<Index>(i);
        }
    }
    r.stationarity = stat.cwiseAbs().maxCoeff() / ref;
    r.residual = r.stationarity;
    r.residual = std::max(r.residual, r.max_violation);
    for (double c : r.complementarity)
        r.residual = std::max(r.residual, c);
    r.satisfied = r.residual <= tol;
    return r;
}

namespace {

void put_vec(std::ostream &os, const char *tag, const rvec &v) {
    char buf[40];
    os << tag;
    for (Index i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof buf, " %.17g", v(i));
        os << buf;
    }
    os << '\n';
}

void put_quadratic(std::ostream &os, const std::string &name, const Quadratic &q) {
    char buf[40];
    os << "quadratic " << name << '\n';
    std::snprintf(buf, sizeof buf, "c %.17g\n", q.c);
    os << buf;
    put_vec(os, "b", q.b);
    if (q.diag.size() != 0)
        put_vec(os, "diag", q.diag);
    if (q.dense.size() != 0) {
        os << "dense " << q.dense.rows() << '\n';
        for (Index i = 0; i < q.dense.rows(); ++i)
            put_vec(os, "row", q.dense.row(i).transpose());
    }
    os << "factors " << q.factors.rows() << '\n';
    for (Index i = 0; i < q.factors.rows(); ++i)
        put_vec(os, "row", q.factors.row(i).transpose());
    os << "end\n";
}

rvec get_vec(std::istream &is, const char *tag, Index n) {
    std::string t;
    is >> t;
    if (t != tag)
        throw std::runtime_error(std::string("qcqp text: expected ") + tag);
    rvec v(n);
    for (Index i = 0; i < n; ++i)
        is >> v(i);
    if (!is)
        throw std::runtime_error("qcqp text: truncated vector");
    return v;
}

Quadratic get_quadratic(std::istream &is, Index n) {
    std::string t, name;
    is >> t >> name;
    if (t != "quadratic")
        throw std::runtime_error("qcqp text: expected quadratic");
    Quadratic q = Quadratic::zero(n);
    is >> t >> q.c;
    if (t != "c")
        throw std::runtime_error("qcqp text: expected c");
    q.b = get_vec(is, "b", n);
    while (is >> t && t != "end") {
        if (t == "diag") {
            q.diag.resize(n);
            for (Index i = 0; i < n; ++i)
                is >> q.diag(i);
        } else if (t == "dense") {
            Index r = 0;
            is >> r;
            q.dense.resize(n, n);
            for (Index i = 0; i < n; ++i)
                q.dense.row(i) = get_vec(is, "row", n).transpose();
        } else if (t == "factors") {
            Index r = 0;
            is >> r;
            q.factors.resize(r, n);
            for (Index i = 0; i < r; ++i)
                q.factors.row(i) = get_vec(is, "row", n).transpose();
        } else {
            throw std::runtime_error("qcqp text: unknown section " + t);
        }
    }
    if (!is)
        throw std::runtime_error("qcqp text: truncated quadratic");
    return q;
}

} // namespace

void write_text(std::ostream &os, const ConvexQcqp &p) {
    os << "qcqp " << p.n << ' ' << p.constraints.size() << '\n';
    put_quadratic(os, "objective", p.objective);
    for (std::size_t i = 0; i < p.constraints.size(); ++i)
        put_quadratic(os, "constraint_" + std::to_string(i), p.constraints[i]);
}

ConvexQcqp read_qcqp_text(std::istream &is) {
    std::string t;
    ConvexQcqp p;
    std::size_t m = 0;
    is >> t >> p.n >> m;
    if (t != "qcqp" || !is)
        throw std::runtime_error("qcqp text: bad header");
    p.objective = get_quadratic(is, p.n);
    for (std::size_t i = 0; i < m; ++i)
        p.constraints.push_back(get_quadratic(is, p.n));
    p.validate();
    return p;
}

} // namespace bdris
