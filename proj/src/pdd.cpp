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

#include "bdris/pdd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace bdris {

void write_trace_csv(std::ostream &os, const std::vector<TraceRecord> &trace) {
    os << "start,outer,inner,al,violation,rho,min_rate,pcrb\n";
    char buf[256];
    for (const auto &t : trace) {
        std::snprintf(buf, sizeof buf, "%d,%d,%d,%.12g,%.12g,%.12g,%.12g,%.12g\n", t.start, t.outer, t.inner, t.al,
                      t.violation, t.rho, t.min_rate, t.pcrb);
        os << buf;
    }
}

namespace {

cvec solve_hpd(const cmat &a, const cvec &b) {
    Eigen::LLT<cmat> llt(a);
    if (llt.info() != Eigen::Success)
        throw NumericalError("covariance is not positive definite");
    return llt.solve(b);
}

double inf_norm(const cmat &a) { return a.cwiseAbs().rowwise().sum().maxCoeff(); }

} // namespace

NuVectors update_nu(const cmat &phi, const ChannelSet &ch, const ScenarioConfig &cfg) {
    NuVectors nu;
    const cmat cascade = ch.irs_bs * phi;
    Eigen::LLT<cmat> llt(sigma0(phi, ch, cfg));
    if (llt.info() != Eigen::Success)
        throw NumericalError("covariance is not positive definite");
    for (Index z = 0; z < ch.u_evd.rank; ++z)
        nu.zeta.push_back(llt.solve(cascade * ch.u_evd.vectors.col(z)));
    const auto h = effective_user_channels(phi, ch);
    for (Index k = 0; k < ch.users(); ++k)
        nu.users.push_back(solve_hpd(sigma_k(k, phi, ch, cfg), h[static_cast<std::size_t>(k)]));
    return nu;
}

double sensing_surrogate(Index zeta, const cmat &phi, const cvec &nu, const ChannelSet &ch, const ScenarioConfig &cfg) {
    const cvec v = ch.irs_bs * phi * ch.u_evd.vectors.col(zeta);
    return nu.dot(sigma0(phi, ch, cfg) * nu).real() - 2.0 * nu.dot(v).real();
}

double rate_surrogate(Index k, const cmat &phi, const cvec &nu, const ChannelSet &ch, const ScenarioConfig &cfg) {
    const cvec hk = effective_user_channels(phi, ch)[static_cast<std::size_t>(k)];
    return nu.dot(sigma_k(k, phi, ch, cfg) * nu).real() - 2.0 * nu.dot(hk).real();
}

double fisher_target(double gamma_pcrb, const ChannelSet &ch, const ScenarioConfig &cfg) {
    return (1.0 / gamma_pcrb - ch.fisher_prior) / (2.0 * cfg.target_power * cfg.block_length);
}

PddContext::PddContext(const ChannelSet &ch, const ScenarioConfig &cfg, PddMode mode, double gamma)
    : ch_(ch), cfg_(cfg), mode_(mode), gamma_(gamma), groups_(cfg.group_sizes) {
    Index off = 0;
    for (Index s : groups_) {
        offsets_.push_back(off);
        for (Index c = 0; c < s; ++c)
            for (Index r = c; r < s; ++r)
                entries_.push_back({off + r, off + c});
        off += s;
    }
    dim_ = static_cast<Index>(entries_.size());
    if (off != ch.irs_bs.cols())
        throw DimensionError("pdd: group sizes do not match the channel");
    if (mode_ == PddMode::isac && ch.users() == 0)
        throw std::invalid_argument("pdd: rate objective needs at least one user");
    if (mode_ != PddMode::rate_only && !(cfg_.target_power > 0.0))
        throw std::invalid_argument("pdd: sensing needs a positive target power");
    if (cfg_.target_power > 0.0) {
        const HermitianEvd g = hermitian_evd(ch.g_moment, cfg.evd_rank_tol);
        for (Index i = 0; i < g.rank; ++i) {
            g_values_.push_back(g.values(i));
            g_vectors_.push_back(g.vectors.col(i));
        }
    }
}

bool PddContext::pcrb_constraint_active() const noexcept { return mode_ == PddMode::isac && gamma_ > 0.0; }

Index PddContext::real_dim() const noexcept { return 2 * dim_ + (mode_ == PddMode::sensing ? 0 : 1); }

cmat PddContext::assemble(const std::vector<cvec> &halves) const {
    const Index m = ch_.irs_bs.cols();
    cmat phi = cmat::Zero(m, m);
    Index j = 0;
    for (const auto &h : halves)
        for (Index i = 0; i < h.size(); ++i, ++j) {
            const Entry &e = entries_[static_cast<std::size_t>(j)];
            phi(e.row, e.col) = h(i);
            phi(e.col, e.row) = h(i);
        }
    return phi;
}

cvec PddContext::compress(const cvec &h, const cvec &b) const {
    // compressed form of conj(h) (x) b through the selection and duplication maps
    cvec w(dim_);
    for (Index j = 0; j < dim_; ++j) {
        const Entry &e = entries_[static_cast<std::size_t>(j)];
        cd v = b(e.row) * std::conj(h(e.col));
        if (e.row != e.col)
            v += b(e.col) * std::conj(h(e.row));
        w(j) = v;
    }
    return w;
}

void PddContext::compress_rows(const cvec &h, const cvec &b, double weight, rmat &rows, Index at) const {
    const cvec w = compress(h, b);
    const double s = std::sqrt(weight);
    rows.row(at).setZero();
    rows.row(at + 1).setZero();
    rows.block(at, 0, 1, dim_) = s * w.real().transpose();
    rows.block(at, dim_, 1, dim_) = s * w.imag().transpose();
    rows.block(at + 1, 0, 1, dim_) = -s * w.imag().transpose();
    rows.block(at + 1, dim_, 1, dim_) = s * w.real().transpose();
}

PddState PddContext::initial_state(const ReflectionMatrix &phi0, double rho0, double scale_boost) const {
    if (phi0.group_sizes() != groups_)
        throw DimensionError("pdd: start point has a different group structure");
    PddState s;
    s.phi_halves = phi0.halves();
    s.psi = phi0.blocks();
    for (const auto &b : s.psi)
        s.lambda.push_back(cmat::Zero(b.rows(), b.cols()));
    s.rho = rho0;
    const cmat phi = phi0.dense();
    s.nu = update_nu(phi, ch_, cfg_);
    if (mode_ == PddMode::sensing) {
        const cmat cascade = ch_.irs_bs * phi;
        double acc = 0.0;
        for (Index z = 0; z < ch_.u_evd.rank; ++z) {
            const cvec v = cascade * ch_.u_evd.vectors.col(z);
            acc += ch_.u_evd.values(z) * v.dot(s.nu.zeta[static_cast<std::size_t>(z)]).real();
        }
        // the sensing objective grows quadratically with the scale of Phi; a
        // reference of M/2 times its start value usually keeps the penalized
        // problem bounded. The growth is at most |R|^2 kappa_max / sigma^2 per
        // unit |Phi|_F^2, so twice that over the penalty curvature always does.
        const double by_start = (acc > 0.0 ? acc : 1.0) * 0.5 * static_cast<double>(ch_.irs_bs.cols());
        const double r = Eigen::JacobiSVD<cmat>(ch_.irs_bs).singularValues()(0);
        const double bounded = 4.0 * rho0 * r * r * ch_.u_evd.values(0) / cfg_.noise_power;
        s.objective_scale = std::max(by_start, std::min(by_start * scale_boost, bounded));
    } else {
        const auto h = effective_user_channels(phi, ch_);
        double best = std::numeric_limits<double>::infinity();
        for (Index k = 0; k < ch_.users(); ++k) {
            const double sinr = cfg_.user_power[static_cast<std::size_t>(k)] *
                                h[static_cast<std::size_t>(k)].dot(s.nu.users[static_cast<std::size_t>(k)]).real();
            best = std::min(best, sinr);
        }
        s.objective_scale = best > 0.0 ? best : 1.0;
        s.alpha = best * (1.0 - 1e-4);
    }
    return s;
}

rvec PddContext::pack(const PddState &s) const {
    rvec x(real_dim());
    Index j = 0;
    for (const auto &h : s.phi_halves)
        for (Index i = 0; i < h.size(); ++i, ++j) {
            x(j) = h(i).real();
            x(dim_ + j) = h(i).imag();
        }
    if (mode_ != PddMode::sensing)
        x(2 * dim_) = s.alpha;
    return x;
}

void PddContext::unpack(const rvec &x, PddState &s) const {
    Index j = 0;
    for (auto &h : s.phi_halves)
        for (Index i = 0; i < h.size(); ++i, ++j)
            h(i) = cd(x(j), x(dim_ + j));
    if (mode_ != PddMode::sensing)
        s.alpha = x(2 * dim_);
}

ConvexQcqp PddContext::build_subproblem(const PddState &s) const {
    const Index n = real_dim();
    const Index d = dim_;
    const Index users = ch_.users();
    const double noise = cfg_.noise_power;
    const double p0 = cfg_.target_power;
    const cmat &r = ch_.irs_bs;
    auto power = [&](Index k) { return cfg_.user_power[static_cast<std::size_t>(k)]; };
    auto lift_linear = [&](const cvec &q, rvec &b) {
        b.head(d) += 2.0 * q.real();
        b.segment(d, d) += 2.0 * q.imag();
    };

    ConvexQcqp p;
    p.n = n;

    // Fisher-information surrogate sum_z kappa_z f_z, shared by the PCRB
    // constraint and the sensing objective.
    auto sensing_quadratic = [&]() {
        Quadratic q = Quadratic::zero(n);
        const Index rank = ch_.u_evd.rank;
        q.factors = rmat::Zero(2 * rank * users, n);
        cvec lin = cvec::Zero(d);
        Index row = 0;
        for (Index z = 0; z < rank; ++z) {
            const double kappa = ch_.u_evd.values(z);
            const cvec &nu = s.nu.zeta[static_cast<std::size_t>(z)];
            const cvec b = r.adjoint() * nu;
            double cst = noise * nu.squaredNorm();
            for (Index k = 0; k < users; ++k) {
                const auto ku = static_cast<std::size_t>(k);
                const cd a = nu.dot(ch_.direct[ku]);
                compress_rows(ch_.user_irs[ku], b, kappa * power(k), q.factors, row);
                row += 2;
                lin += kappa * power(k) * a * compress(ch_.user_irs[ku], b);
                cst += power(k) * std::norm(a);
            }
            lin -= kappa * compress(ch_.u_evd.vectors.col(z), b);
            q.c += kappa * cst;
        }
        lift_linear(lin, q.b);
        return q;
    };

    if (mode_ == PddMode::sensing) {
        p.objective = sensing_quadratic();
        const double inv = 1.0 / s.objective_scale;
        p.objective.factors *= std::sqrt(inv);
        p.objective.b *= inv;
        p.objective.c *= inv;
    } else {
        p.objective = Quadratic::zero(n);
        p.objective.b(2 * d) = -1.0 / s.objective_scale;

        for (Index k = 0; k < users; ++k) {
            const cvec &nu = s.nu.users[static_cast<std::size_t>(k)];
            const cvec b = r.adjoint() * nu;
            Quadratic q = Quadratic::zero(n);
            const Index g_rank = p0 > 0.0 ? static_cast<Index>(g_values_.size()) : 0;
            q.factors = rmat::Zero(2 * (users - 1 + g_rank), n);
            cvec lin = -compress(ch_.user_irs[static_cast<std::size_t>(k)], b);
            double cst = noise * nu.squaredNorm() - 2.0 * nu.dot(ch_.direct[static_cast<std::size_t>(k)]).real();
            Index row = 0;
            for (Index j = 0; j < users; ++j) {
                if (j == k)
                    continue;
                const auto ju = static_cast<std::size_t>(j);
                const cd a = nu.dot(ch_.direct[ju]);
                compress_rows(ch_.user_irs[ju], b, power(j), q.factors, row);
                row += 2;
                lin += power(j) * a * compress(ch_.user_irs[ju], b);
                cst += power(j) * std::norm(a);
            }
            for (Index i = 0; i < g_rank; ++i) {
                compress_rows(g_vectors_[static_cast<std::size_t>(i)], b, p0 * g_values_[static_cast<std::size_t>(i)],
                              q.factors, row);
                row += 2;
            }
            lift_linear(lin, q.b);
            q.b(2 * d) = 1.0 / power(k);
            q.c = cst;
            p.constraints.push_back(std::move(q));
        }
        if (pcrb_constraint_active()) {
            Quadratic q = sensing_quadratic();
            q.c += gamma_;
            p.constraints.push_back(std::move(q));
        }
    }

    // augmented Lagrangian terms, per group
    p.objective.diag = rvec::Zero(n);
    Index j = 0;
    for (std::size_t g = 0; g < groups_.size(); ++g) {
        const Index off = offsets_[g];
        const cmat &lam = s.lambda[g];
        const cmat &psi = s.psi[g];
        for (Index i = 0; i < groups_[g] * (groups_[g] + 1) / 2; ++i, ++j) {
            const Entry &e = entries_[static_cast<std::size_t>(j)];
            const Index lr = e.row - off, lc = e.col - off;
            const bool diag = lr == lc;
            const double w = diag ? 1.0 : 2.0;
            const cd lam_c = diag ? lam(lr, lc) : lam(lr, lc) + lam(lc, lr);
            const cd psi_c = diag ? psi(lr, lc) : psi(lr, lc) + psi(lc, lr);
            p.objective.diag(j) = w / (2.0 * s.rho);
            p.objective.diag(d + j) = w / (2.0 * s.rho);
            p.objective.b(j) += lam_c.real() - psi_c.real() / s.rho;
            p.objective.b(d + j) += lam_c.imag() - psi_c.imag() / s.rho;
        }
        p.objective.c += psi.squaredNorm() / (2.0 * s.rho) - lam.cwiseProduct(psi.conjugate()).sum().real();
    }
    return p;
}

double PddContext::al_value(const PddState &s) const {
    const cmat phi = assemble(s.phi_halves);
    double v = 0.0;
    if (mode_ == PddMode::sensing) {
        for (Index z = 0; z < ch_.u_evd.rank; ++z)
            v += ch_.u_evd.values(z) * sensing_surrogate(z, phi, s.nu.zeta[static_cast<std::size_t>(z)], ch_, cfg_);
        v /= s.objective_scale;
    } else {
        v = -s.alpha / s.objective_scale;
    }
    for (std::size_t g = 0; g < groups_.size(); ++g) {
        const cmat diff = phi.block(offsets_[g], offsets_[g], groups_[g], groups_[g]) - s.psi[g];
        v += (s.lambda[g].adjoint() * diff).trace().real() + diff.squaredNorm() / (2.0 * s.rho);
    }
    return v;
}

double PddContext::violation(const PddState &s) const {
    const cmat phi = assemble(s.phi_halves);
    double v = 0.0;
    for (std::size_t g = 0; g < groups_.size(); ++g)
        v = std::max(v, inf_norm(phi.block(offsets_[g], offsets_[g], groups_[g], groups_[g]) - s.psi[g]));
    return v;
}

void inner_ao(PddState &s, const PddContext &ctx, const PddConfig &pc) {
    if (ctx.mode() != PddMode::sensing && ctx.channels().users() == 0)
        throw std::invalid_argument("inner_ao: no users, the rate objective is undefined");
    double prev = ctx.al_value(s);
    for (int it = 0; it < pc.max_ao; ++it) {
        s.nu = update_nu(ctx.assemble(s.phi_halves), ctx.channels(), ctx.config());
        const ConvexQcqp p = ctx.build_subproblem(s);
        QcqpOptions opt = pc.qcqp;
        const rvec hint = ctx.pack(s);
        opt.x0 = hint;
        // a slightly lower rate level starts the solver off the rate constraints
        if (ctx.mode() != PddMode::sensing)
            (*opt.x0)(hint.size() - 1) -= 1e-3 * std::abs(s.alpha);
        const QcqpSolution sol = solve(p, opt);
        ++s.qcqp_solves;
        s.newton_steps += sol.newton_steps;
        if (sol.status == QcqpStatus::infeasible) {
            const cmat phi = ctx.assemble(s.phi_halves);
            throw InfeasibleError("inner subproblem has no strictly feasible point",
                                  pcrb(phi, ctx.channels(), ctx.config()));
        }
        // keep the previous point if the solver could not improve on it
        if (sol.objective <= p.objective.value(hint) + 1e-12 * std::max(1.0, std::abs(sol.objective)))
            ctx.unpack(sol.x, s);
        const double cur = ctx.al_value(s);
        if (std::abs(cur - prev) <= pc.inner_tol * std::max(1.0, std::abs(prev)))
            break;
        prev = cur;
    }
}

void project_psi(PddState &s, const PddContext &ctx) {
    const cmat phi = ctx.assemble(s.phi_halves);
    Index off = 0;
    for (std::size_t g = 0; g < s.psi.size(); ++g) {
        const Index m = s.psi[g].rows();
        s.psi[g] = project_unitary(phi.block(off, off, m, m) + s.rho * s.lambda[g]);
        off += m;
    }
}

bool outer_update(PddState &s, const PddContext &ctx, double eps, double delta) {
    if (ctx.violation(s) <= eps) {
        const cmat phi = ctx.assemble(s.phi_halves);
        Index off = 0;
        for (std::size_t g = 0; g < s.psi.size(); ++g) {
            const Index m = s.psi[g].rows();
            s.lambda[g] += (phi.block(off, off, m, m) - s.psi[g]) / s.rho;
            off += m;
        }
        return true;
    }
    s.rho *= delta;
    return false;
}

namespace {

void validate(const PddConfig &pc) {
    if (!(pc.rho0 > 0.0) || !(pc.delta > 0.0 && pc.delta < 1.0) || !(pc.eps0 > 0.0) || !(pc.eps_final > 0.0) ||
        !(pc.inner_tol > 0.0) || !(pc.eps_decay > 0.0 && pc.eps_decay <= 1.0))
        throw std::invalid_argument("pdd: invalid configuration");
    if (pc.max_outer < 1 || pc.max_inner < 1 || pc.max_ao < 1 || pc.n_starts < 1)
        throw std::invalid_argument("pdd: iteration caps must be positive");
}

void record(PddState &s, const PddContext &ctx, int start, int outer, int inner) {
    const cmat phi = ctx.assemble(s.phi_halves);
    TraceRecord t;
    t.start = start;
    t.outer = outer;
    t.inner = inner;
    t.al = ctx.al_value(s);
    t.violation = ctx.violation(s);
    t.rho = s.rho;
    const auto rates = expected_rate_lower_bounds(phi, ctx.channels(), ctx.config());
    t.min_rate = rates.empty() ? 0.0 : *std::min_element(rates.begin(), rates.end());
    t.pcrb = ctx.config().target_power > 0.0 ? pcrb(phi, ctx.channels(), ctx.config())
                                             : 1.0 / ctx.channels().fisher_prior;
    s.history.push_back(t);
}

// Better-than comparison for candidate selection.
bool better(PddMode mode, const IsacMetrics &a, const IsacMetrics &b) {
    if (mode == PddMode::sensing)
        return a.pcrb < b.pcrb;
    return a.min_rate > b.min_rate;
}

PddResult as_candidate(const ReflectionMatrix &phi, const ChannelSet &ch, const ScenarioConfig &cfg) {
    PddResult r{phi, evaluate(phi, ch, cfg), {}, 0, 0.0, true, 0, 0, true};
    return r;
}

std::vector<ReflectionMatrix> regrouped(const std::vector<ReflectionMatrix> &hints, const std::vector<Index> &groups) {
    std::vector<ReflectionMatrix> out;
    for (const auto &h : hints)
        out.push_back(regroup(h, groups));
    return out;
}

struct Diverged {};

PddResult run_scaled(const PddContext &ctx, const ReflectionMatrix &start, const PddConfig &pc, int start_index,
                     double scale_boost) {
    PddState s = ctx.initial_state(start, pc.rho0, scale_boost);
    const double unitary_norm2 = static_cast<double>(ctx.channels().irs_bs.cols());
    int outer = 0;
    bool converged = false;
    double eps = pc.eps0;
    for (; outer < pc.max_outer; ++outer) {
        double prev = ctx.al_value(s);
        bool retried = false;
        for (int inner = 0; inner < pc.max_inner; ++inner) {
            try {
                inner_ao(s, ctx, pc);
            } catch (const InfeasibleError &) {
                if (retried)
                    throw;
                // one retry per outer iteration: re-project and reset the duals
                retried = true;
                project_psi(s, ctx);
                for (auto &l : s.lambda)
                    l.setZero();
                inner_ao(s, ctx, pc);
            }
            if (ctx.mode() == PddMode::sensing &&
                ctx.assemble(s.phi_halves).squaredNorm() > 4.0 * unitary_norm2)
                throw Diverged{};
            project_psi(s, ctx);
            record(s, ctx, start_index, outer, inner);
            const double cur = s.history.back().al;
            if (std::abs(cur - prev) <= pc.inner_tol * std::max(1.0, std::abs(prev)))
                break;
            prev = cur;
        }
        if (ctx.violation(s) <= pc.eps_final) {
            converged = true;
            ++outer;
            break;
        }
        const double v = ctx.violation(s);
        outer_update(s, ctx, eps, pc.delta);
        // the threshold follows the schedule and also tracks the achieved violation
        eps = std::max(pc.eps_decay * std::min(eps, v), pc.eps_final);
    }

    PddResult res{ReflectionMatrix::nearest_feasible(ctx.assemble(s.phi_halves), ctx.config().group_sizes),
                  {},
                  std::move(s.history),
                  outer,
                  ctx.violation(s),
                  converged,
                  s.qcqp_solves,
                  s.newton_steps,
                  false};
    res.metrics = evaluate(res.phi, ctx.channels(), ctx.config());
    return res;
}

} // namespace

PddResult run_pdd(const PddContext &ctx, const ReflectionMatrix &start, const PddConfig &pc, int start_index) {
    validate(pc);
    // a sensing run that runs away from the unitary set is restarted with a
    // larger objective reference
    for (double boost = 1.0;; boost *= 4.0) {
        try {
            return run_scaled(ctx, start, pc, start_index, boost);
        } catch (const Diverged &) {
        } catch (const NumericalError &) {
            if (ctx.mode() != PddMode::sensing)
                throw;
        }
        if (boost > 1e6)
            throw NumericalError("pdd: sensing iterations diverge at every objective scale");
    }
}

ReflectionMatrix regroup(const ReflectionMatrix &phi, const std::vector<Index> &group_sizes) {
    if (phi.group_sizes() == group_sizes)
        return phi;
    const cmat dense = phi.dense();
    ReflectionMatrix out = ReflectionMatrix::nearest_feasible(dense, group_sizes, 1e-9);
    if ((out.dense() - dense).norm() > 1e-9 * std::max(1.0, dense.norm()))
        throw std::invalid_argument("regroup: target structure does not contain the source blocks");
    return out;
}

ScenarioConfig without_users(const ScenarioConfig &cfg) {
    ScenarioConfig c = cfg;
    c.user_angle.clear();
    c.user_irs_distance.clear();
    c.user_power.clear();
    c.direct_blocked.clear();
    return c;
}

ChannelSet without_users(const ChannelSet &ch) {
    ChannelSet c = ch;
    c.direct.clear();
    c.user_irs.clear();
    return c;
}

namespace {

// Runs the starts, adds the hints as ready-made candidates, keeps the best
// acceptable one.
template <typename Accept>
PddResult best_of(const PddContext &ctx, const std::vector<ReflectionMatrix> &starts,
                  const std::vector<ReflectionMatrix> &hints, const PddConfig &pc, Accept &&accept) {
    std::vector<PddResult> pool;
    std::vector<TraceRecord> trace;
    int qcqp = 0, newton = 0;
    for (std::size_t i = 0; i < starts.size(); ++i) {
        PddResult r = run_pdd(ctx, starts[i], pc, static_cast<int>(i));
        trace.insert(trace.end(), r.trace.begin(), r.trace.end());
        qcqp += r.qcqp_solves;
        newton += r.newton_steps;
        pool.push_back(std::move(r));
    }
    for (const auto &h : hints)
        pool.push_back(as_candidate(h, ctx.channels(), ctx.config()));

    const PddResult *best = nullptr;
    for (const auto &r : pool)
        if (accept(r) && (!best || better(ctx.mode(), r.metrics, best->metrics)))
            best = &r;
    if (!best) // nothing acceptable: report the run closest to the sensing target
        for (const auto &r : pool)
            if (!best || r.metrics.pcrb < best->metrics.pcrb)
                best = &r;
    PddResult out = *best;
    out.trace = std::move(trace);
    out.qcqp_solves = qcqp;
    out.newton_steps = newton;
    return out;
}

std::vector<ReflectionMatrix> random_starts(const std::vector<Index> &groups, int count, std::uint64_t seed) {
    std::vector<ReflectionMatrix> out;
    Rng rng(seed);
    for (int i = 0; i < count; ++i)
        out.push_back(ReflectionMatrix::random(groups, rng));
    return out;
}

// First start: the best of identity and the hints under the mode's metric.
ReflectionMatrix first_start(const PddContext &ctx, const std::vector<ReflectionMatrix> &hints) {
    ReflectionMatrix best = ReflectionMatrix::identity(ctx.config().group_sizes);
    IsacMetrics bm = evaluate(best, ctx.channels(), ctx.config());
    for (const auto &h : hints) {
        const IsacMetrics m = evaluate(h, ctx.channels(), ctx.config());
        if (better(ctx.mode(), m, bm)) {
            best = h;
            bm = m;
        }
    }
    return best;
}

} // namespace

PddResult solve_sensing_only(const ChannelSet &ch, const ScenarioConfig &cfg, const PddConfig &pc,
                             const std::vector<ReflectionMatrix> &hints) {
    validate(pc);
    const PddContext ctx(ch, cfg, PddMode::sensing, 0.0);
    const auto hs = regrouped(hints, cfg.group_sizes);
    std::vector<ReflectionMatrix> starts{first_start(ctx, hs)};
    for (auto &r : random_starts(cfg.group_sizes, pc.n_starts - 1, pc.seed))
        starts.push_back(std::move(r));
    return best_of(ctx, starts, hs, pc, [&](const PddResult &r) { return r.from_hint || r.violation <= pc.eps_final; });
}

PddResult solve_isac(const ChannelSet &ch, const ScenarioConfig &cfg, const PddConfig &pc,
                     const std::vector<ReflectionMatrix> &hints) {
    validate(pc);
    if (ch.users() == 0)
        throw std::invalid_argument("solve_isac: at least one user required");
    const double gamma = pc.gamma_pcrb.value_or(cfg.gamma_pcrb);
    ScenarioConfig c = cfg;
    c.gamma_pcrb = gamma;
    const auto hs = regrouped(hints, cfg.group_sizes);

    const PddResult sensing = solve_sensing_only(ch, c, pc, hs);
    const double limit = gamma * (1.0 + pc.feas_slack);
    if (sensing.metrics.pcrb > limit)
        throw InfeasibleError("PCRB threshold below the achievable floor", sensing.metrics.pcrb);

    const PddContext ctx(ch, c, PddMode::isac, fisher_target(gamma, ch, c));
    std::vector<ReflectionMatrix> starts{sensing.phi};
    for (auto &r : random_starts(cfg.group_sizes, pc.n_starts - 1, pc.seed))
        starts.push_back(std::move(r));
    std::vector<ReflectionMatrix> feasible_hints{sensing.phi};
    for (const auto &h : hs)
        feasible_hints.push_back(h);
    PddResult out = best_of(ctx, starts, feasible_hints, pc, [&](const PddResult &r) {
        return r.metrics.pcrb <= limit && (r.from_hint || r.violation <= pc.eps_final);
    });
    out.metrics.feasible = out.metrics.pcrb <= limit;
    return out;
}

PddResult solve_maxmin_rate_no_sensing(const ChannelSet &ch, const ScenarioConfig &cfg, const PddConfig &pc,
                                       const std::vector<ReflectionMatrix> &hints) {
    validate(pc);
    if (ch.users() == 0)
        throw std::invalid_argument("solve_maxmin_rate_no_sensing: at least one user required");
    ScenarioConfig c = cfg;
    c.target_power = 0.0;
    const PddContext ctx(ch, c, PddMode::rate_only, 0.0);
    const auto hs = regrouped(hints, cfg.group_sizes);
    std::vector<ReflectionMatrix> starts{first_start(ctx, hs)};
    for (auto &r : random_starts(cfg.group_sizes, pc.n_starts - 1, pc.seed))
        starts.push_back(std::move(r));
    return best_of(ctx, starts, hs, pc, [&](const PddResult &r) { return r.from_hint || r.violation <= pc.eps_final; });
}

} // namespace bdris
