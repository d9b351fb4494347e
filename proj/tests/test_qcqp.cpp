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
#include "qcqp_oracle.hpp"

#include <doctest.h>

#include <sstream>

using namespace bdris;
using oracle::Instance;
using oracle::random_instance;
using oracle::random_matrix;

namespace {

Quadratic ball(const rvec &center, double radius) {
    const Index n = center.size();
    Quadratic q = Quadratic::zero(n);
    q.diag = rvec::Ones(n);
    q.b = -2.0 * center;
    q.c = center.squaredNorm() - radius * radius;
    return q;
}

ConvexQcqp ball_projection() {
    ConvexQcqp p;
    p.n = 2;
    rvec target(2);
    target << 2.0, 0.0;
    p.objective = ball(target, 0.0);
    p.constraints.push_back(ball(rvec::Zero(2), 1.0));
    return p;
}

} // namespace

TEST_CASE("ball projection") {
    const ConvexQcqp p = ball_projection();
    const QcqpSolution s = solve(p);
    CHECK(s.status == QcqpStatus::optimal);
    CHECK(std::abs(s.x(0) - 1.0) < 1e-7);
    CHECK(std::abs(s.x(1)) < 1e-7);
    CHECK(std::abs(s.objective - 1.0) < 1e-7);
    CHECK(s.kkt_residual <= 1e-8);
    CHECK(std::abs(s.duals(0) - 1.0) < 1e-6);
}

TEST_CASE("unconstrained strictly convex objective") {
    Rng rng(4);
    const rmat a = random_matrix(5, 5, rng);
    ConvexQcqp p;
    p.n = 5;
    p.objective = Quadratic::zero(5);
    p.objective.factors = a;
    p.objective.diag = rvec::Constant(5, 0.1);
    p.objective.b = random_matrix(5, 1, rng);
    const QcqpSolution s = solve(p);
    const rmat P = a.transpose() * a + 0.1 * rmat::Identity(5, 5);
    const rvec expected = -0.5 * P.ldlt().solve(p.objective.b);
    CHECK((s.x - expected).norm() <= 1e-10);
    CHECK(s.status == QcqpStatus::optimal);
}

TEST_CASE("random instances agree with the projected-gradient oracle") {
    Rng rng(2024);
    for (int idx = 0; idx < 50; ++idx) {
        Instance in = random_instance(rng, idx);
        const QcqpSolution s = solve(in.problem);
        REQUIRE(s.status == QcqpStatus::optimal);
        const rvec xo = oracle::projected_gradient(in.p0, in.b0, in.sets);
        const double fo = xo.dot(in.p0 * xo) + in.b0.dot(xo);
        CHECK(std::abs(s.objective - fo) <= 1e-6 * std::max(1.0, std::abs(fo)));
        CHECK(s.kkt_residual <= 1e-8);

        for (std::size_t k = 1; k < s.stage_objectives.size(); ++k)
            CHECK(s.stage_objectives[k] <= s.stage_objectives[k - 1] + 1e-12 * std::max(1.0, std::abs(s.stage_objectives[k])));

        // never worse than any sampled feasible point
        std::normal_distribution<double> nd(0.0, 1.0);
        int sampled = 0;
        for (int t = 0; t < 2000 && sampled < 100; ++t) {
            rvec z(in.problem.n);
            for (Index i = 0; i < z.size(); ++i)
                z(i) = nd(rng);
            z *= 0.5;
            bool ok = true;
            for (const auto &e : in.sets)
                ok = ok && e.value(z) <= 0.0;
            if (!ok)
                continue;
            ++sampled;
            CHECK(s.objective <= in.problem.objective.value(z) + 1e-8);
        }
    }
}

TEST_CASE("solver is deterministic") {
    Rng a(7), b(7);
    const Instance x = random_instance(a, 3);
    const Instance y = random_instance(b, 3);
    CHECK(solve(x.problem).x == solve(y.problem).x);
}

TEST_CASE("structured and dense Newton paths agree") {
    // alpha-like coordinate with no curvature of its own
    Rng rng(12);
    const Index n = 9;
    ConvexQcqp p;
    p.n = n;
    p.objective = Quadratic::zero(n);
    p.objective.diag = rvec::Constant(n, 0.3);
    p.objective.diag(n - 1) = 0.0;
    p.objective.b = random_matrix(n, 1, rng);
    p.objective.b(n - 1) = -1.0;
    for (int k = 0; k < 3; ++k) {
        Quadratic q = Quadratic::zero(n);
        q.factors = random_matrix(3, n, rng);
        q.factors.col(n - 1).setZero();
        q.b = 0.2 * random_matrix(n, 1, rng);
        q.b(n - 1) = 0.5 + k;
        q.c = -2.0;
        p.constraints.push_back(q);
    }
    ConvexQcqp d = p;
    d.objective.dense = d.objective.hessian_half();
    d.objective.diag.resize(0);
    for (auto &q : d.constraints) {
        q.dense = q.hessian_half();
        q.factors.resize(0, n);
    }
    const QcqpSolution a = solve(p);
    const QcqpSolution b = solve(d);
    CHECK(a.status == QcqpStatus::optimal);
    CHECK(b.status == QcqpStatus::optimal);
    CHECK((a.x - b.x).norm() <= 1e-6 * std::max(1.0, b.x.norm()));
    CHECK(std::abs(a.objective - b.objective) <= 1e-8 * std::max(1.0, std::abs(b.objective)));
}

TEST_CASE("infeasible and marginal problems") {
    ConvexQcqp p;
    p.n = 2;
    p.objective = Quadratic::zero(2);
    p.objective.diag = rvec::Ones(2);
    rvec c1(2), c2(2);
    c1 << 0.0, 0.0;
    c2 << 3.0, 0.0;
    p.constraints = {ball(c1, 1.0), ball(c2, 1.0)};
    const QcqpSolution s = solve(p);
    CHECK(s.status == QcqpStatus::infeasible);
    CHECK(s.phase1_slack > 0.0);

    // touching balls: a single feasible point
    c2 << 2.0, 0.0;
    p.constraints = {ball(c1, 1.0), ball(c2, 1.0)};
    const QcqpSolution t = solve(p);
    CHECK(t.relaxed);
    CHECK(t.status == QcqpStatus::optimal);
    CHECK(std::abs(t.x(0) - 1.0) < 1e-3);
}

TEST_CASE("KKT report") {
    const ConvexQcqp p = ball_projection();
    QcqpSolution exact;
    exact.x = rvec(2);
    exact.x << 1.0, 0.0;
    exact.duals = rvec::Ones(1);
    const KktReport r = check_kkt(p, exact, 1e-10);
    CHECK(r.residual <= 1e-10);
    CHECK(r.satisfied);

    QcqpSolution moved = exact;
    moved.x(1) += 0.1;
    CHECK(check_kkt(p, moved, 1e-8).stationarity > 1e-8);

    QcqpSolution outside = exact;
    outside.x(0) = 1.5;
    const KktReport bad = check_kkt(p, outside, 1e-8);
    CHECK(bad.worst_constraint == 0);
    CHECK(bad.violations[0] > 0.0);
    CHECK_FALSE(bad.satisfied);
}

TEST_CASE("text dump round trip") {
    Rng rng(5);
    const Instance in = random_instance(rng, 5);
    std::stringstream ss;
    write_text(ss, in.problem);
    const ConvexQcqp back = read_qcqp_text(ss);
    CHECK(back.n == in.problem.n);
    REQUIRE(back.constraints.size() == in.problem.constraints.size());
    const rvec x = rvec::Ones(back.n);
    CHECK(back.objective.value(x) == in.problem.objective.value(x));
    CHECK(back.constraints[1].value(x) == in.problem.constraints[1].value(x));
}

TEST_CASE("hint and option validation") {
    const ConvexQcqp p = ball_projection();
    QcqpOptions o;
    o.x0 = rvec::Zero(3);
    CHECK_THROWS_AS(solve(p, o), DimensionError);
    o.x0.reset();
    o.tol = 0.0;
    CHECK_THROWS_AS(solve(p, o), std::invalid_argument);
    QcqpOptions h;
    h.x0 = rvec::Constant(2, 0.1);
    const QcqpSolution s = solve(p, h);
    CHECK(s.phase1_slack < 0.0);
    CHECK(std::abs(s.objective - 1.0) < 1e-7);
}
