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

#pragma once

#include "bdris/types.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace bdris {

/// x^T P x + b^T x + c with P = diag(d) + dense + F^T F.
/// Any of the three parts may be left empty.
struct Quadratic {
    rvec diag;     // size n, or empty
    rmat dense;    // n x n symmetric PSD, or empty
    rmat factors;  // r x n, or empty (0 rows)
    rvec b;        // size n
    double c = 0.0;

    static Quadratic zero(Index n);

    Index dim() const noexcept { return b.size(); }
    rvec apply(const rvec &x) const; // P x
    double value(const rvec &x) const;
    rvec gradient(const rvec &x) const; // 2 P x + b
    rmat hessian_half() const;          // P as a dense matrix
    /// Throws DimensionError on inconsistent sizes.
    void validate(Index n) const;
};

/// minimize f0(x) subject to fi(x) <= 0
struct ConvexQcqp {
    Index n = 0;
    Quadratic objective;
    std::vector<Quadratic> constraints;

    void validate() const;
};

struct QcqpOptions {
    double tol = 1e-8;
    int max_newton = 200; // per centering stage
    double t0 = 1.0;
    double mu = 10.0;
    double ls_alpha = 0.25;
    double ls_beta = 0.5;
    std::optional<rvec> x0; // initial point hint
};

enum class QcqpStatus { optimal, infeasible, max_iter };

const char *to_string(QcqpStatus s);

struct QcqpSolution {
    rvec x;
    double objective = 0.0;
    QcqpStatus status = QcqpStatus::max_iter;
    double kkt_residual = 0.0;
    rvec duals;
    bool relaxed = false;      // one relaxation retry was needed
    double phase1_slack = 0.0; // best max_i fi found by phase I (scaled units); <= 0 if skipped
    int newton_steps = 0;
    std::vector<double> stage_objectives;
};

QcqpSolution solve(const ConvexQcqp &p, const QcqpOptions &opt = {});

struct KktReport {
    double stationarity = 0.0; // relative
    std::vector<double> violations;
    std::vector<double> complementarity;
    double max_violation = 0.0;
    Index worst_constraint = -1; // index of the largest violation, -1 if none
    double residual = 0.0;       // max of all the above
    bool satisfied = false;
};

KktReport check_kkt(const ConvexQcqp &p, const QcqpSolution &sol, double tol);

/// Plain-text dump, see README for the layout.
void write_text(std::ostream &os, const ConvexQcqp &p);
ConvexQcqp read_qcqp_text(std::istream &is);

} // namespace bdris
