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

#include "bdris/metrics.hpp"
#include "bdris/qcqp.hpp"
#include "bdris/reflection.hpp"
#include "bdris/scenario.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace bdris {

/// Subproblems start from the previous, already central, iterate, so the
/// barrier can begin at a larger weight.
inline QcqpOptions warm_qcqp_options() {
    QcqpOptions o;
    o.t0 = 1e3;
    return o;
}

struct PddConfig {
    double rho0 = 1.0;
    double delta = 0.6;      // penalty shrink factor
    double eps0 = 1e-2;      // first violation threshold
    double eps_decay = 0.9;  // per outer iteration
    double eps_final = 1e-6; // stop once the violation is below this
    double inner_tol = 1e-8; // relative AL change
    int max_outer = 60;
    int max_inner = 30;
    int max_ao = 1;
    int n_starts = 1;
    std::optional<double> gamma_pcrb; // falls back to the scenario value
    double feas_slack = 0.01;
    std::uint64_t seed = 1;
    QcqpOptions qcqp = warm_qcqp_options();
};

enum class PddMode {
    isac,      // max-min rate under the PCRB constraint
    sensing,   // PCRB minimization
    rate_only, // max-min rate, no sensing term
};

struct TraceRecord {
    int start = 0;
    int outer = 0;
    int inner = 0;
    double al = 0.0;
    double violation = 0.0;
    double rho = 0.0;
    double min_rate = 0.0;
    double pcrb = 0.0;
};

void write_trace_csv(std::ostream &os, const std::vector<TraceRecord> &trace);

struct NuVectors {
    std::vector<cvec> zeta;  // one per retained eigenpair of U
    std::vector<cvec> users; // one per user
};

/// Closed-form minimizers of the sensing and rate surrogates.
NuVectors update_nu(const cmat &phi, const ChannelSet &ch, const ScenarioConfig &cfg);

/// nu^H Sigma0 nu - 2 Re{nu^H R Phi u_zeta}
double sensing_surrogate(Index zeta, const cmat &phi, const cvec &nu, const ChannelSet &ch, const ScenarioConfig &cfg);
/// nu^H Sigma_k nu - 2 Re{nu^H h_k}
double rate_surrogate(Index k, const cmat &phi, const cvec &nu, const ChannelSet &ch, const ScenarioConfig &cfg);

/// Right-hand side of the Fisher-information constraint, (1/gamma - F_P) / (2 P0 L).
double fisher_target(double gamma_pcrb, const ChannelSet &ch, const ScenarioConfig &cfg);

struct PddState {
    double alpha = 0.0;
    std::vector<cvec> phi_halves;
    std::vector<cmat> psi;
    std::vector<cmat> lambda;
    double rho = 1.0;
    NuVectors nu;
    double objective_scale = 1.0; // alpha or sensing reference used for normalization
    std::vector<TraceRecord> history;
    int qcqp_solves = 0;
    int newton_steps = 0;
};

/// Everything a PDD run needs that does not change between iterations.
class PddContext {
public:
    PddContext(const ChannelSet &ch, const ScenarioConfig &cfg, PddMode mode, double gamma_pcrb);

    const ChannelSet &channels() const noexcept { return ch_; }
    const ScenarioConfig &config() const noexcept { return cfg_; }
    PddMode mode() const noexcept { return mode_; }
    double fisher_target() const noexcept { return gamma_; }
    bool pcrb_constraint_active() const noexcept;
    Index half_dim() const noexcept { return dim_; }
    Index real_dim() const noexcept;

    /// phi_halves -> dense Phi
    cmat assemble(const std::vector<cvec> &halves) const;

    /// Fresh state at a block-feasible point: Psi = Phi, Lambda = 0, nu optimal.
    /// `scale_boost` enlarges the sensing objective reference, up to the value
    /// at which the penalized problem is bounded for any Phi.
    PddState initial_state(const ReflectionMatrix &phi0, double rho0, double scale_boost = 1.0) const;

    ConvexQcqp build_subproblem(const PddState &s) const;
    rvec pack(const PddState &s) const;
    void unpack(const rvec &x, PddState &s) const;

    /// Augmented Lagrangian at the current state (normalized objective).
    double al_value(const PddState &s) const;
    double violation(const PddState &s) const;

private:
    struct Entry {
        Index row, col;
    };
    void compress_rows(const cvec &h, const cvec &b, double weight, rmat &rows, Index at) const;
    cvec compress(const cvec &h, const cvec &b) const;

    const ChannelSet &ch_;
    ScenarioConfig cfg_;
    PddMode mode_;
    double gamma_;
    std::vector<Index> groups_;
    std::vector<Index> offsets_;
    std::vector<Entry> entries_; // global (row, col) of every half-vector entry
    Index dim_ = 0;
    std::vector<double> g_values_;
    std::vector<cvec> g_vectors_;
};

/// Alternates nu updates and QCQP solves. Throws InfeasibleError if the
/// QCQP has no strictly feasible point.
void inner_ao(PddState &s, const PddContext &ctx, const PddConfig &pc);
/// Psi_g = nearest unitary to Phi_g + rho Lambda_g.
void project_psi(PddState &s, const PddContext &ctx);
/// Dual update when violation <= eps, penalty shrink otherwise. Returns true on a dual update.
bool outer_update(PddState &s, const PddContext &ctx, double eps, double delta);

struct PddResult {
    ReflectionMatrix phi;
    IsacMetrics metrics;
    std::vector<TraceRecord> trace;
    int outer_iterations = 0;
    double violation = 0.0;
    bool converged = false;
    int qcqp_solves = 0;
    int newton_steps = 0;
    bool from_hint = false; // the best candidate was a supplied hint used as is
};

/// One full PDD run from a given start.
PddResult run_pdd(const PddContext &ctx, const ReflectionMatrix &start, const PddConfig &pc, int start_index = 0);

/// Max-min rate under the PCRB threshold. `hints` are extra block-feasible
/// candidates (any group structure that refines cfg.group_sizes).
PddResult solve_isac(const ChannelSet &ch, const ScenarioConfig &cfg, const PddConfig &pc,
                     const std::vector<ReflectionMatrix> &hints = {});

/// PCRB minimization with the interference of whatever users `ch` carries.
PddResult solve_sensing_only(const ChannelSet &ch, const ScenarioConfig &cfg, const PddConfig &pc,
                             const std::vector<ReflectionMatrix> &hints = {});

/// Max-min rate with the target silent and no sensing requirement.
PddResult solve_maxmin_rate_no_sensing(const ChannelSet &ch, const ScenarioConfig &cfg, const PddConfig &pc,
                                       const std::vector<ReflectionMatrix> &hints = {});

/// Scenario and channels with every communication user removed.
ScenarioConfig without_users(const ScenarioConfig &cfg);
ChannelSet without_users(const ChannelSet &ch);

/// Re-expresses a block-diagonal reflection in a coarser group structure.
ReflectionMatrix regroup(const ReflectionMatrix &phi, const std::vector<Index> &group_sizes);

} // namespace bdris
