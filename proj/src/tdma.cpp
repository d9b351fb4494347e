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

#include "bdris/tdma.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace bdris {

double sensing_gain(const cmat &phi_s, const ChannelSet &ch) {
    const cmat cascade = ch.irs_bs * phi_s;
    double s = 0.0;
    for (Index z = 0; z < ch.u_evd.rank; ++z)
        s += ch.u_evd.values(z) * (cascade * ch.u_evd.vectors.col(z)).squaredNorm();
    return s;
}

double pcrb_tdma(const cmat &phi_s, double q, const ChannelSet &ch, const ScenarioConfig &cfg) {
    if (!(q >= 0.0 && q <= 1.0))
        throw std::invalid_argument("pcrb_tdma: q must lie in [0, 1]");
    const double obs = 2.0 * cfg.target_power * q * cfg.block_length / cfg.noise_power * sensing_gain(phi_s, ch);
    return 1.0 / (obs + ch.fisher_prior);
}

double optimal_q(const cmat &phi_s, double gamma_pcrb, const ChannelSet &ch, const ScenarioConfig &cfg,
                 bool integer_symbols) {
    if (!(gamma_pcrb > 0.0))
        throw std::invalid_argument("optimal_q: threshold must be positive");
    const double need = 1.0 / gamma_pcrb - ch.fisher_prior;
    if (need <= 0.0)
        return 0.0;
    const double full = pcrb_tdma(phi_s, 1.0, ch, cfg);
    if (full > gamma_pcrb)
        throw InfeasibleError("TDMA: sensing over the whole block misses the threshold", full);
    const double per_q = 2.0 * cfg.target_power * cfg.block_length / cfg.noise_power * sensing_gain(phi_s, ch);
    double q = std::min(need / per_q, 1.0);
    if (integer_symbols) {
        const double l = static_cast<double>(cfg.block_length);
        q = std::min(std::ceil(q * l - 1e-9) / l, 1.0);
    }
    return q;
}

std::vector<double> tdma_rates(const cmat &phi_c, double q, const ChannelSet &ch, const ScenarioConfig &cfg) {
    if (!(q >= 0.0 && q <= 1.0))
        throw std::invalid_argument("tdma_rates: q must lie in [0, 1]");
    ScenarioConfig quiet = cfg;
    quiet.target_power = 0.0;
    std::vector<double> r = expected_rate_lower_bounds(phi_c, ch, quiet);
    for (double &v : r)
        v *= 1.0 - q;
    return r;
}

TdmaStages tdma_stage_designs(const ChannelSet &ch, const ScenarioConfig &cfg, const PddConfig &pc) {
    const PddResult s = solve_sensing_only(without_users(ch), without_users(cfg), pc);
    const PddResult c = solve_maxmin_rate_no_sensing(ch, cfg, pc);
    return {s.phi, c.phi};
}

TdmaPlan plan_tdma(const TdmaStages &d, double gamma, const ChannelSet &ch, const ScenarioConfig &cfg,
                   bool integer_symbols) {
    const double q = optimal_q(d.phi_s.dense(), gamma, ch, cfg, integer_symbols);
    TdmaPlan p{d.phi_s, d.phi_c, q, tdma_rates(d.phi_c.dense(), q, ch, cfg), 0.0, 0.0, false};
    p.min_rate = p.rates.empty() ? 0.0 : *std::min_element(p.rates.begin(), p.rates.end());
    p.pcrb = pcrb_tdma(d.phi_s.dense(), q, ch, cfg);
    p.feasible = p.pcrb <= gamma * (1.0 + 1e-9);
    return p;
}

TdmaPlan plan_tdma(const ChannelSet &ch, const ScenarioConfig &cfg, const PddConfig &pc, bool integer_symbols) {
    const double gamma = pc.gamma_pcrb.value_or(cfg.gamma_pcrb);
    return plan_tdma(tdma_stage_designs(ch, cfg, pc), gamma, ch, cfg, integer_symbols);
}

std::vector<TdmaComparisonRow> compare_sdma_tdma(const ChannelSet &ch, const ScenarioConfig &cfg, const PddConfig &pc,
                                                 const std::vector<double> &gamma_grid,
                                                 const ComparisonOptions &opt) {
    if (gamma_grid.empty())
        throw std::invalid_argument("compare_sdma_tdma: empty threshold grid");
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const TdmaStages d = tdma_stage_designs(ch, cfg, pc);

    // ascending order so each SDMA solve can start from the tighter ones
    std::vector<std::size_t> order(gamma_grid.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return gamma_grid[a] < gamma_grid[b]; });

    std::vector<TdmaComparisonRow> rows(gamma_grid.size());
    std::vector<ReflectionMatrix> hints;
    for (std::size_t idx : order) {
        const double gamma = gamma_grid[idx];
        TdmaComparisonRow &row = rows[idx];
        row.gamma_pcrb = gamma;

        PddConfig p = pc;
        p.gamma_pcrb = gamma;
        row.sdma_bound = row.sdma_mc = row.sdma_mc_se = nan;
        try {
            const PddResult r = solve_isac(ch, cfg, p, hints);
            row.feasible_sdma = r.metrics.feasible;
            row.sdma_bound = r.metrics.min_rate;
            hints.push_back(r.phi);
            ScenarioConfig c = cfg;
            c.gamma_pcrb = gamma;
            Rng rng(pc.seed);
            const cmat phi = r.phi.dense();
            double worst = std::numeric_limits<double>::infinity();
            for (Index k = 0; k < ch.users(); ++k) {
                const MonteCarloEstimate e = monte_carlo_expected_rate(k, phi, ch, c, opt.mc_samples, rng);
                if (e.mean < worst) {
                    worst = e.mean;
                    row.sdma_mc = e.mean;
                    row.sdma_mc_se = e.std_error;
                }
            }
        } catch (const InfeasibleError &) {
            row.feasible_sdma = false;
        }

        try {
            const TdmaPlan t = plan_tdma(d, gamma, ch, cfg, opt.integer_symbols);
            row.tdma_rate = t.min_rate;
            row.q_star = t.q;
            row.feasible_tdma = t.feasible;
        } catch (const InfeasibleError &) {
            row.tdma_rate = 0.0;
            row.q_star = nan;
            row.feasible_tdma = false;
        }
    }
    return rows;
}

void write_comparison_csv(std::ostream &os, const std::vector<TdmaComparisonRow> &rows) {
    os << "gamma_pcrb,sdma_bound,sdma_mc,sdma_mc_se,tdma_rate,q_star,feasible_sdma,feasible_tdma\n";
    char buf[320];
    for (const auto &r : rows) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%d,%d\n", r.gamma_pcrb, r.sdma_bound,
                      r.sdma_mc, r.sdma_mc_se, r.tdma_rate, r.q_star, r.feasible_sdma ? 1 : 0,
                      r.feasible_tdma ? 1 : 0);
        os << buf;
    }
}

} // namespace bdris
