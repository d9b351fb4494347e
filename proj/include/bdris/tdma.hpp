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

#include "bdris/pdd.hpp"

#include <iosfwd>
#include <vector>

namespace bdris {

/// Sum over the retained eigenpairs of U of kappa * ||R Phi u||^2.
double sensing_gain(const cmat &phi_s, const ChannelSet &ch);

/// PCRB when the target transmits alone for a fraction q of the block.
double pcrb_tdma(const cmat &phi_s, double q, const ChannelSet &ch, const ScenarioConfig &cfg);

/// Smallest sensing fraction meeting the threshold. With `integer_symbols`
/// q L is rounded up to a whole number of symbols. Throws InfeasibleError
/// carrying the q = 1 PCRB when even the full block is not enough.
double optimal_q(const cmat &phi_s, double gamma_pcrb, const ChannelSet &ch, const ScenarioConfig &cfg,
                 bool integer_symbols = false);

/// Per-user rates of the communication stage scaled by its share 1 - q.
std::vector<double> tdma_rates(const cmat &phi_c, double q, const ChannelSet &ch, const ScenarioConfig &cfg);

struct TdmaPlan {
    ReflectionMatrix phi_s;
    ReflectionMatrix phi_c;
    double q = 0.0;
    std::vector<double> rates;
    double min_rate = 0.0;
    double pcrb = 0.0;
    bool feasible = false;
};

struct TdmaStages {
    ReflectionMatrix phi_s; // sensing alone, no users
    ReflectionMatrix phi_c; // rates alone, target silent
};

/// Neither design depends on the threshold.
TdmaStages tdma_stage_designs(const ChannelSet &ch, const ScenarioConfig &cfg, const PddConfig &pc);

/// Time split and rates for given stage designs.
TdmaPlan plan_tdma(const TdmaStages &stages, double gamma_pcrb, const ChannelSet &ch, const ScenarioConfig &cfg,
                   bool integer_symbols = false);

/// Both stage designs and the time split for the threshold in `pc` (or the
/// scenario's). Throws InfeasibleError when the threshold cannot be met.
TdmaPlan plan_tdma(const ChannelSet &ch, const ScenarioConfig &cfg, const PddConfig &pc,
                   bool integer_symbols = false);

struct TdmaComparisonRow {
    double gamma_pcrb = 0.0;
    double sdma_bound = 0.0; // NaN when infeasible
    double sdma_mc = 0.0;
    double sdma_mc_se = 0.0;
    double tdma_rate = 0.0;
    double q_star = 0.0; // NaN when infeasible
    bool feasible_sdma = false;
    bool feasible_tdma = false;
};

struct ComparisonOptions {
    Index mc_samples = kDefaultMonteCarloSamples;
    bool integer_symbols = false;
};

/// SDMA (joint design) against TDMA over a threshold grid. Stage designs of
/// TDMA do not depend on the threshold and are computed once.
std::vector<TdmaComparisonRow> compare_sdma_tdma(const ChannelSet &ch, const ScenarioConfig &cfg, const PddConfig &pc,
                                                 const std::vector<double> &gamma_grid,
                                                 const ComparisonOptions &opt = {});

void write_comparison_csv(std::ostream &os, const std::vector<TdmaComparisonRow> &rows);

} // namespace bdris
