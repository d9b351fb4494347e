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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

using namespace bdris;

namespace {

ScenarioConfig small_scenario() {
    ScenarioConfig c = default_scenario();
    c.antennas = 4;
    c.mx = 4;
    c.mz = 1;
    c.target_power = 1.0;
    c.group_sizes = {4};
    return c;
}

// q with pcrb_tdma(q) = gamma by plain bisection
double bisect_q(const cmat &phi, double gamma, const ChannelSet &ch, const ScenarioConfig &cfg) {
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
        const double mid = 0.5 * (lo + hi);
        (pcrb_tdma(phi, mid, ch, cfg) > gamma ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

TEST_CASE("time-split PCRB end points and monotonicity") {
    const ScenarioConfig cfg = default_scenario();
    const ChannelSet ch = build_channels(cfg, 1);
    Rng rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        const cmat phi = ReflectionMatrix::random(cfg.group_sizes, rng).dense();
        CHECK(pcrb_tdma(phi, 0.0, ch, cfg) == doctest::Approx(1.0 / ch.fisher_prior).epsilon(1e-14));
        const double alone = pcrb(phi, without_users(ch), without_users(cfg));
        CHECK(std::abs(pcrb_tdma(phi, 1.0, ch, cfg) - alone) <= 1e-10 * alone);
        double last = pcrb_tdma(phi, 0.0, ch, cfg);
        for (int i = 1; i <= 20; ++i) {
            const double cur = pcrb_tdma(phi, i / 20.0, ch, cfg);
            CHECK(cur < last);
            last = cur;
        }
    }
    CHECK_THROWS_AS(pcrb_tdma(ReflectionMatrix::identity(cfg.group_sizes).dense(), 1.5, ch, cfg),
                    std::invalid_argument);
}

TEST_CASE("closed-form time split matches bisection") {
    const ScenarioConfig cfg = default_scenario();
    Rng rng(11);
    int interior = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const ChannelSet ch = build_channels(cfg, 100 + static_cast<std::uint64_t>(trial % 10));
        const cmat phi = ReflectionMatrix::random(cfg.group_sizes, rng).dense();
        const double full = pcrb_tdma(phi, 1.0, ch, cfg);
        const double none = 1.0 / ch.fisher_prior;
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        const double gamma = full + u * (none - full);
        const double q = optimal_q(phi, gamma, ch, cfg);
        REQUIRE(q >= 0.0);
        REQUIRE(q <= 1.0);
        if (q > 0.0 && q < 1.0) {
            ++interior;
            CHECK(std::abs(q - bisect_q(phi, gamma, ch, cfg)) <= 1e-10);
            CHECK(std::abs(pcrb_tdma(phi, q, ch, cfg) - gamma) <= 1e-12 * gamma);
        }
    }
    CHECK(interior >= 95);
}

TEST_CASE("time split boundary cases") {
    const ScenarioConfig cfg = default_scenario();
    const ChannelSet ch = build_channels(cfg, 2);
    const cmat phi = ReflectionMatrix::identity(cfg.group_sizes).dense();
    SUBCASE("the prior alone meets the threshold") {
        CHECK(optimal_q(phi, 1.0 / ch.fisher_prior, ch, cfg) == 0.0);
        CHECK(optimal_q(phi, 2.0 / ch.fisher_prior, ch, cfg) == 0.0);
    }
    SUBCASE("threshold equal to the full-block PCRB") {
        const double full = pcrb_tdma(phi, 1.0, ch, cfg);
        CHECK(optimal_q(phi, full, ch, cfg) == 1.0);
    }
    SUBCASE("infeasible threshold carries the full-block floor") {
        const double full = pcrb_tdma(phi, 1.0, ch, cfg);
        try {
            optimal_q(phi, 0.5 * full, ch, cfg);
            FAIL("expected InfeasibleError");
        } catch (const InfeasibleError &e) {
            CHECK(e.pcrb_floor() == doctest::Approx(full).epsilon(1e-14));
        }
    }
    SUBCASE("whole symbols") {
        const double full = pcrb_tdma(phi, 1.0, ch, cfg);
        const double none = 1.0 / ch.fisher_prior;
        const double l = static_cast<double>(cfg.block_length);
        for (double u : {0.1, 0.37, 0.5, 0.81}) {
            const double gamma = full + u * (none - full);
            const double q = optimal_q(phi, gamma, ch, cfg);
            const double qi = optimal_q(phi, gamma, ch, cfg, true);
            CHECK(qi >= q);
            CHECK(qi - q < 1.0 / l + 1e-12);
            CHECK(std::abs(qi * l - std::round(qi * l)) < 1e-9);
            CHECK(pcrb_tdma(phi, qi, ch, cfg) <= gamma * (1.0 + 1e-12));
        }
    }
    CHECK_THROWS_AS(optimal_q(phi, 0.0, ch, cfg), std::invalid_argument);
}

TEST_CASE("communication share scales the rates exactly") {
    const ScenarioConfig cfg = default_scenario();
    const ChannelSet ch = build_channels(cfg, 4);
    Rng rng(5);
    const cmat phi = ReflectionMatrix::random(cfg.group_sizes, rng).dense();
    const auto base = tdma_rates(phi, 0.0, ch, cfg);
    ScenarioConfig quiet = cfg;
    quiet.target_power = 0.0;
    const auto direct = expected_rate_lower_bounds(phi, ch, quiet);
    REQUIRE(base.size() == direct.size());
    for (std::size_t k = 0; k < base.size(); ++k)
        CHECK(base[k] == direct[k]);
    for (double q : {0.1, 0.5, 0.9, 1.0}) {
        const auto r = tdma_rates(phi, q, ch, cfg);
        for (std::size_t k = 0; k < r.size(); ++k)
            CHECK(std::abs(r[k] / base[k] - (1.0 - q)) <= 1e-14);
    }
}

TEST_CASE("plan with a loose threshold is pure communication") {
    const ScenarioConfig cfg = small_scenario();
    const ChannelSet ch = build_channels(cfg, 1);
    PddConfig pc;
    pc.gamma_pcrb = 1e9;
    const TdmaPlan plan = plan_tdma(ch, cfg, pc);
    CHECK(plan.q == 0.0);
    CHECK(plan.feasible);
    const PddResult c = solve_maxmin_rate_no_sensing(ch, cfg, pc);
    REQUIRE(plan.rates.size() == 2);
    CHECK(plan.min_rate == doctest::Approx(c.metrics.min_rate).epsilon(1e-12));
    CHECK(plan.phi_c.unitarity_error() <= 1e-6);
    CHECK(plan.phi_s.symmetry_error() <= 1e-6);
}

TEST_CASE("plan meets an active threshold with equality") {
    const ScenarioConfig cfg = small_scenario();
    const ChannelSet ch = build_channels(cfg, 1);
    PddConfig pc;
    const cmat id = ReflectionMatrix::identity(cfg.group_sizes).dense();
    const double full = pcrb_tdma(id, 1.0, ch, cfg);
    pc.gamma_pcrb = 0.5 * (full + 1.0 / ch.fisher_prior);
    const TdmaPlan plan = plan_tdma(ch, cfg, pc);
    REQUIRE(plan.q > 0.0);
    REQUIRE(plan.q < 1.0);
    CHECK(plan.feasible);
    CHECK(std::abs(plan.pcrb - *pc.gamma_pcrb) <= 1e-12 * *pc.gamma_pcrb);
    // the sensing stage design is at least as good as the start it came from
    CHECK(pcrb_tdma(plan.phi_s.dense(), 1.0, ch, cfg) <= full * (1.0 + 1e-9));
}

TEST_CASE("SDMA against TDMA over a threshold grid") {
    const ScenarioConfig cfg = small_scenario();
    const ChannelSet ch = build_channels(cfg, 3);
    PddConfig pc;
    ComparisonOptions opt;
    opt.mc_samples = 4000;
    const std::vector<double> grid{1e-3, 4e-4, 6e-4};
    const auto rows = compare_sdma_tdma(ch, cfg, pc, grid, opt);
    REQUIRE(rows.size() == grid.size());
    CHECK(rows[0].feasible_sdma);
    CHECK(rows[0].feasible_tdma);
    CHECK(rows[1].feasible_sdma);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].gamma_pcrb == grid[i]);
        if (rows[i].feasible_sdma)
            CHECK(rows[i].sdma_mc >= rows[i].sdma_bound - 3.0 * rows[i].sdma_mc_se);
        if (rows[i].feasible_tdma) {
            CHECK(rows[i].q_star >= 0.0);
            CHECK(rows[i].q_star <= 1.0);
        }
    }
    // grid order 1 (4e-4) < 2 (6e-4) < 0 (1e-3)
    for (auto [a, b] : {std::pair<int, int>{1, 2}, {2, 0}}) {
        if (rows[a].feasible_sdma && rows[b].feasible_sdma)
            CHECK(rows[b].sdma_bound >= rows[a].sdma_bound - 1e-4);
        if (rows[a].feasible_tdma && rows[b].feasible_tdma)
            CHECK(rows[b].tdma_rate >= rows[a].tdma_rate - 1e-12);
    }

    std::ostringstream first, second;
    write_comparison_csv(first, rows);
    write_comparison_csv(second, compare_sdma_tdma(ch, cfg, pc, grid, opt));
    CHECK(first.str() == second.str());
    CHECK(first.str().rfind("gamma_pcrb,sdma_bound,sdma_mc,sdma_mc_se,tdma_rate,q_star,feasible_sdma,feasible_tdma\n",
                            0) == 0);
    CHECK_THROWS_AS(compare_sdma_tdma(ch, cfg, pc, {}, opt), std::invalid_argument);
}
