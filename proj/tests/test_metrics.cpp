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

#include "bdris/metrics.hpp"

#include <doctest.h>

#include <cmath>

using namespace bdris;

namespace {

cvec random_unit(Index n, Rng &rng) {
    cvec v(n);
    for (Index i = 0; i < n; ++i)
        v(i) = complex_normal(rng);
    return v / v.norm();
}

ScenarioConfig single_user(const ScenarioConfig &base) {
    ScenarioConfig c = base;
    c.user_angle = {base.user_angle[0]};
    c.user_irs_distance = {base.user_irs_distance[0]};
    c.user_power = {base.user_power[0]};
    c.direct_blocked = {false};
    return c;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

} // namespace

TEST_CASE("interference covariances") {
    const ScenarioConfig cfg = default_scenario();
    const ChannelSet ch = build_channels(cfg, 7);
    Rng rng(1);
    const cmat phi = ReflectionMatrix::random(cfg.group_sizes, rng).dense();
    const Index n = cfg.antennas;

    cmat brute = cfg.noise_power * cmat::Identity(n, n);
    for (std::size_t k = 0; k < 2; ++k) {
        const cvec h = ch.direct[k] + ch.irs_bs * phi * ch.user_irs[k];
        brute += cfg.user_power[k] * h * h.adjoint();
    }
    const cmat s0 = sigma0(phi, ch, cfg);
    CHECK((s0 - brute).norm() <= 1e-12 * brute.norm());
    Eigen::SelfAdjointEigenSolver<cmat> es(s0);
    CHECK(es.eigenvalues().minCoeff() >= cfg.noise_power * (1.0 - 1e-9));

    const cvec h1 = ch.direct[1] + ch.irs_bs * phi * ch.user_irs[1];
    const cmat rp = ch.irs_bs * phi;
    const cmat s_brute = cfg.noise_power * cmat::Identity(n, n) + cfg.user_power[1] * h1 * h1.adjoint() +
                         cfg.target_power * rp * ch.g_moment * rp.adjoint();
    const cmat s1 = sigma_k(0, phi, ch, cfg);
    CHECK((s1 - s_brute).norm() <= 1e-12 * s_brute.norm());
    CHECK(is_hermitian(s1, 0.0));
    CHECK(Eigen::SelfAdjointEigenSolver<cmat>(s1).eigenvalues().minCoeff() >= cfg.noise_power * (1.0 - 1e-9));

    ScenarioConfig none = cfg;
    none.user_angle.clear();
    none.user_irs_distance.clear();
    none.user_power.clear();
    none.direct_blocked.clear();
    const ChannelSet ch0 = build_channels(none, 7);
    CHECK((sigma0(phi, ch0, none) - cfg.noise_power * cmat::Identity(n, n)).norm() == 0.0);

    ScenarioConfig lone = single_user(cfg);
    lone.target_power = 0.0;
    const ChannelSet chl = build_channels(lone, 7);
    CHECK((sigma_k(0, phi, chl, lone) - cfg.noise_power * cmat::Identity(n, n)).norm() == 0.0);
    CHECK_THROWS_AS(sigma_k(1, phi, chl, lone), std::out_of_range);
}

TEST_CASE("closed-form receiver dominates random receivers") {
    const ScenarioConfig cfg = default_scenario();
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const ChannelSet ch = build_channels(cfg, seed);
        Rng rng(seed);
        const cmat phi = ReflectionMatrix::random(cfg.group_sizes, rng).dense();
        for (Index k = 0; k < 2; ++k) {
            const cvec w = optimal_receive_beamformer(k, phi, ch, cfg);
            CHECK(std::abs(w.norm() - 1.0) <= 1e-12);
            const double best = jensen_sinr(k, w, phi, ch, cfg);
            int beaten = 0;
            for (int t = 0; t < 2000; ++t)
                if (jensen_sinr(k, random_unit(cfg.antennas, rng), phi, ch, cfg) > best)
                    ++beaten;
            CHECK(beaten == 0);
            CHECK(rel(expected_rate_lower_bound(k, phi, ch, cfg), std::log2(1.0 + best)) <= 1e-10);
        }
    }

    ScenarioConfig lone = single_user(cfg);
    lone.target_power = 0.0;
    const ChannelSet ch = build_channels(lone, 4);
    const cmat phi = cmat::Identity(16, 16);
    const cvec h = ch.direct[0] + ch.irs_bs * ch.user_irs[0];
    const cvec w = optimal_receive_beamformer(0, phi, ch, lone);
    CHECK((w - h / h.norm()).norm() <= 1e-12);
}

TEST_CASE("rate lower bound basics") {
    ScenarioConfig cfg = default_scenario();
    const ChannelSet ch = build_channels(cfg, 2);
    const cmat phi = cmat::Identity(16, 16);
    ScenarioConfig silent = cfg;
    silent.user_power = {0.0, 0.01};
    CHECK(expected_rate_lower_bound(0, phi, ch, silent) == 0.0);

    double prev = -1.0;
    for (double p : {1e-4, 1e-3, 1e-2, 1e-1}) {
        ScenarioConfig c = cfg;
        c.user_power[0] = p;
        const double r = expected_rate_lower_bound(0, phi, ch, c);
        CHECK(r >= prev);
        prev = r;
    }
}

TEST_CASE("Fisher information from eigenpairs matches direct quadrature") {
    const ScenarioConfig cfg = default_scenario();
    Rng rng(99);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const ChannelSet ch = build_channels(cfg, seed);
        const cmat phi = ReflectionMatrix::random(cfg.group_sizes, rng).dense();
        const double evd = fisher_observation(phi, ch, cfg);
        const double quad = fisher_observation_quadrature(phi, ch, cfg);
        CHECK(evd > 0.0);
        CHECK(rel(evd, quad) <= 1e-6);
    }

    const ChannelSet ch = build_channels(cfg, 3);
    const cmat phi = cmat::Identity(16, 16);
    ScenarioConfig twice = cfg;
    twice.block_length *= 2.0;
    CHECK(rel(fisher_observation(phi, ch, twice), 2.0 * fisher_observation(phi, ch, cfg)) <= 1e-12);

    ScenarioConfig off = cfg;
    off.target_power = 0.0;
    CHECK(fisher_observation(phi, ch, off) == 0.0);
    CHECK(fisher_observation_quadrature(phi, ch, off) == 0.0);
    CHECK(pcrb(phi, ch, off) == doctest::Approx(1.0 / ch.fisher_prior).epsilon(1e-14));

    double prev = 1.0 / ch.fisher_prior;
    for (double p0 : {1e-3, 1e-2, 1e-1}) {
        ScenarioConfig c = cfg;
        c.target_power = p0;
        const double v = pcrb(phi, ch, c);
        CHECK(v < prev);
        CHECK(v > 0.0);
        prev = v;
    }

    // a global phase on the reflection only cancels when no direct link adds coherently
    ScenarioConfig blocked = cfg;
    blocked.direct_blocked = {true, true};
    const ChannelSet chb = build_channels(blocked, 3);
    const cmat rotated = std::polar(1.0, 0.7) * phi;
    CHECK(rel(pcrb(rotated, chb, blocked), pcrb(phi, chb, blocked)) <= 1e-10);

    const IsacMetrics m = evaluate(phi, ch, cfg);
    CHECK(m.pcrb <= 1.0 / ch.fisher_prior);
    CHECK(m.rates.size() == 2);
    CHECK(m.min_rate == std::min(m.rates[0], m.rates[1]));
}

TEST_CASE("Monte Carlo rate sits above the Jensen bound") {
    const ScenarioConfig cfg = default_scenario();
    const ChannelSet ch = build_channels(cfg, 5);
    const cmat phi = cmat::Identity(16, 16);
    for (Index k = 0; k < 2; ++k) {
        Rng rng(10 + static_cast<std::uint64_t>(k));
        const MonteCarloEstimate e = monte_carlo_expected_rate(k, phi, ch, cfg, 10000, rng);
        const double bound = expected_rate_lower_bound(k, phi, ch, cfg);
        CHECK(e.mean >= bound - 3.0 * e.std_error);
    }
    Rng a(1), b(1);
    CHECK(monte_carlo_expected_rate(0, phi, ch, cfg, 100, a).mean ==
          monte_carlo_expected_rate(0, phi, ch, cfg, 100, b).mean);

    ScenarioConfig off = cfg;
    off.target_power = 0.0;
    Rng c(2);
    const MonteCarloEstimate e = monte_carlo_expected_rate(0, phi, ch, off, 50, c);
    CHECK(e.std_error == 0.0);
    CHECK(rel(e.mean, expected_rate_lower_bound(0, phi, ch, off)) <= 1e-12);
}

TEST_CASE("sensing beamformer and beampattern") {
    const ScenarioConfig cfg = default_scenario();
    const ChannelSet ch = build_channels(cfg, 6);
    Rng rng(3);
    const cmat phi = ReflectionMatrix::random(cfg.group_sizes, rng).dense();
    const cvec w0 = sensing_beamformer(phi, ch, cfg);
    const double best = expected_sensing_sinr(w0, phi, ch, cfg);
    int beaten = 0;
    for (int t = 0; t < 1000; ++t)
        if (expected_sensing_sinr(random_unit(16, rng), phi, ch, cfg) > best)
            ++beaten;
    CHECK(beaten == 0);

    std::vector<double> grid;
    for (int i = 0; i < 90; ++i)
        grid.push_back(kPi * i / 90.0);
    for (const auto &s : sensing_beampattern(phi, ch, cfg, grid))
        CHECK(s.power >= 0.0);

    ScenarioConfig off = cfg;
    off.target_power = 0.0;
    for (const auto &s : sensing_beampattern(phi, ch, off, grid))
        CHECK(s.power == 0.0);
    CHECK_THROWS_AS(sensing_beampattern(phi, ch, cfg, {}), std::invalid_argument);
}

TEST_CASE("base scene magnitudes") {
    const ScenarioConfig cfg = default_scenario();
    const ChannelSet ch = build_channels(cfg, 1);
    const IsacMetrics m = evaluate(cmat::Identity(16, 16), ch, cfg);
    MESSAGE("identity: pcrb=" << m.pcrb << " rates=" << m.rates[0] << "," << m.rates[1] << " fp=" << ch.fisher_prior);
    CHECK(m.pcrb > 1e-6);
    CHECK(m.pcrb < 1.0 / ch.fisher_prior);
}
