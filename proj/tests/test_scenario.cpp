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

#include "bdris/scenario.hpp"

#include <doctest.h>

#include <cmath>

using namespace bdris;

namespace {

// -d^2/dtheta^2 ln p by finite differences of the analytic first derivative
double neg_log_curvature(const GaussianMixturePrior &prior, double th) {
    double p = 0.0, dp = 0.0, d2p = 0.0;
    for (const auto &c : prior.components) {
        const double s2 = c.variance;
        const double z = th - c.mean;
        const double n = c.weight * std::exp(-0.5 * z * z / s2) / std::sqrt(2.0 * kPi * s2);
        p += n;
        dp += -z / s2 * n;
        d2p += (z * z / (s2 * s2) - 1.0 / s2) * n;
    }
    return -(d2p / p - (dp / p) * (dp / p));
}

} // namespace

TEST_CASE("target steering vector") {
    ScenarioConfig cfg = default_scenario();
    const double amp = cfg.beta0 / cfg.target_distance;
    const cvec at90 = steering_target(kPi / 2.0, cfg);
    for (Index m = 0; m < at90.size(); ++m)
        CHECK(std::abs(at90(m) - cd(amp, 0.0)) < 1e-15);

    for (double th : {0.1, 0.9, 2.5})
        for (Index m = 0; m < 16; ++m)
            CHECK(std::abs(std::abs(steering_target(th, cfg)(m)) - amp) < 1e-15);

    ScenarioConfig col = cfg;
    col.mx = 1;
    col.mz = 16;
    const cvec flat = steering_target(1.1, col);
    for (Index m = 0; m < 16; ++m)
        CHECK(std::abs(flat(m) - cd(amp, 0.0)) < 1e-15);
}

TEST_CASE("steering derivative matches finite differences") {
    const ScenarioConfig cfg = default_scenario();
    CHECK(steering_derivative(0.0, cfg).norm() == 0.0);
    const double h = 1e-6;
    for (int i = 0; i < 100; ++i) {
        const double th = 0.01 + (kPi - 0.02) * i / 99.0;
        const cvec d = steering_derivative(th, cfg);
        CHECK(d(0) == cd(0.0, 0.0));
        const cvec fd = (steering_target(th + h, cfg) - steering_target(th - h, cfg)) / (2.0 * h);
        const double scale = std::max(d.norm(), 1e-3 * cfg.beta0 / cfg.target_distance);
        CHECK((fd - d).norm() <= 1e-5 * scale);
    }
}

TEST_CASE("second moments") {
    ScenarioConfig cfg = default_scenario();
    const cmat g = second_moment_g(cfg);
    const cmat u = second_moment_u(cfg);
    const double amp2 = std::pow(cfg.beta0 / cfg.target_distance, 2);
    CHECK(std::abs(g.trace().real() - 16.0 * amp2) <= 1e-8 * 16.0 * amp2);
    for (const cmat *m : {&g, &u}) {
        CHECK(is_hermitian(*m, 1e-12));
        Eigen::SelfAdjointEigenSolver<cmat> es(*m);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10 * es.eigenvalues().maxCoeff());
    }
    // derivative vanishes on the first column of each row of the grid, so rank <= mx - 1
    CHECK(hermitian_evd(u, cfg.evd_rank_tol).rank <= cfg.mx - 1);

    ScenarioConfig delta = cfg;
    delta.prior.components = {{1.0, 1.0, 1e-12}};
    const cvec g1 = steering_target(1.0, delta);
    const cmat gd = second_moment_g(delta);
    CHECK((gd - g1 * g1.adjoint()).norm() <= 1e-4 * gd.norm());

    // tightening the quadrature does not move the result
    ScenarioConfig fine = cfg;
    fine.quadrature.nodes_per_panel = 128;
    CHECK((second_moment_g(fine) - g).norm() < 1e-9 * g.norm());

    ScenarioConfig flat = cfg;
    flat.moments = MomentConvention::unweighted;
    const cmat gu = second_moment_g(flat);
    CHECK(std::abs(gu.trace().real() - 16.0 * amp2 * kPi) <= 1e-8 * 16.0 * amp2 * kPi);
}

TEST_CASE("prior Fisher information") {
    GaussianMixturePrior single{{{1.0, 1.0, 1e-3}}};
    CHECK(std::abs(fisher_prior(single) - 1000.0) <= 1e-8 * 1000.0);

    GaussianMixturePrior twin{{{0.5, 1.0, 1e-3}, {0.5, 1.0, 1e-3}}};
    CHECK(std::abs(fisher_prior(twin) - 1000.0) <= 1e-8 * 1000.0);

    const GaussianMixturePrior &mix = default_scenario().prior;
    const auto [lo, hi] = mix.support();
    QuadratureOptions opt;
    opt.rel_tol = 1e-12;
    opt.max_doublings = 14;
    const double oracle = integrate([&](double th) { return mix.density(th) * neg_log_curvature(mix, th); }, lo, hi, opt);
    const double fp = fisher_prior(mix);
    CHECK(fp >= 0.0);
    CHECK(std::abs(fp - oracle) <= 1e-6 * oracle);

    GaussianMixturePrior far{{{0.5, 0.5, 1e-3}, {0.5, 2.5, 2e-3}}};
    CHECK(fisher_prior(far) > 0.0);
}

TEST_CASE("theta sampling") {
    GaussianMixturePrior point{{{1.0, 0.7, 1e-20}}};
    Rng rng(2);
    for (int i = 0; i < 10; ++i)
        CHECK(std::abs(sample_theta(point, rng) - 0.7) < 1e-9);

    // same weights as the base prior, means pulled apart so components are separable
    GaussianMixturePrior mix = default_scenario().prior;
    for (std::size_t c = 0; c < 3; ++c)
        mix.components[c].mean = 0.5 + static_cast<double>(c);
    const int n = 100000;
    std::vector<int> counts(3, 0);
    for (int i = 0; i < n; ++i) {
        const double th = sample_theta(mix, rng);
        int best = 0;
        for (int c = 1; c < 3; ++c)
            if (std::abs(th - mix.components[c].mean) < std::abs(th - mix.components[best].mean))
                best = c;
        ++counts[best];
    }
    for (int c = 0; c < 3; ++c) {
        const double p = mix.components[c].weight;
        const double sd = std::sqrt(n * p * (1 - p));
        CHECK(std::abs(counts[c] - n * p) <= 3.0 * sd);
    }

    Rng a(5), b(5);
    CHECK(sample_theta(mix, a) == sample_theta(mix, b));
}

TEST_CASE("channel construction") {
    ScenarioConfig cfg = default_scenario();
    const cmat los = irs_bs_los(cfg);
    CHECK(std::abs(los.squaredNorm() - 16.0 * 16.0) < 1e-9);

    const ChannelSet a = build_channels(cfg, 42);
    const ChannelSet b = build_channels(cfg, 42);
    CHECK(a.irs_bs == b.irs_bs);
    CHECK(a.direct[0] == b.direct[0]);
    CHECK(a.direct[1] == b.direct[1]);
    CHECK(a.user_irs[1] == b.user_irs[1]);
    CHECK(a.g_moment == b.g_moment);
    CHECK(a.fisher_prior == b.fisher_prior);
    CHECK(a.users() == 2);
    CHECK(a.u_evd.rank >= 1);
    const cmat rec = a.u_evd.vectors * a.u_evd.values.asDiagonal() * a.u_evd.vectors.adjoint();
    CHECK((rec - a.u_moment).norm() <= 1e-9 * a.u_moment.norm());

    ScenarioConfig ric = cfg;
    ric.rician_factor = 1e12;
    const ChannelSet c = build_channels(ric, 1);
    const double beta_ib = cfg.beta0 / cfg.irs_bs_distance;
    Eigen::JacobiSVD<cmat> sv(c.irs_bs / beta_ib);
    CHECK(sv.singularValues()(1) <= 1e-6 * sv.singularValues()(0));

    ScenarioConfig blocked = cfg;
    blocked.direct_blocked = {true, false};
    const ChannelSet d = build_channels(blocked, 3);
    CHECK(d.direct[0].norm() == 0.0);
    CHECK(d.direct[1].norm() > 0.0);

    const double r = user_bs_distance(cfg, 0);
    CHECK(r > 190.0);
    CHECK(r < 210.0);

    ScenarioConfig bad = cfg;
    bad.group_sizes = {8, 4};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.user_angle = {1.0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
