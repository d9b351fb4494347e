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

#include "bdris/matrix_kit.hpp"
#include "bdris/quadrature.hpp"
#include "bdris/types.hpp"

#include <functional>
#include <vector>

namespace bdris {

struct GaussianComponent {
    double weight = 1.0;
    double mean = 0.0;     // rad
    double variance = 0.0; // rad^2
};

/// Gaussian mixture prior on the target angle.
struct GaussianMixturePrior {
    std::vector<GaussianComponent> components;

    void validate() const;
    double density(double theta) const;
    /// Support [min(mean - 8 sigma), max(mean + 8 sigma)].
    std::pair<double, double> support() const;
};

/// How the statistical matrices G and U are formed.
enum class MomentConvention {
    expectation, // integrals weighted by the prior density
    unweighted,  // plain integral over [0, pi)
};

/// Full physical scene. Everything is stored in linear SI units; dB
/// conversions happen when a configuration file is parsed.
struct ScenarioConfig {
    Index antennas = 16; // N
    Index mx = 4;
    Index mz = 4;
    std::vector<Index> group_sizes{16};

    double target_distance = 10.0; // r
    double irs_bs_distance = 200.0;
    std::vector<double> user_irs_distance{10.0, 10.0};
    std::vector<double> user_angle{5.0 * kPi / 9.0, 7.0 * kPi / 9.0};
    std::vector<bool> direct_blocked{false, false};
    double irs_bs_aoa = kPi / 4.0;

    double target_power = 0.01;                     // P0 [W]
    std::vector<double> user_power{0.01, 0.01};     // P_k [W]
    double noise_power = 3.1622776601683795e-13;    // sigma^2 [W]
    double block_length = 25.0;                     // L

    double beta0 = 0.022387211385683396; // amplitude gain at 1 m
    double spacing = 0.5;                // Delta, in wavelengths when wavelength == 1
    double wavelength = 1.0;
    double rician_factor = 0.15848931924611134;
    double direct_path_loss_exponent = 3.5;

    GaussianMixturePrior prior;
    double gamma_pcrb = 5e-4;

    MomentConvention moments = MomentConvention::expectation;
    double evd_rank_tol = 1e-9;
    QuadratureOptions quadrature{};

    Index elements() const noexcept { return mx * mz; }
    Index users() const noexcept { return static_cast<Index>(user_angle.size()); }
    /// Throws std::invalid_argument on an inconsistent configuration.
    void validate() const;
};

/// Base scene with the three-component prior.
ScenarioConfig default_scenario();

struct ChannelSet {
    cmat irs_bs;                   // R, N x M
    std::vector<cvec> direct;      // h_d,k, length N
    std::vector<cvec> user_irs;    // h_r,k, length M
    cmat g_moment;                 // G
    cmat u_moment;                 // U
    HermitianEvd u_evd;            // eigenpairs of U, rank R_U
    double fisher_prior = 0.0;     // F_P

    Index users() const noexcept { return static_cast<Index>(direct.size()); }
};

cvec steering_target(double theta, const ScenarioConfig &cfg);
cvec steering_derivative(double theta, const ScenarioConfig &cfg);

/// E_theta[f(theta)] under the configured convention, by composite
/// Gauss-Legendre per mixture component on mean +- 8 sigma.
template <typename F> auto prior_expectation(const ScenarioConfig &cfg, F &&f) {
    if (cfg.moments == MomentConvention::unweighted)
        return integrate(f, 0.0, kPi, cfg.quadrature);
    using T = std::decay_t<decltype(f(0.0))>;
    T acc{};
    bool first = true;
    for (const auto &c : cfg.prior.components) {
        const double sd = std::sqrt(c.variance);
        const double norm = c.weight / (std::sqrt(2.0 * kPi) * sd);
        auto weighted = [&](double th) {
            const double z = (th - c.mean) / sd;
            return T(f(th) * (norm * std::exp(-0.5 * z * z)));
        };
        T part = integrate(weighted, c.mean - 8.0 * sd, c.mean + 8.0 * sd, cfg.quadrature);
        if (first) {
            acc = std::move(part);
            first = false;
        } else {
            acc += part;
        }
    }
    return acc;
}

cmat second_moment_g(const ScenarioConfig &cfg);
cmat second_moment_u(const ScenarioConfig &cfg);

double fisher_prior(const GaussianMixturePrior &prior, const QuadratureOptions &opt = {});

double sample_theta(const GaussianMixturePrior &prior, Rng &rng);

/// Channel realization for one seed. A pure function of (cfg, rng state).
ChannelSet build_channels(const ScenarioConfig &cfg, Rng &rng);
ChannelSet build_channels(const ScenarioConfig &cfg, std::uint64_t seed);

/// Line-of-sight IRS->BS component a(aoa) b^H(aoa + pi/2).
cmat irs_bs_los(const ScenarioConfig &cfg);

double user_bs_distance(const ScenarioConfig &cfg, Index k);

} // namespace bdris
