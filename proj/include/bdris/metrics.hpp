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

#include "bdris/reflection.hpp"
#include "bdris/scenario.hpp"

#include <utility>
#include <vector>

namespace bdris {

// Every function accepts the dense M x M reflection matrix; ReflectionMatrix
// overloads forward to it.

/// h_k(Phi) = h_d,k + R Phi h_r,k
std::vector<cvec> effective_user_channels(const cmat &phi, const ChannelSet &ch);

/// Interference-plus-noise seen by the sensing receiver.
cmat sigma0(const cmat &phi, const ChannelSet &ch, const ScenarioConfig &cfg);
/// Interference-plus-noise seen by user k (zero-based), target term averaged over the prior.
cmat sigma_k(Index k, const cmat &phi, const ChannelSet &ch, const ScenarioConfig &cfg);

/// Jensen-bound SINR of user k for receive vector w.
double jensen_sinr(Index k, const cvec &w, const cmat &phi, const ChannelSet &ch, const ScenarioConfig &cfg);

/// Unit-norm MMSE receiver Sigma_k^{-1} h_k / ||.||.
cvec optimal_receive_beamformer(Index k, const cmat &phi, const ChannelSet &ch, const ScenarioConfig &cfg);

/// log2(1 + P_k h_k^H Sigma_k^{-1} h_k)
double expected_rate_lower_bound(Index k, const cmat &phi, const ChannelSet &ch, const ScenarioConfig &cfg);
std::vector<double> expected_rate_lower_bounds(const cmat &phi, const ChannelSet &ch, const ScenarioConfig &cfg);

/// Observation Fisher information from the stored eigenpairs of U.
double fisher_observation(const cmat &phi, const ChannelSet &ch, const ScenarioConfig &cfg);
/// Same quantity by direct quadrature over the prior.
double fisher_observation_quadrature(const cmat &phi, const ChannelSet &ch, const ScenarioConfig &cfg);

double pcrb(const cmat &phi, const ChannelSet &ch, const ScenarioConfig &cfg);

struct IsacMetrics {
    double pcrb = 0.0;
    std::vector<double> rates;
    double min_rate = 0.0;
    double f_o = 0.0;
    bool feasible = false;
};

IsacMetrics evaluate(const cmat &phi, const ChannelSet &ch, const ScenarioConfig &cfg);

struct MonteCarloEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

inline constexpr Index kDefaultMonteCarloSamples = 20000;

/// Average of log2(1 + SINR_k(theta)) over theta drawn from the prior, with
/// the receiver fixed at the closed-form optimum.
MonteCarloEstimate monte_carlo_expected_rate(Index k, const cmat &phi, const ChannelSet &ch, const ScenarioConfig &cfg,
                                             Index samples, Rng &rng);

/// Receive vector maximizing the expected sensing SINR.
cvec sensing_beamformer(const cmat &phi, const ChannelSet &ch, const ScenarioConfig &cfg);
double expected_sensing_sinr(const cvec &w, const cmat &phi, const ChannelSet &ch, const ScenarioConfig &cfg);

struct BeamSample {
    double theta = 0.0;
    double power = 0.0; // W
};

std::vector<BeamSample> sensing_beampattern(const cmat &phi, const ChannelSet &ch, const ScenarioConfig &cfg,
                                            const std::vector<double> &theta_grid);

// ReflectionMatrix forwards
inline cmat sigma0(const ReflectionMatrix &phi, const ChannelSet &ch, const ScenarioConfig &cfg) {
    return sigma0(phi.dense(), ch, cfg);
}
inline double pcrb(const ReflectionMatrix &phi, const ChannelSet &ch, const ScenarioConfig &cfg) {
    return pcrb(phi.dense(), ch, cfg);
}
inline IsacMetrics evaluate(const ReflectionMatrix &phi, const ChannelSet &ch, const ScenarioConfig &cfg) {
    return evaluate(phi.dense(), ch, cfg);
}
inline double fisher_observation(const ReflectionMatrix &phi, const ChannelSet &ch, const ScenarioConfig &cfg) {
    return fisher_observation(phi.dense(), ch, cfg);
}
inline std::vector<BeamSample> sensing_beampattern(const ReflectionMatrix &phi, const ChannelSet &ch,
                                                   const ScenarioConfig &cfg, const std::vector<double> &grid) {
    return sensing_beampattern(phi.dense(), ch, cfg, grid);
}

} // namespace bdris
