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

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bdris {

void GaussianMixturePrior::validate() const {
    if (components.empty())
        throw std::invalid_argument("prior: at least one component required");
    double total = 0.0;
    for (const auto &c : components) {
        if (!(c.weight > 0.0))
            throw std::invalid_argument("prior: weights must be positive");
        if (!(c.variance > 0.0))
            throw std::invalid_argument("prior: variances must be positive");
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("prior: weights must sum to one");
}

double GaussianMixturePrior::density(double theta) const {
    double p = 0.0;
    for (const auto &c : components) {
        const double z = (theta - c.mean) / std::sqrt(c.variance);
        p += c.weight * std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi * c.variance);
    }
    return p;
}

std::pair<double, double> GaussianMixturePrior::support() const {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto &c : components) {
        const double sd = std::sqrt(c.variance);
        lo = std::min(lo, c.mean - 8.0 * sd);
        hi = std::max(hi, c.mean + 8.0 * sd);
    }
    return {lo, hi};
}

void ScenarioConfig::validate() const {
    auto positive = [](double v, const char *what) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument(std::string("scenario: ") + what + " must be positive");
    };
    if (antennas < 1 || mx < 1 || mz < 1)
        throw std::invalid_argument("scenario: antenna and element counts must be positive");
    if (group_sizes.empty())
        throw std::invalid_argument("scenario: group_sizes must not be empty");
    Index sum = 0;
    for (Index s : group_sizes) {
        if (s < 1)
            throw std::invalid_argument("scenario: group sizes must be positive");
        sum += s;
    }
    if (sum != elements())
        throw std::invalid_argument("scenario: group sizes must sum to mx*mz");
    const std::size_t k = user_angle.size();
    if (user_irs_distance.size() != k || user_power.size() != k || direct_blocked.size() != k)
        throw std::invalid_argument("scenario: per-user lists must have equal length");
    positive(target_distance, "target distance");
    positive(irs_bs_distance, "IRS-BS distance");
    for (double d : user_irs_distance)
        positive(d, "user-IRS distance");
    for (double p : user_power)
        if (!(p >= 0.0))
            throw std::invalid_argument("scenario: user powers must be non-negative");
    for (double a : user_angle)
        if (!(a >= 0.0 && a < kPi))
            throw std::invalid_argument("scenario: user angles must lie in [0, pi)");
    if (!(target_power >= 0.0))
        throw std::invalid_argument("scenario: target power must be non-negative");
    positive(noise_power, "noise power");
    positive(block_length, "block length");
    positive(beta0, "beta0");
    positive(spacing, "element spacing");
    positive(wavelength, "wavelength");
    if (!(rician_factor >= 0.0))
        throw std::invalid_argument("scenario: Rician factor must be non-negative");
    positive(gamma_pcrb, "PCRB threshold");
    prior.validate();
    for (const auto &c : prior.components)
        if (!(c.mean >= 0.0 && c.mean < kPi))
            throw std::invalid_argument("scenario: prior means must lie in [0, pi)");
}

ScenarioConfig default_scenario() {
    ScenarioConfig cfg;
    cfg.prior.components = {
        {0.31, 5.0 * kPi / 18.0, 1e-3},
        {0.43, 11.0 * kPi / 36.0, 1e-3},
        {0.26, kPi / 3.0, 1e-3},
    };
    return cfg;
}

cvec steering_target(double theta, const ScenarioConfig &cfg) {
    const Index m = cfg.elements();
    const double amp = cfg.beta0 / cfg.target_distance;
    const double k = 2.0 * kPi * cfg.spacing / cfg.wavelength * std::cos(theta);
    cvec g(m);
    for (Index i = 0; i < m; ++i)
        g(i) = std::polar(amp, k * static_cast<double>(i % cfg.mx));
    return g;
}

cvec steering_derivative(double theta, const ScenarioConfig &cfg) {
    const Index m = cfg.elements();
    const double amp = cfg.beta0 / cfg.target_distance;
    const double kc = 2.0 * kPi * cfg.spacing / cfg.wavelength;
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    cvec d(m);
    for (Index i = 0; i < m; ++i) {
        const double idx = static_cast<double>(i % cfg.mx);
        d(i) = cd(0.0, -kc * idx * s) * std::polar(amp, kc * idx * c);
    }
    return d;
}

namespace {

cmat hermitian_part(const cmat &a) { return 0.5 * (a + a.adjoint()); }

} // namespace

cmat second_moment_g(const ScenarioConfig &cfg) {
    return hermitian_part(prior_expectation(cfg, [&](double th) -> cmat {
        const cvec g = steering_target(th, cfg);
        return g * g.adjoint();
    }));
}

cmat second_moment_u(const ScenarioConfig &cfg) {
    return hermitian_part(prior_expectation(cfg, [&](double th) -> cmat {
        const cvec d = steering_derivative(th, cfg);
        return d * d.adjoint();
    }));
}

double fisher_prior(const GaussianMixturePrior &prior, const QuadratureOptions &opt) {
    prior.validate();
    const auto &comps = prior.components;
    const std::size_t n = comps.size();
    double direct = 0.0;
    for (const auto &c : comps)
        direct += c.weight / c.variance;
    if (n == 1)
        return direct;
    auto correction = [&](double th) {
        std::vector<double> eta(n), slope(n);
        double denom = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto &c = comps[i];
            const double z = (th - c.mean) / std::sqrt(c.variance);
            eta[i] = c.weight * std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi * c.variance);
            slope[i] = (th - c.mean) / c.variance;
            denom += eta[i];
        }
        if (denom <= 0.0)
            return 0.0;
        double num = 0.0;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) {
                const double d = slope[a] - slope[b];
                num += eta[a] * eta[b] * d * d;
            }
        return num / (2.0 * denom);
    };
    const auto [lo, hi] = prior.support();
    return direct - integrate(correction, lo, hi, opt);
}

double sample_theta(const GaussianMixturePrior &prior, Rng &rng) {
    std::vector<double> w;
    for (const auto &c : prior.components)
        w.push_back(c.weight);
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    const auto &c = prior.components[pick(rng)];
    std::normal_distribution<double> n(c.mean, std::sqrt(c.variance));
    return n(rng);
}

double user_bs_distance(const ScenarioConfig &cfg, Index k) {
    const double aod = cfg.irs_bs_aoa + kPi / 2.0;
    const double rib = cfg.irs_bs_distance;
    const double rui = cfg.user_irs_distance[static_cast<std::size_t>(k)];
    const double ang = cfg.user_angle[static_cast<std::size_t>(k)];
    return std::sqrt(rib * rib + rui * rui - 2.0 * rib * rui * std::cos(aod - ang));
}

cmat irs_bs_los(const ScenarioConfig &cfg) {
    const Index n = cfg.antennas;
    const Index m = cfg.elements();
    const double aod = cfg.irs_bs_aoa + kPi / 2.0;
    cvec a(n), b(m);
    for (Index i = 0; i < n; ++i)
        a(i) = std::polar(1.0, kPi * static_cast<double>(i) * std::cos(cfg.irs_bs_aoa));
    for (Index i = 0; i < m; ++i)
        b(i) = std::polar(1.0, kPi * static_cast<double>(i % cfg.mx) * std::cos(aod));
    return a * b.adjoint();
}

ChannelSet build_channels(const ScenarioConfig &cfg, Rng &rng) {
    cfg.validate();
    const Index n = cfg.antennas;
    const Index m = cfg.elements();
    ChannelSet ch;

    cmat nlos(n, m);
    for (Index j = 0; j < m; ++j)
        for (Index i = 0; i < n; ++i)
            nlos(i, j) = complex_normal(rng);
    const double beta_ib = cfg.beta0 / cfg.irs_bs_distance;
    const double chi = cfg.rician_factor;
    ch.irs_bs = beta_ib * std::sqrt(1.0 / (chi + 1.0)) * (std::sqrt(chi) * irs_bs_los(cfg) + nlos);

    for (Index k = 0; k < cfg.users(); ++k) {
        const auto ku = static_cast<std::size_t>(k);
        cvec hd(n);
        for (Index i = 0; i < n; ++i)
            hd(i) = complex_normal(rng);
        const double gain = cfg.beta0 * std::pow(user_bs_distance(cfg, k), -0.5 * cfg.direct_path_loss_exponent);
        ch.direct.push_back(cfg.direct_blocked[ku] ? cvec::Zero(n).eval() : (gain * hd).eval());

        cvec hr(m);
        const double amp = cfg.beta0 / cfg.user_irs_distance[ku];
        for (Index i = 0; i < m; ++i)
            hr(i) = std::polar(amp, kPi * static_cast<double>(i % cfg.mx) * std::cos(cfg.user_angle[ku]));
        ch.user_irs.push_back(std::move(hr));
    }

    ch.g_moment = second_moment_g(cfg);
    ch.u_moment = second_moment_u(cfg);
    ch.u_evd = hermitian_evd(ch.u_moment, cfg.evd_rank_tol);
    ch.fisher_prior = fisher_prior(cfg.prior, cfg.quadrature);
    return ch;
}

ChannelSet build_channels(const ScenarioConfig &cfg, std::uint64_t seed) {
    Rng rng(seed);
    return build_channels(cfg, rng);
}

} // namespace bdris
