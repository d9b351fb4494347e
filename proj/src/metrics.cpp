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

#include <algorithm>
#include <cmath>

namespace bdris {

namespace {

Eigen::LLT<cmat> chol(const cmat &a) {
    Eigen::LLT<cmat> llt(a);
    if (llt.info() != Eigen::Success)
        throw NumericalError("covariance is not positive definite");
    return llt;
}

void check_user(Index k, const ChannelSet &ch) {
    if (k < 0 || k >= ch.users())
        throw std::out_of_range("user index out of range");
}

void check_phi(const cmat &phi, const ChannelSet &ch) {
    if (phi.rows() != ch.irs_bs.cols() || phi.cols() != ch.irs_bs.cols())
        throw DimensionError("reflection matrix does not match the channel");
}

double power_of(const ScenarioConfig &cfg, Index k) { return cfg.user_power[static_cast<std::size_t>(k)]; }

} // namespace

std::vector<cvec> effective_user_channels(const cmat &phi, const ChannelSet &ch) {
    check_phi(phi, ch);
    const cmat cascade = ch.irs_bs * phi;
    std::vector<cvec> h;
    h.reserve(ch.direct.size());
    for (std::size_t k = 0; k < ch.direct.size(); ++k)
        h.push_back(ch.direct[k] + cascade * ch.user_irs[k]);
    return h;
}

cmat sigma0(const cmat &phi, const ChannelSet &ch, const ScenarioConfig &cfg) {
    const Index n = ch.irs_bs.rows();
    cmat s = cfg.noise_power * cmat::Identity(n, n);
    const auto h = effective_user_channels(phi, ch);
    for (std::size_t k = 0; k < h.size(); ++k)
        s.noalias() += cfg.user_power[k] * h[k] * h[k].adjoint();
    return s;
}

cmat sigma_k(Index k, const cmat &phi, const ChannelSet &ch, const ScenarioConfig &cfg) {
    check_user(k, ch);
    const Index n = ch.irs_bs.rows();
    cmat s = cfg.noise_power * cmat::Identity(n, n);
    const auto h = effective_user_channels(phi, ch);
    for (Index j = 0; j < ch.users(); ++j)
        if (j != k)
            s.noalias() += power_of(cfg, j) * h[static_cast<std::size_t>(j)] * h[static_cast<std::size_t>(j)].adjoint();
    if (cfg.target_power > 0.0) {
        const cmat cascade = ch.irs_bs * phi;
        s.noalias() += cfg.target_power * cascade * ch.g_moment * cascade.adjoint();
    }
    return 0.5 * (s + s.adjoint());
}

double jensen_sinr(Index k, const cvec &w, const cmat &phi, const ChannelSet &ch, const ScenarioConfig &cfg) {
    const cmat s = sigma_k(k, phi, ch, cfg);
    const cvec hk = effective_user_channels(phi, ch)[static_cast<std::size_t>(k)];
    const double num = power_of(cfg, k) * std::norm(w.dot(hk));
    return num / w.dot(s * w).real();
}

cvec optimal_receive_beamformer(Index k, const cmat &phi, const ChannelSet &ch, const ScenarioConfig &cfg) {
    const cmat s = sigma_k(k, phi, ch, cfg);
    const cvec hk = effective_user_channels(phi, ch)[static_cast<std::size_t>(k)];
    cvec w = chol(s).solve(hk);
    const double nrm = w.norm();
    if (!(nrm > 0.0))
        throw NumericalError("zero effective channel");
    return w / nrm;
}

double expected_rate_lower_bound(Index k, const cmat &phi, const ChannelSet &ch, const ScenarioConfig &cfg) {
    const cmat s = sigma_k(k, phi, ch, cfg);
    const cvec hk = effective_user_channels(phi, ch)[static_cast<std::size_t>(k)];
    const double q = hk.dot(chol(s).solve(hk)).real();
    return std::log2(1.0 + power_of(cfg, k) * std::max(q, 0.0));
}

std::vector<double> expected_rate_lower_bounds(const cmat &phi, const ChannelSet &ch, const ScenarioConfig &cfg) {
    std::vector<double> r;
    for (Index k = 0; k < ch.users(); ++k)
        r.push_back(expected_rate_lower_bound(k, phi, ch, cfg));
    return r;
}

double fisher_observation(const cmat &phi, const ChannelSet &ch, const ScenarioConfig &cfg) {
    if (cfg.target_power == 0.0)
        return 0.0;
    const auto llt = chol(sigma0(phi, ch, cfg));
    const cmat cascade = ch.irs_bs * phi;
    double acc = 0.0;
    for (Index z = 0; z < ch.u_evd.rank; ++z) {
        const cvec v = cascade * ch.u_evd.vectors.col(z);
        acc += ch.u_evd.values(z) * v.dot(llt.solve(v)).real();
    }
    return 2.0 * cfg.target_power * cfg.block_length * acc;
}

double fisher_observation_quadrature(const cmat &phi, const ChannelSet &ch, const ScenarioConfig &cfg) {
    if (cfg.target_power == 0.0)
        return 0.0;
    const auto llt = chol(sigma0(phi, ch, cfg));
    const cmat cascade = ch.irs_bs * phi;
    const double e = prior_expectation(cfg, [&](double th) {
        const cvec v = cascade * steering_derivative(th, cfg);
        return v.dot(llt.solve(v)).real();
    });
    return 2.0 * cfg.target_power * cfg.block_length * e;
}

double pcrb(const cmat &phi, const ChannelSet &ch, const ScenarioConfig &cfg) {
    return 1.0 / (fisher_observation(phi, ch, cfg) + ch.fisher_prior);
}

IsacMetrics evaluate(const cmat &phi, const ChannelSet &ch, const ScenarioConfig &cfg) {
    IsacMetrics m;
    m.f_o = fisher_observation(phi, ch, cfg);
    m.pcrb = 1.0 / (m.f_o + ch.fisher_prior);
    m.rates = expected_rate_lower_bounds(phi, ch, cfg);
    m.min_rate = m.rates.empty() ? 0.0 : *std::min_element(m.rates.begin(), m.rates.end());
    m.feasible = m.pcrb <= cfg.gamma_pcrb;
    return m;
}

MonteCarloEstimate monte_carlo_expected_rate(Index k, const cmat &phi, const ChannelSet &ch, const ScenarioConfig &cfg,
                                             Index samples, Rng &rng) {
    check_user(k, ch);
    if (samples < 1)
        throw std::invalid_argument("monte_carlo_expected_rate: samples must be positive");
    const cvec w = optimal_receive_beamformer(k, phi, ch, cfg);
    const auto h = effective_user_channels(phi, ch);
    double fixed = cfg.noise_power * w.squaredNorm();
    for (Index j = 0; j < ch.users(); ++j)
        if (j != k)
            fixed += power_of(cfg, j) * std::norm(w.dot(h[static_cast<std::size_t>(j)]));
    const double signal = power_of(cfg, k) * std::norm(w.dot(h[static_cast<std::size_t>(k)]));
    // w^H R Phi, applied to g(theta) per sample
    const cvec probe = (ch.irs_bs * phi).adjoint() * w;

    // Welford accumulation keeps a constant sequence at exactly zero variance
    double mean = 0.0;
    double m2 = 0.0;
    for (Index s = 0; s < samples; ++s) {
        double interference = fixed;
        if (cfg.target_power > 0.0) {
            const double th = sample_theta(cfg.prior, rng);
            interference += cfg.target_power * std::norm(probe.dot(steering_target(th, cfg)));
        }
        const double r = std::log2(1.0 + signal / interference);
        const double delta = r - mean;
        mean += delta / static_cast<double>(s + 1);
        m2 += delta * (r - mean);
    }
    const double n = static_cast<double>(samples);
    MonteCarloEstimate est;
    est.mean = mean;
    const double var = samples > 1 ? m2 / (n - 1.0) : 0.0;
    est.std_error = std::sqrt(var / n);
    return est;
}

cvec sensing_beamformer(const cmat &phi, const ChannelSet &ch, const ScenarioConfig &cfg) {
    const auto llt = chol(sigma0(phi, ch, cfg));
    const cmat cascade = ch.irs_bs * phi;
    const cmat a = cascade * ch.g_moment * cascade.adjoint();
    // whiten: L^{-1} A L^{-H}
    const cmat l = llt.matrixL();
    const cmat left = l.triangularView<Eigen::Lower>().solve(a);
    cmat b = l.triangularView<Eigen::Lower>().solve(left.adjoint()).adjoint();
    b = 0.5 * (b + b.adjoint());
    Eigen::SelfAdjointEigenSolver<cmat> es(b);
    const Index top = b.rows() - 1;
    cvec w = l.adjoint().triangularView<Eigen::Upper>().solve(es.eigenvectors().col(top));
    return w / w.norm();
}

double expected_sensing_sinr(const cvec &w, const cmat &phi, const ChannelSet &ch, const ScenarioConfig &cfg) {
    const cmat cascade = ch.irs_bs * phi;
    const cvec p = cascade.adjoint() * w;
    const double num = cfg.target_power * p.dot(ch.g_moment * p).real();
    return num / w.dot(sigma0(phi, ch, cfg) * w).real();
}

std::vector<BeamSample> sensing_beampattern(const cmat &phi, const ChannelSet &ch, const ScenarioConfig &cfg,
                                            const std::vector<double> &theta_grid) {
    if (theta_grid.empty())
        throw std::invalid_argument("sensing_beampattern: empty grid");
    const cvec w = sensing_beamformer(phi, ch, cfg);
    const cvec probe = (ch.irs_bs * phi).adjoint() * w;
    std::vector<BeamSample> out;
    out.reserve(theta_grid.size());
    for (double th : theta_grid)
        out.push_back({th, cfg.target_power * std::norm(probe.dot(steering_target(th, cfg)))});
    return out;
}

} // namespace bdris
