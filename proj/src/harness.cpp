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
#include "bdris/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace bdris {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double deg(double rad) { return rad * 180.0 / kPi; }
double rad(double d) { return d * kPi / 180.0; }

void check_keys(const json &j, const std::set<std::string> &allowed, const char *where) {
    if (!j.is_object())
        throw std::invalid_argument(std::string(where) + ": expected an object");
    for (const auto &[k, v] : j.items())
        if (!allowed.count(k))
            throw std::invalid_argument(std::string(where) + ": unknown key '" + k + "'");
}

std::vector<double> number_list(const json &v, std::size_t count) {
    if (v.is_array())
        return v.get<std::vector<double>>();
    return std::vector<double>(count, v.get<double>());
}

// <key>_dbm, <key>_w or plain <key> in watts
bool read_power(const json &j, const std::string &key, double &out) {
    if (j.contains(key + "_dbm")) {
        out = dbm_to_watt(j.at(key + "_dbm").get<double>());
        return true;
    }
    for (const std::string &k : {key + "_w", key})
        if (j.contains(k)) {
            out = j.at(k).get<double>();
            return true;
        }
    return false;
}

bool read_powers(const json &j, const std::string &key, std::size_t count, std::vector<double> &out) {
    if (j.contains(key + "_dbm")) {
        out = number_list(j.at(key + "_dbm"), count);
        for (double &v : out)
            v = dbm_to_watt(v);
        return true;
    }
    for (const std::string &k : {key + "_w", key})
        if (j.contains(k)) {
            out = number_list(j.at(k), count);
            return true;
        }
    return false;
}

// amplitude gains convert with 20 log10, power ratios with 10 log10
bool read_gain(const json &j, const std::string &key, bool amplitude, double &out) {
    if (j.contains(key + "_db")) {
        const double db = j.at(key + "_db").get<double>();
        out = std::pow(10.0, db / (amplitude ? 20.0 : 10.0));
        return true;
    }
    if (j.contains(key)) {
        out = j.at(key).get<double>();
        return true;
    }
    return false;
}

bool read_angle(const json &j, const std::string &key, double &out) {
    if (j.contains(key + "_deg")) {
        out = rad(j.at(key + "_deg").get<double>());
        return true;
    }
    if (j.contains(key)) {
        out = j.at(key).get<double>();
        return true;
    }
    return false;
}

bool read_angles(const json &j, const std::string &key, std::size_t count, std::vector<double> &out) {
    if (j.contains(key + "_deg")) {
        out = number_list(j.at(key + "_deg"), count);
        for (double &v : out)
            v = rad(v);
        return true;
    }
    if (j.contains(key)) {
        out = number_list(j.at(key), count);
        return true;
    }
    return false;
}

template <typename T> void read(const json &j, const char *key, T &out) {
    if (j.contains(key))
        out = j.at(key).get<T>();
}

const std::map<std::string, SweepParameter> kSweepNames{
    {"M_x", SweepParameter::mx},
    {"M_z", SweepParameter::mz},
    {"snr_db", SweepParameter::snr_db},
    {"gamma_pcrb", SweepParameter::gamma_pcrb},
};

const std::map<std::string, Task> kTaskNames{
    {"sensing", Task::sensing},
    {"isac", Task::isac},
    {"beampattern", Task::beampattern},
    {"compare", Task::compare},
};

const std::set<std::string> kSchemes{"optimized", "isotropic", "random100", "tdma"};

} // namespace

std::string format_number(double v) {
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string sweep_parameter_name(SweepParameter p) {
    for (const auto &[name, value] : kSweepNames)
        if (value == p)
            return name;
    return "?";
}

SweepParameter parse_sweep_parameter(const std::string &name) {
    const auto it = kSweepNames.find(name);
    if (it == kSweepNames.end())
        throw std::invalid_argument("unknown sweep parameter '" + name + "' (M_x, M_z, snr_db, gamma_pcrb)");
    return it->second;
}

std::string task_name(Task t) {
    for (const auto &[name, value] : kTaskNames)
        if (value == t)
            return name;
    return "?";
}

Task parse_task(const std::string &name) {
    const auto it = kTaskNames.find(name);
    if (it == kTaskNames.end())
        throw std::invalid_argument("unknown task '" + name + "'");
    return it->second;
}

// ---------------------------------------------------------------- json

json to_json(const ScenarioConfig &c) {
    json prior = json::array();
    for (const auto &p : c.prior.components)
        prior.push_back({{"weight", p.weight}, {"mean", p.mean}, {"variance", p.variance}});
    return {
        {"antennas", c.antennas},
        {"mx", c.mx},
        {"mz", c.mz},
        {"group_sizes", c.group_sizes},
        {"target_distance", c.target_distance},
        {"irs_bs_distance", c.irs_bs_distance},
        {"user_irs_distance", c.user_irs_distance},
        {"user_angle", c.user_angle},
        {"direct_blocked", c.direct_blocked},
        {"irs_bs_aoa", c.irs_bs_aoa},
        {"target_power_w", c.target_power},
        {"user_power_w", c.user_power},
        {"noise_power_w", c.noise_power},
        {"block_length", c.block_length},
        {"beta0", c.beta0},
        {"spacing", c.spacing},
        {"wavelength", c.wavelength},
        {"rician_factor", c.rician_factor},
        {"direct_path_loss_exponent", c.direct_path_loss_exponent},
        {"prior", prior},
        {"gamma_pcrb", c.gamma_pcrb},
        {"moments", c.moments == MomentConvention::expectation ? "expectation" : "unweighted"},
        {"evd_rank_tol", c.evd_rank_tol},
        {"quadrature",
         {{"nodes_per_panel", c.quadrature.nodes_per_panel},
          {"rel_tol", c.quadrature.rel_tol},
          {"max_doublings", c.quadrature.max_doublings}}},
    };
}

ScenarioConfig scenario_from_json(const json &j, ScenarioConfig c) {
    check_keys(j,
               {"antennas", "mx", "mz", "group_sizes", "target_distance", "irs_bs_distance", "user_irs_distance",
                "user_angle", "user_angle_deg", "direct_blocked", "irs_bs_aoa", "irs_bs_aoa_deg", "target_power",
                "target_power_w", "target_power_dbm", "user_power", "user_power_w", "user_power_dbm", "noise_power",
                "noise_power_w", "noise_power_dbm", "block_length", "beta0", "beta0_db", "spacing", "wavelength",
                "rician_factor", "rician_factor_db", "direct_path_loss_exponent", "prior", "gamma_pcrb", "moments",
                "evd_rank_tol", "quadrature"},
               "scenario");
    read(j, "antennas", c.antennas);
    read(j, "mx", c.mx);
    read(j, "mz", c.mz);
    read(j, "group_sizes", c.group_sizes);
    if ((j.contains("mx") || j.contains("mz")) && !j.contains("group_sizes"))
        c.group_sizes = {c.elements()};
    read(j, "target_distance", c.target_distance);
    read(j, "irs_bs_distance", c.irs_bs_distance);
    read_angles(j, "user_angle", c.user_angle.size(), c.user_angle);
    const std::size_t k = c.user_angle.size();
    if (j.contains("user_irs_distance"))
        c.user_irs_distance = number_list(j.at("user_irs_distance"), k);
    if (j.contains("direct_blocked")) {
        const json &v = j.at("direct_blocked");
        c.direct_blocked = v.is_array() ? v.get<std::vector<bool>>() : std::vector<bool>(k, v.get<bool>());
    }
    read_angle(j, "irs_bs_aoa", c.irs_bs_aoa);
    read_power(j, "target_power", c.target_power);
    read_powers(j, "user_power", k, c.user_power);
    read_power(j, "noise_power", c.noise_power);
    read(j, "block_length", c.block_length);
    read_gain(j, "beta0", true, c.beta0);
    read(j, "spacing", c.spacing);
    read(j, "wavelength", c.wavelength);
    read_gain(j, "rician_factor", false, c.rician_factor);
    read(j, "direct_path_loss_exponent", c.direct_path_loss_exponent);
    if (j.contains("prior")) {
        c.prior.components.clear();
        for (const json &p : j.at("prior")) {
            check_keys(p, {"weight", "mean", "mean_deg", "variance"}, "prior component");
            GaussianComponent g;
            read(p, "weight", g.weight);
            read_angle(p, "mean", g.mean);
            read(p, "variance", g.variance);
            c.prior.components.push_back(g);
        }
    }
    read(j, "gamma_pcrb", c.gamma_pcrb);
    if (j.contains("moments")) {
        const std::string m = j.at("moments").get<std::string>();
        if (m == "expectation")
            c.moments = MomentConvention::expectation;
        else if (m == "unweighted")
            c.moments = MomentConvention::unweighted;
        else
            throw std::invalid_argument("scenario: moments must be 'expectation' or 'unweighted'");
    }
    read(j, "evd_rank_tol", c.evd_rank_tol);
    if (j.contains("quadrature")) {
        const json &q = j.at("quadrature");
        check_keys(q, {"nodes_per_panel", "rel_tol", "max_doublings"}, "quadrature");
        read(q, "nodes_per_panel", c.quadrature.nodes_per_panel);
        read(q, "rel_tol", c.quadrature.rel_tol);
        read(q, "max_doublings", c.quadrature.max_doublings);
    }
    return c;
}

json to_json(const PddConfig &p) {
    return {
        {"rho0", p.rho0},
        {"delta", p.delta},
        {"eps0", p.eps0},
        {"eps_decay", p.eps_decay},
        {"eps_final", p.eps_final},
        {"inner_tol", p.inner_tol},
        {"max_outer", p.max_outer},
        {"max_inner", p.max_inner},
        {"max_ao", p.max_ao},
        {"n_starts", p.n_starts},
        {"gamma_pcrb", p.gamma_pcrb ? json(*p.gamma_pcrb) : json(nullptr)},
        {"feas_slack", p.feas_slack},
        {"seed", p.seed},
        {"qcqp",
         {{"tol", p.qcqp.tol},
          {"max_newton", p.qcqp.max_newton},
          {"t0", p.qcqp.t0},
          {"mu", p.qcqp.mu},
          {"ls_alpha", p.qcqp.ls_alpha},
          {"ls_beta", p.qcqp.ls_beta}}},
    };
}

PddConfig pdd_from_json(const json &j, PddConfig p) {
    check_keys(j,
               {"rho0", "delta", "eps0", "eps_decay", "eps_final", "inner_tol", "max_outer", "max_inner", "max_ao",
                "n_starts", "gamma_pcrb", "feas_slack", "seed", "qcqp"},
               "pdd");
    read(j, "rho0", p.rho0);
    read(j, "delta", p.delta);
    read(j, "eps0", p.eps0);
    read(j, "eps_decay", p.eps_decay);
    read(j, "eps_final", p.eps_final);
    read(j, "inner_tol", p.inner_tol);
    read(j, "max_outer", p.max_outer);
    read(j, "max_inner", p.max_inner);
    read(j, "max_ao", p.max_ao);
    read(j, "n_starts", p.n_starts);
    if (j.contains("gamma_pcrb")) {
        const json &g = j.at("gamma_pcrb");
        p.gamma_pcrb = g.is_null() ? std::nullopt : std::optional<double>(g.get<double>());
    }
    read(j, "feas_slack", p.feas_slack);
    read(j, "seed", p.seed);
    if (j.contains("qcqp")) {
        const json &q = j.at("qcqp");
        check_keys(q, {"tol", "max_newton", "t0", "mu", "ls_alpha", "ls_beta"}, "qcqp");
        read(q, "tol", p.qcqp.tol);
        read(q, "max_newton", p.qcqp.max_newton);
        read(q, "t0", p.qcqp.t0);
        read(q, "mu", p.qcqp.mu);
        read(q, "ls_alpha", p.qcqp.ls_alpha);
        read(q, "ls_beta", p.qcqp.ls_beta);
    }
    return p;
}

json to_json(const ExperimentSpec &s) {
    json tasks = json::array();
    for (Task t : s.tasks)
        tasks.push_back(task_name(t));
    json sweep = nullptr;
    if (s.sweep)
        sweep = {{"parameter", sweep_parameter_name(s.sweep->parameter)}, {"values", s.sweep->values}};
    return {
        {"name", s.name},
        {"tasks", tasks},
        {"scenario", to_json(s.scenario)},
        {"pdd", to_json(s.pdd)},
        {"sweep", sweep},
        {"seeds", s.seeds},
        {"schemes", s.schemes},
        {"architectures", s.architectures},
        {"gamma_grid", s.gamma_grid},
        {"beampattern_points", s.beampattern_points},
        {"mc_samples", s.mc_samples},
        {"integer_symbols", s.integer_symbols},
        {"output", s.output.string()},
        {"workers", s.workers},
    };
}

ExperimentSpec spec_from_json(const json &j, ExperimentSpec s) {
    check_keys(j,
               {"name", "tasks", "scenario", "pdd", "sweep", "seeds", "schemes", "architectures", "gamma_grid",
                "beampattern_points", "mc_samples", "integer_symbols", "output", "workers"},
               "experiment");
    read(j, "name", s.name);
    if (j.contains("tasks")) {
        s.tasks.clear();
        for (const json &t : j.at("tasks"))
            s.tasks.push_back(parse_task(t.get<std::string>()));
    }
    if (j.contains("scenario"))
        s.scenario = scenario_from_json(j.at("scenario"), s.scenario);
    if (j.contains("pdd"))
        s.pdd = pdd_from_json(j.at("pdd"), s.pdd);
    if (j.contains("sweep")) {
        const json &w = j.at("sweep");
        if (w.is_null()) {
            s.sweep.reset();
        } else {
            check_keys(w, {"parameter", "values"}, "sweep");
            Sweep sw;
            sw.parameter = parse_sweep_parameter(w.at("parameter").get<std::string>());
            sw.values = w.at("values").get<std::vector<double>>();
            s.sweep = sw;
        }
    }
    read(j, "seeds", s.seeds);
    read(j, "schemes", s.schemes);
    read(j, "architectures", s.architectures);
    read(j, "gamma_grid", s.gamma_grid);
    read(j, "beampattern_points", s.beampattern_points);
    read(j, "mc_samples", s.mc_samples);
    read(j, "integer_symbols", s.integer_symbols);
    if (j.contains("output"))
        s.output = j.at("output").get<std::string>();
    read(j, "workers", s.workers);
    return s;
}

void merge_json(json &target, const json &patch) {
    if (!patch.is_object() || !target.is_object()) {
        target = patch;
        return;
    }
    for (const auto &[k, v] : patch.items()) {
        if (v.is_object() && target.contains(k) && target[k].is_object())
            merge_json(target[k], v);
        else
            target[k] = v;
    }
}

void apply_override(json &j, const std::string &assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw std::invalid_argument("override '" + assignment + "' is not key=value");
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded())
        value = text;
    json *node = &j;
    std::size_t start = 0;
    for (;;) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty())
            throw std::invalid_argument("override '" + assignment + "': empty key");
        if (!node->is_object())
            *node = json::object();
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

std::uint64_t config_hash(const ExperimentSpec &spec) {
    json j = to_json(spec);
    j.erase("output");
    j.erase("workers");
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : j.dump()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// ---------------------------------------------------------------- spec

void ExperimentSpec::validate() const {
    scenario.validate();
    if (seeds.empty())
        throw std::invalid_argument("experiment: seeds must not be empty");
    if (tasks.empty())
        throw std::invalid_argument("experiment: no task selected");
    for (const std::string &s : schemes)
        if (!kSchemes.count(s))
            throw std::invalid_argument("experiment: unknown scheme '" + s + "'");
    if (workers < 1)
        throw std::invalid_argument("experiment: workers must be at least 1");
    if (beampattern_points < 2)
        throw std::invalid_argument("experiment: beampattern needs at least 2 points");
    if (mc_samples < 2)
        throw std::invalid_argument("experiment: mc_samples must be at least 2");
    for (const Task t : tasks)
        if (t == Task::compare && gamma_grid.empty())
            throw std::invalid_argument("experiment: compare needs a gamma_grid");
    for (double g : gamma_grid)
        if (!(g > 0.0))
            throw std::invalid_argument("experiment: gamma_grid values must be positive");
    if (sweep) {
        if (sweep->values.empty())
            throw std::invalid_argument("experiment: sweep has no values");
        for (double v : sweep->values) {
            switch (sweep->parameter) {
            case SweepParameter::mx:
            case SweepParameter::mz:
                if (!(v >= 1.0) || v != std::floor(v))
                    throw std::invalid_argument("experiment: element counts must be positive integers");
                break;
            case SweepParameter::snr_db:
                if (!std::isfinite(v))
                    throw std::invalid_argument("experiment: SNR must be finite");
                break;
            case SweepParameter::gamma_pcrb:
                if (!(v > 0.0))
                    throw std::invalid_argument("experiment: gamma_pcrb values must be positive");
                break;
            }
        }
    }
    // every architecture must resolve at every element count
    std::vector<Index> counts{scenario.elements()};
    if (sweep && sweep->parameter == SweepParameter::mx)
        for (double v : sweep->values)
            counts.push_back(static_cast<Index>(v) * scenario.mz);
    if (sweep && sweep->parameter == SweepParameter::mz)
        for (double v : sweep->values)
            counts.push_back(scenario.mx * static_cast<Index>(v));
    for (const std::string &a : architectures)
        for (Index m : counts)
            resolve_architecture(a, m);
}

ScenarioConfig apply_sweep(const ScenarioConfig &cfg, SweepParameter p, double value) {
    ScenarioConfig c = cfg;
    switch (p) {
    case SweepParameter::mx:
    case SweepParameter::mz: {
        (p == SweepParameter::mx ? c.mx : c.mz) = static_cast<Index>(std::llround(value));
        const Index m = c.elements();
        const Index g = static_cast<Index>(cfg.group_sizes.size());
        c.group_sizes = m % g == 0 ? uniform_groups(m, g) : std::vector<Index>{m};
        break;
    }
    case SweepParameter::snr_db: {
        const double power = c.noise_power * db_to_linear(value);
        c.target_power = power;
        std::fill(c.user_power.begin(), c.user_power.end(), power);
        break;
    }
    case SweepParameter::gamma_pcrb:
        c.gamma_pcrb = value;
        break;
    }
    return c;
}

std::vector<Index> resolve_architecture(const std::string &name, Index elements) {
    if (name == "fully")
        return {elements};
    if (name == "single")
        return std::vector<Index>(static_cast<std::size_t>(elements), 1);
    if (name.rfind("group", 0) == 0 && name.size() > 5) {
        const std::string digits = name.substr(5);
        if (digits.find_first_not_of("0123456789") == std::string::npos)
            return uniform_groups(elements, std::stoll(digits));
    }
    throw std::invalid_argument("unknown architecture '" + name + "' (fully, single, group<G>)");
}

std::string architecture_label(const std::vector<Index> &g) {
    if (g.size() == 1)
        return "fully";
    if (std::all_of(g.begin(), g.end(), [](Index s) { return s == 1; }))
        return "single";
    if (std::all_of(g.begin(), g.end(), [&](Index s) { return s == g.front(); }))
        return "group" + std::to_string(g.size());
    std::string out;
    for (Index s : g)
        out += (out.empty() ? "" : "+") + std::to_string(s);
    return out;
}

std::vector<double> uniform_angle_grid(Index n) {
    if (n < 2)
        throw std::invalid_argument("uniform_angle_grid: need at least 2 points");
    std::vector<double> g(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i)
        g[static_cast<std::size_t>(i)] = kPi * static_cast<double>(i) / static_cast<double>(n);
    return g;
}

ReflectionMatrix best_random(const ChannelSet &ch, const ScenarioConfig &cfg, bool sensing, Rng &rng, int count) {
    const std::vector<Index> fully{cfg.elements()};
    std::optional<ReflectionMatrix> best_rate, best_pcrb;
    double top_rate = -1.0, low_pcrb = std::numeric_limits<double>::infinity();
    for (int i = 0; i < count; ++i) {
        ReflectionMatrix phi = ReflectionMatrix::random(fully, rng);
        if (sensing) {
            const double p = pcrb(phi, ch, cfg);
            if (p < low_pcrb) {
                low_pcrb = p;
                best_pcrb = phi;
            }
            continue;
        }
        const IsacMetrics m = evaluate(phi, ch, cfg);
        if (m.pcrb < low_pcrb) {
            low_pcrb = m.pcrb;
            best_pcrb = phi;
        }
        if (m.feasible && m.min_rate > top_rate) {
            top_rate = m.min_rate;
            best_rate = phi;
        }
    }
    if (!best_pcrb)
        throw std::invalid_argument("best_random: count must be positive");
    return best_rate ? *best_rate : *best_pcrb;
}

void write_beampattern_csv(std::ostream &os, const std::vector<BeampatternSeries> &series, const ChannelSet &ch,
                           const ScenarioConfig &cfg, Index points) {
    const std::vector<double> grid = uniform_angle_grid(points);
    os << "series,theta_deg,power_dbm\n";
    for (const auto &s : series)
        for (const BeamSample &b : sensing_beampattern(s.phi, ch, cfg, grid))
            os << s.label << ',' << format_number(deg(b.theta)) << ',' << format_number(watt_to_dbm(b.power))
               << '\n';
}

// ---------------------------------------------------------------- presets

namespace {

const std::vector<std::pair<std::string, std::string>> kPresets{
    {"base", "ISAC at gamma 5e-4, all architectures against both benchmarks"},
    {"fig5_mx", "sensing PCRB versus M_x (M_z = 4)"},
    {"fig5_mz", "sensing PCRB versus M_z (M_x = 4)"},
    {"fig5_snr", "sensing PCRB versus transmit SNR"},
    {"fig6_gamma", "min-rate versus gamma_pcrb, SDMA and TDMA"},
    {"fig6_mz", "min-rate versus M_z at gamma 1.5e-3"},
    {"fig6_snr", "min-rate versus transmit SNR at gamma 2.2e-3"},
    {"fig7_beampattern", "sensing beampattern of the ISAC designs"},
    {"fig9_tdma", "SDMA against TDMA with user 1 near the target and its direct link blocked"},
    {"table2", "sensing PCRB and ISAC min-rate per architecture at gamma 1.5e-3"},
};

const std::vector<std::string> kAllArchitectures{"fully", "group2", "group4", "single"};
const std::vector<std::string> kAllSchemes{"optimized", "isotropic", "random100"};

// geometric from lo to hi, rounded to three significant digits
std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> g;
    for (int i = 0; i < n; ++i) {
        const double v = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
        const double mag = std::pow(10.0, std::floor(std::log10(v)) - 2.0);
        g.push_back(std::round(v / mag) * mag);
    }
    return g;
}

} // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> n;
    for (const auto &p : kPresets)
        n.push_back(p.first);
    return n;
}

std::string preset_description(const std::string &name) {
    for (const auto &p : kPresets)
        if (p.first == name)
            return p.second;
    throw std::invalid_argument("unknown preset '" + name + "'");
}

ExperimentSpec preset(const std::string &name) {
    preset_description(name); // validates the name
    ExperimentSpec s;
    s.name = name;
    s.scenario = default_scenario();
    s.architectures = kAllArchitectures;
    s.schemes = kAllSchemes;
    s.tasks = {Task::isac};
    s.output = "bdris_" + name;
    const std::vector<double> element_counts{2, 4, 6, 8};
    const std::vector<double> snr{95, 100, 105, 110, 115};

    if (name == "base") {
        s.scenario.gamma_pcrb = 5e-4;
    } else if (name == "fig5_mx") {
        s.tasks = {Task::sensing};
        s.sweep = Sweep{SweepParameter::mx, element_counts};
    } else if (name == "fig5_mz") {
        s.tasks = {Task::sensing};
        s.sweep = Sweep{SweepParameter::mz, element_counts};
    } else if (name == "fig5_snr") {
        s.tasks = {Task::sensing};
        s.sweep = Sweep{SweepParameter::snr_db, snr};
    } else if (name == "fig6_gamma") {
        s.architectures = {"fully", "group2", "group4"};
        s.schemes = {"optimized", "tdma"};
        s.sweep = Sweep{SweepParameter::gamma_pcrb, log_grid(5e-4, 2.2e-3, 6)};
    } else if (name == "fig6_mz") {
        s.scenario.gamma_pcrb = 1.5e-3;
        s.sweep = Sweep{SweepParameter::mz, element_counts};
    } else if (name == "fig6_snr") {
        s.scenario.gamma_pcrb = 2.2e-3;
        s.sweep = Sweep{SweepParameter::snr_db, snr};
    } else if (name == "fig7_beampattern") {
        s.scenario.gamma_pcrb = 5e-4;
        s.tasks = {Task::beampattern};
        s.architectures = {"fully"};
    } else if (name == "fig9_tdma") {
        s.scenario.user_angle[0] = 5.0 * kPi / 12.0;
        s.scenario.direct_blocked[0] = true;
        s.scenario.gamma_pcrb = 2.2e-3;
        s.tasks = {Task::compare};
        s.architectures = {"fully"};
        s.schemes = {"optimized", "tdma"};
        s.gamma_grid = log_grid(8e-4, 2.2e-3, 5);
    } else if (name == "table2") {
        s.scenario.gamma_pcrb = 1.5e-3;
        s.tasks = {Task::sensing, Task::isac};
    }
    return s;
}

// ---------------------------------------------------------------- run

namespace {

struct Row {
    Task task = Task::isac;
    double sweep_value = kNan;
    std::uint64_t seed = 0;
    std::string architecture;
    std::string groups;
    std::string scheme;
    std::string status = "ok";
    ScenarioConfig cfg;
    double pcrb = kNan;
    std::vector<double> rates;
    double min_rate = kNan;
    double q_star = kNan;
    int iterations = 0;
    std::string phi_file;
    double runtime = 0.0;
};

struct CellOutput {
    std::vector<Row> rows;
    std::string compare_csv;     // body lines
    std::string beampattern_csv; // body lines
    std::string error;
};

struct Cell {
    std::optional<double> value; // sweep value; unset for gamma sweeps and no sweep
    std::uint64_t seed = 0;
};

std::string join(const std::vector<double> &v, double (*f)(double) = nullptr) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? ";" : "") + format_number(f ? f(v[i]) : v[i]);
    return s;
}

std::string join_groups(const std::vector<Index> &g) {
    std::string s;
    for (std::size_t i = 0; i < g.size(); ++i)
        s += (i ? ";" : "") + std::to_string(g[i]);
    return s;
}

std::string join_bools(const std::vector<bool> &v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
        s += std::string(i ? ";" : "") + (v[i] ? "1" : "0");
    return s;
}

double watt_dbm(double w) { return watt_to_dbm(w); }
double to_deg(double r) { return deg(r); }
double amp_db(double a) { return 20.0 * std::log10(a); }
double pow_db(double p) { return 10.0 * std::log10(p); }

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

class CellRunner {
public:
    CellRunner(const ExperimentSpec &spec, const Cell &cell) : spec_(spec), cell_(cell) {}

    CellOutput run() {
        CellOutput out;
        ScenarioConfig cfg = spec_.scenario;
        if (spec_.pdd.gamma_pcrb)
            cfg.gamma_pcrb = *spec_.pdd.gamma_pcrb;
        if (cell_.value)
            cfg = apply_sweep(cfg, spec_.sweep->parameter, *cell_.value);
        pc_ = spec_.pdd;
        pc_.gamma_pcrb.reset();
        const ChannelSet ch = build_channels(cfg, cell_.seed);

        // finest first, so coarser structures can start from finer solutions
        archs_.clear();
        if (spec_.architectures.empty())
            archs_.push_back(cfg.group_sizes);
        for (const std::string &a : spec_.architectures)
            archs_.push_back(resolve_architecture(a, cfg.elements()));
        std::stable_sort(archs_.begin(), archs_.end(),
                         [](const auto &a, const auto &b) { return a.size() > b.size(); });

        for (Task t : spec_.tasks) {
            switch (t) {
            case Task::sensing:
                sensing(cfg, ch, out);
                break;
            case Task::isac:
                isac(cfg, ch, out);
                break;
            case Task::beampattern:
                beampattern(cfg, ch, out);
                break;
            case Task::compare:
                compare(cfg, ch, out);
                break;
            }
        }
        return out;
    }

private:
    bool wants(const char *scheme) const {
        return std::find(spec_.schemes.begin(), spec_.schemes.end(), scheme) != spec_.schemes.end();
    }

    std::string run_id(Task t, double sweep_value, const std::string &arch, const std::string &scheme) const {
        std::string id = task_name(t);
        if (spec_.sweep)
            id += "_" + sweep_parameter_name(spec_.sweep->parameter) + "-" + format_number(sweep_value);
        return id + "_seed" + std::to_string(cell_.seed) + "_" + arch + "_" + scheme;
    }

    std::string save_phi(const std::string &id, const ReflectionMatrix &phi) const {
        const std::string rel = "phi/" + id + ".txt";
        std::ofstream f(spec_.output / rel);
        phi.write_text(f);
        if (!f)
            throw std::runtime_error("cannot write " + (spec_.output / rel).string());
        return rel;
    }

    void save_trace(const std::string &id, const std::vector<TraceRecord> &trace) const {
        std::ofstream f(spec_.output / "traces" / (id + ".csv"));
        write_trace_csv(f, trace);
    }

    Row start_row(Task t, double sweep_value, const ScenarioConfig &cfg, const std::vector<Index> &groups,
                  const std::string &scheme) const {
        Row r;
        r.task = t;
        r.sweep_value = sweep_value;
        r.seed = cell_.seed;
        r.architecture = architecture_label(groups);
        r.groups = join_groups(groups);
        r.scheme = scheme;
        r.cfg = cfg;
        return r;
    }

    void fill(Row &r, const IsacMetrics &m, bool sensing_only, const std::string &id, const ReflectionMatrix &phi) {
        r.pcrb = m.pcrb;
        if (!sensing_only) {
            r.rates = m.rates;
            r.min_rate = m.min_rate;
            if (!m.feasible)
                r.status = "infeasible";
        }
        r.phi_file = save_phi(id, phi);
    }

    std::string sweep_text(double v) const { return spec_.sweep ? format_number(v) : ""; }

    double current_value(const ScenarioConfig &cfg) const {
        if (!spec_.sweep)
            return kNan;
        return cell_.value ? *cell_.value : cfg.gamma_pcrb;
    }

    void sensing(const ScenarioConfig &cfg, const ChannelSet &ch, CellOutput &out) {
        const ScenarioConfig quiet = without_users(cfg);
        const ChannelSet ch0 = without_users(ch);
        const double v = current_value(cfg);
        if (wants("optimized")) {
            std::vector<ReflectionMatrix> hints;
            for (const auto &g : archs_) {
                ScenarioConfig c = quiet;
                c.group_sizes = g;
                Row r = start_row(Task::sensing, v, c, g, "optimized");
                const std::string id = run_id(Task::sensing, v, r.architecture, r.scheme);
                const Timer tm;
                try {
                    const PddResult res = solve_sensing_only(ch0, c, pc_, hints);
                    r.runtime = tm.seconds();
                    fill(r, res.metrics, true, id, res.phi);
                    r.iterations = res.outer_iterations;
                    save_trace(id, res.trace);
                    hints.push_back(res.phi);
                } catch (const std::exception &e) {
                    r.runtime = tm.seconds();
                    r.status = std::string("error: ") + e.what();
                }
                out.rows.push_back(std::move(r));
            }
        }
        benchmarks(Task::sensing, v, quiet, ch0, true, out);
    }

    void benchmarks(Task t, double v, const ScenarioConfig &cfg, const ChannelSet &ch, bool sensing_only,
                    CellOutput &out) {
        if (wants("isotropic")) {
            const std::vector<Index> single(static_cast<std::size_t>(cfg.elements()), 1);
            const ReflectionMatrix phi = ReflectionMatrix::identity(single);
            Row r = start_row(t, v, cfg, single, "isotropic");
            const Timer tm;
            const IsacMetrics m = evaluate(phi, ch, cfg);
            r.runtime = tm.seconds();
            fill(r, m, sensing_only, run_id(t, v, r.architecture, r.scheme), phi);
            out.rows.push_back(std::move(r));
        }
        if (wants("random100")) {
            const std::vector<Index> fully{cfg.elements()};
            Row r = start_row(t, v, cfg, fully, "random100");
            std::seed_seq seq{static_cast<std::uint32_t>(cell_.seed), static_cast<std::uint32_t>(cell_.seed >> 32),
                              100u};
            Rng rng(seq);
            const Timer tm;
            const ReflectionMatrix phi = best_random(ch, cfg, sensing_only, rng, 100);
            const IsacMetrics m = evaluate(phi, ch, cfg);
            r.runtime = tm.seconds();
            fill(r, m, sensing_only, run_id(t, v, r.architecture, r.scheme), phi);
            out.rows.push_back(std::move(r));
        }
    }

    void isac(const ScenarioConfig &base, const ChannelSet &ch, CellOutput &out) {
        std::vector<double> gammas{base.gamma_pcrb};
        if (spec_.sweep && spec_.sweep->parameter == SweepParameter::gamma_pcrb) {
            gammas = spec_.sweep->values;
            std::sort(gammas.begin(), gammas.end()); // tight to loose, solutions carry over
        }
        std::map<std::size_t, std::vector<ReflectionMatrix>> earlier; // per architecture, feasible at tighter gamma
        std::map<std::size_t, TdmaStages> stages;
        for (double gamma : gammas) {
            ScenarioConfig cfg = base;
            cfg.gamma_pcrb = gamma;
            const double v = current_value(cfg);
            std::vector<ReflectionMatrix> finer;
            for (std::size_t a = 0; a < archs_.size(); ++a) {
                const auto &g = archs_[a];
                ScenarioConfig c = cfg;
                c.group_sizes = g;
                if (wants("optimized")) {
                    Row r = start_row(Task::isac, v, c, g, "optimized");
                    const std::string id = run_id(Task::isac, v, r.architecture, r.scheme);
                    std::vector<ReflectionMatrix> hints = finer;
                    hints.insert(hints.end(), earlier[a].begin(), earlier[a].end());
                    const Timer tm;
                    try {
                        const PddResult res = solve_isac(ch, c, pc_, hints);
                        r.runtime = tm.seconds();
                        fill(r, res.metrics, false, id, res.phi);
                        r.iterations = res.outer_iterations;
                        save_trace(id, res.trace);
                        if (res.metrics.feasible) {
                            finer.push_back(res.phi);
                            earlier[a] = {res.phi};
                        }
                    } catch (const InfeasibleError &e) {
                        r.runtime = tm.seconds();
                        r.status = "infeasible";
                        r.pcrb = e.pcrb_floor();
                    } catch (const std::exception &e) {
                        r.runtime = tm.seconds();
                        r.status = std::string("error: ") + e.what();
                    }
                    out.rows.push_back(std::move(r));
                }
                if (wants("tdma")) {
                    Row r = start_row(Task::isac, v, c, g, "tdma");
                    const std::string id = run_id(Task::isac, v, r.architecture, r.scheme);
                    const Timer tm;
                    try {
                        if (!stages.count(a))
                            stages.emplace(a, tdma_stage_designs(ch, c, pc_));
                        const TdmaPlan p = plan_tdma(stages.at(a), gamma, ch, c, spec_.integer_symbols);
                        r.runtime = tm.seconds();
                        r.pcrb = p.pcrb;
                        r.rates = p.rates;
                        r.min_rate = p.min_rate;
                        r.q_star = p.q;
                        if (!p.feasible)
                            r.status = "infeasible";
                        r.phi_file = save_phi(id + "_comm", p.phi_c);
                        save_phi(id + "_sense", p.phi_s);
                    } catch (const InfeasibleError &e) {
                        r.runtime = tm.seconds();
                        r.status = "infeasible";
                        r.pcrb = e.pcrb_floor();
                    } catch (const std::exception &e) {
                        r.runtime = tm.seconds();
                        r.status = std::string("error: ") + e.what();
                    }
                    out.rows.push_back(std::move(r));
                }
            }
            benchmarks(Task::isac, v, cfg, ch, false, out);
        }
    }

    void beampattern(const ScenarioConfig &cfg, const ChannelSet &ch, CellOutput &out) {
        std::vector<BeampatternSeries> series;
        std::vector<ReflectionMatrix> finer;
        const double v = current_value(cfg);
        if (wants("optimized")) {
            for (const auto &g : archs_) {
                ScenarioConfig c = cfg;
                c.group_sizes = g;
                const std::string label = architecture_label(g) + "/optimized";
                try {
                    const PddResult res = solve_isac(ch, c, pc_, finer);
                    finer.push_back(res.phi);
                    save_phi(run_id(Task::beampattern, v, architecture_label(g), "optimized"), res.phi);
                    series.push_back({label, res.phi.dense()});
                } catch (const std::exception &e) {
                    out.error += label + ": " + e.what() + "; ";
                }
            }
        }
        if (wants("isotropic"))
            series.push_back({"single/isotropic", cmat::Identity(cfg.elements(), cfg.elements())});
        if (wants("random100")) {
            std::seed_seq seq{static_cast<std::uint32_t>(cell_.seed), static_cast<std::uint32_t>(cell_.seed >> 32),
                              100u};
            Rng rng(seq);
            const ReflectionMatrix phi = best_random(ch, cfg, false, rng, 100);
            save_phi(run_id(Task::beampattern, v, "fully", "random100"), phi);
            series.push_back({"fully/random100", phi.dense()});
        }
        std::ostringstream body;
        write_beampattern_csv(body, series, ch, cfg, spec_.beampattern_points);
        std::string text = body.str();
        text.erase(0, text.find('\n') + 1); // header written once by the caller
        const std::string prefix = sweep_text(v) + "," + std::to_string(cell_.seed) + ",";
        std::istringstream lines(text);
        for (std::string line; std::getline(lines, line);)
            out.beampattern_csv += prefix + line + "\n";
    }

    void compare(const ScenarioConfig &cfg, const ChannelSet &ch, CellOutput &out) {
        const double v = current_value(cfg);
        for (const auto &g : archs_) {
            ScenarioConfig c = cfg;
            c.group_sizes = g;
            ComparisonOptions opt;
            opt.mc_samples = spec_.mc_samples;
            opt.integer_symbols = spec_.integer_symbols;
            std::ostringstream body;
            write_comparison_csv(body, compare_sdma_tdma(ch, c, pc_, spec_.gamma_grid, opt));
            std::string text = body.str();
            text.erase(0, text.find('\n') + 1);
            const std::string prefix =
                sweep_text(v) + "," + std::to_string(cell_.seed) + "," + architecture_label(g) + ",";
            std::istringstream lines(text);
            for (std::string line; std::getline(lines, line);)
                out.compare_csv += prefix + line + "\n";
        }
    }

    const ExperimentSpec &spec_;
    Cell cell_;
    PddConfig pc_;
    std::vector<std::vector<Index>> archs_;
};

void write_results_header(std::ostream &os, Index users) {
    os << "task,sweep_parameter,sweep_value,seed,architecture,group_sizes,scheme,status,antennas,mx,mz,users,"
          "target_power_dbm,user_power_dbm,noise_power_dbm,block_length,gamma_pcrb,target_distance,"
          "irs_bs_distance,user_irs_distance,user_angle_deg,irs_bs_aoa_deg,direct_blocked,beta0_db,"
          "rician_factor_db,pcrb";
    for (Index k = 1; k <= users; ++k)
        os << ",rate_" << k;
    os << ",min_rate,q_star,iterations,phi_file\n";
}

std::string csv_field(const std::string &s) {
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string q = "\"";
    for (char c : s)
        q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

void write_row(std::ostream &os, const Row &r, const std::string &sweep_name, Index users) {
    const ScenarioConfig &c = r.cfg;
    os << task_name(r.task) << ',' << sweep_name << ',' << (sweep_name.empty() ? "" : format_number(r.sweep_value))
       << ',' << r.seed << ',' << r.architecture << ',' << r.groups << ',' << r.scheme << ','
       << csv_field(r.status) << ',' << c.antennas << ',' << c.mx << ',' << c.mz << ',' << c.users() << ','
       << format_number(watt_to_dbm(c.target_power)) << ',' << join(c.user_power, watt_dbm) << ','
       << format_number(watt_to_dbm(c.noise_power)) << ',' << format_number(c.block_length) << ','
       << format_number(c.gamma_pcrb) << ',' << format_number(c.target_distance) << ','
       << format_number(c.irs_bs_distance) << ',' << join(c.user_irs_distance) << ','
       << join(c.user_angle, to_deg) << ',' << format_number(deg(c.irs_bs_aoa)) << ','
       << join_bools(c.direct_blocked) << ',' << format_number(amp_db(c.beta0)) << ','
       << format_number(pow_db(c.rician_factor)) << ',' << format_number(r.pcrb);
    for (Index k = 0; k < users; ++k)
        os << ',' << (static_cast<std::size_t>(k) < r.rates.size() ? format_number(r.rates[k]) : "");
    os << ',' << (r.rates.empty() ? "" : format_number(r.min_rate)) << ','
       << (std::isnan(r.q_star) ? "" : format_number(r.q_star)) << ',' << r.iterations << ',' << r.phi_file
       << '\n';
}

std::ofstream open_out(const fs::path &p) {
    std::ofstream f(p, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot write " + p.string());
    return f;
}

} // namespace

RunSummary run(const ExperimentSpec &spec) {
    spec.validate();
    fs::create_directories(spec.output / "phi");
    fs::create_directories(spec.output / "traces");

    std::vector<Cell> cells;
    const bool per_value = spec.sweep && spec.sweep->parameter != SweepParameter::gamma_pcrb;
    if (per_value) {
        for (double v : spec.sweep->values)
            for (std::uint64_t s : spec.seeds)
                cells.push_back({v, s});
    } else {
        for (std::uint64_t s : spec.seeds)
            cells.push_back({std::nullopt, s});
    }

    std::vector<CellOutput> outputs(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < cells.size();) {
            try {
                outputs[i] = CellRunner(spec, cells[i]).run();
            } catch (const std::exception &e) {
                outputs[i].error = e.what();
            }
        }
    };
    const std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(spec.workers), cells.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < n_workers; ++w)
        pool.emplace_back(worker);
    worker();
    for (auto &t : pool)
        t.join();

    // single writer, in cell order
    RunSummary summary;
    const Index users = spec.scenario.users();
    const std::string sweep_name = spec.sweep ? sweep_parameter_name(spec.sweep->parameter) : "";
    const bool has = [&] {
        for (Task t : spec.tasks)
            if (t == Task::sensing || t == Task::isac)
                return true;
        return false;
    }();
    auto has_task = [&](Task t) { return std::find(spec.tasks.begin(), spec.tasks.end(), t) != spec.tasks.end(); };

    if (has) {
        std::ofstream res = open_out(spec.output / "results.csv");
        std::ofstream tim = open_out(spec.output / "timings.csv");
        write_results_header(res, users);
        tim << "task,sweep_value,seed,architecture,scheme,runtime_s\n";
        for (const CellOutput &o : outputs)
            for (const Row &r : o.rows) {
                write_row(res, r, sweep_name, users);
                tim << task_name(r.task) << ',' << (sweep_name.empty() ? "" : format_number(r.sweep_value)) << ','
                    << r.seed << ',' << r.architecture << ',' << r.scheme << ',' << format_number(r.runtime)
                    << '\n';
                ++summary.rows;
            }
        summary.files.push_back(spec.output / "results.csv");
        summary.files.push_back(spec.output / "timings.csv");
    }
    if (has_task(Task::compare)) {
        std::ofstream f = open_out(spec.output / "compare.csv");
        std::ostringstream header;
        write_comparison_csv(header, {});
        f << "sweep_value,seed,architecture," << header.str();
        for (const CellOutput &o : outputs)
            f << o.compare_csv;
        summary.files.push_back(spec.output / "compare.csv");
    }
    if (has_task(Task::beampattern)) {
        std::ofstream f = open_out(spec.output / "beampattern.csv");
        f << "sweep_value,seed,series,theta_deg,power_dbm\n";
        for (const CellOutput &o : outputs)
            f << o.beampattern_csv;
        summary.files.push_back(spec.output / "beampattern.csv");
    }

    json errors = json::array();
    for (std::size_t i = 0; i < cells.size(); ++i)
        if (!outputs[i].error.empty()) {
            ++summary.failed_cells;
            errors.push_back({{"seed", cells[i].seed},
                              {"sweep_value", cells[i].value ? json(*cells[i].value) : json(nullptr)},
                              {"error", outputs[i].error}});
        }
    char hash[17];
    std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(config_hash(spec)));
    json files = json::array();
    for (const auto &p : summary.files)
        files.push_back(p.filename().string());
    const json manifest{
        {"tool", "bdris"},
        {"version", kToolVersion},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"config_hash", hash},
        {"seeds", spec.seeds},
        {"rows", summary.rows},
        {"files", files},
        {"errors", errors},
        {"config", to_json(spec)},
    };
    std::ofstream m = open_out(spec.output / "manifest.json");
    m << manifest.dump(2) << '\n';
    summary.files.push_back(spec.output / "manifest.json");
    return summary;
}

} // namespace bdris
