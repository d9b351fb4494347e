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
#include "bdris/tdma.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bdris {

inline constexpr const char *kToolVersion = "0.1.0";

enum class Task {
    sensing,     // PCRB minimization without users
    isac,        // max-min rate under the PCRB threshold
    beampattern, // sensing power over angle for the ISAC designs
    compare,     // SDMA against TDMA over gamma_grid
};

enum class SweepParameter { mx, mz, snr_db, gamma_pcrb };

struct Sweep {
    SweepParameter parameter = SweepParameter::gamma_pcrb;
    std::vector<double> values;
};

struct ExperimentSpec {
    std::string name = "custom";
    std::vector<Task> tasks{Task::isac};
    ScenarioConfig scenario = default_scenario();
    PddConfig pdd{};
    std::optional<Sweep> sweep;
    std::vector<std::uint64_t> seeds{1};
    std::vector<std::string> schemes{"optimized"};
    /// "fully", "single" or "group<G>", resolved against the element count of
    /// each cell. Empty means the scenario's own group_sizes.
    std::vector<std::string> architectures;
    std::vector<double> gamma_grid;  // compare task
    Index beampattern_points = 360;  // samples on [0, pi)
    Index mc_samples = kDefaultMonteCarloSamples;
    bool integer_symbols = false;
    std::filesystem::path output = "bdris_out";
    int workers = 1;

    /// Throws std::invalid_argument.
    void validate() const;
};

std::vector<std::string> preset_names();
std::string preset_description(const std::string &name);
/// Throws std::invalid_argument for an unknown name.
ExperimentSpec preset(const std::string &name);

// Configuration files. Powers may be given as <key>_dbm or <key>_w, gains as
// <key>_db or linear, angles as <key>_deg or radians; everything is converted
// on parsing. Serialization always writes linear SI units.
nlohmann::json to_json(const ScenarioConfig &cfg);
nlohmann::json to_json(const PddConfig &pc);
nlohmann::json to_json(const ExperimentSpec &spec);
ScenarioConfig scenario_from_json(const nlohmann::json &j, ScenarioConfig base = default_scenario());
PddConfig pdd_from_json(const nlohmann::json &j, PddConfig base = {});
/// Keys absent from `j` keep the value in `base`.
ExperimentSpec spec_from_json(const nlohmann::json &j, ExperimentSpec base = {});

/// `path.to.key=value`; value is parsed as JSON, or taken as a string if that fails.
void apply_override(nlohmann::json &j, const std::string &assignment);

/// Merges `patch` into `target` object by object.
void merge_json(nlohmann::json &target, const nlohmann::json &patch);

/// FNV-1a 64 of the canonical serialization, output directory and worker
/// count excluded.
std::uint64_t config_hash(const ExperimentSpec &spec);

std::string sweep_parameter_name(SweepParameter p);
SweepParameter parse_sweep_parameter(const std::string &name);
std::string task_name(Task t);
Task parse_task(const std::string &name);

/// Scenario at one sweep point. snr_db sets every transmit power to
/// noise_power * 10^(snr/10).
ScenarioConfig apply_sweep(const ScenarioConfig &cfg, SweepParameter p, double value);

std::vector<Index> resolve_architecture(const std::string &name, Index elements);
std::string architecture_label(const std::vector<Index> &group_sizes);

/// theta_i = pi i / n, i = 0..n-1
std::vector<double> uniform_angle_grid(Index n);

/// Best of `count` random fully-connected matrices: lowest PCRB for sensing,
/// otherwise highest min-rate among those meeting the threshold, falling back
/// to the lowest PCRB when none does.
ReflectionMatrix best_random(const ChannelSet &ch, const ScenarioConfig &cfg, bool sensing, Rng &rng,
                             int count = 100);

struct BeampatternSeries {
    std::string label;
    cmat phi;
};

/// theta_deg,power_dbm per series.
void write_beampattern_csv(std::ostream &os, const std::vector<BeampatternSeries> &series, const ChannelSet &ch,
                           const ScenarioConfig &cfg, Index points);

/// Fixed 12-significant-digit formatting used by every CSV.
std::string format_number(double v);

struct RunSummary {
    std::size_t rows = 0;
    std::size_t failed_cells = 0;
    std::vector<std::filesystem::path> files;
};

/// Writes results.csv, timings.csv, compare.csv and beampattern.csv as the
/// tasks require, plus phi/ and traces/ per run and manifest.json.
RunSummary run(const ExperimentSpec &spec);

} // namespace bdris
