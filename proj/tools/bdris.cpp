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

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

using namespace bdris;

namespace {

struct Options {
    std::string preset = "base";
    std::string config;
    std::string seeds;
    std::string out;
    int workers = 0;
    std::vector<std::string> overrides;
};

// "1,2,5-7" -> 1 2 5 6 7
std::vector<std::uint64_t> parse_seeds(const std::string &text) {
    std::vector<std::uint64_t> seeds;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = std::min(text.find(',', start), text.size());
        const std::string item = text.substr(start, comma - start);
        if (item.empty())
            throw std::invalid_argument("empty item in seed list '" + text + "'");
        const std::size_t dash = item.find('-');
        if (dash == std::string::npos) {
            seeds.push_back(std::stoull(item));
        } else {
            const std::uint64_t lo = std::stoull(item.substr(0, dash));
            const std::uint64_t hi = std::stoull(item.substr(dash + 1));
            if (hi < lo)
                throw std::invalid_argument("descending seed range '" + item + "'");
            for (std::uint64_t s = lo; s <= hi; ++s)
                seeds.push_back(s);
        }
        start = comma + 1;
    }
    return seeds;
}

ExperimentSpec build_spec(const Options &o) {
    ExperimentSpec spec = preset(o.preset);
    if (!o.config.empty()) {
        std::ifstream f(o.config);
        if (!f)
            throw std::runtime_error("cannot open config " + o.config);
        spec = spec_from_json(nlohmann::json::parse(f), spec);
    }
    if (!o.overrides.empty()) {
        nlohmann::json patch = nlohmann::json::object();
        for (const std::string &a : o.overrides)
            apply_override(patch, a);
        spec = spec_from_json(patch, spec);
    }
    if (!o.seeds.empty())
        spec.seeds = parse_seeds(o.seeds);
    if (!o.out.empty())
        spec.output = o.out;
    if (o.workers > 0)
        spec.workers = o.workers;
    return spec;
}

int execute(ExperimentSpec spec) {
    spec.validate();
    std::cerr << "bdris " << kToolVersion << ": " << spec.name << ", " << spec.seeds.size() << " seed(s) -> "
              << spec.output.string() << "\n";
    const RunSummary s = run(spec);
    for (const auto &f : s.files)
        std::cout << f.string() << "\n";
    std::cerr << s.rows << " result rows";
    if (s.failed_cells)
        std::cerr << ", " << s.failed_cells << " failed cell(s), see manifest.json";
    std::cerr << "\n";
    return s.failed_cells ? 1 : 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"BD-IRS aided uplink ISAC experiments"};
    app.require_subcommand(1);
    Options o;

    auto common = [&o](CLI::App *sub) {
        sub->add_option("--preset", o.preset, "starting preset (see preset-list)");
        sub->add_option("--config", o.config, "JSON file applied on top of the preset");
        sub->add_option("--seed", o.seeds, "seed list, e.g. 1,2,5-7");
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--workers", o.workers, "concurrent cells")->check(CLI::PositiveNumber);
        sub->add_option("--override", o.overrides, "key.path=value, value parsed as JSON");
    };

    struct Mode {
        const char *name;
        const char *help;
        std::vector<Task> tasks;
        std::vector<std::string> schemes; // empty keeps the preset's
    };
    const std::vector<Mode> modes{
        {"sensing", "PCRB minimization without users", {Task::sensing}, {}},
        {"isac", "max-min rate under the PCRB threshold", {Task::isac}, {}},
        {"tdma", "time-division baseline under the PCRB threshold", {Task::isac}, {"tdma"}},
        {"compare", "SDMA against TDMA over gamma_grid", {Task::compare}, {}},
        {"beampattern", "sensing beampattern of the designs", {Task::beampattern}, {}},
        {"run", "the tasks the preset or config names", {}, {}},
    };
    std::vector<CLI::App *> subs;
    Index points = 0;
    for (const Mode &m : modes) {
        CLI::App *sub = app.add_subcommand(m.name, m.help);
        common(sub);
        if (std::string(m.name) == "beampattern")
            sub->add_option("--points", points, "angles on [0, pi)")->check(CLI::Range(2, 1000000));
        subs.push_back(sub);
    }
    CLI::App *list = app.add_subcommand("preset-list", "list presets");

    CLI11_PARSE(app, argc, argv);

    try {
        if (list->parsed()) {
            for (const std::string &n : preset_names())
                std::cout << n << "\t" << preset_description(n) << "\n";
            return 0;
        }
        for (std::size_t i = 0; i < modes.size(); ++i) {
            if (!subs[i]->parsed())
                continue;
            ExperimentSpec spec = build_spec(o);
            if (!modes[i].tasks.empty())
                spec.tasks = modes[i].tasks;
            if (!modes[i].schemes.empty())
                spec.schemes = modes[i].schemes;
            if (points > 0)
                spec.beampattern_points = points;
            return execute(std::move(spec));
        }
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
