/*
   Copyright 2026 The smpkit Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

// smpkit: run a simulate / solve / verify / compare experiment from a JSON
// config.
//
//   smpkit --config run.json [--seed N] [--out DIR] [--quiet]
//
// Exit status: 0 success, 1 a check or comparison failed, 2 bad config,
// 3 runtime error.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "smpkit/runner.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Semi-Markov process toolkit: simulation, forward solver and checks"};
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    bool quiet = false;
    app.add_option("--config", config, "Experiment config (JSON)")->required();
    app.add_option("--seed", seed, "Random seed, overrides the config");
    app.add_option("--out", out, "Output directory, overrides the config");
    app.add_flag("--quiet", quiet, "Only report errors");
    try {
        app.parse(argc, argv);
    } catch (CLI::ParseError const& e) {
        int const code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(smpkit::ExitCode::config_error);
    }

    smpkit::RunOptions ro;
    ro.quiet = quiet;
    ro.log = &std::cerr;
    return static_cast<int>(smpkit::run_file(config, seed, out, ro));
}
