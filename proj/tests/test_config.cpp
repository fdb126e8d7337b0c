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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "smpkit/runner.hpp"

using namespace smpkit;
namespace fs = std::filesystem;

namespace {

std::string read_file(fs::path const& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Json base_config()
{
    return Json::parse(R"({
      "schema_version": 1,
      "model": {
        "states": ["up", "down"],
        "intensities": [
          {"from": "up", "to": "down", "field": {"type": "constant", "rate": 0.5}},
          {"from": "down", "to": "up",
           "field": {"type": "product",
                     "time": {"type": "piecewise_constant", "breakpoints": [1.0], "values": [1.0, 2.0]},
                     "duration": {"type": "exponential", "scale": 1.0, "growth": 0.1}}}
        ]
      },
      "experiment": "solve",
      "params": {"start_state": "up", "t_end": 1.0, "step": 0.01},
      "seed": 5
    })");
}

int run_cli(std::string const& args)
{
    std::string const cmd = std::string(SMPKIT_CLI_PATH) + " " + args + " --quiet 2>/dev/null";
    int const status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(std::string const& name)
{
    auto const dir = fs::temp_directory_path() / ("smpkit_test_" + name);
    fs::remove_all(dir);
    return dir;
}

} // namespace

TEST(Config, ParsesAndFillsDefaults)
{
    auto const cfg = config_from_json(base_config());
    EXPECT_EQ(cfg.kind(), ExperimentKind::solve);
    EXPECT_EQ(cfg.seed, 5u);
    EXPECT_EQ(cfg.output_dir, "out");
    auto const& p = std::get<SolveParams>(cfg.params);
    EXPECT_EQ(p.output_times, std::vector<double>{1.0});
    EXPECT_DOUBLE_EQ(p.s, 0.0);
    auto const model = validate_config(cfg);
    EXPECT_DOUBLE_EQ(model.rate(1, 0, 1.5, 0.0), 2.0);
}

TEST(Config, ResolvedEchoRoundTrips)
{
    for (auto const* kind : {"simulate", "solve", "verify", "compare"}) {
        auto j = base_config();
        j["experiment"] = kind;
        j["params"] = {{"start_state", "down"}};
        auto const cfg = config_from_json(j);
        auto const echo = to_json(cfg);
        auto const back = config_from_json(Json::parse(echo.dump()));
        EXPECT_EQ(to_json(back), echo) << kind;
    }
}

TEST(Config, TableFieldRoundTrips)
{
    auto j = base_config();
    j["model"]["intensities"][0]["field"] = Json::parse(
        R"({"type": "table", "t_grid": [0, 1], "u_grid": [0, 0.5, 1], "values": [[1, 2, 3], [4, 5, 6]], "clamp": true})");
    auto const cfg = config_from_json(j);
    auto const& field = std::get<TableField>(cfg.model.intensities[0].field);
    EXPECT_EQ(field.values, (std::vector<double>{1, 2, 3, 4, 5, 6}));
    EXPECT_EQ(to_json(config_from_json(to_json(cfg))), to_json(cfg));
}

TEST(Config, StructuralErrors)
{
    auto expect_error = [](Json j) { EXPECT_THROW(config_from_json(j), ConfigError) << j.dump(); };
    auto j = base_config();
    j["schema_version"] = 2;
    expect_error(j);
    j = base_config();
    j["experiment"] = "dance";
    expect_error(j);
    j = base_config();
    j["params"]["stpe"] = 0.1;
    expect_error(j);
    j = base_config();
    j["model"]["intensities"][0]["field"]["type"] = "wiggly";
    expect_error(j);
    j = base_config();
    j["params"]["step"] = "small";
    expect_error(j);
    j = base_config();
    j["seed"] = -4;
    expect_error(j);
    EXPECT_THROW(parse_config("{not json"), ConfigError);
}

TEST(Config, SemanticErrors)
{
    auto expect_invalid = [](Json j) { EXPECT_THROW(validate_config(config_from_json(j)), ConfigError) << j.dump(); };
    auto j = base_config();
    j["params"]["step"] = 0.3; // does not divide t_end
    expect_invalid(j);
    j = base_config();
    j["params"]["start_state"] = "sideways";
    expect_invalid(j);
    j = base_config();
    j["model"]["intensities"][0]["from"] = "nowhere";
    expect_invalid(j);
    j = base_config();
    j["model"]["intensities"][0]["to"] = "up";
    expect_invalid(j);
    j = base_config();
    j["model"]["intensities"][0]["field"]["rate"] = -0.5;
    expect_invalid(j);
    j = base_config();
    j["params"]["output_times"] = {0.505};
    expect_invalid(j);
    j = base_config();
    j["experiment"] = "verify";
    j["params"] = {{"start_state", "up"}, {"h", {0.1, 0.2}}};
    expect_invalid(j);
    j["params"] = {{"start_state", "up"}, {"checks", {"embedded_chain"}}};
    expect_invalid(j); // two states only
}

TEST(Cli, NegativeRateIsAConfigErrorWithoutOutputs)
{
    auto const out = scratch("invalid");
    int const code = run_cli(std::string("--config ") + SMPKIT_CONFIG_DIR + "/invalid_negative_rate.json --out " +
                             out.string());
    EXPECT_EQ(code, static_cast<int>(ExitCode::config_error));
    EXPECT_FALSE(fs::exists(out));
}

TEST(Cli, MissingConfigFileAndBadFlags)
{
    EXPECT_EQ(run_cli("--config /nonexistent.json"), static_cast<int>(ExitCode::config_error));
    EXPECT_EQ(run_cli("--bogus"), static_cast<int>(ExitCode::config_error));
}

TEST(Cli, VerifyOnZeroModelPasses)
{
    auto const out = scratch("verify_zero");
    EXPECT_EQ(run_cli(std::string("--config ") + SMPKIT_CONFIG_DIR + "/verify_zero.json --out " + out.string()), 0);
    auto const report = Json::parse(read_file(out / "report.json"));
    ASSERT_TRUE(report.is_array());
    EXPECT_FALSE(report.empty());
    for (auto const& r : report) {
        EXPECT_TRUE(r["pass"].get<bool>()) << r.dump();
    }
}

TEST(Cli, CompareTwoStateAgrees)
{
    auto const out = scratch("compare");
    EXPECT_EQ(run_cli(std::string("--config ") + SMPKIT_CONFIG_DIR + "/compare_two_state.json --out " + out.string()),
              0);
    std::istringstream csv(read_file(out / "compare.csv"));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "i,j,d_or_total,solver,estimate,stderr,n,tolerance,agree");
    int rows = 0;
    while (std::getline(csv, line)) {
        ++rows;
        EXPECT_EQ(line.substr(line.rfind(',') + 1), "true") << line;
    }
    EXPECT_EQ(rows, 12);
}

TEST(Cli, SeedOverrideChangesSimulationAndResolvedConfigEchoes)
{
    auto const a = scratch("seed_a");
    auto const b = scratch("seed_b");
    std::string const cfg = std::string("--config ") + SMPKIT_CONFIG_DIR + "/simulate_duration.json";
    ASSERT_EQ(run_cli(cfg + " --seed 1 --out " + a.string()), 0);
    ASSERT_EQ(run_cli(cfg + " --seed 2 --out " + b.string()), 0);
    EXPECT_NE(read_file(a / "trajectories.csv"), read_file(b / "trajectories.csv"));
    auto const echo = parse_config(read_file(a / "resolved_config.json"));
    EXPECT_EQ(echo.seed, 1u);
    EXPECT_EQ(echo.output_dir, a.string());
}

TEST(Cli, SolveWritesOneRowFilePerOutputTime)
{
    auto const out = scratch("solve");
    ASSERT_EQ(run_cli(std::string("--config ") + SMPKIT_CONFIG_DIR + "/solve_three_state.json --out " + out.string()),
              0);
    auto const summary = Json::parse(read_file(out / "summary.json"));
    ASSERT_EQ(summary["rows"].size(), 3u);
    for (auto const& row : summary["rows"]) {
        EXPECT_TRUE(fs::exists(out / row["file"].get<std::string>()));
        EXPECT_NEAR(row["total_mass"].get<double>(), 1.0, 1e-6);
        EXPECT_EQ(row["support_violation"].get<double>(), 0.0);
    }
}
