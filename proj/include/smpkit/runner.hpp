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

#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "smpkit/config.hpp"
#include "smpkit/format.hpp"
#include "smpkit/forward_solver.hpp"
#include "smpkit/monte_carlo.hpp"
#include "smpkit/simulator.hpp"
#include "smpkit/verification.hpp"

namespace smpkit {

/// Process exit codes of the command-line runner.
enum class ExitCode : int { ok = 0, check_failed = 1, config_error = 2, runtime_error = 3 };

struct RunOptions {
    bool quiet = false;
    std::ostream* log = &std::cerr;
};

struct RunResult {
    ExitCode status = ExitCode::ok;
    std::vector<std::filesystem::path> files;
};

namespace detail {

class OutputDir {
public:
    explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir))
    {
        std::filesystem::create_directories(dir_);
    }

    template <typename Write>
    void write(std::string const& name, Write&& body)
    {
        auto const path = dir_ / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot write '" + path.string() + "'");
        }
        body(out);
        out.flush();
        if (!out) {
            throw Error("write to '" + path.string() + "' failed");
        }
        files_.push_back(path);
    }

    void write_json(std::string const& name, Json const& j)
    {
        write(name, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    }

    std::vector<std::filesystem::path> const& files() const noexcept { return files_; }

private:
    std::filesystem::path dir_;
    std::vector<std::filesystem::path> files_;
};

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t purpose)
{
    return splitmix64(seed ^ splitmix64(purpose * 0x9E3779B97F4A7C15ULL + 0xD1B54A32D192ED03ULL));
}

inline ExitCode run_simulate(IntensityModel const& model, SimulateParams const& p, std::uint64_t seed,
                             OutputDir& out)
{
    StateIndex const y0 = model.states().index_of(p.start_state);
    SimulationLimits limits;
    limits.max_jumps = p.max_jumps;
    auto const paths = simulate_batch(model, y0, p.s, p.u, p.horizon, seed, p.n_paths, limits);
    out.write("trajectories.csv", [&](std::ostream& os) { write_trajectories_csv(os, paths, model.states()); });

    std::vector<std::uint64_t> final_counts(model.size(), 0);
    std::uint64_t jumps = 0;
    std::uint64_t most = 0;
    for (auto const& path : paths) {
        ++final_counts[state_at(path, path.horizon).state];
        jumps += path.events.size();
        most = std::max<std::uint64_t>(most, path.events.size());
    }
    Json finals = Json::object();
    for (StateIndex j = 0; j < model.size(); ++j) {
        finals[model.states().label(j)] = final_counts[j];
    }
    out.write_json("summary.json", {{"n_paths", p.n_paths},
                                    {"seed", seed},
                                    {"horizon", p.horizon},
                                    {"total_jumps", jumps},
                                    {"mean_jumps", static_cast<double>(jumps) / static_cast<double>(p.n_paths)},
                                    {"max_jumps_in_path", most},
                                    {"final_state_counts", finals}});
    return ExitCode::ok;
}

inline std::string row_file_name(std::size_t index, double t)
{
    std::ostringstream name;
    name << "row_" << std::setw(4) << std::setfill('0') << index << "_t" << format_number(t) << ".csv";
    return name.str();
}

inline ExitCode run_solve(IntensityModel const& model, SolveParams const& p, OutputDir& out)
{
    StateIndex const i0 = model.states().index_of(p.start_state);
    SolverOptions opt;
    opt.step = p.step;
    auto const solved = solve_row(model, i0, p.s, p.u, p.t_end, opt);
    Json rows = Json::array();
    for (std::size_t k = 0; k < p.output_times.size(); ++k) {
        auto const& row = solved.at(p.output_times[k]);
        std::string const name = row_file_name(k, row.time);
        out.write(name, [&](std::ostream& os) { write_row_csv(os, row, model.states()); });
        Json marginals = Json::object();
        for (StateIndex j = 0; j < model.size(); ++j) {
            marginals[model.states().label(j)] = row.marginal(j);
        }
        rows.push_back({{"t", row.time},
                        {"file", name},
                        {"marginals", marginals},
                        {"total_mass", row.total_mass()},
                        {"support_violation", support_violation(row)}});
    }
    out.write_json("summary.json", {{"start_state", p.start_state},
                                    {"s", p.s},
                                    {"u", p.u},
                                    {"t_end", p.t_end},
                                    {"step", p.step},
                                    {"conservation_defect", solved.conservation_defect},
                                    {"sup_rate", solved.sup_rate},
                                    {"rows", rows}});
    return ExitCode::ok;
}

inline bool wants(VerifyParams const& p, std::string const& name)
{
    return p.checks.empty() || std::find(p.checks.begin(), p.checks.end(), name) != p.checks.end();
}

inline std::vector<CheckReport> verify_checks(IntensityModel const& model, VerifyParams const& p, std::uint64_t seed)
{
    StateIndex const i = model.states().index_of(p.start_state);
    std::vector<CheckReport> reports;
    auto append = [&](std::vector<CheckReport> more) {
        reports.insert(reports.end(), more.begin(), more.end());
    };
    if (wants(p, "two_jump")) {
        append(check_two_jump(model, i, p.t, p.u, p.h, {stream_seed(seed, 1), 0, p.n_paths}));
    }
    if (wants(p, "quick_cycle")) {
        append(check_quick_cycle(model, i, p.t, p.u, p.h, {stream_seed(seed, 2), 0, p.n_paths}));
    }
    if (wants(p, "difference_quotient")) {
        QuotientSweepOptions opt;
        opt.steps_per_h = p.quotient_steps;
        append(check_difference_quotient(model, i, p.t, p.u, p.h, opt));
    }
    if (wants(p, "dominating_bound")) {
        reports.push_back(check_dominating_bound(model, p.t, p.u, p.h, p.step));
    }
    if (wants(p, "forward_residual")) {
        ResidualSweepOptions opt;
        opt.coarse_step = p.residual_step;
        for (StateIndex j = 0; j < model.size(); ++j) {
            reports.push_back(check_forward_residual(model, i, p.t, p.u, p.t + p.residual_span, j, p.residual_d, opt));
        }
    }
    bool const chain_applies = model.size() >= 3 && p.n_events >= 2;
    if (wants(p, "embedded_chain") && (chain_applies || !p.checks.empty())) {
        EmbeddedChainOptions opt;
        opt.significance = p.significance;
        reports.push_back(embedded_chain_test(model, i, p.t, {stream_seed(seed, 3), 0, p.n_paths}, p.n_events,
                                              p.t + p.chain_horizon, opt));
    }
    return reports;
}

inline ExitCode run_verify(IntensityModel const& model, VerifyParams const& p, std::uint64_t seed, OutputDir& out,
                           RunOptions const& ro)
{
    auto const reports = verify_checks(model, p, seed);
    out.write_json("report.json", to_json(reports));
    bool ok = true;
    for (auto const& r : reports) {
        ok = ok && r.passed;
        if (!ro.quiet && ro.log) {
            *ro.log << (r.passed ? "PASS " : "FAIL ") << r.name << '\n';
        }
    }
    return ok ? ExitCode::ok : ExitCode::check_failed;
}

inline ExitCode run_compare(IntensityModel const& model, CompareParams const& p, std::uint64_t seed, OutputDir& out,
                            RunOptions const& ro)
{
    StateIndex const i = model.states().index_of(p.start_state);
    SolverOptions opt;
    opt.step = p.step;
    auto const solved = solve_row(model, i, p.s, p.u, p.t_end, opt);
    auto const& row = solved.final_row();
    PathBatch const batch{stream_seed(seed, 4), 0, p.n_paths};

    std::vector<EstimateRecord> records;
    std::size_t disagreements = 0;
    std::ostringstream csv;
    csv << "i,j,d_or_total,solver,estimate,stderr,n,tolerance,agree\n";
    for (StateIndex j = 0; j < model.size(); ++j) {
        auto const est = estimate_duration_cdf(model, i, p.s, p.u, p.t_end, j, p.d_grid, batch);
        auto emit = [&](std::optional<double> d, double solver, std::size_t cell) {
            double const hat = est.tally.estimate(cell);
            double const se = est.tally.standard_error(cell);
            double const tol = p.se_multiplier * se + p.abs_tolerance;
            bool const agree = std::abs(hat - solver) <= tol;
            disagreements += agree ? 0 : 1;
            std::string const label = d ? format_number(*d) : std::string("total");
            csv << p.start_state << ',' << model.states().label(j) << ',' << label << ',' << format_number(solver)
                << ',' << format_number(hat) << ',' << format_number(se) << ',' << est.tally.sample_count() << ','
                << format_number(tol) << ',' << (agree ? "true" : "false") << '\n';
            records.push_back({p.start_state, model.states().label(j), p.s, p.t_end, p.u, d, hat, se,
                               est.tally.sample_count()});
        };
        for (std::size_t k = 0; k < p.d_grid.size(); ++k) {
            emit(p.d_grid[k], transition_prob(row, j, p.d_grid[k]), k);
        }
        emit(std::nullopt, row.marginal(j), est.total_cell());
    }
    out.write("compare.csv", [&](std::ostream& os) { os << csv.str(); });
    out.write("estimates.csv", [&](std::ostream& os) { write_estimates_csv(os, records); });
    if (!ro.quiet && ro.log) {
        *ro.log << "compare: " << disagreements << " disagreement(s)\n";
    }
    return disagreements == 0 ? ExitCode::ok : ExitCode::check_failed;
}

} // namespace detail

/*!
 * Runs one validated experiment and writes its outputs, plus
 * resolved_config.json, into cfg.output_dir. Errors propagate as exceptions.
 */
inline RunResult run(ExperimentConfig const& cfg, RunOptions const& ro = {})
{
    auto const model = validate_config(cfg);
    detail::OutputDir out(cfg.output_dir);
    out.write_json("resolved_config.json", to_json(cfg));
    RunResult result;
    result.status = std::visit(
        [&](auto const& p) -> ExitCode {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, SimulateParams>) {
                return detail::run_simulate(model, p, cfg.seed, out);
            } else if constexpr (std::is_same_v<T, SolveParams>) {
                return detail::run_solve(model, p, out);
            } else if constexpr (std::is_same_v<T, VerifyParams>) {
                return detail::run_verify(model, p, cfg.seed, out, ro);
            } else {
                return detail::run_compare(model, p, cfg.seed, out, ro);
            }
        },
        cfg.params);
    result.files = out.files();
    return result;
}

/// Loads, validates and runs; maps failures onto exit codes.
inline ExitCode run_file(std::string const& config_path, std::optional<std::uint64_t> seed,
                         std::optional<std::string> output_dir, RunOptions const& ro = {})
{
    ExperimentConfig cfg;
    try {
        cfg = load_config(config_path);
        if (seed) {
            cfg.seed = *seed;
        }
        if (output_dir) {
            cfg.output_dir = *output_dir;
        }
        validate_config(cfg);
    } catch (Error const& e) {
        if (ro.log) {
            *ro.log << "config error: " << e.what() << '\n';
        }
        return ExitCode::config_error;
    }
    try {
        auto const result = run(cfg, ro);
        if (!ro.quiet && ro.log) {
            for (auto const& f : result.files) {
                *ro.log << "wrote " << f.string() << '\n';
            }
        }
        return result.status;
    } catch (std::exception const& e) {
        if (ro.log) {
            *ro.log << "error: " << e.what() << '\n';
        }
        return ExitCode::runtime_error;
    }
}

} // namespace smpkit
