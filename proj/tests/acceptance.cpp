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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit status
// if any criterion fails.
//
//   acceptance <smpkit-cli> <config-dir> <scratch-dir>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "adversarial.hpp"
#include "oracles.hpp"
#include "smpkit/smpkit.hpp"
#include "test_models.hpp"

using namespace smpkit;
using namespace smpkit::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

std::string fmt(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

// Every solve made here is recorded for the conservation/support criterion.
struct SolveLog {
    double worst_defect_rate = 0.0;
    double worst_mass_error = 0.0;
    double worst_support = 0.0;
    std::size_t runs = 0;
    std::size_t rows = 0;

    void record(SolveResult const& r)
    {
        auto const& last = r.final_row();
        double const span = std::max(last.time - last.start_time, 1e-300);
        worst_defect_rate = std::max(worst_defect_rate, r.conservation_defect / span);
        for (auto const& row : r.rows) {
            double const elapsed = std::max(row.time - row.start_time, 1.0);
            worst_mass_error = std::max(worst_mass_error, std::abs(1.0 - row.total_mass()) / elapsed);
            worst_support = std::max(worst_support, support_violation(row));
            ++rows;
        }
        ++runs;
    }

    void record(TransitionRow const& row)
    {
        double const elapsed = std::max(row.time - row.start_time, 1.0);
        worst_mass_error = std::max(worst_mass_error, std::abs(1.0 - row.total_mass()) / elapsed);
        worst_support = std::max(worst_support, support_violation(row));
        ++rows;
    }
};

SolveLog g_log;

SolveResult solve(IntensityModel const& m, StateIndex i0, double s, double u, double t_end, double step)
{
    SolverOptions o;
    o.step = step;
    auto r = solve_row(m, i0, s, u, t_end, o);
    g_log.record(r);
    return r;
}

//---------------------------------------------------------------------------//

Outcome ac1_markov_reduction()
{
    auto const m = markov3();
    auto const start = std::chrono::steady_clock::now();
    auto const oracle = markov_transition(m, 0.0, 2.0);
    double worst = 0.0;
    for (StateIndex i = 0; i < 3; ++i) {
        auto const r = solve(m, i, 0.0, 0.0, 2.0, 1e-3);
        for (StateIndex j = 0; j < 3; ++j) {
            worst = std::max(worst, std::abs(r.final_row().marginal(j)
                                             - oracle(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
        }
    }
    double const secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {worst <= 5e-3 && secs <= 10.0,
            "max |solver - expm| = " + fmt(worst) + " (<= 5e-3), runtime " + fmt(secs) + " s (<= 10 s)"};
}

Outcome ac2_solver_vs_monte_carlo()
{
    auto const m = duration2();
    auto const row = solve(m, 0, 0.0, 0.0, 2.0, 1e-3).final_row();
    std::vector<double> grid;
    for (int k = 1; k <= 10; ++k) {
        grid.push_back(0.2 * k);
    }
    PathBatch const batch{20260417, 0, 200000};
    double worst_excess = -1.0;
    double worst_gap = 0.0;
    std::size_t compared = 0;
    for (StateIndex j = 0; j < 2; ++j) {
        auto const est = estimate_duration_cdf(m, 0, 0.0, 0.0, 2.0, j, grid, batch);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            double const gap = std::abs(est.tally.estimate(k) - transition_prob(row, j, grid[k]));
            double const tol = 3.0 * est.tally.standard_error(k) + 5e-3;
            worst_excess = std::max(worst_excess, gap - tol);
            worst_gap = std::max(worst_gap, gap);
            ++compared;
        }
    }
    return {worst_excess <= 0.0, std::to_string(compared) + " (j, d) points, max |p_hat - p| = " + fmt(worst_gap)
                                     + ", worst gap - (3 SE + 5e-3) = " + fmt(worst_excess)};
}

Outcome ac3_two_jump()
{
    auto const m = unit_rate3();
    std::vector<double> const hs{0.2, 0.1, 0.05};
    std::vector<double> ratio;
    bool within = true;
    std::string detail;
    for (std::size_t k = 0; k < hs.size(); ++k) {
        double const h = hs[k];
        auto const tally = estimate_multijump(m, 0, 0.0, 0.0, h, {7000 + k, 0, 200000});
        double const closed = h * h / 2.0;
        double const bound = two_jump_bound(m, 0, 0.0, 0.0, h);
        within = within && std::abs(bound - closed) <= 1e-12
              && tally.estimate(0) <= closed + 3.0 * tally.standard_error(0);
        ratio.push_back(tally.estimate(0) / h);
        detail += "h=" + fmt(h) + ": p=" + fmt(tally.estimate(0)) + " bound=" + fmt(closed) + "; ";
    }
    bool const decreasing = ratio[1] < ratio[0] && ratio[2] < ratio[1];
    return {within && decreasing, detail + "p/h strictly decreasing: " + (decreasing ? "yes" : "no")};
}

Outcome ac4_derivative_limit()
{
    std::vector<double> hs;
    for (int k = 0; k <= 4; ++k) {
        hs.push_back(0.1 * std::ldexp(1.0, -k));
    }
    auto const reports = check_difference_quotient(duration2(), 0, 1.0, 0.5, hs);
    bool ok = true;
    std::string detail;
    for (auto const& r : reports) {
        double const order = r.computed["fitted_order"].get<double>();
        double const last = r.computed["error"].back().get<double>();
        ok = ok && order >= 0.9 && last <= 2e-2;
        detail += "to " + r.inputs["to"].get<std::string>() + ": order " + fmt(order)
                + ", final error " + fmt(last) + "; ";
    }
    return {ok, detail + "(order >= 0.9, error <= 2e-2)"};
}

Outcome ac5_dominating()
{
    std::vector<double> hs;
    for (int k = 1; k <= 20; ++k) {
        hs.push_back(k / 20.0);
    }
    bool ok = true;
    std::string detail;
    struct Case {
        char const* name;
        IntensityModel model;
        double t;
        double u;
    };
    for (auto const& c : {Case{"duration", duration2(), 1.0, 0.5}, Case{"three-state", weibull3(), 0.5, 0.2},
                          Case{"constant", unit_rate3(), 0.0, 0.0}}) {
        auto const r = check_dominating_bound(c.model, c.t, c.u, hs, 1e-3);
        double peak = 0.0;
        for (auto const& x : r.computed["max_row_sum"]) {
            peak = std::max(peak, x.get<double>());
        }
        ok = ok && r.passed;
        detail += std::string(c.name) + ": max row sum " + fmt(peak) + " <= C " + fmt(r.target["C"].get<double>())
                + "; ";
    }
    return {ok, detail + "20 h values in (0, 1]"};
}

Outcome ac6_chapman_kolmogorov()
{
    struct Case {
        char const* name;
        IntensityModel model;
        StateIndex i0;
        double u;
    };
    bool ok = true;
    std::string detail;
    double const step = 2e-3;
    for (auto const& c : {Case{"duration", duration2(), 0, 0.0}, Case{"three-state", weibull3(), 0, 0.3}}) {
        auto const direct = solve(c.model, c.i0, 0.0, c.u, 2.0, step);
        SolverOptions o;
        o.step = step;
        auto const composed = compose(c.model, direct.at(1.0), 2.0, o);
        g_log.record(composed);
        auto const& target = direct.final_row();
        double marg = 0.0;
        double cdf = 0.0;
        for (StateIndex j = 0; j < c.model.size(); ++j) {
            marg = std::max(marg, std::abs(composed.marginal(j) - target.marginal(j)));
            for (int k = 0; k <= 1200; ++k) {
                double const d = k * 2.4 / 1200.0;
                cdf = std::max(cdf, std::abs(transition_prob(composed, j, d) - transition_prob(target, j, d)));
            }
        }
        ok = ok && marg <= 1e-2 && cdf <= 2e-2;
        detail += std::string(c.name) + ": marginal diff " + fmt(marg) + ", CDF sup diff " + fmt(cdf) + "; ";
    }
    return {ok, detail + "(<= 1e-2, <= 2e-2, step 2e-3, r = 1)"};
}

Outcome ac7_duration_derivative()
{
    auto const m = duration2();
    double const step = 1e-3;
    auto const solved = solve(m, 0, 0.0, 0.0, 2.0, step);
    auto const& row = solved.final_row();
    double worst = 0.0;
    std::size_t checked = 0;
    for (double d : {0.3, 0.6, 0.9, 1.2, 1.5}) {
        for (StateIndex j = 0; j < 2; ++j) {
            double const fd = (transition_prob(row, j, d) - transition_prob(row, j, d - step)) / step;
            if (fd <= 0.05) {
                continue;
            }
            double const formula = duration_left_derivative(m, solved, j, 2.0, d);
            worst = std::max(worst, std::abs(formula - fd) / fd);
            ++checked;
        }
    }
    double const beyond = duration_left_derivative(m, solved, 1, 2.0, 2.5);
    return {worst <= 0.05 && beyond == 0.0 && checked >= 5,
            std::to_string(checked) + " points with density > 0.05, max relative error " + fmt(worst)
                + " (<= 5%); derivative beyond t - s = " + fmt(beyond)};
}

Outcome ac8_forward_residual()
{
    struct Case {
        char const* name;
        IntensityModel model;
    };
    bool ok = true;
    double worst = 0.0;
    std::size_t runs = 0;
    for (auto const& c : {Case{"markov", markov3()}, Case{"absorbing", absorbing_chain()}, Case{"duration", duration2()},
                          Case{"three-state", weibull3()}}) {
        for (StateIndex j = 0; j < c.model.size(); ++j) {
            auto const r = check_forward_residual(c.model, 0, 0.0, 0.0, 2.0, j, 0.4);
            ok = ok && r.passed;
            worst = std::max(worst, r.computed["ratio"].get<double>());
            ++runs;
        }
    }
    return {ok, std::to_string(runs) + " (model, j) pairs, worst fine/coarse residual ratio " + fmt(worst)
                    + " (<= 0.6, step 4e-3 -> 2e-3)"};
}

Outcome ac9_conservation_support()
{
    for (auto const& m : {markov3(), duration2(), weibull3(), semi3(), absorbing_chain(), zero_model()}) {
        for (StateIndex i = 0; i < m.size(); ++i) {
            solve(m, i, 0.0, 0.2, 2.0, 1e-3);
        }
    }
    bool const ok = g_log.worst_defect_rate <= 1e-6 && g_log.worst_mass_error <= 1e-6 && g_log.worst_support == 0.0;
    return {ok, std::to_string(g_log.runs) + " solves, " + std::to_string(g_log.rows) + " rows: defect/time "
                    + fmt(g_log.worst_defect_rate) + ", |1 - mass|/time " + fmt(g_log.worst_mass_error)
                    + ", mass outside support " + fmt(g_log.worst_support)};
}

Outcome ac10_embedded_chain()
{
    std::size_t const n_paths = 100000;
    std::size_t const n_events = 6;
    auto const markov = embedded_chain_test(markov3(), 0, 0.0, {31337, 0, n_paths}, n_events, 1e6);
    auto const semi = embedded_chain_test(semi3(), 0, 0.0, {31338, 0, n_paths}, n_events, 1e6);
    int const trials = 10;
    int rejected = 0;
    for (int k = 0; k < trials; ++k) {
        auto const paths = history_dependent_batch({}, 5000 + k, n_paths, n_events);
        rejected += embedded_chain_test(paths, StateSpace::numbered(3)).passed ? 0 : 1;
    }
    double const power = static_cast<double>(rejected) / trials;
    return {markov.passed && semi.passed && power >= 0.9,
            "markov min p " + fmt(markov.computed["min_p_value"].get<double>()) + " ("
                + std::to_string(markov.computed["tests"].get<std::size_t>()) + " tests), duration-dependent min p "
                + fmt(semi.computed["min_p_value"].get<double>()) + "; history-dependent rejected "
                + std::to_string(rejected) + "/" + std::to_string(trials) + " (power >= 0.9)"};
}

std::string read_file(fs::path const& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Outcome ac11_determinism(std::string const& cli, fs::path const& configs, fs::path const& scratch)
{
    std::size_t files = 0;
    std::vector<std::string> diffs;
    for (auto const* name : {"simulate_duration.json", "solve_three_state.json", "verify_constant.json",
                             "compare_two_state.json"}) {
        fs::path const out = scratch / fs::path(name).stem();
        fs::path const first = scratch / (fs::path(name).stem().string() + "_first");
        fs::remove_all(out);
        fs::remove_all(first);
        std::string const cmd = cli + " --config " + (configs / name).string() + " --out " + out.string() + " --quiet";
        // Different worker counts on the two runs.
        if (std::system(("SMPKIT_THREADS=1 " + cmd).c_str()) != 0) {
            return {false, std::string("first run of ") + name + " failed"};
        }
        fs::rename(out, first);
        if (std::system(("SMPKIT_THREADS=4 " + cmd).c_str()) != 0) {
            return {false, std::string("second run of ") + name + " failed"};
        }
        for (auto const& entry : fs::directory_iterator(first)) {
            auto const other = out / entry.path().filename();
            ++files;
            if (!fs::exists(other) || read_file(entry.path()) != read_file(other)) {
                diffs.push_back(entry.path().filename().string());
            }
        }
    }
    return {diffs.empty() && files > 0,
            std::to_string(files) + " output files compared across two runs, " + std::to_string(diffs.size())
                + " differ"};
}

} // namespace

int main(int argc, char** argv)
{
    if (argc < 4) {
        std::fprintf(stderr, "usage: acceptance <smpkit-cli> <config-dir> <scratch-dir>\n");
        return 2;
    }
    std::string const cli = argv[1];
    fs::path const configs = argv[2];
    fs::path const scratch = argv[3];
    fs::create_directories(scratch);

    struct Criterion {
        char const* id;
        char const* title;
        std::function<Outcome()> run;
    };
    std::vector<Criterion> const criteria{
        {"AC1", "Markov reduction", ac1_markov_reduction},
        {"AC2", "solver vs Monte Carlo", ac2_solver_vs_monte_carlo},
        {"AC3", "two-jump bound", ac3_two_jump},
        {"AC4", "derivative limit", ac4_derivative_limit},
        {"AC5", "dominating bound", ac5_dominating},
        {"AC6", "Chapman-Kolmogorov", ac6_chapman_kolmogorov},
        {"AC7", "duration derivative", ac7_duration_derivative},
        {"AC8", "forward residual", ac8_forward_residual},
        {"AC9", "conservation and support", ac9_conservation_support},
        {"AC10", "embedded chain", ac10_embedded_chain},
        {"AC11", "determinism", [&] { return ac11_determinism(cli, configs, scratch); }},
    };
    int failed = 0;
    for (auto const& c : criteria) {
        auto const start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.run();
        } catch (std::exception const& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        double const secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s %-5s %s: %s [%.1fs]\n", out.passed ? "PASS" : "FAIL", c.id, c.title, out.detail.c_str(), secs);
        std::fflush(stdout);
        failed += out.passed ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
