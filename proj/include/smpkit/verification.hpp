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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "smpkit/error.hpp"
#include "smpkit/forward_solver.hpp"
#include "smpkit/monte_carlo.hpp"
#include "smpkit/parallel.hpp"
#include "smpkit/quadrature.hpp"
#include "smpkit/random.hpp"
#include "smpkit/simulator.hpp"
#include "smpkit/state_model.hpp"
#include "smpkit/statistics.hpp"

namespace smpkit {

using Json = nlohmann::ordered_json;

/// Outcome of one executable check; passed iff the computed values satisfy
/// the target. margin is positive on pass where a scalar slack makes sense.
struct CheckReport {
    std::string name;
    Json inputs = Json::object();
    Json computed = Json::object();
    Json target = Json::object();
    bool passed = true;
    double margin = 0.0;
    std::string note;
};

inline Json to_json(CheckReport const& r)
{
    Json j;
    j["check"] = r.name;
    j["inputs"] = r.inputs;
    j["computed"] = r.computed;
    j["target"] = r.target;
    j["pass"] = r.passed;
    j["margin"] = std::isfinite(r.margin) ? Json(r.margin) : Json(nullptr);
    if (!r.note.empty()) {
        j["note"] = r.note;
    }
    return j;
}

inline Json to_json(std::vector<CheckReport> const& reports)
{
    Json arr = Json::array();
    for (auto const& r : reports) {
        arr.push_back(to_json(r));
    }
    return arr;
}

namespace detail {

template <typename F>
double integrate_with_cuts(F const& f, double a, double b, std::vector<double> cuts, QuadratureConfig const& cfg)
{
    std::erase_if(cuts, [a, b](double x) { return !(x > a && x < b); });
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    double lo = a;
    for (double x : cuts) {
        if (x > lo) {
            total += integrate_adaptive(f, lo, x, cfg);
            lo = x;
        }
    }
    return total + integrate_adaptive(f, lo, b, cfg);
}

inline std::vector<double> shifted(std::vector<double> v, double by)
{
    for (double& x : v) {
        x += by;
    }
    return v;
}

inline std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t k)
{
    return splitmix64(seed ^ splitmix64(k + 0x5851F42D4C957F2DULL));
}

} // namespace detail

//---------------------------------------------------------------------------//
// Several jumps in a short interval
//---------------------------------------------------------------------------//

/*!
 * Upper bound on P(N_{t+h} - N_t >= 2 | Z_t = i, U_t = u):
 * integral over t <= s <= v <= t+h of ||Q(s, u+s-t)|| ||Q(v, v-s)||.
 *
 * Nested adaptive quadrature, split at every field breakpoint the
 * integration paths cross. The bound does not depend on i.
 */
inline double two_jump_bound(IntensityModel const& model, StateIndex /*i*/, double t, double u, double h,
                             QuadratureConfig const& cfg = {})
{
    if (!(h > 0.0)) {
        throw DomainError("two_jump_bound needs h > 0");
    }
    auto const tcuts = detail::model_breakpoints(model, true);
    auto const dcuts = detail::model_breakpoints(model, false);
    double const end = t + h;
    auto inner = [&](double s) {
        auto cuts = tcuts;
        auto extra = detail::shifted(dcuts, s);
        cuts.insert(cuts.end(), extra.begin(), extra.end());
        return detail::integrate_with_cuts(
            [&](double v) { return matrix_norm(model, v, std::max(v - s, 0.0)); }, s, end, cuts, cfg);
    };
    auto outer_cuts = tcuts;
    auto extra = detail::shifted(dcuts, t - u);
    outer_cuts.insert(outer_cuts.end(), extra.begin(), extra.end());
    return detail::integrate_with_cuts(
        [&](double s) {
            double const a = matrix_norm(model, s, u + s - t);
            return a == 0.0 ? 0.0 : a * inner(s);
        },
        t, end, outer_cuts, cfg);
}

namespace detail {

inline CheckReport decay_report(std::string name, std::vector<double> const& hs, std::vector<double> const& p,
                                std::vector<double> const& se)
{
    CheckReport r;
    r.name = std::move(name);
    std::vector<double> ratio;
    std::vector<double> ratio_se;
    for (std::size_t k = 0; k < hs.size(); ++k) {
        ratio.push_back(p[k] / hs[k]);
        ratio_se.push_back(se[k] / hs[k]);
    }
    bool strictly = true;
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < hs.size(); ++k) {
        strictly = strictly && ratio[k] < ratio[k - 1];
        double const slack = 3.0 * std::hypot(ratio_se[k], ratio_se[k - 1]);
        double const m = ratio[k - 1] + slack - ratio[k];
        margin = std::min(margin, m);
        if (m < 0.0) {
            r.passed = false;
        }
    }
    r.inputs["h"] = hs;
    r.computed["ratio"] = ratio;
    r.computed["ratio_stderr"] = ratio_se;
    r.computed["strictly_decreasing"] = strictly;
    r.target["rule"] = "ratio nonincreasing within 3 standard errors";
    r.margin = margin;
    return r;
}

} // namespace detail

/*!
 * Monte Carlo probability of two or more jumps in (t, t+h] against the
 * bound, for each h, plus a report that p/h decays along the sequence.
 * h values must be positive and descending.
 */
inline std::vector<CheckReport> check_two_jump(IntensityModel const& model, StateIndex i, double t, double u,
                                               std::vector<double> const& hs, PathBatch const& batch,
                                               QuadratureConfig const& cfg = {})
{
    for (std::size_t k = 0; k < hs.size(); ++k) {
        if (!(hs[k] > 0.0) || (k > 0 && !(hs[k] < hs[k - 1]))) {
            throw DomainError("h list must be positive and strictly descending");
        }
    }
    std::vector<CheckReport> out;
    std::vector<double> p;
    std::vector<double> se;
    for (std::size_t k = 0; k < hs.size(); ++k) {
        PathBatch b{detail::sub_seed(batch.seed, k), batch.first, batch.count};
        auto const tally = estimate_multijump(model, i, u, t, hs[k], b, {}, cfg);
        double const bound = two_jump_bound(model, i, t, u, hs[k], cfg);
        CheckReport r;
        r.name = "two_jump_bound";
        r.inputs = {{"state", model.states().label(i)}, {"t", t}, {"u", u}, {"h", hs[k]}, {"n_paths", batch.count}};
        r.computed = {{"p_hat", tally.estimate(0)}, {"stderr", tally.standard_error(0)}};
        r.target = {{"bound", bound}, {"slack", 3.0 * tally.standard_error(0)}};
        r.margin = bound + 3.0 * tally.standard_error(0) - tally.estimate(0);
        r.passed = r.margin >= 0.0;
        out.push_back(r);
        p.push_back(tally.estimate(0));
        se.push_back(tally.standard_error(0));
    }
    out.push_back(detail::decay_report("two_jump_decay", hs, p, se));
    return out;
}

//---------------------------------------------------------------------------//
// Intensities as derivatives of transition probabilities
//---------------------------------------------------------------------------//

/// (p_ij(t, t+h, u) - delta_ij) / h for every j, from the forward solver.
inline std::vector<double> difference_quotient_row(IntensityModel const& model, StateIndex i, double t, double u,
                                                   double h, double step, QuadratureConfig const& cfg = {})
{
    if (!(h > 0.0)) {
        throw DomainError("difference quotient needs h > 0");
    }
    SolverOptions opt;
    opt.step = step;
    opt.output_stride = std::numeric_limits<std::size_t>::max();
    opt.quadrature = cfg;
    auto const solved = solve_row(model, i, t, u, t + h, opt);
    std::vector<double> q(model.size());
    for (StateIndex j = 0; j < model.size(); ++j) {
        q[j] = (solved.final_row().marginal(j) - (i == j ? 1.0 : 0.0)) / h;
    }
    return q;
}

inline double difference_quotient(IntensityModel const& model, StateIndex i, StateIndex j, double t, double u,
                                  double h, double step, QuadratureConfig const& cfg = {})
{
    return difference_quotient_row(model, i, t, u, h, step, cfg).at(j);
}

struct QuotientSweepOptions {
    std::size_t steps_per_h = 200;
    double min_order = 0.9;
    double final_tolerance = 2e-2;
};

/*!
 * For each j, quotients along the h sweep against q_ij(t, u); passes when
 * the fitted convergence order reaches min_order and the error at the
 * smallest h is within final_tolerance (or every error is at rounding level).
 */
inline std::vector<CheckReport> check_difference_quotient(IntensityModel const& model, StateIndex i, double t,
                                                          double u, std::vector<double> const& hs,
                                                          QuotientSweepOptions const& opt = {})
{
    std::vector<std::vector<double>> rows;
    for (double h : hs) {
        rows.push_back(difference_quotient_row(model, i, t, u, h, h / static_cast<double>(opt.steps_per_h)));
    }
    std::vector<CheckReport> out;
    for (StateIndex j = 0; j < model.size(); ++j) {
        double const q = model.rate(i, j, t, u);
        std::vector<double> quotient;
        std::vector<double> err;
        for (auto const& row : rows) {
            quotient.push_back(row[j]);
            err.push_back(std::abs(row[j] - q));
        }
        double const order = fitted_order(hs, err);
        bool const negligible = std::all_of(err.begin(), err.end(), [](double e) { return e <= 1e-12; });
        CheckReport r;
        r.name = "difference_quotient";
        r.inputs = {{"from", model.states().label(i)}, {"to", model.states().label(j)}, {"t", t}, {"u", u}, {"h", hs}};
        r.computed = {{"quotient", quotient}, {"error", err}, {"fitted_order", order}};
        r.target = {{"q", q}, {"min_order", opt.min_order}, {"final_tolerance", opt.final_tolerance}};
        r.margin = opt.final_tolerance - err.back();
        r.passed = negligible || (order >= opt.min_order && err.back() <= opt.final_tolerance);
        out.push_back(r);
    }
    return out;
}

struct DominatingBound {
    double along_start = 0.0; // sup over s in [t, t+1] of ||Q(s, u+s-t)||
    double after_jump = 0.0;  // sup over t <= s <= v <= t+1 of ||Q(v, v-s)||
    double value = 0.0;       // 2 * along_start * (1 + after_jump)
};

/// Grid evaluation of the dominating constant C(t, u) for quotient row sums.
inline DominatingBound dominating_bound(IntensityModel const& model, double t, double u,
                                        std::size_t resolution = 128)
{
    resolution = std::max<std::size_t>(resolution, 2);
    auto const tcuts = detail::model_breakpoints(model, true);
    auto const dcuts = detail::model_breakpoints(model, false);
    DominatingBound b;
    auto starts = detail::sampling_axis({t, t + 1.0}, resolution, tcuts);
    for (double x : detail::sampling_axis({t, t + 1.0}, 2, detail::shifted(dcuts, t - u))) {
        starts.push_back(x);
    }
    for (double s : starts) {
        b.along_start = std::max(b.along_start, matrix_norm(model, s, u + s - t));
    }
    auto const vs = detail::sampling_axis({t, t + 1.0}, resolution, tcuts);
    auto const ds = detail::sampling_axis({0.0, 1.0}, resolution, dcuts);
    for (double v : vs) {
        for (double d : ds) {
            if (d <= v - t) {
                b.after_jump = std::max(b.after_jump, matrix_norm(model, v, d));
            }
        }
        b.after_jump = std::max(b.after_jump, matrix_norm(model, v, v - t));
    }
    b.value = 2.0 * b.along_start * (1.0 + b.after_jump);
    return b;
}

/*!
 * Largest row sum over i of |(p_ij(t, t+h, u) - delta_ij) / h| for each h,
 * compared with C(t, u). Every h must be a multiple of step and at most 1.
 */
inline CheckReport check_dominating_bound(IntensityModel const& model, double t, double u,
                                          std::vector<double> const& hs, double step)
{
    auto const bound = dominating_bound(model, t, u);
    double const h_max = *std::max_element(hs.begin(), hs.end());
    if (h_max > 1.0 + 1e-12) {
        throw DomainError("dominating bound applies to h <= 1");
    }
    std::vector<double> worst(hs.size(), 0.0);
    for (StateIndex i = 0; i < model.size(); ++i) {
        SolverOptions opt;
        opt.step = step;
        auto const solved = solve_row(model, i, t, u, t + h_max, opt);
        for (std::size_t k = 0; k < hs.size(); ++k) {
            auto const& row = solved.at(t + hs[k]);
            double sum = 0.0;
            for (StateIndex j = 0; j < model.size(); ++j) {
                sum += std::abs(row.marginal(j) - (i == j ? 1.0 : 0.0)) / hs[k];
            }
            worst[k] = std::max(worst[k], sum);
        }
    }
    CheckReport r;
    r.name = "dominating_bound";
    r.inputs = {{"t", t}, {"u", u}, {"h", hs}, {"step", step}};
    r.computed = {{"max_row_sum", worst}};
    r.target = {{"C", bound.value}, {"sup_along_start", bound.along_start}, {"sup_after_jump", bound.after_jump}};
    double const peak = *std::max_element(worst.begin(), worst.end());
    r.margin = bound.value - peak;
    r.passed = peak <= bound.value;
    return r;
}

//---------------------------------------------------------------------------//
// Quick return to the start state
//---------------------------------------------------------------------------//

/// Tally of {Z_{t+h} = i, U_{t+h} < u + h} for paths from (i, t, u). The
/// duration event is read off the jump count, never by comparing durations.
inline EstimatorSummary quick_cycle_tally(IntensityModel const& model, StateIndex i, double t, double u, double h,
                                          PathBatch const& batch, QuadratureConfig const& cfg = {})
{
    if (!(h > 0.0)) {
        throw DomainError("quick cycle needs h > 0");
    }
    return tally_paths(1, batch, [&](RandomStream& rng, EstimatorSummary& acc) {
        auto const path = simulate_path(model, i, t, u, t + h, rng, {}, cfg);
        auto const q = state_at(path, t + h);
        if (q.state == i && q.jump_count > 0) {
            acc.hit(0);
        }
    });
}

/// p_ii(t, t+h, u, (u+h)-) / h estimated by simulation.
inline double quick_cycle_ratio(IntensityModel const& model, StateIndex i, double t, double u, double h,
                                PathBatch const& batch, QuadratureConfig const& cfg = {})
{
    return quick_cycle_tally(model, i, t, u, h, batch, cfg).estimate(0) / h;
}

/// Per-h bound check (a quick return needs two jumps) and decay along h.
inline std::vector<CheckReport> check_quick_cycle(IntensityModel const& model, StateIndex i, double t, double u,
                                                  std::vector<double> const& hs, PathBatch const& batch,
                                                  QuadratureConfig const& cfg = {})
{
    std::vector<CheckReport> out;
    std::vector<double> p;
    std::vector<double> se;
    for (std::size_t k = 0; k < hs.size(); ++k) {
        PathBatch b{detail::sub_seed(batch.seed, 1000 + k), batch.first, batch.count};
        auto const tally = quick_cycle_tally(model, i, t, u, hs[k], b, cfg);
        double const bound = two_jump_bound(model, i, t, u, hs[k], cfg);
        CheckReport r;
        r.name = "quick_cycle";
        r.inputs = {{"state", model.states().label(i)}, {"t", t}, {"u", u}, {"h", hs[k]}, {"n_paths", batch.count}};
        r.computed = {{"ratio", tally.estimate(0) / hs[k]}, {"stderr", tally.standard_error(0) / hs[k]}};
        r.target = {{"two_jump_bound_over_h", bound / hs[k]}};
        r.margin = (bound + 3.0 * tally.standard_error(0) - tally.estimate(0)) / hs[k];
        r.passed = r.margin >= 0.0;
        out.push_back(r);
        p.push_back(tally.estimate(0));
        se.push_back(tally.standard_error(0));
    }
    out.push_back(detail::decay_report("quick_cycle_decay", hs, p, se));
    return out;
}

//---------------------------------------------------------------------------//
// Forward equation residual
//---------------------------------------------------------------------------//

struct ResidualProfile {
    std::vector<double> times;
    std::vector<double> residuals;
    double max = 0.0;
};

/*!
 * Residual of the forward equation for t -> p_{i0 j}(s, t, u, [0, d]):
 * right difference in t minus (influx into j, minus outflow of the mass
 * below d, minus the left duration derivative at d). The solve must keep
 * every step (output_stride 1) and the grid times in tGrid.
 */
inline ResidualProfile forward_residual(IntensityModel const& model, SolveResult const& solved, StateIndex j,
                                        double d, std::vector<double> const& t_grid,
                                        QuadratureConfig const& cfg = {})
{
    if (!(d > 0.0)) {
        throw DomainError("forward residual needs d > 0");
    }
    ResidualProfile out;
    for (double t : t_grid) {
        auto const& row = solved.at(t);
        auto const& next = solved.at_step(row.steps + 1);
        double const lhs = (transition_prob(next, j, d) - transition_prob(row, j, d)) / row.step;
        double influx = 0.0;
        for (StateIndex k = 0; k < model.size(); ++k) {
            if (k != j) {
                influx += weighted_rate_integral(model, row, k, j, row.time);
            }
        }
        double outflow = 0.0;
        auto const& m = row.measures[j];
        double const x = d / row.step;
        for (std::size_t c = 0; c < m.cells.size(); ++c) {
            double const share = std::clamp(x - static_cast<double>(c), 0.0, 1.0);
            if (share > 0.0 && m.cells[c] != 0.0) {
                outflow += share * model.total_rate(j, row.time, (static_cast<double>(c) + 0.5) * row.step) * m.cells[c];
            }
        }
        if (m.has_atom && row.atom_duration() <= d) {
            outflow += model.total_rate(j, row.time, row.atom_duration()) * m.atom;
        }
        double const deriv = duration_left_derivative(model, solved, j, row.time, d, cfg);
        double const res = std::abs(lhs - (influx - outflow - deriv));
        out.times.push_back(row.time);
        out.residuals.push_back(res);
        out.max = std::max(out.max, res);
    }
    return out;
}

struct ResidualSweepOptions {
    double coarse_step = 4e-3;
    double max_ratio = 0.6;
    double negligible = 1e-10;
};

/*!
 * Max forward residual on a common time grid at the coarse step and at half
 * of it. Times where the diagonal atom crosses d within a coarse step are
 * left out, since the CDF jumps there.
 */
inline CheckReport check_forward_residual(IntensityModel const& model, StateIndex i0, double s, double u,
                                          double t_end, StateIndex j, double d,
                                          ResidualSweepOptions const& opt = {})
{
    double const coarse = opt.coarse_step;
    double const fine = 0.5 * coarse;
    std::size_t const n = detail::aligned_steps(t_end - s, coarse);
    std::vector<double> grid;
    for (std::size_t k = 1; k + 1 <= n; ++k) {
        double const t = s + static_cast<double>(k) * coarse;
        if (t + coarse > t_end + 1e-12) {
            break;
        }
        double const atom = u + (t - s);
        if (j == i0 && atom <= d + 1e-12 && atom + coarse >= d - 1e-12) {
            continue;
        }
        if (std::abs(d - (t - s)) < 1e-12) {
            continue;
        }
        grid.push_back(t);
    }
    SolverOptions oc;
    oc.step = coarse;
    SolverOptions of;
    of.step = fine;
    auto const sc = solve_row(model, i0, s, u, t_end, oc);
    auto const sf = solve_row(model, i0, s, u, t_end, of);
    auto const rc = forward_residual(model, sc, j, d, grid);
    auto const rf = forward_residual(model, sf, j, d, grid);
    CheckReport r;
    r.name = "forward_residual";
    r.inputs = {{"start", model.states().label(i0)}, {"s", s}, {"u", u}, {"t_end", t_end},
                {"j", model.states().label(j)}, {"d", d}, {"coarse_step", coarse}, {"fine_step", fine}};
    double const ratio = rc.max > 0.0 ? rf.max / rc.max : 0.0;
    r.computed = {{"max_residual_coarse", rc.max}, {"max_residual_fine", rf.max}, {"ratio", ratio},
                  {"grid_points", grid.size()}};
    r.target = {{"max_ratio", opt.max_ratio}};
    bool const negligible = rc.max <= opt.negligible && rf.max <= opt.negligible;
    r.passed = negligible || ratio <= opt.max_ratio;
    r.margin = negligible ? 0.0 : opt.max_ratio - ratio;
    return r;
}

//---------------------------------------------------------------------------//
// Embedded chain
//---------------------------------------------------------------------------//

struct EmbeddedChainOptions {
    double significance = 0.01;
    std::size_t bins = 4;
    std::size_t min_samples = 30;
};

/*!
 * Tests that (Y_n, S_n) is independent of Y_{n-2} given (Y_{n-1}, T_{n-1}).
 *
 * Records with n >= 2 are grouped by Y_{n-1} and by quantile bins of
 * T_{n-1}; inside a bin they are split by Y_{n-2}. Every pair of splits
 * gets a two-sample KS test on S_n and every bin a chi-square test on Y_n.
 * The check fails if any p-value is below significance / (number of tests).
 */
inline CheckReport embedded_chain_test(std::vector<Trajectory> const& paths, StateSpace const& states,
                                       EmbeddedChainOptions const& opt = {})
{
    struct Record {
        StateIndex before;
        StateIndex from;
        double entered;
        double sojourn;
        StateIndex to;
    };
    std::size_t const n_states = states.size();
    std::vector<std::vector<Record>> by_from(n_states);
    for (auto const& path : paths) {
        auto const& ev = path.events;
        for (std::size_t n = 1; n < ev.size(); ++n) {
            StateIndex const before = n >= 2 ? ev[n - 2].state : path.initial_state;
            by_from[ev[n - 1].state].push_back(
                {before, ev[n - 1].state, ev[n - 1].time, ev[n].time - ev[n - 1].time, ev[n].state});
        }
    }

    struct Pending {
        std::string kind;
        StateIndex from;
        std::size_t bin;
        double p;
        double statistic;
    };
    std::vector<Pending> tests;
    std::size_t skipped = 0;
    std::size_t records = 0;
    for (StateIndex k = 0; k < n_states; ++k) {
        auto& recs = by_from[k];
        records += recs.size();
        if (recs.empty()) {
            continue;
        }
        std::vector<double> times;
        for (auto const& r : recs) {
            times.push_back(r.entered);
        }
        std::sort(times.begin(), times.end());
        std::vector<double> edges;
        for (std::size_t b = 1; b < opt.bins; ++b) {
            edges.push_back(times[b * times.size() / opt.bins]);
        }
        std::vector<std::vector<std::vector<Record const*>>> cells(
            opt.bins, std::vector<std::vector<Record const*>>(n_states));
        for (auto const& r : recs) {
            auto const b = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), r.entered) - edges.begin());
            cells[b][r.before].push_back(&r);
        }
        for (std::size_t b = 0; b < opt.bins; ++b) {
            std::vector<StateIndex> groups;
            for (StateIndex g = 0; g < n_states; ++g) {
                if (cells[b][g].size() >= opt.min_samples) {
                    groups.push_back(g);
                }
            }
            if (groups.size() < 2) {
                ++skipped;
                continue;
            }
            for (std::size_t x = 0; x < groups.size(); ++x) {
                for (std::size_t y = x + 1; y < groups.size(); ++y) {
                    std::vector<double> a;
                    std::vector<double> c;
                    for (auto const* r : cells[b][groups[x]]) {
                        a.push_back(r->sojourn);
                    }
                    for (auto const* r : cells[b][groups[y]]) {
                        c.push_back(r->sojourn);
                    }
                    auto const ks = ks_two_sample(std::move(a), std::move(c));
                    tests.push_back({"ks_sojourn", k, b, ks.p_value, ks.statistic});
                }
            }
            std::vector<std::vector<double>> table;
            for (StateIndex g : groups) {
                std::vector<double> row(n_states, 0.0);
                for (auto const* r : cells[b][g]) {
                    row[r->to] += 1.0;
                }
                table.push_back(std::move(row));
            }
            auto const chi = chi_square_homogeneity(table);
            tests.push_back({"chi2_destination", k, b, chi.p_value, chi.statistic});
        }
    }

    double const threshold = tests.empty() ? opt.significance : opt.significance / static_cast<double>(tests.size());
    double min_p = 1.0;
    std::size_t rejected = 0;
    Json details = Json::array();
    for (auto const& t : tests) {
        min_p = std::min(min_p, t.p);
        rejected += t.p < threshold ? 1 : 0;
        details.push_back({{"test", t.kind}, {"from", states.label(t.from)}, {"bin", t.bin},
                           {"statistic", t.statistic}, {"p_value", t.p}});
    }
    CheckReport r;
    r.name = "embedded_chain";
    r.inputs = {{"paths", paths.size()}, {"records", records}, {"bins", opt.bins}, {"min_samples", opt.min_samples}};
    r.computed = {{"tests", tests.size()}, {"rejected", rejected}, {"bins_skipped", skipped}, {"min_p_value", min_p},
                  {"details", details}};
    r.target = {{"significance", opt.significance}, {"per_test_threshold", threshold}};
    r.passed = rejected == 0;
    r.margin = min_p - threshold;
    if (tests.empty()) {
        r.note = "no bin had two history groups with enough records";
    }
    return r;
}

/// Simulates the batch (stopping each path after n_events jumps or at the
/// horizon) and runs the embedded-chain test on it.
inline CheckReport embedded_chain_test(IntensityModel const& model, StateIndex y0, double s0, PathBatch const& batch,
                                       std::size_t n_events, double horizon, EmbeddedChainOptions const& opt = {})
{
    if (model.size() < 3) {
        throw DomainError("embedded-chain test needs at least three states");
    }
    std::vector<Trajectory> paths(batch.count);
    SimulationLimits limits;
    limits.stop_after = n_events;
    parallel_for(paths.size(), [&](std::size_t k) {
        auto rng = RandomStream::substream(batch.seed, batch.first + k);
        paths[k] = simulate_path(model, y0, s0, 0.0, horizon, rng, limits);
    });
    return embedded_chain_test(paths, model.states(), opt);
}

} // namespace smpkit
