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
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "smpkit/error.hpp"
#include "smpkit/format.hpp"
#include "smpkit/hazard_kernel.hpp"
#include "smpkit/parallel.hpp"
#include "smpkit/state_model.hpp"

namespace smpkit {

/*!
 * Transition measure p_{i0 j}(s, t, u, dv) on a duration grid.
 *
 * cells[m] is the probability mass with duration in [m*step, (m+1)*step).
 * The atom is the mass of paths that never left i0; it sits exactly at
 * duration u + (t - s) and exists only for j = i0.
 */
struct DurationMeasure {
    std::vector<double> cells;
    double atom = 0.0;
    bool has_atom = false;

    double total() const
    {
        double sum = atom;
        for (double c : cells) {
            sum += c;
        }
        return sum;
    }
};

/// Row i0 of the transition measures at one solver time.
struct TransitionRow {
    StateIndex start_state = 0;
    double start_time = 0.0;
    double start_duration = 0.0;
    double time = 0.0;
    double step = 0.0;
    std::size_t steps = 0;
    std::vector<DurationMeasure> measures;

    double elapsed() const noexcept { return static_cast<double>(steps) * step; }
    double atom_duration() const noexcept { return start_duration + elapsed(); }

    double marginal(StateIndex j) const { return measures.at(j).total(); }

    double total_mass() const
    {
        double sum = 0.0;
        for (auto const& m : measures) {
            sum += m.total();
        }
        return sum;
    }
};

struct SolverOptions {
    double step = 1e-3;
    /// Keep every k-th time step; the final row is always kept.
    std::size_t output_stride = 1;
    QuadratureConfig quadrature{};
    /// Largest admissible step * sup q_i on the solve region.
    double max_step_rate = 0.5;
    double max_defect = 1e-4;
    std::size_t sup_resolution = 64;
    bool check_step_size = true;
};

struct SolveResult {
    std::vector<TransitionRow> rows;
    /// Accumulated |change of total mass| over all steps.
    double conservation_defect = 0.0;
    double sup_rate = 0.0;

    TransitionRow const& final_row() const { return rows.back(); }

    TransitionRow const& at_step(std::size_t n) const
    {
        auto it = std::lower_bound(rows.begin(), rows.end(), n,
                                   [](TransitionRow const& r, std::size_t k) { return r.steps < k; });
        if (it == rows.end() || it->steps != n) {
            throw GridError("solver step " + std::to_string(n) + " was not stored");
        }
        return *it;
    }

    /// Row at time t, which must lie on the stored grid.
    TransitionRow const& at(double t) const
    {
        auto const& first = rows.front();
        double const k = (t - first.start_time) / first.step;
        double const n = std::round(k);
        if (n < 0.0 || std::abs(k - n) > 1e-6) {
            throw GridError("time " + std::to_string(t) + " is not on the solver grid");
        }
        return at_step(static_cast<std::size_t>(n));
    }
};

namespace detail {

inline std::size_t aligned_steps(double span, double step)
{
    if (!(step > 0.0)) {
        throw StepSizeError("solver step must be positive");
    }
    if (!(span >= 0.0)) {
        throw DomainError("solve interval must have nonnegative length");
    }
    double const k = span / step;
    double const n = std::round(k);
    if (std::abs(k - n) > 1e-9 * std::max(1.0, k)) {
        throw StepSizeError("interval length " + std::to_string(span) + " is not a multiple of step "
                            + std::to_string(step));
    }
    return static_cast<std::size_t>(n);
}

inline void check_step_rate(IntensityModel const& model, double s, double u, double t_end,
                            SolverOptions const& opt, double& sup_rate)
{
    sup_rate = sup_norm(model, {s, t_end}, {0.0, u + (t_end - s)}, opt.sup_resolution);
    if (opt.step * sup_rate > opt.max_step_rate) {
        throw StepSizeError("step " + std::to_string(opt.step) + " too coarse for sup intensity "
                            + std::to_string(sup_rate));
    }
}

inline TransitionRow initial_row(std::size_t n_states, StateIndex i0, double s, double u, double step)
{
    TransitionRow row;
    row.start_state = i0;
    row.start_time = s;
    row.start_duration = u;
    row.time = s;
    row.step = step;
    row.measures.resize(n_states);
    row.measures[i0].atom = 1.0;
    row.measures[i0].has_atom = true;
    return row;
}

// Advances row by one step of size row.step. Returns |change in total mass|.
inline double advance(IntensityModel const& model, TransitionRow& row, QuadratureConfig const& cfg,
                      std::vector<double>& influx, std::vector<double>& rates)
{
    std::size_t const n_states = model.size();
    double const dt = row.step;
    double const t0 = row.time;
    double const t1 = row.start_time + static_cast<double>(row.steps + 1) * dt;
    double const t_mid = t0 + 0.5 * dt;
    double const before = row.total_mass();
    std::fill(influx.begin(), influx.end(), 0.0);

    for (StateIndex k = 0; k < n_states; ++k) {
        auto& cells = row.measures[k].cells;
        auto const& targets = model.targets(k);
        // Shift by one cell: durations age by exactly one step.
        cells.insert(cells.begin(), 0.0);
        if (targets.empty()) {
            continue;
        }
        rates.resize(targets.size());
        for (std::size_t m = 1; m < cells.size(); ++m) {
            double const w = cells[m];
            if (w == 0.0) {
                continue;
            }
            // Cell centre sits at duration (m - 1/2) dt at t0, m dt at t_mid.
            double const v = static_cast<double>(m) * dt;
            double q = 0.0;
            for (std::size_t a = 0; a < targets.size(); ++a) {
                rates[a] = evaluate(targets[a].field, t_mid, v);
                q += rates[a];
            }
            if (q <= 0.0) {
                continue;
            }
            double const leave = -w * std::expm1(-q * dt);
            cells[m] = w - leave;
            for (std::size_t a = 0; a < targets.size(); ++a) {
                influx[targets[a].to] += leave * rates[a] / q;
            }
        }
    }

    auto& own = row.measures[row.start_state];
    if (own.has_atom && own.atom > 0.0) {
        auto const& targets = model.targets(row.start_state);
        double const v0 = row.atom_duration();
        rates.resize(targets.size());
        double h = 0.0;
        for (std::size_t a = 0; a < targets.size(); ++a) {
            rates[a] = integrate_along_characteristic(targets[a].field, v0 - t0, t0, t1, cfg);
            h += rates[a];
        }
        if (h > 0.0) {
            double const leave = -own.atom * std::expm1(-h);
            own.atom -= leave;
            for (std::size_t a = 0; a < targets.size(); ++a) {
                influx[targets[a].to] += leave * rates[a] / h;
            }
        }
    }

    for (StateIndex j = 0; j < n_states; ++j) {
        row.measures[j].cells[0] = influx[j];
    }
    row.steps += 1;
    row.time = t1;
    return std::abs(row.total_mass() - before);
}

} // namespace detail

/*!
 * Evolves p_{i0 j}(s, t, u, .) from t = s to t_end on a grid where the time
 * step equals the duration cell width.
 *
 * Each step transports every cell one index up (exact ageing along the
 * characteristic), removes the mass that jumps during the step using the
 * intensity at the cell's midpoint, and deposits it in cell 0 of the target
 * states in proportion to q_kj / q_k. The atom decays by the exact hazard
 * along its characteristic and feeds the same influx. The outflow split is
 * exactly conservative, so the reported defect is rounding only.
 */
inline SolveResult solve_row(IntensityModel const& model, StateIndex i0, double s, double u, double t_end,
                             SolverOptions const& opt = {})
{
    if (i0 >= model.size()) {
        throw DomainError("start state out of range");
    }
    if (!(s >= 0.0) || !(u >= 0.0)) {
        throw DomainError("solve_row needs s >= 0 and u >= 0");
    }
    std::size_t const n_steps = detail::aligned_steps(t_end - s, opt.step);
    SolveResult result;
    if (opt.check_step_size) {
        detail::check_step_rate(model, s, u, t_end, opt, result.sup_rate);
    }
    std::size_t const stride = std::max<std::size_t>(opt.output_stride, 1);
    TransitionRow row = detail::initial_row(model.size(), i0, s, u, opt.step);
    for (auto& m : row.measures) {
        m.cells.reserve(n_steps);
    }
    result.rows.push_back(row);
    std::vector<double> influx(model.size());
    std::vector<double> rates;
    for (std::size_t n = 0; n < n_steps; ++n) {
        result.conservation_defect += detail::advance(model, row, opt.quadrature, influx, rates);
        if (row.steps == n_steps) {
            row.time = t_end;
        }
        if (row.steps % stride == 0 || row.steps == n_steps) {
            result.rows.push_back(row);
        }
    }
    if (result.conservation_defect > opt.max_defect) {
        throw ConservationError("conservation defect " + std::to_string(result.conservation_defect)
                                + " exceeds limit");
    }
    return result;
}

/// Largest |mass| found outside the admissible support, or on a negative cell.
inline double support_violation(TransitionRow const& row)
{
    double worst = 0.0;
    for (StateIndex j = 0; j < row.measures.size(); ++j) {
        auto const& m = row.measures[j];
        for (std::size_t c = 0; c < m.cells.size(); ++c) {
            if (m.cells[c] < 0.0) {
                worst = std::max(worst, -m.cells[c]);
            }
            if (c >= row.steps) {
                worst = std::max(worst, std::abs(m.cells[c]));
            }
        }
        if (j != row.start_state && m.atom != 0.0) {
            worst = std::max(worst, std::abs(m.atom));
        }
    }
    return worst;
}

/*!
 * p_{i0 j}(s, t, u, [0, d]): whole cells below d, the linear share of the
 * straddling cell, and the atom when it lies at or below d.
 */
inline double transition_prob(TransitionRow const& row, StateIndex j, double d)
{
    if (!(d >= 0.0)) {
        throw DomainError("duration bound must be nonnegative");
    }
    auto const& m = row.measures.at(j);
    double const x = d / row.step;
    std::size_t const whole = static_cast<std::size_t>(std::min(std::floor(x), static_cast<double>(m.cells.size())));
    double sum = 0.0;
    for (std::size_t c = 0; c < whole; ++c) {
        sum += m.cells[c];
    }
    if (whole < m.cells.size()) {
        sum += m.cells[whole] * (x - static_cast<double>(whole));
    }
    if (m.has_atom && row.atom_duration() <= d) {
        sum += m.atom;
    }
    return sum;
}

/// Sum over cells and atom of state k of q_kj(t, v) * mass, v at cell midpoints.
inline double weighted_rate_integral(IntensityModel const& model, TransitionRow const& row, StateIndex k,
                                     StateIndex j, double t)
{
    auto const* f = model.field(k, j);
    if (f == nullptr) {
        return 0.0;
    }
    auto const& m = row.measures[k];
    double sum = 0.0;
    for (std::size_t c = 0; c < m.cells.size(); ++c) {
        if (m.cells[c] != 0.0) {
            sum += evaluate(*f, t, (static_cast<double>(c) + 0.5) * row.step) * m.cells[c];
        }
    }
    if (m.has_atom && m.atom != 0.0) {
        sum += evaluate(*f, t, row.atom_duration()) * m.atom;
    }
    return sum;
}

/*!
 * Left derivative in d of p_{i0 j}(s, t, u, [0, d]).
 *
 * Mass with duration just below d at time t entered j right after t - d and
 * stayed, so the density is the influx rate into j at t - d (integrated
 * against the row stored at t - d) times the survival in j from duration 0
 * over [t - d, t]. Zero above t - s except at the diagonal atom, where the
 * CDF jumps and no derivative exists.
 */
inline double duration_left_derivative(IntensityModel const& model, SolveResult const& solved, StateIndex j,
                                       double t, double d, QuadratureConfig const& cfg = {})
{
    if (!(d > 0.0)) {
        throw DomainError("duration derivative needs d > 0");
    }
    auto const& base = solved.rows.front();
    StateIndex const i0 = base.start_state;
    double const s = base.start_time;
    double const elapsed = t - s;
    double const eps = 1e-9 * std::max(1.0, elapsed);
    if (j >= model.size()) {
        throw DomainError("state out of range");
    }
    if (j == i0 && std::abs(d - (base.start_duration + elapsed)) <= eps) {
        throw DomainError("duration derivative undefined at the atom");
    }
    if (d > elapsed + eps) {
        return 0.0;
    }
    double const t_back = t - d;
    auto const& back = solved.at(t_back);
    double influx = 0.0;
    for (StateIndex k = 0; k < model.size(); ++k) {
        if (k != j) {
            influx += weighted_rate_integral(model, back, k, j, std::max(back.time, 0.0));
        }
    }
    if (influx == 0.0) {
        return 0.0;
    }
    return influx * survival(model, j, back.time, 0.0, t, cfg);
}

/// Second-leg rows of a composition, keyed by (state, first-leg cell);
/// the atom uses cell index SIZE_MAX. Valid for one (r, t_end, step).
class ComposeCache {
public:
    ComposeCache(double r, double t_end, double step) : r_(r), t_end_(t_end), step_(step) {}

    bool matches(double r, double t_end, double step) const
    {
        return r == r_ && t_end == t_end_ && step == step_;
    }

    std::shared_ptr<TransitionRow const> find(StateIndex k, std::size_t cell) const
    {
        std::lock_guard lock(mutex_);
        auto it = rows_.find({k, cell});
        return it == rows_.end() ? nullptr : it->second;
    }

    void insert(StateIndex k, std::size_t cell, std::shared_ptr<TransitionRow const> row)
    {
        std::lock_guard lock(mutex_);
        rows_.emplace(std::make_pair(k, cell), std::move(row));
    }

    std::size_t size() const
    {
        std::lock_guard lock(mutex_);
        return rows_.size();
    }

private:
    double r_;
    double t_end_;
    double step_;
    mutable std::mutex mutex_;
    std::map<std::pair<StateIndex, std::size_t>, std::shared_ptr<TransitionRow const>> rows_;
};

/*!
 * Chapman-Kolmogorov composition: mixes second-leg rows started from every
 * mass element of `first` (a row at time r) over [r, t_end].
 *
 * Cell masses restart the second leg at the cell midpoint duration, the
 * atom at its exact duration. The second-leg atom of a cell started in
 * state k lands in cell m + (t_end - r)/step of state k.
 */
inline TransitionRow compose(IntensityModel const& model, TransitionRow const& first, double t_end,
                             SolverOptions const& opt, ComposeCache* cache = nullptr)
{
    double const r = first.time;
    double const step = first.step;
    std::size_t const n2 = detail::aligned_steps(t_end - r, step);
    if (cache && !cache->matches(r, t_end, step)) {
        throw DomainError("compose cache belongs to a different grid");
    }
    SolverOptions leg_opt = opt;
    leg_opt.step = step;
    leg_opt.output_stride = n2 == 0 ? 1 : n2;
    if (opt.check_step_size) {
        double sup = 0.0;
        detail::check_step_rate(model, first.start_time, first.start_duration, t_end, leg_opt, sup);
    }
    leg_opt.check_step_size = false;

    struct Element {
        StateIndex state;
        std::size_t cell; // SIZE_MAX for the atom
        double weight;
        double duration;
    };
    std::vector<Element> elements;
    for (StateIndex k = 0; k < first.measures.size(); ++k) {
        auto const& m = first.measures[k];
        for (std::size_t c = 0; c < m.cells.size(); ++c) {
            if (m.cells[c] != 0.0) {
                elements.push_back({k, c, m.cells[c], (static_cast<double>(c) + 0.5) * step});
            }
        }
        if (m.has_atom && m.atom != 0.0) {
            elements.push_back({k, SIZE_MAX, m.atom, first.atom_duration()});
        }
    }

    std::vector<std::shared_ptr<TransitionRow const>> legs(elements.size());
    parallel_for(elements.size(), [&](std::size_t e) {
        auto const& el = elements[e];
        if (cache) {
            if (auto hit = cache->find(el.state, el.cell)) {
                legs[e] = hit;
                return;
            }
        }
        auto solved = solve_row(model, el.state, r, el.duration, t_end, leg_opt);
        legs[e] = std::make_shared<TransitionRow const>(std::move(solved.rows.back()));
        if (cache) {
            cache->insert(el.state, el.cell, legs[e]);
        }
    });

    TransitionRow out = detail::initial_row(model.size(), first.start_state, first.start_time,
                                            first.start_duration, step);
    out.measures[first.start_state].atom = 0.0;
    out.steps = first.steps + n2;
    out.time = t_end;
    for (auto& m : out.measures) {
        m.cells.assign(out.steps, 0.0);
    }
    for (std::size_t e = 0; e < elements.size(); ++e) {
        auto const& el = elements[e];
        auto const& leg = *legs[e];
        for (StateIndex j = 0; j < leg.measures.size(); ++j) {
            auto const& cells = leg.measures[j].cells;
            for (std::size_t c = 0; c < cells.size(); ++c) {
                out.measures[j].cells[c] += el.weight * cells[c];
            }
        }
        double const stay = leg.measures[el.state].atom;
        if (el.cell == SIZE_MAX) {
            out.measures[el.state].atom += el.weight * stay;
        } else {
            out.measures[el.state].cells[el.cell + n2] += el.weight * stay;
        }
    }
    return out;
}

/// CSV with header t,j,v_cell_mid_or_atom,mass; cells ascending per state,
/// then the atom row of the start state.
inline void write_row_csv(std::ostream& os, TransitionRow const& row, StateSpace const& states,
                          bool header = true)
{
    if (header) {
        os << "t,j,v_cell_mid_or_atom,mass\n";
    }
    std::string const t = format_number(row.time);
    for (StateIndex j = 0; j < row.measures.size(); ++j) {
        auto const& m = row.measures[j];
        for (std::size_t c = 0; c < m.cells.size(); ++c) {
            os << t << ',' << states.label(j) << ','
               << format_number((static_cast<double>(c) + 0.5) * row.step) << ','
               << format_number(m.cells[c]) << '\n';
        }
        if (m.has_atom) {
            os << t << ',' << states.label(j) << ',' << format_number(row.atom_duration()) << ','
               << format_number(m.atom) << '\n';
        }
    }
}

} // namespace smpkit
