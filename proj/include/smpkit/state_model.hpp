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
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "smpkit/error.hpp"
#include "smpkit/quadrature.hpp"

namespace smpkit {

using StateIndex = std::size_t;

//---------------------------------------------------------------------------//
// State space
//---------------------------------------------------------------------------//

/// Finite, ordered set of named states.
class StateSpace {
public:
    explicit StateSpace(std::vector<std::string> labels) : labels_(std::move(labels))
    {
        if (labels_.size() < 2) {
            throw DomainError("state space needs at least two states");
        }
        for (std::size_t a = 0; a < labels_.size(); ++a) {
            for (std::size_t b = a + 1; b < labels_.size(); ++b) {
                if (labels_[a] == labels_[b]) {
                    throw DomainError("duplicate state label '" + labels_[a] + "'");
                }
            }
        }
    }

    /// States named "0", "1", ..., "n-1".
    static StateSpace numbered(std::size_t n)
    {
        std::vector<std::string> labels;
        for (std::size_t k = 0; k < n; ++k) {
            labels.push_back(std::to_string(k));
        }
        return StateSpace(std::move(labels));
    }

    std::size_t size() const noexcept { return labels_.size(); }
    std::string const& label(StateIndex i) const { return labels_.at(i); }
    std::vector<std::string> const& labels() const noexcept { return labels_; }

    std::optional<StateIndex> find(std::string_view name) const
    {
        auto it = std::find(labels_.begin(), labels_.end(), name);
        if (it == labels_.end()) {
            return std::nullopt;
        }
        return static_cast<StateIndex>(it - labels_.begin());
    }

    StateIndex index_of(std::string_view name) const
    {
        if (auto idx = find(name)) {
            return *idx;
        }
        throw DomainError("unknown state '" + std::string(name) + "'");
    }

private:
    std::vector<std::string> labels_;
};

//---------------------------------------------------------------------------//
// One-dimensional factors
//---------------------------------------------------------------------------//

struct ConstantFactor {
    double value = 0.0;
};

/// scale * exp(growth * x)
struct ExponentialFactor {
    double scale = 0.0;
    double growth = 0.0;
};

/// scale * x^exponent, exponent >= 0
struct PowerLawFactor {
    double scale = 0.0;
    double exponent = 0.0;
};

/*!
 * Right-continuous step function: values[0] below breakpoints[0], values[k]
 * on [breakpoints[k-1], breakpoints[k]), values.back() from the last
 * breakpoint on.
 */
struct PiecewiseConstantFactor {
    std::vector<double> breakpoints;
    std::vector<double> values;
};

using Factor = std::variant<ConstantFactor, ExponentialFactor, PowerLawFactor, PiecewiseConstantFactor>;

inline double evaluate(Factor const& factor, double x)
{
    return std::visit(
        [x](auto const& f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, ConstantFactor>) {
                return f.value;
            } else if constexpr (std::is_same_v<T, ExponentialFactor>) {
                return f.scale * std::exp(f.growth * x);
            } else if constexpr (std::is_same_v<T, PowerLawFactor>) {
                return f.exponent == 0.0 ? f.scale : f.scale * std::pow(x, f.exponent);
            } else {
                auto it = std::upper_bound(f.breakpoints.begin(), f.breakpoints.end(), x);
                return f.values[static_cast<std::size_t>(it - f.breakpoints.begin())];
            }
        },
        factor);
}

inline void check_factor(Factor const& factor)
{
    if (auto const* pw = std::get_if<PowerLawFactor>(&factor)) {
        if (!(pw->exponent >= 0.0)) {
            throw DomainError("power-law exponent must be nonnegative");
        }
    }
    if (auto const* pc = std::get_if<PiecewiseConstantFactor>(&factor)) {
        if (pc->values.size() != pc->breakpoints.size() + 1) {
            throw DomainError("piecewise-constant factor needs one more value than breakpoints");
        }
        if (!std::is_sorted(pc->breakpoints.begin(), pc->breakpoints.end())
            || std::adjacent_find(pc->breakpoints.begin(), pc->breakpoints.end())
                   != pc->breakpoints.end()) {
            throw DomainError("piecewise-constant breakpoints must be strictly increasing");
        }
    }
}

//---------------------------------------------------------------------------//
// Intensity fields q(t, u)
//---------------------------------------------------------------------------//

struct ConstantField {
    double rate = 0.0;
};

/// time(t) * duration(u)
struct ProductField {
    Factor time = ConstantFactor{1.0};
    Factor duration = ConstantFactor{1.0};
};

/*!
 * Step interpolation on a (t, u) grid. values is row-major with
 * t_grid.size() rows and u_grid.size() columns; node (a, b) holds the value
 * on [t_a, t_{a+1}) x [u_b, u_{b+1}). Queries outside
 * [t_grid.front(), t_grid.back()] x [u_grid.front(), u_grid.back()] throw
 * unless clamp is set.
 */
struct TableField {
    std::vector<double> t_grid;
    std::vector<double> u_grid;
    std::vector<double> values;
    bool clamp = false;
};

/// Black-box field; integrated numerically, suprema only approximated.
struct CustomField {
    std::function<double(double, double)> fn;
};

using IntensityField = std::variant<ConstantField, ProductField, TableField, CustomField>;

namespace detail {

inline std::size_t step_index(std::vector<double> const& grid, double x)
{
    auto it = std::upper_bound(grid.begin(), grid.end(), x);
    if (it == grid.begin()) {
        return 0;
    }
    return std::min<std::size_t>(static_cast<std::size_t>(it - grid.begin()) - 1, grid.size() - 1);
}

inline double table_lookup(TableField const& f, double t, double u)
{
    bool const outside = t < f.t_grid.front() || t > f.t_grid.back()
                      || u < f.u_grid.front() || u > f.u_grid.back();
    if (outside && !f.clamp) {
        throw EvaluationError("table field queried outside its grid at (t=" + std::to_string(t)
                              + ", u=" + std::to_string(u) + ")");
    }
    std::size_t const a = step_index(f.t_grid, t);
    std::size_t const b = step_index(f.u_grid, u);
    return f.values[a * f.u_grid.size() + b];
}

} // namespace detail

inline double evaluate(IntensityField const& field, double t, double u)
{
    return std::visit(
        [t, u](auto const& f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, ConstantField>) {
                return f.rate;
            } else if constexpr (std::is_same_v<T, ProductField>) {
                return evaluate(f.time, t) * evaluate(f.duration, u);
            } else if constexpr (std::is_same_v<T, TableField>) {
                return detail::table_lookup(f, t, u);
            } else {
                return f.fn(t, u);
            }
        },
        field);
}

inline void check_field(IntensityField const& field)
{
    if (auto const* p = std::get_if<ProductField>(&field)) {
        check_factor(p->time);
        check_factor(p->duration);
    } else if (auto const* tab = std::get_if<TableField>(&field)) {
        auto strictly_increasing = [](std::vector<double> const& g) {
            return !g.empty() && std::is_sorted(g.begin(), g.end())
                && std::adjacent_find(g.begin(), g.end()) == g.end();
        };
        if (!strictly_increasing(tab->t_grid) || !strictly_increasing(tab->u_grid)) {
            throw DomainError("table grids must be nonempty and strictly increasing");
        }
        if (tab->values.size() != tab->t_grid.size() * tab->u_grid.size()) {
            throw DomainError("table values must have t_grid.size() * u_grid.size() entries");
        }
    } else if (auto const* c = std::get_if<CustomField>(&field)) {
        if (!c->fn) {
            throw DomainError("custom field without a function");
        }
    }
}

/// True when suprema over a grid containing all breakpoints are exact.
inline bool has_exact_grid_sup(IntensityField const& field)
{
    return !std::holds_alternative<CustomField>(field);
}

inline void append_time_breakpoints(IntensityField const& field, std::vector<double>& out)
{
    if (auto const* p = std::get_if<ProductField>(&field)) {
        if (auto const* pc = std::get_if<PiecewiseConstantFactor>(&p->time)) {
            out.insert(out.end(), pc->breakpoints.begin(), pc->breakpoints.end());
        }
    } else if (auto const* tab = std::get_if<TableField>(&field)) {
        out.insert(out.end(), tab->t_grid.begin(), tab->t_grid.end());
    }
}

inline void append_duration_breakpoints(IntensityField const& field, std::vector<double>& out)
{
    if (auto const* p = std::get_if<ProductField>(&field)) {
        if (auto const* pc = std::get_if<PiecewiseConstantFactor>(&p->duration)) {
            out.insert(out.end(), pc->breakpoints.begin(), pc->breakpoints.end());
        }
    } else if (auto const* tab = std::get_if<TableField>(&field)) {
        out.insert(out.end(), tab->u_grid.begin(), tab->u_grid.end());
    }
}

namespace detail {

// A factor restricted to a breakpoint-free segment, written in the
// integration variable v with x = v + shift.
struct SegmentPiece {
    enum class Kind { constant, exponential, power } kind = Kind::constant;
    double coef = 0.0;
    double param = 0.0; // growth rate or exponent
    double shift = 0.0;
};

inline SegmentPiece restrict_factor(Factor const& factor, double shift, double v_mid)
{
    return std::visit(
        [&](auto const& f) -> SegmentPiece {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, ConstantFactor>) {
                return {SegmentPiece::Kind::constant, f.value, 0.0, shift};
            } else if constexpr (std::is_same_v<T, ExponentialFactor>) {
                if (f.growth == 0.0) {
                    return {SegmentPiece::Kind::constant, f.scale, 0.0, shift};
                }
                return {SegmentPiece::Kind::exponential, f.scale, f.growth, shift};
            } else if constexpr (std::is_same_v<T, PowerLawFactor>) {
                if (f.exponent == 0.0) {
                    return {SegmentPiece::Kind::constant, f.scale, 0.0, shift};
                }
                return {SegmentPiece::Kind::power, f.scale, f.exponent, shift};
            } else {
                return {SegmentPiece::Kind::constant, evaluate(Factor{f}, v_mid + shift), 0.0, shift};
            }
        },
        factor);
}

// integral of e^{rate v} over [a, b]
inline double exp_integral(double rate, double a, double b)
{
    if (rate == 0.0) {
        return b - a;
    }
    return std::exp(rate * a) * std::expm1(rate * (b - a)) / rate;
}

inline std::optional<double> closed_form(SegmentPiece const& p, SegmentPiece const& q, double a, double b)
{
    using K = SegmentPiece::Kind;
    if (p.kind == K::constant && q.kind == K::constant) {
        return p.coef * q.coef * (b - a);
    }
    if (p.kind == K::exponential && q.kind == K::exponential) {
        double const rate = p.param + q.param;
        double const c = p.coef * q.coef * std::exp(p.param * p.shift + q.param * q.shift);
        return c * exp_integral(rate, a, b);
    }
    SegmentPiece const* k = nullptr;
    SegmentPiece const* other = nullptr;
    if (p.kind == K::constant) {
        k = &p;
        other = &q;
    } else if (q.kind == K::constant) {
        k = &q;
        other = &p;
    } else {
        return std::nullopt;
    }
    if (k->coef == 0.0) {
        return 0.0;
    }
    if (other->kind == K::exponential) {
        return k->coef * other->coef * std::exp(other->param * other->shift)
             * exp_integral(other->param, a, b);
    }
    double const e = other->param + 1.0;
    double const hi = std::max(b + other->shift, 0.0);
    double const lo = std::max(a + other->shift, 0.0);
    return k->coef * other->coef * (std::pow(hi, e) - std::pow(lo, e)) / e;
}

inline double integrate_segment(IntensityField const& field, double offset, double a, double b,
                                QuadratureConfig const& cfg)
{
    double const mid = 0.5 * (a + b);
    if (auto const* c = std::get_if<ConstantField>(&field)) {
        return c->rate * (b - a);
    }
    if (auto const* tab = std::get_if<TableField>(&field)) {
        return detail::table_lookup(*tab, mid, mid + offset) * (b - a);
    }
    if (auto const* prod = std::get_if<ProductField>(&field)) {
        auto const tp = restrict_factor(prod->time, 0.0, mid);
        auto const dp = restrict_factor(prod->duration, offset, mid);
        if (auto exact = closed_form(tp, dp, a, b)) {
            return *exact;
        }
    }
    auto integrand = [&](double v) { return evaluate(field, v, std::max(v + offset, 0.0)); };
    return integrate_adaptive(integrand, a, b, cfg);
}

} // namespace detail

/*!
 * Integral of field(v, v + offset) for v in [a, b].
 *
 * The path (v, v + offset) is a characteristic: duration ages at unit rate.
 * The interval is split at every breakpoint the path crosses; each piece is
 * integrated in closed form where the factor pair allows it and by adaptive
 * Simpson otherwise.
 */
inline double integrate_along_characteristic(IntensityField const& field, double offset, double a,
                                             double b, QuadratureConfig const& cfg = {})
{
    if (!(b > a)) {
        return 0.0;
    }
    std::vector<double> cuts;
    append_time_breakpoints(field, cuts);
    std::vector<double> dcuts;
    append_duration_breakpoints(field, dcuts);
    for (double d : dcuts) {
        cuts.push_back(d - offset);
    }
    if (cuts.empty()) {
        return detail::integrate_segment(field, offset, a, b, cfg);
    }
    std::erase_if(cuts, [a, b](double x) { return !(x > a && x < b); });
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    double lo = a;
    for (double x : cuts) {
        if (x > lo) {
            total += detail::integrate_segment(field, offset, lo, x, cfg);
            lo = x;
        }
    }
    total += detail::integrate_segment(field, offset, lo, b, cfg);
    return total;
}

//---------------------------------------------------------------------------//
// Intensity model
//---------------------------------------------------------------------------//

struct IntensityEntry {
    StateIndex from = 0;
    StateIndex to = 0;
    IntensityField field;
};

/*!
 * Matrix field Q(t, u) over a finite state space.
 *
 * Only off-diagonal entries are stored; absent entries are identically zero
 * and the diagonal is always -sum of the row. Immutable once built, so
 * concurrent evaluation is safe.
 */
class IntensityModel {
public:
    struct Target {
        StateIndex to;
        IntensityField field;
    };

    IntensityModel(StateSpace states, std::vector<IntensityEntry> entries)
        : states_(std::move(states)),
          rows_(states_.size()),
          lookup_(states_.size() * states_.size(), -1)
    {
        std::size_t const n = states_.size();
        for (auto& e : entries) {
            if (e.from >= n || e.to >= n) {
                throw DomainError("intensity entry references an unknown state");
            }
            if (e.from == e.to) {
                throw DomainError("diagonal intensities are derived and cannot be supplied");
            }
            if (lookup_[e.from * n + e.to] >= 0) {
                throw DomainError("duplicate intensity entry " + states_.label(e.from) + " -> "
                                  + states_.label(e.to));
            }
            check_field(e.field);
            lookup_[e.from * n + e.to] = static_cast<int>(rows_[e.from].size());
            rows_[e.from].push_back({e.to, std::move(e.field)});
        }
    }

    StateSpace const& states() const noexcept { return states_; }
    std::size_t size() const noexcept { return states_.size(); }

    /// Nonzero targets of row i, in insertion order.
    std::vector<Target> const& targets(StateIndex i) const { return rows_.at(i); }

    IntensityField const* field(StateIndex i, StateIndex j) const
    {
        check_state(i);
        check_state(j);
        int const k = lookup_[i * size() + j];
        return k < 0 ? nullptr : &rows_[i][static_cast<std::size_t>(k)].field;
    }

    /// q_ij(t, u) off the diagonal, -q_i(t, u) on it.
    double rate(StateIndex i, StateIndex j, double t, double u) const
    {
        check_point(t, u);
        check_state(j);
        if (i == j) {
            return -total_rate(i, t, u);
        }
        auto const* f = field(i, j);
        return f ? evaluate(*f, t, u) : 0.0;
    }

    double total_rate(StateIndex i, double t, double u) const
    {
        check_point(t, u);
        check_state(i);
        double sum = 0.0;
        for (auto const& target : rows_[i]) {
            sum += evaluate(target.field, t, u);
        }
        return sum;
    }

    bool is_absorbing(StateIndex i) const { return rows_.at(i).empty(); }

private:
    void check_state(StateIndex i) const
    {
        if (i >= size()) {
            throw DomainError("state index " + std::to_string(i) + " out of range");
        }
    }

    static void check_point(double t, double u)
    {
        if (!(t >= 0.0) || !(u >= 0.0)) {
            throw DomainError("intensity evaluated at negative time or duration");
        }
    }

    StateSpace states_;
    std::vector<std::vector<Target>> rows_;
    std::vector<int> lookup_;
};

/// Matrix sup norm at one point: max_i q_i(t, u).
inline double matrix_norm(IntensityModel const& model, double t, double u)
{
    double best = 0.0;
    for (StateIndex i = 0; i < model.size(); ++i) {
        best = std::max(best, model.total_rate(i, t, u));
    }
    return best;
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

namespace detail {

inline std::vector<double> sampling_axis(Interval range, std::size_t resolution,
                                         std::vector<double> extra)
{
    std::vector<double> axis;
    axis.reserve(resolution + extra.size());
    for (std::size_t k = 0; k < resolution; ++k) {
        double const frac = static_cast<double>(k) / static_cast<double>(resolution - 1);
        axis.push_back(k + 1 == resolution ? range.hi : range.lo + frac * (range.hi - range.lo));
    }
    for (double x : extra) {
        if (x >= range.lo && x <= range.hi) {
            axis.push_back(x);
        }
    }
    std::sort(axis.begin(), axis.end());
    axis.erase(std::unique(axis.begin(), axis.end()), axis.end());
    return axis;
}

inline std::vector<double> model_breakpoints(IntensityModel const& model, bool time_axis)
{
    std::vector<double> cuts;
    for (StateIndex i = 0; i < model.size(); ++i) {
        for (auto const& target : model.targets(i)) {
            if (time_axis) {
                append_time_breakpoints(target.field, cuts);
            } else {
                append_duration_breakpoints(target.field, cuts);
            }
        }
    }
    return cuts;
}

} // namespace detail

/*!
 * Grid maximum of max_i q_i(t, u) over tRange x uRange.
 *
 * The grid has `resolution` evenly spaced points per axis plus every field
 * breakpoint inside the box, so the value is exact for the built-in families
 * (monotone factors peak at the box corners, step fields at breakpoints) and
 * a lower bound for custom fields.
 */
inline double sup_norm(IntensityModel const& model, Interval t_range, Interval u_range,
                       std::size_t resolution = 64)
{
    if (resolution < 2) {
        throw DomainError("sup_norm needs at least two grid points per axis");
    }
    if (t_range.hi < t_range.lo || u_range.hi < u_range.lo || t_range.lo < 0.0 || u_range.lo < 0.0) {
        throw DomainError("sup_norm ranges must be nonempty and nonnegative");
    }
    auto const ts = detail::sampling_axis(t_range, resolution, detail::model_breakpoints(model, true));
    auto const us = detail::sampling_axis(u_range, resolution, detail::model_breakpoints(model, false));
    double best = 0.0;
    for (double t : ts) {
        for (double u : us) {
            best = std::max(best, matrix_norm(model, t, u));
        }
    }
    return best;
}

struct ValidationIssue {
    enum class Kind { negative, not_a_number, infinite, evaluation_error };
    Kind kind;
    StateIndex from;
    StateIndex to;
    double t;
    double u;
    double value;
    std::string message;
};

struct ValidationReport {
    bool passed = true;
    double grid_sup = 0.0;
    bool sup_exact = true;
    std::size_t points_checked = 0;
    std::vector<ValidationIssue> issues;
};

inline char const* to_string(ValidationIssue::Kind kind)
{
    switch (kind) {
    case ValidationIssue::Kind::negative: return "negative";
    case ValidationIssue::Kind::not_a_number: return "nan";
    case ValidationIssue::Kind::infinite: return "infinite";
    case ValidationIssue::Kind::evaluation_error: return "evaluation_error";
    }
    return "unknown";
}

/// Checks nonnegativity and finiteness of every field on a grid over
/// [0, horizon] x [0, maxDuration]. At most max_issues offenders are kept.
inline ValidationReport validate(IntensityModel const& model, double horizon, double max_duration,
                                 std::size_t resolution = 64, std::size_t max_issues = 64)
{
    if (!(horizon > 0.0) || !(max_duration >= 0.0)) {
        throw DomainError("validation needs a positive horizon and nonnegative duration range");
    }
    resolution = std::max<std::size_t>(resolution, 2);
    ValidationReport report;
    auto const ts = detail::sampling_axis({0.0, horizon}, resolution, detail::model_breakpoints(model, true));
    auto const us = detail::sampling_axis({0.0, max_duration}, resolution,
                                          detail::model_breakpoints(model, false));
    auto flag = [&](ValidationIssue issue) {
        report.passed = false;
        if (report.issues.size() < max_issues) {
            report.issues.push_back(std::move(issue));
        }
    };
    for (StateIndex i = 0; i < model.size(); ++i) {
        for (auto const& target : model.targets(i)) {
            report.sup_exact = report.sup_exact && has_exact_grid_sup(target.field);
        }
    }
    for (double t : ts) {
        for (double u : us) {
            for (StateIndex i = 0; i < model.size(); ++i) {
                double row = 0.0;
                for (auto const& target : model.targets(i)) {
                    ++report.points_checked;
                    double value = 0.0;
                    try {
                        value = evaluate(target.field, t, u);
                    } catch (EvaluationError const& e) {
                        flag({ValidationIssue::Kind::evaluation_error, i, target.to, t, u,
                              std::numeric_limits<double>::quiet_NaN(), e.what()});
                        continue;
                    }
                    if (std::isnan(value)) {
                        flag({ValidationIssue::Kind::not_a_number, i, target.to, t, u, value, {}});
                    } else if (std::isinf(value)) {
                        flag({ValidationIssue::Kind::infinite, i, target.to, t, u, value, {}});
                    } else if (value < 0.0) {
                        flag({ValidationIssue::Kind::negative, i, target.to, t, u, value, {}});
                    } else {
                        row += value;
                    }
                }
                report.grid_sup = std::max(report.grid_sup, row);
            }
        }
    }
    return report;
}

} // namespace smpkit
