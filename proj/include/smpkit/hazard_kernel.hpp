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
#include <limits>
#include <optional>
#include <string>

#include "smpkit/error.hpp"
#include "smpkit/quadrature.hpp"
#include "smpkit/random.hpp"
#include "smpkit/state_model.hpp"

namespace smpkit {

namespace detail {

inline void check_hazard_args(double s, double u, double t)
{
    if (!(s >= 0.0) || !(u >= 0.0)) {
        throw DomainError("hazard query needs s >= 0 and u >= 0");
    }
    if (!(t >= s)) {
        throw DomainError("hazard query needs t >= s");
    }
}

} // namespace detail

/// Integral of q_ij(v, u + v - s) over v in [s, t].
inline double pair_cumulative_hazard(IntensityModel const& model, StateIndex i, StateIndex j, double s,
                                     double u, double t, QuadratureConfig const& cfg = {})
{
    detail::check_hazard_args(s, u, t);
    auto const* f = model.field(i, j);
    if (f == nullptr || t == s) {
        return 0.0;
    }
    return integrate_along_characteristic(*f, u - s, s, t, cfg);
}

/*!
 * Cumulative hazard of leaving state i between s and t when the duration at
 * s is u: the integral of q_i(v, u + v - s) over [s, t].
 */
inline double cumulative_hazard(IntensityModel const& model, StateIndex i, double s, double u, double t,
                                QuadratureConfig const& cfg = {})
{
    detail::check_hazard_args(s, u, t);
    auto const& targets = model.targets(i);
    if (targets.empty() || t == s) {
        return 0.0;
    }
    QuadratureConfig per_field = cfg;
    per_field.abs_tol = cfg.abs_tol / static_cast<double>(targets.size());
    double total = 0.0;
    for (auto const& target : targets) {
        total += integrate_along_characteristic(target.field, u - s, s, t, per_field);
    }
    return total;
}

/// Probability of no jump out of i during (s, t].
inline double survival(IntensityModel const& model, StateIndex i, double s, double u, double t,
                       QuadratureConfig const& cfg = {})
{
    return std::exp(-cumulative_hazard(model, i, s, u, t, cfg));
}

/// Density of the next jump being i -> j at time t.
inline double jump_density(IntensityModel const& model, StateIndex i, StateIndex j, double s, double u,
                           double t, QuadratureConfig const& cfg = {})
{
    if (i == j) {
        throw DomainError("jump_density needs distinct states");
    }
    detail::check_hazard_args(s, u, t);
    return model.rate(i, j, t, u + t - s) * survival(model, i, s, u, t, cfg);
}

/*!
 * Smallest t in (s, horizon] with cumulative_hazard(i, s, u, t) >= target,
 * or nullopt if the hazard accumulated by the horizon stays below target.
 *
 * The bracket starts at [s, s + target / q_i(s, u)] and doubles in width
 * until it contains the root; bisection then shrinks it to time_tol. The
 * hazard is accumulated segment by segment so each step integrates only the
 * new piece.
 */
inline std::optional<double> invert_cumulative_hazard(IntensityModel const& model, StateIndex i, double s,
                                                      double u, double target, double horizon,
                                                      QuadratureConfig const& cfg = {},
                                                      double time_tol = 1e-12)
{
    detail::check_hazard_args(s, u, horizon);
    if (!(target > 0.0)) {
        throw DomainError("hazard inversion target must be positive");
    }
    if (model.is_absorbing(i) || horizon == s) {
        return std::nullopt;
    }
    double const span = horizon - s;
    double const q0 = model.total_rate(i, s, u);
    double width = (q0 > 0.0 && std::isfinite(q0)) ? target / q0 : span / 64.0;
    width = std::clamp(width, span * 0x1.0p-40, span);

    double lo = s;
    double h_lo = 0.0;
    double hi = s;
    for (;;) {
        hi = std::min(lo + width, horizon);
        double const h_hi = h_lo + cumulative_hazard(model, i, lo, u + (lo - s), hi, cfg);
        if (h_hi >= target) {
            break;
        }
        if (hi >= horizon) {
            return std::nullopt;
        }
        lo = hi;
        h_lo = h_hi;
        width *= 2.0;
    }
    for (;;) {
        double const tol = std::max(time_tol, 4.0 * std::numeric_limits<double>::epsilon() * std::abs(hi));
        if (hi - lo <= tol) {
            break;
        }
        double const mid = lo + 0.5 * (hi - lo);
        if (!(mid > lo && mid < hi)) {
            break;
        }
        double const h_mid = h_lo + cumulative_hazard(model, i, lo, u + (lo - s), mid, cfg);
        if (h_mid >= target) {
            hi = mid;
        } else {
            lo = mid;
            h_lo = h_mid;
        }
    }
    return hi;
}

/*!
 * Destination of a jump out of i at time t with pre-jump duration v, drawn
 * with probabilities q_ij(t, v) / q_i(t, v) using one uniform variate.
 */
inline StateIndex draw_destination(IntensityModel const& model, StateIndex i, double t, double v,
                                   double uniform)
{
    auto const& targets = model.targets(i);
    double total = 0.0;
    for (auto const& target : targets) {
        total += evaluate(target.field, t, v);
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw GuardError("zero or non-finite total intensity out of state " + model.states().label(i)
                         + " at solved jump time t=" + std::to_string(t));
    }
    double const threshold = uniform * total;
    double acc = 0.0;
    StateIndex last = targets.front().to;
    for (auto const& target : targets) {
        double const w = evaluate(target.field, t, v);
        if (w <= 0.0) {
            continue;
        }
        acc += w;
        last = target.to;
        if (threshold < acc) {
            return target.to;
        }
    }
    return last;
}

struct JumpOutcome {
    bool censored = true;
    double time = 0.0;
    StateIndex destination = 0;
};

/// Exact draw of the next jump by inverting the cumulative hazard.
inline JumpOutcome sample_next_jump(IntensityModel const& model, StateIndex i, double s, double u,
                                    double horizon, RandomStream& rng, QuadratureConfig const& cfg = {})
{
    double const e = rng.standard_exponential();
    auto const root = invert_cumulative_hazard(model, i, s, u, e, horizon, cfg);
    if (!root) {
        return {true, horizon, i};
    }
    StateIndex const j = draw_destination(model, i, *root, u + (*root - s), rng.uniform());
    return {false, *root, j};
}

} // namespace smpkit
