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
#include <cstddef>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "smpkit/error.hpp"
#include "smpkit/format.hpp"
#include "smpkit/hazard_kernel.hpp"
#include "smpkit/parallel.hpp"
#include "smpkit/random.hpp"
#include "smpkit/state_model.hpp"

namespace smpkit {

struct Event {
    double time = 0.0;
    StateIndex state = 0;
};

/*!
 * One realized path on [start_time, horizon].
 *
 * The process sits in initial_state with duration initial_duration at
 * start_time; events hold the jump times T_n and the marks Y_n entered at
 * those times. censored is true when the path ran to the horizon and false
 * when it was stopped after a fixed number of events (then horizon is the
 * last event time).
 */
struct Trajectory {
    StateIndex initial_state = 0;
    double start_time = 0.0;
    double initial_duration = 0.0;
    std::vector<Event> events;
    double horizon = 0.0;
    bool censored = true;
};

struct PathQueryResult {
    StateIndex state = 0;
    double duration = 0.0;
    std::size_t jump_count = 0;
};

struct SimulationLimits {
    std::size_t max_jumps = 1000000;
    /// Stop without error after this many events (0 disables).
    std::size_t stop_after = 0;
};

/*!
 * Chains exact next-jump draws from (y0, s0, u0) up to the horizon.
 *
 * After each jump the duration restarts at zero. Reaching max_jumps before
 * the horizon throws ExplosionError.
 */
inline Trajectory simulate_path(IntensityModel const& model, StateIndex y0, double s0, double u0,
                                double horizon, RandomStream& rng, SimulationLimits limits = {},
                                QuadratureConfig const& cfg = {})
{
    if (y0 >= model.size()) {
        throw DomainError("initial state out of range");
    }
    if (!(s0 >= 0.0) || !(u0 >= 0.0) || !(horizon >= s0)) {
        throw DomainError("simulate_path needs 0 <= s0 <= horizon and u0 >= 0");
    }
    if (limits.max_jumps < 1) {
        throw DomainError("max_jumps must be at least 1");
    }
    Trajectory path{y0, s0, u0, {}, horizon, true};
    StateIndex state = y0;
    double clock = s0;
    double duration = u0;
    for (;;) {
        if (limits.stop_after > 0 && path.events.size() >= limits.stop_after) {
            path.censored = false;
            path.horizon = clock;
            return path;
        }
        if (path.events.size() >= limits.max_jumps) {
            throw ExplosionError("jump budget of " + std::to_string(limits.max_jumps)
                                 + " exhausted at t=" + std::to_string(clock) + " before horizon "
                                 + std::to_string(horizon));
        }
        auto const next = sample_next_jump(model, state, clock, duration, horizon, rng, cfg);
        if (next.censored) {
            return path;
        }
        path.events.push_back({next.time, next.destination});
        state = next.destination;
        clock = next.time;
        duration = 0.0;
    }
}

namespace detail {

inline void check_query_time(Trajectory const& path, double t)
{
    if (!(t >= path.start_time) || !(t <= path.horizon)) {
        throw DomainError("path query at t=" + std::to_string(t) + " outside ["
                          + std::to_string(path.start_time) + ", " + std::to_string(path.horizon) + "]");
    }
}

// Number of events with time <= t.
inline std::size_t events_up_to(Trajectory const& path, double t)
{
    auto it = std::upper_bound(path.events.begin(), path.events.end(), t,
                               [](double x, Event const& e) { return x < e.time; });
    return static_cast<std::size_t>(it - path.events.begin());
}

} // namespace detail

/// (Z_t, U_t, N_t); right-continuous at event times.
inline PathQueryResult state_at(Trajectory const& path, double t)
{
    detail::check_query_time(path, t);
    std::size_t const n = detail::events_up_to(path, t);
    if (n == 0) {
        return {path.initial_state, path.initial_duration + (t - path.start_time), 0};
    }
    Event const& last = path.events[n - 1];
    return {last.state, t - last.time, n};
}

/// Number of jumps in (a, b].
inline std::size_t jump_count(Trajectory const& path, double a, double b)
{
    detail::check_query_time(path, a);
    detail::check_query_time(path, b);
    if (b < a) {
        throw DomainError("jump_count needs a <= b");
    }
    return detail::events_up_to(path, b) - detail::events_up_to(path, a);
}

/// U_{T_n-}, the duration just before the n-th jump (n counted from 1).
inline double duration_before_jump(Trajectory const& path, std::size_t n)
{
    if (n < 1 || n > path.events.size()) {
        throw DomainError("event index out of range");
    }
    if (n == 1) {
        return path.initial_duration + (path.events[0].time - path.start_time);
    }
    return path.events[n - 1].time - path.events[n - 2].time;
}

/// Batch of paths sharing a start; path k uses RandomStream::substream(seed, k).
inline std::vector<Trajectory> simulate_batch(IntensityModel const& model, StateIndex y0, double s0,
                                              double u0, double horizon, std::uint64_t seed,
                                              std::uint64_t n_paths, SimulationLimits limits = {},
                                              QuadratureConfig const& cfg = {})
{
    std::vector<Trajectory> paths(n_paths);
    parallel_for(paths.size(), [&](std::size_t k) {
        auto rng = RandomStream::substream(seed, k);
        paths[k] = simulate_path(model, y0, s0, u0, horizon, rng, limits, cfg);
    });
    return paths;
}

/*!
 * CSV dump with header path_id,event_index,time,state. Events are numbered
 * from 1; each path ends with a censoring row whose event_index is one past
 * the last event, time is the horizon and state is the state occupied there.
 */
inline void write_trajectories_csv(std::ostream& os, std::vector<Trajectory> const& paths,
                                   StateSpace const& states)
{
    os << "path_id,event_index,time,state\n";
    for (std::size_t p = 0; p < paths.size(); ++p) {
        auto const& path = paths[p];
        for (std::size_t n = 0; n < path.events.size(); ++n) {
            os << p << ',' << (n + 1) << ',' << format_number(path.events[n].time) << ','
               << states.label(path.events[n].state) << '\n';
        }
        StateIndex const final_state = path.events.empty() ? path.initial_state : path.events.back().state;
        os << p << ',' << (path.events.size() + 1) << ',' << format_number(path.horizon) << ','
           << states.label(final_state) << '\n';
    }
}

} // namespace smpkit
