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
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "smpkit/error.hpp"
#include "smpkit/format.hpp"
#include "smpkit/parallel.hpp"
#include "smpkit/random.hpp"
#include "smpkit/simulator.hpp"
#include "smpkit/state_model.hpp"

namespace smpkit {

struct ConfidenceInterval {
    double lo = 0.0;
    double hi = 0.0;
    bool wilson = false;
};

/*!
 * Mergeable Bernoulli tallies over a fixed set of cells.
 *
 * Each simulated path adds one sample and may hit any subset of cells; the
 * estimate for a cell is its hit fraction. Tallies are integers, so merging
 * is exact, associative and commutative.
 */
class EstimatorSummary {
public:
    EstimatorSummary() = default;
    explicit EstimatorSummary(std::size_t cells) : counts_(cells, 0) {}

    void add_sample() { ++n_; }
    void hit(std::size_t cell) { ++counts_.at(cell); }

    std::uint64_t sample_count() const noexcept { return n_; }
    std::size_t cell_count() const noexcept { return counts_.size(); }
    std::uint64_t count(std::size_t cell) const { return counts_.at(cell); }

    double estimate(std::size_t cell) const
    {
        return n_ == 0 ? 0.0 : static_cast<double>(count(cell)) / static_cast<double>(n_);
    }

    /// sqrt(p(1-p)/n)
    double standard_error(std::size_t cell) const
    {
        if (n_ == 0) {
            return 0.0;
        }
        double const p = estimate(cell);
        return std::sqrt(p * (1.0 - p) / static_cast<double>(n_));
    }

    /// Normal interval, or Wilson when either the hit or miss count is below 10.
    ConfidenceInterval confidence_interval(std::size_t cell, double level = 0.95) const
    {
        if (!(level > 0.0 && level < 1.0)) {
            throw DomainError("confidence level must lie in (0, 1)");
        }
        if (n_ == 0) {
            return {0.0, 1.0, true};
        }
        double const z = boost::math::quantile(boost::math::normal(), 0.5 + 0.5 * level);
        double const p = estimate(cell);
        double const n = static_cast<double>(n_);
        std::uint64_t const hits = count(cell);
        if (hits < 10 || n_ - hits < 10) {
            double const z2 = z * z;
            double const centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
            double const half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
            return {std::max(0.0, centre - half), std::min(1.0, centre + half), true};
        }
        double const half = z * standard_error(cell);
        return {std::max(0.0, p - half), std::min(1.0, p + half), false};
    }

    EstimatorSummary& merge(EstimatorSummary const& other)
    {
        if (counts_.empty() && n_ == 0) {
            counts_.assign(other.counts_.size(), 0);
        }
        if (other.counts_.size() != counts_.size()) {
            throw DomainError("cannot merge tallies with different cell counts");
        }
        n_ += other.n_;
        for (std::size_t k = 0; k < counts_.size(); ++k) {
            counts_[k] += other.counts_[k];
        }
        return *this;
    }

    friend bool operator==(EstimatorSummary const&, EstimatorSummary const&) = default;

private:
    std::uint64_t n_ = 0;
    std::vector<std::uint64_t> counts_;
};

inline EstimatorSummary merge(EstimatorSummary a, EstimatorSummary const& b)
{
    a.merge(b);
    return a;
}

/// Paths first .. first+count-1 of the stream family derived from seed.
struct PathBatch {
    std::uint64_t seed = 0;
    std::uint64_t first = 0;
    std::uint64_t count = 0;
};

/*!
 * Runs score(rng, tally) once per path index in the batch, each on its own
 * substream, in parallel chunks merged at the end.
 */
template <typename Score>
EstimatorSummary tally_paths(std::size_t cells, PathBatch const& batch, Score score)
{
    return parallel_reduce<EstimatorSummary>(
        batch.first, batch.count, [cells] { return EstimatorSummary(cells); },
        [&](std::uint64_t begin, std::uint64_t n, EstimatorSummary& acc) {
            for (std::uint64_t k = begin; k < begin + n; ++k) {
                auto rng = RandomStream::substream(batch.seed, k);
                acc.add_sample();
                score(rng, acc);
            }
        },
        [](EstimatorSummary& a, EstimatorSummary const& b) { a.merge(b); });
}

/// Row of p_ij(s, t, u): cell j counts paths with Z_t = j.
inline EstimatorSummary estimate_transition(IntensityModel const& model, StateIndex i, double s, double u,
                                            double t, PathBatch const& batch, SimulationLimits limits = {},
                                            QuadratureConfig const& cfg = {})
{
    if (!(t >= s)) {
        throw DomainError("estimate_transition needs t >= s");
    }
    if (batch.count < 1) {
        throw DomainError("need at least one path");
    }
    return tally_paths(model.size(), batch, [&](RandomStream& rng, EstimatorSummary& acc) {
        auto const path = simulate_path(model, i, s, u, t, rng, limits, cfg);
        acc.hit(state_at(path, t).state);
    });
}

/*!
 * Tallies for the duration CDF d -> p_ij(s, t, u, [0, d]).
 *
 * Cells 0..grid.size()-1 are the grid points (closed inequality U_t <= d),
 * then the state marginal, then the atom at u + t - s, detected as
 * U_t in ((u+t-s)(1 - 1e-9), u+t-s].
 */
struct DurationCdfEstimate {
    std::vector<double> grid;
    EstimatorSummary tally;

    std::size_t total_cell() const noexcept { return grid.size(); }
    std::size_t atom_cell() const noexcept { return grid.size() + 1; }
};

inline DurationCdfEstimate estimate_duration_cdf(IntensityModel const& model, StateIndex i, double s,
                                                 double u, double t, StateIndex j,
                                                 std::vector<double> const& d_grid, PathBatch const& batch,
                                                 SimulationLimits limits = {},
                                                 QuadratureConfig const& cfg = {})
{
    if (!std::is_sorted(d_grid.begin(), d_grid.end())) {
        throw DomainError("duration grid must be sorted ascending");
    }
    if (!(t >= s) || batch.count < 1 || j >= model.size()) {
        throw DomainError("estimate_duration_cdf: bad arguments");
    }
    double const atom_at = u + (t - s);
    double const atom_lo = atom_at * (1.0 - 1e-9);
    DurationCdfEstimate out{d_grid, {}};
    out.tally = tally_paths(d_grid.size() + 2, batch, [&](RandomStream& rng, EstimatorSummary& acc) {
        auto const path = simulate_path(model, i, s, u, t, rng, limits, cfg);
        auto const q = state_at(path, t);
        if (q.state != j) {
            return;
        }
        for (std::size_t k = 0; k < d_grid.size(); ++k) {
            if (q.duration <= d_grid[k]) {
                acc.hit(k);
            }
        }
        acc.hit(d_grid.size());
        if (q.duration > atom_lo && q.duration <= atom_at) {
            acc.hit(d_grid.size() + 1);
        }
    });
    return out;
}

/// P(N_{t+h} - N_t >= 2 | Z_t = i, U_t = u) as a single-cell tally.
inline EstimatorSummary estimate_multijump(IntensityModel const& model, StateIndex i, double u, double t,
                                           double h, PathBatch const& batch, SimulationLimits limits = {},
                                           QuadratureConfig const& cfg = {})
{
    if (!(h > 0.0)) {
        throw DomainError("estimate_multijump needs h > 0");
    }
    limits.stop_after = 2;
    return tally_paths(1, batch, [&](RandomStream& rng, EstimatorSummary& acc) {
        auto const path = simulate_path(model, i, t, u, t + h, rng, limits, cfg);
        if (path.events.size() >= 2) {
            acc.hit(0);
        }
    });
}

/// One line of the estimate CSV; d empty means the state-marginal total.
struct EstimateRecord {
    std::string from;
    std::string to;
    double s = 0.0;
    double t = 0.0;
    double u = 0.0;
    std::optional<double> d;
    double estimate = 0.0;
    double standard_error = 0.0;
    std::uint64_t n = 0;
};

inline void write_estimates_csv(std::ostream& os, std::vector<EstimateRecord> const& records)
{
    os << "i,j,s,t,u,d_or_total,estimate,stderr,n\n";
    for (auto const& r : records) {
        os << r.from << ',' << r.to << ',' << format_number(r.s) << ',' << format_number(r.t) << ','
           << format_number(r.u) << ',' << (r.d ? format_number(*r.d) : std::string("total")) << ','
           << format_number(r.estimate) << ',' << format_number(r.standard_error) << ',' << r.n << '\n';
    }
}

} // namespace smpkit
