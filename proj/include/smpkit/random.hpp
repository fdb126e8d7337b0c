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

#include <cmath>
#include <cstdint>
#include <random>

namespace smpkit {

/// SplitMix64 finalizer; used only to derive engine seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/*!
 * Deterministic random stream.
 *
 * Variates are produced from the raw 64-bit engine output with fixed
 * arithmetic, so a given seed yields the same doubles with any standard
 * library. Path k of a batch draws from substream(seed, k), which makes batch
 * results independent of execution order and thread count.
 */
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    static RandomStream substream(std::uint64_t seed, std::uint64_t index)
    {
        return RandomStream(seed ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on the open interval (0, 1).
    double uniform()
    {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard exponential variate; strictly positive and finite.
    double standard_exponential() { return -std::log(uniform()); }

private:
    std::mt19937_64 engine_;
};

} // namespace smpkit
