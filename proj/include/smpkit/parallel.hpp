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
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace smpkit {

/// Worker cap from SMPKIT_THREADS (0 or unset means hardware concurrency).
inline unsigned worker_count()
{
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (char const* env = std::getenv("SMPKIT_THREADS")) {
        try {
            long v = std::stol(env);
            if (v > 0) {
                return static_cast<unsigned>(v);
            }
        } catch (std::exception const&) {
            // unparsable: fall back to auto
        }
    }
    return hw;
}

/*!
 * Map [first, first+count) into contiguous chunks, run fn(chunk_first,
 * chunk_count, acc) on each with its own accumulator, then fold the
 * accumulators left to right with merge(acc, other).
 *
 * Callers are expected to make the result independent of chunking (integer
 * tallies, per-index substreams).
 */
template <typename Acc, typename MakeAcc, typename Fn, typename Merge>
Acc parallel_reduce(std::uint64_t first, std::uint64_t count, MakeAcc make, Fn fn, Merge merge)
{
    unsigned const workers = static_cast<unsigned>(
        std::min<std::uint64_t>(worker_count(), std::max<std::uint64_t>(count, 1)));
    if (workers <= 1) {
        Acc acc = make();
        fn(first, count, acc);
        return acc;
    }
    std::vector<Acc> accs;
    accs.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        accs.push_back(make());
    }
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> threads;
        std::uint64_t const base = count / workers;
        std::uint64_t const extra = count % workers;
        std::uint64_t begin = first;
        for (unsigned w = 0; w < workers; ++w) {
            std::uint64_t const n = base + (w < extra ? 1 : 0);
            threads.emplace_back([&, w, begin, n] {
                try {
                    fn(begin, n, accs[w]);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
            begin += n;
        }
    }
    for (auto const& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    Acc result = std::move(accs.front());
    for (unsigned w = 1; w < workers; ++w) {
        merge(result, accs[w]);
    }
    return result;
}

} // namespace smpkit

namespace smpkit {

/// Runs fn(k) for every k in [0, count) on up to worker_count() threads.
template <typename Fn>
void parallel_for(std::size_t count, Fn fn)
{
    unsigned const workers = static_cast<unsigned>(
        std::min<std::size_t>(worker_count(), std::max<std::size_t>(count, 1)));
    if (workers <= 1) {
        for (std::size_t k = 0; k < count; ++k) {
            fn(k);
        }
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> threads;
        for (unsigned w = 0; w < workers; ++w) {
            threads.emplace_back([&, w] {
                try {
                    for (std::size_t k = w; k < count; k += workers) {
                        fn(k);
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (auto const& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

} // namespace smpkit
