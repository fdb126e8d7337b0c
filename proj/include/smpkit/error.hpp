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

#include <stdexcept>
#include <string>

namespace smpkit {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Negative time or duration, unknown state, or similar precondition failure.
class DomainError : public Error {
public:
    using Error::Error;
};

/// An intensity field could not be evaluated (e.g. a table queried outside
/// its grid without the clamp extension).
class EvaluationError : public Error {
public:
    using Error::Error;
};

/// Adaptive quadrature exhausted its subdivision depth.
class ToleranceError : public Error {
public:
    using Error::Error;
};

/// Zero total intensity at a solved jump time.
class GuardError : public Error {
public:
    using Error::Error;
};

/// Simulation reached its jump budget before the horizon.
class ExplosionError : public Error {
public:
    using Error::Error;
};

/// Solver step too coarse for the intensity magnitude, or misaligned grid.
class StepSizeError : public Error {
public:
    using Error::Error;
};

class ConservationError : public Error {
public:
    using Error::Error;
};

/// Requested time is not on the solver output grid.
class GridError : public Error {
public:
    using Error::Error;
};

/// Malformed or invalid experiment configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace smpkit
