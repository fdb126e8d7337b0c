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

#include "smpkit/config.hpp"
#include "smpkit/error.hpp"
#include "smpkit/format.hpp"
#include "smpkit/forward_solver.hpp"
#include "smpkit/hazard_kernel.hpp"
#include "smpkit/monte_carlo.hpp"
#include "smpkit/parallel.hpp"
#include "smpkit/quadrature.hpp"
#include "smpkit/random.hpp"
#include "smpkit/runner.hpp"
#include "smpkit/simulator.hpp"
#include "smpkit/state_model.hpp"
#include "smpkit/statistics.hpp"
#include "smpkit/verification.hpp"
