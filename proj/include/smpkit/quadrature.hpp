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

#include "smpkit/error.hpp"

namespace smpkit {

struct QuadratureConfig {
    double abs_tol = 1e-10;
    int max_depth = 40;
};

namespace detail {

template <typename F>
double simpson_step(F const& f, double a, double fa, double b, double fb,
                    double m, double fm, double whole, double tol, double root_tol, int depth,
                    int max_depth)
{
    double const lm = 0.5 * (a + m);
    double const rm = 0.5 * (m + b);
    double const flm = f(lm);
    double const frm = f(rm);
    double const left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double const right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double const delta = left + right - whole;
    if (!std::isfinite(delta)) {
        throw ToleranceError("adaptive Simpson: non-finite integrand");
    }
    if (std::abs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    // Interval collapsed to adjacent doubles: nothing further to resolve.
    if (!(a < lm && lm < m && m < rm && rm < b)) {
        return left + right + delta / 15.0;
    }
    // Integrable endpoint singularities (u^p, p < 1) never meet the halved
    // tolerance; at full depth the piece is accepted if its error fits the
    // overall budget.
    if (depth >= max_depth) {
        if (std::abs(delta) <= 15.0 * root_tol) {
            return left + right + delta / 15.0;
        }
        throw ToleranceError("adaptive Simpson: maximum subdivision depth exceeded");
    }
    return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, root_tol, depth + 1, max_depth)
         + simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, root_tol, depth + 1, max_depth);
}

} // namespace detail

/// Adaptive Simpson integration of f over [a, b] to absolute tolerance.
template <typename F>
double integrate_adaptive(F const& f, double a, double b, QuadratureConfig const& cfg = {})
{
    if (!(b > a)) {
        return 0.0;
    }
    double const fa = f(a);
    double const fb = f(b);
    double const m = 0.5 * (a + b);
    double const fm = f(m);
    double const whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    if (!std::isfinite(whole)) {
        throw ToleranceError("adaptive Simpson: non-finite integrand");
    }
    return detail::simpson_step(f, a, fa, b, fb, m, fm, whole, cfg.abs_tol, cfg.abs_tol, 0, cfg.max_depth);
}

} // namespace smpkit
