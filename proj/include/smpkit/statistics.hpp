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
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace smpkit {

/// Kolmogorov limiting tail P(K > lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
inline double kolmogorov_tail(double lambda)
{
    if (lambda < 0.2) {
        return 1.0;
    }
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 200; ++k) {
        double const term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        if (term < 1e-16 * std::abs(sum) || term < 1e-300) {
            break;
        }
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/*!
 * Two-sample Kolmogorov-Smirnov test, asymptotic p-value with Stephens'
 * small-sample correction.
 */
inline TestResult ks_two_sample(std::vector<double> a, std::vector<double> b)
{
    if (a.empty() || b.empty()) {
        return {};
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double const na = static_cast<double>(a.size());
    double const nb = static_cast<double>(b.size());
    std::size_t ia = 0;
    std::size_t ib = 0;
    double d = 0.0;
    while (ia < a.size() && ib < b.size()) {
        double const x = std::min(a[ia], b[ib]);
        while (ia < a.size() && a[ia] <= x) {
            ++ia;
        }
        while (ib < b.size() && b[ib] <= x) {
            ++ib;
        }
        d = std::max(d, std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
    }
    double const ne = std::sqrt(na * nb / (na + nb));
    return {d, kolmogorov_tail((ne + 0.12 + 0.11 / ne) * d)};
}

/// One-sample KS test of data against a continuous CDF.
template <typename Cdf>
TestResult ks_one_sample(std::vector<double> data, Cdf cdf)
{
    if (data.empty()) {
        return {};
    }
    std::sort(data.begin(), data.end());
    double const n = static_cast<double>(data.size());
    double d = 0.0;
    for (std::size_t k = 0; k < data.size(); ++k) {
        double const f = cdf(data[k]);
        d = std::max({d, static_cast<double>(k + 1) / n - f, f - static_cast<double>(k) / n});
    }
    double const rn = std::sqrt(n);
    return {d, kolmogorov_tail((rn + 0.12 + 0.11 / rn) * d)};
}

/*!
 * Pearson chi-square test of homogeneity for a rows x columns count table.
 * Empty rows and columns are dropped; a table with no degrees of freedom
 * left returns p = 1.
 */
inline TestResult chi_square_homogeneity(std::vector<std::vector<double>> const& table)
{
    std::vector<std::vector<double>> rows;
    for (auto const& r : table) {
        double total = 0.0;
        for (double x : r) {
            total += x;
        }
        if (total > 0.0) {
            rows.push_back(r);
        }
    }
    if (rows.size() < 2) {
        return {};
    }
    std::size_t const n_cols = rows.front().size();
    std::vector<double> col_tot(n_cols, 0.0);
    std::vector<double> row_tot(rows.size(), 0.0);
    double grand = 0.0;
    for (std::size_t a = 0; a < rows.size(); ++a) {
        for (std::size_t b = 0; b < n_cols; ++b) {
            row_tot[a] += rows[a][b];
            col_tot[b] += rows[a][b];
            grand += rows[a][b];
        }
    }
    std::size_t live_cols = 0;
    for (double c : col_tot) {
        live_cols += c > 0.0 ? 1 : 0;
    }
    if (live_cols < 2) {
        return {};
    }
    double stat = 0.0;
    for (std::size_t a = 0; a < rows.size(); ++a) {
        for (std::size_t b = 0; b < n_cols; ++b) {
            if (col_tot[b] == 0.0) {
                continue;
            }
            double const expected = row_tot[a] * col_tot[b] / grand;
            stat += (rows[a][b] - expected) * (rows[a][b] - expected) / expected;
        }
    }
    double const dof = static_cast<double>((rows.size() - 1) * (live_cols - 1));
    boost::math::chi_squared dist(dof);
    return {stat, boost::math::cdf(boost::math::complement(dist, stat))};
}

/// Least-squares slope of log(err) against log(h), skipping err <= floor.
inline double fitted_order(std::vector<double> const& h, std::vector<double> const& err, double floor = 1e-13)
{
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t k = 0; k < h.size() && k < err.size(); ++k) {
        if (err[k] > floor && h[k] > 0.0) {
            x.push_back(std::log(h[k]));
            y.push_back(std::log(err[k]));
        }
    }
    if (x.size() < 2) {
        return 0.0;
    }
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

} // namespace smpkit
