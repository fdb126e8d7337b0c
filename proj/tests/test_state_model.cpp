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

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "smpkit/quadrature.hpp"
#include "smpkit/state_model.hpp"
#include "test_models.hpp"

using namespace smpkit;
using namespace smpkit::testing;

TEST(StateSpace, RejectsTooFewOrDuplicateLabels)
{
    EXPECT_THROW(StateSpace({"only"}), DomainError);
    EXPECT_THROW(StateSpace({"a", "b", "a"}), DomainError);
    StateSpace const s({"x", "y", "z"});
    EXPECT_EQ(s.size(), 3u);
    EXPECT_EQ(s.index_of("z"), 2u);
    EXPECT_FALSE(s.find("w").has_value());
    EXPECT_THROW(s.index_of("w"), DomainError);
}

TEST(IntensityModel, RejectsDiagonalDuplicateAndUnknownEntries)
{
    auto const two = StateSpace::numbered(2);
    EXPECT_THROW(IntensityModel(two, {{0, 0, ConstantField{1.0}}}), DomainError);
    EXPECT_THROW(IntensityModel(two, {{0, 1, ConstantField{1.0}}, {0, 1, ConstantField{2.0}}}), DomainError);
    EXPECT_THROW(IntensityModel(two, {{0, 2, ConstantField{1.0}}}), DomainError);
    EXPECT_THROW(IntensityModel(two, {{0, 1, ProductField{ConstantFactor{1.0}, PowerLawFactor{1.0, -0.5}}}}),
                 DomainError);
    EXPECT_THROW(IntensityModel(two, {{0, 1, ProductField{PiecewiseConstantFactor{{1.0, 0.5}, {1, 2, 3}}, {}}}}),
                 DomainError);
}

TEST(Rate, ConstantEntryAndDiagonal)
{
    auto const m = IntensityModel(StateSpace::numbered(2), {{0, 1, ConstantField{0.5}}});
    EXPECT_DOUBLE_EQ(m.rate(0, 1, 3.7, 0.2), 0.5);
    EXPECT_DOUBLE_EQ(m.rate(0, 0, 3.7, 0.2), -0.5);
    EXPECT_DOUBLE_EQ(m.rate(1, 0, 3.7, 0.2), 0.0);
}

TEST(Rate, PowerLawDurationFactor)
{
    EXPECT_DOUBLE_EQ(duration2().rate(0, 1, 1.0, 0.25), 0.5);
}

TEST(Rate, NegativeArgumentsAreDomainErrors)
{
    auto const m = markov3();
    EXPECT_THROW(m.rate(0, 1, -1e-9, 0.0), DomainError);
    EXPECT_THROW(m.rate(0, 1, 0.0, -1.0), DomainError);
    EXPECT_THROW(m.total_rate(0, -1.0, 0.0), DomainError);
    EXPECT_THROW(m.rate(0, 3, 0.0, 0.0), DomainError);
}

TEST(TotalRate, Examples)
{
    auto const m = IntensityModel(StateSpace::numbered(3), {{0, 1, ConstantField{1.0}}, {0, 2, ConstantField{3.0}}});
    EXPECT_DOUBLE_EQ(m.total_rate(0, 2.0, 1.0), 4.0);
    EXPECT_DOUBLE_EQ(m.total_rate(1, 2.0, 1.0), 0.0);
    EXPECT_TRUE(m.is_absorbing(2));

    auto const d = IntensityModel(StateSpace::numbered(3),
                                  {{0, 1, ProductField{ConstantFactor{1.0}, PowerLawFactor{2.0, 1.0}}},
                                   {0, 2, ConstantField{1.0}}});
    EXPECT_DOUBLE_EQ(d.total_rate(0, 0.0, 0.5), 2.0);
}

TEST(SupNorm, Examples)
{
    EXPECT_DOUBLE_EQ(sup_norm(constant_two_state(0.5, 1.0), {0.0, 5.0}, {0.0, 3.0}), 1.0);
    EXPECT_DOUBLE_EQ(sup_norm(duration2(), {0.0, 1.0}, {0.0, 2.0}), 4.0);
    EXPECT_DOUBLE_EQ(sup_norm(zero_model(), {0.0, 1.0}, {0.0, 1.0}), 0.0);
}

TEST(SupNorm, PiecewiseBreakpointsAreSampled)
{
    // A narrow spike between grid points is still found.
    auto const m = IntensityModel(StateSpace::numbered(2),
                                  {{0, 1, ProductField{PiecewiseConstantFactor{{0.3001, 0.3002}, {0.1, 7.0, 0.1}},
                                                       ConstantFactor{1.0}}}});
    EXPECT_DOUBLE_EQ(sup_norm(m, {0.0, 1.0}, {0.0, 1.0}, 2), 7.0);
}

TEST(SupNorm, MonotoneInRanges)
{
    RandomStream rng(101);
    for (int trial = 0; trial < 50; ++trial) {
        auto const m = random_model(rng, 3);
        double const t1 = draw(rng, 0.1, 2.0);
        double const u1 = draw(rng, 0.1, 2.0);
        double const inner = sup_norm(m, {0.0, t1}, {0.0, u1});
        double const outer = sup_norm(m, {0.0, t1 + 0.5}, {0.0, u1 + 0.5});
        EXPECT_GE(outer, inner) << "trial " << trial;
    }
}

TEST(Invariants, RowSumsVanishAndOffDiagonalsNonnegative)
{
    RandomStream rng(202);
    for (int trial = 0; trial < 50; ++trial) {
        auto const m = random_model(rng, 4);
        for (int k = 0; k < 20; ++k) {
            double const t = draw(rng, 0.0, 3.0);
            double const u = draw(rng, 0.0, 3.0);
            for (StateIndex i = 0; i < m.size(); ++i) {
                double sum = 0.0;
                for (StateIndex j = 0; j < m.size(); ++j) {
                    double const q = m.rate(i, j, t, u);
                    if (i != j) {
                        ASSERT_GE(q, 0.0);
                    }
                    sum += q;
                }
                ASSERT_NEAR(sum, 0.0, 1e-12);
            }
        }
    }
}

TEST(PiecewiseConstant, RightContinuousAtBreakpoints)
{
    Factor const f = PiecewiseConstantFactor{{1.0, 2.0}, {0.5, 0.9, 0.2}};
    EXPECT_DOUBLE_EQ(evaluate(f, 0.999), 0.5);
    EXPECT_DOUBLE_EQ(evaluate(f, 1.0), 0.9);
    EXPECT_DOUBLE_EQ(evaluate(f, 2.0), 0.2);
    EXPECT_DOUBLE_EQ(evaluate(f, 50.0), 0.2);
}

TEST(Table, StepLookupAndDomain)
{
    TableField tab{{0.0, 1.0, 2.0}, {0.0, 0.5}, {1, 2, 3, 4, 5, 6}, false};
    IntensityField const f = tab;
    EXPECT_DOUBLE_EQ(evaluate(f, 0.5, 0.2), 1.0);
    EXPECT_DOUBLE_EQ(evaluate(f, 1.0, 0.5), 4.0);
    EXPECT_DOUBLE_EQ(evaluate(f, 2.0, 0.5), 6.0);
    EXPECT_THROW(evaluate(f, 2.5, 0.1), EvaluationError);
    EXPECT_THROW(evaluate(f, 1.0, 0.6), EvaluationError);
    tab.clamp = true;
    EXPECT_DOUBLE_EQ(evaluate(IntensityField{tab}, 9.0, 9.0), 6.0);
}

TEST(Validate, WellFormedModelPasses)
{
    auto const r = validate(weibull3(), 3.0, 3.0);
    EXPECT_TRUE(r.passed);
    EXPECT_TRUE(r.issues.empty());
    EXPECT_GT(r.grid_sup, 0.0);
    EXPECT_GT(r.points_checked, 0u);
}

TEST(Validate, NegativeValueIsReportedWithLocation)
{
    auto const m = IntensityModel(StateSpace::numbered(2),
                                  {{1, 0, CustomField{[](double t, double) { return t > 1.0 ? -1.0 : 1.0; }}}});
    auto const r = validate(m, 2.0, 1.0);
    EXPECT_FALSE(r.passed);
    ASSERT_FALSE(r.issues.empty());
    auto const& issue = r.issues.front();
    EXPECT_EQ(issue.kind, ValidationIssue::Kind::negative);
    EXPECT_EQ(issue.from, 1u);
    EXPECT_EQ(issue.to, 0u);
    EXPECT_GT(issue.t, 1.0);
    EXPECT_DOUBLE_EQ(issue.value, -1.0);
    EXPECT_FALSE(r.sup_exact);
}

TEST(Validate, NanAndInfinityAreFlagged)
{
    auto const nan_model = IntensityModel(
        StateSpace::numbered(2), {{0, 1, CustomField{[](double, double) { return std::nan(""); }}}});
    auto const r = validate(nan_model, 1.0, 1.0);
    EXPECT_FALSE(r.passed);
    EXPECT_EQ(r.issues.front().kind, ValidationIssue::Kind::not_a_number);

    auto const inf_model = IntensityModel(
        StateSpace::numbered(2), {{0, 1, ProductField{ExponentialFactor{1.0, 800.0}, ConstantFactor{1.0}}}});
    auto const r2 = validate(inf_model, 1.0, 1.0);
    EXPECT_FALSE(r2.passed);
    EXPECT_EQ(r2.issues.front().kind, ValidationIssue::Kind::infinite);
}

TEST(Validate, TableOutsideGridIsAnEvaluationIssue)
{
    auto const m = IntensityModel(StateSpace::numbered(2), {{0, 1, TableField{{0.0, 1.0}, {0.0}, {1, 1}, false}}});
    auto const r = validate(m, 2.0, 0.0);
    EXPECT_FALSE(r.passed);
    EXPECT_EQ(r.issues.front().kind, ValidationIssue::Kind::evaluation_error);
}

TEST(Characteristic, ClosedFormsAgreeWithQuadrature)
{
    RandomStream rng(303);
    QuadratureConfig cfg;
    cfg.abs_tol = 1e-12;
    for (int trial = 0; trial < 300; ++trial) {
        auto const field = random_field(rng);
        double const a = draw(rng, 0.0, 2.0);
        double const b = a + draw(rng, 0.0, 2.0);
        double const offset = draw(rng, -a, 1.0); // duration at v is offset + v >= 0
        double const got = integrate_along_characteristic(field, offset, a, b, cfg);
        // Reference: plain adaptive Simpson on each smooth piece.
        std::vector<double> cuts{a, b};
        append_time_breakpoints(field, cuts);
        std::vector<double> dur;
        append_duration_breakpoints(field, dur);
        for (double x : dur) {
            cuts.push_back(x - offset);
        }
        std::sort(cuts.begin(), cuts.end());
        double ref = 0.0;
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
            double const lo = std::max(a, cuts[k]);
            double const hi = std::min(b, cuts[k + 1]);
            if (hi > lo) {
                // Nudge the ends inside so step factors take this piece's level.
                ref += integrate_adaptive(
                    [&](double v) {
                        double const vv = std::clamp(v, std::nextafter(lo, hi), std::nextafter(hi, lo));
                        return evaluate(field, vv, offset + vv);
                    },
                    lo, hi, cfg);
            }
        }
        ASSERT_NEAR(got, ref, 1e-9 * std::max(1.0, std::abs(ref))) << "trial " << trial;
    }
}

TEST(Characteristic, AdditiveOverSplits)
{
    auto const m = weibull3();
    for (StateIndex i = 0; i < 3; ++i) {
        for (auto const& target : m.targets(i)) {
            double const whole = integrate_along_characteristic(target.field, 0.3, 0.0, 2.0);
            double const parts = integrate_along_characteristic(target.field, 0.3, 0.0, 0.7)
                               + integrate_along_characteristic(target.field, 0.3, 0.7, 2.0);
            EXPECT_NEAR(whole, parts, 2e-10);
        }
    }
}
