/*
 Copyright 2026 The riskshield Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include <cmath>
#include <random>
#include <stdexcept>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "riskshield/risk.hpp"

using namespace riskshield;
namespace rt = riskshield::testing;

namespace
{
    FiniteDistribution uniform4() { return FiniteDistribution::uniform({1, 2, 3, 4}); }
} // namespace

TEST(FiniteDistribution, RejectsBadInput)
{
    EXPECT_THROW(FiniteDistribution({1, 2}, {0.5}), std::invalid_argument);
    EXPECT_THROW(FiniteDistribution({1, 2}, {0.5, 0.4}), std::invalid_argument);
    EXPECT_THROW(FiniteDistribution({1, 2}, {1.5, -0.5}), std::invalid_argument);
    EXPECT_THROW(FiniteDistribution({}, {}), std::invalid_argument);
    EXPECT_THROW(FiniteDistribution({std::nan("")}, {1.0}), std::invalid_argument);
}

TEST(RiskLevel, OpenInterval)
{
    EXPECT_THROW(RiskLevel(0.0), std::invalid_argument);
    EXPECT_THROW(RiskLevel(1.0), std::invalid_argument);
    EXPECT_NO_THROW(RiskLevel(0.5));
}

TEST(Expectation, Examples)
{
    EXPECT_DOUBLE_EQ(expectation(FiniteDistribution({5}, {1})), 5.0);
    EXPECT_DOUBLE_EQ(expectation(uniform4()), 2.5);
    EXPECT_NEAR(expectation(FiniteDistribution({0.4, -0.6}, {0.9, 0.1})), 0.3, 1e-15);
}

TEST(ValueAtRisk, Examples)
{
    EXPECT_DOUBLE_EQ(value_at_risk(uniform4(), RiskLevel(0.5)), 2.0);
    EXPECT_DOUBLE_EQ(value_at_risk(uniform4(), RiskLevel(0.2)), 1.0);
    for (double b : {0.01, 0.5, 0.99})
    {
        EXPECT_DOUBLE_EQ(value_at_risk(FiniteDistribution({7}, {1}), RiskLevel(b)), 7.0);
    }
}

TEST(ValueAtRisk, SkipsZeroMassAtoms)
{
    const FiniteDistribution d({-100, 1, 2}, {0.0, 0.5, 0.5});
    EXPECT_DOUBLE_EQ(value_at_risk(d, RiskLevel(0.1)), 1.0);
}

TEST(Cvar, LowerTailExamples)
{
    EXPECT_NEAR(cvar(uniform4(), RiskLevel(0.5)), 1.5, 1e-15);
    EXPECT_NEAR(cvar(uniform4(), RiskLevel(0.3)), 0.35 / 0.3, 1e-12);
}

TEST(Cvar, ConstantVariable)
{
    const FiniteDistribution d({3.25}, {1.0});
    for (auto tail : {TailConvention::LowerTailGains, TailConvention::PaperLiteral})
    {
        EXPECT_DOUBLE_EQ(cvar(d, RiskLevel(0.37), tail), 3.25);
    }
}

TEST(Cvar, PaperLiteralAveragesUpperTail)
{
    EXPECT_NEAR(cvar(uniform4(), RiskLevel(0.5), TailConvention::PaperLiteral), 3.5, 1e-15);
    EXPECT_NEAR(cvar(uniform4(), RiskLevel(0.3), TailConvention::PaperLiteral), (4 * 0.25 + 3 * 0.05) / 0.3,
                1e-12);
}

TEST(Cvar, TiesAreMerged)
{
    const FiniteDistribution split({1, 1, 5}, {0.25, 0.25, 0.5});
    const FiniteDistribution merged({1, 5}, {0.5, 0.5});
    for (double b : {0.1, 0.5, 0.7})
    {
        EXPECT_NEAR(cvar(split, RiskLevel(b)), cvar(merged, RiskLevel(b)), 1e-15);
        EXPECT_DOUBLE_EQ(value_at_risk(split, RiskLevel(b)), value_at_risk(merged, RiskLevel(b)));
    }
}

TEST(Cvar, TailConventionStrings)
{
    EXPECT_EQ(tail_from_string("lower"), TailConvention::LowerTailGains);
    EXPECT_EQ(tail_from_string("paper"), TailConvention::PaperLiteral);
    EXPECT_EQ(tail_from_string(to_string(TailConvention::PaperLiteral)), TailConvention::PaperLiteral);
    EXPECT_THROW(tail_from_string("upper"), std::invalid_argument);
}

TEST(CvarProperty, SortedMatchesVariationalOracles)
{
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    for (int trial = 0; trial < 1000; ++trial)
    {
        const rt::Atoms a = rt::random_atoms(gen);
        const FiniteDistribution d(a.values, a.probs);
        const double beta = u(gen);
        EXPECT_NEAR(cvar_sorted(d, RiskLevel(beta), TailConvention::LowerTailGains),
                    rt::oracle_lower_cvar_variational(a, beta), 1e-10);
        EXPECT_NEAR(cvar_sorted(d, RiskLevel(beta), TailConvention::LowerTailGains),
                    rt::oracle_lower_cvar_dual(a, beta), 1e-10);
        EXPECT_NEAR(cvar_sorted(d, RiskLevel(beta), TailConvention::PaperLiteral),
                    rt::oracle_paper_cvar_variational(a, beta), 1e-10);
    }
}

TEST(CvarProperty, CvarBelowVar)
{
    std::mt19937_64 gen(12);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    for (int trial = 0; trial < 1000; ++trial)
    {
        const rt::Atoms a = rt::random_atoms(gen);
        const FiniteDistribution d(a.values, a.probs);
        const RiskLevel beta(u(gen));
        EXPECT_LE(cvar(d, beta), value_at_risk(d, beta) + 1e-12);
    }
}

TEST(CvarProperty, ContinuousAcrossBreakpoints)
{
    std::mt19937_64 gen(13);
    for (int trial = 0; trial < 300; ++trial)
    {
        const rt::Atoms a = rt::random_atoms(gen);
        const FiniteDistribution d(a.values, a.probs);
        const double range = d.max_value() - d.min_value();
        double cum = 0.0;
        for (std::size_t i = 0; i + 1 < a.probs.size(); ++i)
        {
            cum += a.probs[i];
            if (cum < 1e-6 || cum > 1.0 - 1e-6)
                continue;
            const double at = cvar(d, RiskLevel(cum));
            EXPECT_NEAR(cvar(d, RiskLevel(cum - 1e-9)), at, 1e-6 * std::max(range, 1.0));
            EXPECT_NEAR(cvar(d, RiskLevel(cum + 1e-9)), at, 1e-6 * std::max(range, 1.0));
        }
    }
}

TEST(CvarProperty, ObjectiveAtVarAttainsCvar)
{
    std::mt19937_64 gen(14);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    for (int trial = 0; trial < 200; ++trial)
    {
        const rt::Atoms a = rt::random_atoms(gen);
        const FiniteDistribution d(a.values, a.probs);
        const RiskLevel beta(u(gen));
        EXPECT_NEAR(cvar_objective(d, beta, TailConvention::LowerTailGains, value_at_risk(d, beta)),
                    cvar(d, beta), 1e-10);
        EXPECT_NEAR(cvar_objective(d, beta, TailConvention::PaperLiteral, upper_value_at_risk(d, beta)),
                    cvar(d, beta, TailConvention::PaperLiteral), 1e-10);
    }
}

TEST(CvarLimits, Examples)
{
    const CvarLimitReport r = cvar_limits_check(uniform4());
    EXPECT_TRUE(r.passed);
    EXPECT_LE(r.risk_neutral_residual, 1e-6);
    EXPECT_LE(r.risk_averse_residual, 1e-6);

    const CvarLimitReport zero = cvar_limits_check(FiniteDistribution({0}, {1}));
    EXPECT_EQ(zero.risk_neutral_residual, 0.0);
    EXPECT_EQ(zero.risk_averse_residual, 0.0);

    const FiniteDistribution two({-3, 5}, {0.5, 0.5});
    EXPECT_NEAR(cvar(two, RiskLevel(1e-9)), -3.0, 1e-12);
    EXPECT_NEAR(cvar(two, RiskLevel(1.0 - 1e-9)), 1.0, 1e-6);
}
