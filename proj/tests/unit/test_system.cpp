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

#include <array>
#include <stdexcept>

#include <gtest/gtest.h>

#include "riskshield/rng.hpp"
#include "riskshield/system.hpp"

using namespace riskshield;

namespace
{
    Eigen::VectorXd v1(double x) { return Eigen::VectorXd::Constant(1, x); }

    LinearStochasticSystem one_dim(std::vector<double> w)
    {
        std::vector<Eigen::VectorXd> samples;
        for (double x : w)
            samples.push_back(v1(x));
        const std::size_t n = samples.size();
        std::vector<double> p(n, 1.0 / static_cast<double>(n));
        double head = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i)
            head += p[i];
        p.back() = 1.0 - head;
        return LinearStochasticSystem::additive(Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Identity(1, 1),
                                                samples, p, v1(-1), v1(1));
    }
} // namespace

TEST(System, StepExamples)
{
    const Eigen::Vector2d x(0.3, -2.0);
    const LinearStochasticSystem identity({{Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Zero(2, 1),
                                            Eigen::VectorXd::Zero(2)}},
                                          {1.0}, v1(-1), v1(1));
    EXPECT_EQ(step(identity, x, v1(0.7), 0), x);

    const LinearStochasticSystem s = one_dim({0.1});
    EXPECT_NEAR(step(s, v1(0.5), v1(-0.05), 0)[0], 0.55, 1e-15);

    const Eigen::Vector2d g(4.0, -1.5);
    const LinearStochasticSystem offset({{Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 1), g}}, {1.0},
                                        v1(-1), v1(1));
    EXPECT_EQ(step(offset, x, v1(0.2), 0), g);
}

TEST(System, StepRejectsBadIndex)
{
    const LinearStochasticSystem s = one_dim({0.0, 0.1});
    EXPECT_THROW(step(s, v1(0), v1(0), 2), std::out_of_range);
}

TEST(System, ValidatesConstruction)
{
    const auto I = Eigen::MatrixXd::Identity(1, 1);
    EXPECT_THROW(LinearStochasticSystem({}, {}, v1(-1), v1(1)), std::invalid_argument);
    EXPECT_THROW(LinearStochasticSystem({{I, I, v1(0)}}, {0.9}, v1(-1), v1(1)), std::invalid_argument);
    EXPECT_THROW(LinearStochasticSystem({{I, I, v1(0)}}, {1.0}, v1(1), v1(-1)), std::invalid_argument);
    EXPECT_THROW(LinearStochasticSystem({{I, Eigen::MatrixXd::Identity(2, 2), v1(0)}}, {1.0}, v1(-1), v1(1)),
                 std::invalid_argument);
    EXPECT_THROW(LinearStochasticSystem({{I, I, Eigen::VectorXd::Zero(2)}}, {1.0}, v1(-1), v1(1)),
                 std::invalid_argument);
}

TEST(System, StepIsAffine)
{
    std::vector<Outcome> outcomes;
    for (int i = 0; i < 3; ++i)
    {
        outcomes.push_back({Eigen::MatrixXd::Random(3, 3), Eigen::MatrixXd::Random(3, 2), Eigen::VectorXd::Random(3)});
    }
    const LinearStochasticSystem s(outcomes, {0.2, 0.3, 0.5}, Eigen::VectorXd::Constant(2, -1),
                                   Eigen::VectorXd::Constant(2, 1));
    const Eigen::VectorXd x1 = Eigen::VectorXd::Random(3);
    const Eigen::VectorXd x2 = Eigen::VectorXd::Random(3);
    const Eigen::VectorXd u1 = Eigen::VectorXd::Random(2);
    const Eigen::VectorXd u2 = Eigen::VectorXd::Random(2);
    for (std::size_t i = 0; i < 3; ++i)
    {
        const Eigen::VectorXd r = step(s, x1 + x2, u1 + u2, i) - step(s, x1, u1, i) - step(s, x2, u2, i) +
                                  step(s, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(2), i);
        EXPECT_LE(r.lpNorm<Eigen::Infinity>(), 1e-14);
    }
}

TEST(System, ClipAndBounds)
{
    const LinearStochasticSystem s = one_dim({0.0});
    EXPECT_EQ(s.clip(v1(3.0))[0], 1.0);
    EXPECT_EQ(s.clip(v1(-3.0))[0], -1.0);
    EXPECT_TRUE(s.within_bounds(v1(0.5)));
    EXPECT_FALSE(s.within_bounds(v1(1.5)));
}

TEST(SampleOutcome, SingleOutcome)
{
    const LinearStochasticSystem s = one_dim({0.0});
    Rng rng(5);
    for (int i = 0; i < 100; ++i)
        EXPECT_EQ(sample_outcome(s, rng), 0u);
}

TEST(SampleOutcome, DegenerateMass)
{
    const auto I = Eigen::MatrixXd::Identity(1, 1);
    const LinearStochasticSystem s({{I, I, v1(0)}, {I, I, v1(1)}}, {1.0, 0.0}, v1(-1), v1(1));
    Rng rng(6);
    for (int i = 0; i < 1000; ++i)
        EXPECT_EQ(sample_outcome(s, rng), 0u);
}

TEST(SampleOutcome, UniformFrequencies)
{
    const LinearStochasticSystem s = one_dim({0.0, 0.1, 0.2, 0.3});
    Rng rng(7);
    std::array<int, 4> counts{};
    const int draws = 100000;
    for (int i = 0; i < draws; ++i)
        ++counts[sample_outcome(s, rng)];
    for (int c : counts)
        EXPECT_NEAR(static_cast<double>(c) / draws, 0.25, 0.01);
}

TEST(SuccessorDistribution, Examples)
{
    const LinearStochasticSystem det = one_dim({0.1});
    const FiniteDistribution d0 = successor_value_distribution(det, v1(0.5), v1(0.0),
                                                               [](const StateVector &x) { return 2 * x[0]; });
    ASSERT_EQ(d0.size(), 1u);
    EXPECT_NEAR(d0.values()[0], 1.2, 1e-15);

    const LinearStochasticSystem s = one_dim({-0.1, 0.0, 0.1});
    const FiniteDistribution d = successor_value_distribution(s, v1(0.5), v1(0.0),
                                                              [](const StateVector &x) { return x[0]; });
    ASSERT_EQ(d.size(), 3u);
    EXPECT_NEAR(d.values()[0], 0.4, 1e-15);
    EXPECT_NEAR(d.values()[1], 0.5, 1e-15);
    EXPECT_NEAR(d.values()[2], 0.6, 1e-15);
    for (std::size_t i = 0; i < 3; ++i)
        EXPECT_EQ(d.probs()[i], s.probs()[i]);

    const FiniteDistribution c = successor_value_distribution(s, v1(0.5), v1(0.3),
                                                              [](const StateVector &) { return -2.0; });
    for (double v : c.values())
        EXPECT_EQ(v, -2.0);
}

TEST(Rng, DerivedSeedsAreStableAndDistinct)
{
    EXPECT_EQ(derive_seed(1, 0), derive_seed(1, 0));
    EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
    EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
    Rng a(42);
    Rng b(42);
    for (int i = 0; i < 100; ++i)
    {
        const double x = a.uniform01();
        EXPECT_EQ(x, b.uniform01());
        EXPECT_GE(x, 0.0);
        EXPECT_LT(x, 1.0);
    }
}

TEST(Rng, SplitMixKnownValue)
{
    // First output of the reference SplitMix64 generator seeded with 0.
    EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFULL);
}
