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

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "riskshield/filter.hpp"
#include "riskshield/qp.hpp"
#include "riskshield/risk.hpp"
#include "riskshield/scenario.hpp"

namespace rs = riskshield;

static rs::FiniteDistribution random_distribution(std::size_t atoms, std::uint64_t seed)
{
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    std::vector<double> values(atoms);
    for (auto &v : values)
    {
        v = u(gen);
    }
    return rs::FiniteDistribution::uniform(std::move(values));
}

static void BM_CvarSorted(benchmark::State &state)
{
    const auto d = random_distribution(static_cast<std::size_t>(state.range(0)), 1);
    const rs::RiskLevel beta(0.1);
    for (auto _ : state)
    {
        benchmark::DoNotOptimize(rs::cvar_sorted(d, beta, rs::TailConvention::LowerTailGains));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_CvarSorted)->RangeMultiplier(4)->Range(4, 4096)->Complexity();

static void BM_CvarVariational(benchmark::State &state)
{
    const auto d = random_distribution(static_cast<std::size_t>(state.range(0)), 2);
    const rs::RiskLevel beta(0.1);
    for (auto _ : state)
    {
        benchmark::DoNotOptimize(rs::cvar_variational(d, beta, rs::TailConvention::LowerTailGains));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_CvarVariational)->RangeMultiplier(4)->Range(4, 1024)->Complexity();

static void BM_SolveQp(benchmark::State &state)
{
    const int d = static_cast<int>(state.range(0));
    std::mt19937_64 gen(3);
    std::normal_distribution<double> nd;
    rs::QpProblem p;
    Eigen::MatrixXd M(d, d);
    for (int i = 0; i < d * d; ++i)
    {
        M.data()[i] = nd(gen);
    }
    p.P = M.transpose() * M + Eigen::MatrixXd::Identity(d, d);
    p.q = Eigen::VectorXd::NullaryExpr(d, [&] { return nd(gen); });
    p.G = Eigen::MatrixXd::NullaryExpr(2 * d, d, [&] { return nd(gen); });
    p.g = Eigen::VectorXd::Constant(2 * d, 0.5);
    for (auto _ : state)
    {
        benchmark::DoNotOptimize(rs::solve_qp(p));
    }
}
BENCHMARK(BM_SolveQp)->Arg(2)->Arg(8)->Arg(16)->Arg(32);

static void BM_SolveFilter(benchmark::State &state)
{
    rs::ScenarioOverrides o;
    o.num_outcomes = static_cast<int>(state.range(0));
    const rs::ScenarioConfig cfg = rs::builtin_scenario(rs::BuiltinCase::Case1, o);
    const rs::LinearStochasticSystem sys = rs::make_system(cfg);
    rs::FilterOptions opt;
    opt.method = state.range(1) == 0 ? rs::FilterMethod::EpigraphExact : rs::FilterMethod::PaperDccp;
    opt.tail = state.range(1) == 0 ? rs::TailConvention::LowerTailGains : rs::TailConvention::PaperLiteral;
    const rs::FilterRequest req{cfg.x0, rs::ControlVector::Constant(2, 0.4), rs::make_barrier(cfg),
                                rs::make_certificate(cfg), opt};
    for (auto _ : state)
    {
        benchmark::DoNotOptimize(rs::solve_filter(req, sys));
    }
}
BENCHMARK(BM_SolveFilter)->ArgsProduct({{5, 10, 40}, {0, 1}})->ArgNames({"W", "dccp"});

static void BM_Rollout(benchmark::State &state)
{
    rs::ScenarioOverrides o;
    o.num_rollouts = 10;
    const rs::ScenarioConfig cfg = rs::builtin_scenario(rs::BuiltinCase::Case1, o);
    for (auto _ : state)
    {
        benchmark::DoNotOptimize(rs::run_monte_carlo(cfg, 1));
    }
}
BENCHMARK(BM_Rollout)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
