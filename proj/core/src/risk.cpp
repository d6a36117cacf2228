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

#include "riskshield/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

namespace riskshield
{
    namespace
    {
        struct Atom
        {
            double value;
            double prob;
        };

        // Sorted ascending with equal values merged.
        std::vector<Atom> merged_atoms(const FiniteDistribution &d)
        {
            std::vector<Atom> atoms;
            atoms.reserve(d.size());
            for (std::size_t i = 0; i < d.size(); ++i)
            {
                atoms.push_back({d.values()[i], d.probs()[i]});
            }
            std::sort(atoms.begin(), atoms.end(),
                      [](const Atom &a, const Atom &b) { return a.value < b.value; });

            std::vector<Atom> merged;
            merged.reserve(atoms.size());
            for (const Atom &a : atoms)
            {
                if (!merged.empty() && merged.back().value == a.value)
                {
                    merged.back().prob += a.prob;
                }
                else
                {
                    merged.push_back(a);
                }
            }
            return merged;
        }

        // Averages the first beta of probability mass along [first, last).
        template <typename It>
        double tail_average(It first, It last, double beta)
        {
            double remaining = beta;
            double acc = 0.0;
            double last_value = 0.0;
            for (It it = first; it != last && remaining > 0.0; ++it)
            {
                const double take = std::min(it->prob, remaining);
                acc += take * it->value;
                remaining -= take;
                last_value = it->value;
            }
            // Rounding can leave a sliver of mass; assign it to the last atom seen.
            if (remaining > 0.0)
            {
                acc += remaining * last_value;
            }
            return acc / beta;
        }
    } // namespace

    FiniteDistribution::FiniteDistribution(std::vector<double> values, std::vector<double> probs)
        : values_(std::move(values)), probs_(std::move(probs))
    {
        if (values_.empty())
        {
            throw std::invalid_argument("values: distribution needs at least one atom");
        }
        if (values_.size() != probs_.size())
        {
            throw std::invalid_argument("probs: length " + std::to_string(probs_.size()) +
                                        " does not match values length " +
                                        std::to_string(values_.size()));
        }
        double total = 0.0;
        for (double p : probs_)
        {
            if (!(p >= 0.0) || !std::isfinite(p))
            {
                throw std::invalid_argument("probs: entries must be finite and nonnegative");
            }
            total += p;
        }
        if (std::abs(total - 1.0) > kProbabilitySumTolerance)
        {
            throw std::invalid_argument("probs: entries sum to " + std::to_string(total) +
                                        ", expected 1");
        }
        for (double v : values_)
        {
            if (!std::isfinite(v))
            {
                throw std::invalid_argument("values: entries must be finite");
            }
        }
    }

    FiniteDistribution FiniteDistribution::point(double value)
    {
        return FiniteDistribution({value}, {1.0});
    }

    FiniteDistribution FiniteDistribution::uniform(std::vector<double> values)
    {
        const std::size_t n = values.size();
        if (n == 0)
        {
            throw std::invalid_argument("values: distribution needs at least one atom");
        }
        std::vector<double> probs(n, 1.0 / static_cast<double>(n));
        // Fold the rounding residue into the last atom so the sum check holds.
        const double total = std::accumulate(probs.begin(), probs.end() - 1, 0.0);
        probs.back() = 1.0 - total;
        return FiniteDistribution(std::move(values), std::move(probs));
    }

    double FiniteDistribution::min_value() const
    {
        return *std::min_element(values_.begin(), values_.end());
    }

    double FiniteDistribution::max_value() const
    {
        return *std::max_element(values_.begin(), values_.end());
    }

    RiskLevel::RiskLevel(double beta) : beta_(beta)
    {
        if (!(beta > 0.0 && beta < 1.0))
        {
            throw std::invalid_argument("beta: must lie strictly inside (0, 1), got " +
                                        std::to_string(beta));
        }
    }

    std::string_view to_string(TailConvention tail)
    {
        switch (tail)
        {
        case TailConvention::LowerTailGains:
            return "lower";
        case TailConvention::PaperLiteral:
            return "paper";
        }
        return "lower";
    }

    TailConvention tail_from_string(std::string_view text)
    {
        if (text == "lower" || text == "LowerTailGains")
        {
            return TailConvention::LowerTailGains;
        }
        if (text == "paper" || text == "PaperLiteral")
        {
            return TailConvention::PaperLiteral;
        }
        throw std::invalid_argument("tail: unknown convention '" + std::string(text) + "'");
    }

    double expectation(const FiniteDistribution &d)
    {
        double acc = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i)
        {
            acc += d.probs()[i] * d.values()[i];
        }
        return acc;
    }

    double value_at_risk(const FiniteDistribution &d, RiskLevel beta)
    {
        const auto atoms = merged_atoms(d);
        double cumulative = 0.0;
        for (const Atom &a : atoms)
        {
            cumulative += a.prob;
            if (cumulative >= beta.value() - kProbabilitySumTolerance)
            {
                return a.value;
            }
        }
        return atoms.back().value;
    }

    double upper_value_at_risk(const FiniteDistribution &d, RiskLevel beta)
    {
        const auto atoms = merged_atoms(d);
        double cumulative = 0.0;
        for (auto it = atoms.rbegin(); it != atoms.rend(); ++it)
        {
            cumulative += it->prob;
            if (cumulative >= beta.value() - kProbabilitySumTolerance)
            {
                return it->value;
            }
        }
        return atoms.front().value;
    }

    double cvar_sorted(const FiniteDistribution &d, RiskLevel beta, TailConvention tail)
    {
        const auto atoms = merged_atoms(d);
        if (tail == TailConvention::LowerTailGains)
        {
            return tail_average(atoms.begin(), atoms.end(), beta.value());
        }
        return tail_average(atoms.rbegin(), atoms.rend(), beta.value());
    }

    double cvar_objective(const FiniteDistribution &d, RiskLevel beta, TailConvention tail,
                          double zeta)
    {
        double expected_excess = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i)
        {
            const double h = d.values()[i];
            const double excess =
                tail == TailConvention::LowerTailGains ? zeta - h : h - zeta;
            expected_excess += d.probs()[i] * std::max(excess, 0.0);
        }
        if (tail == TailConvention::LowerTailGains)
        {
            return zeta - expected_excess / beta.value();
        }
        return zeta + expected_excess / beta.value();
    }

    double cvar_variational(const FiniteDistribution &d, RiskLevel beta, TailConvention tail)
    {
        const bool lower = tail == TailConvention::LowerTailGains;
        double best = lower ? -std::numeric_limits<double>::infinity()
                            : std::numeric_limits<double>::infinity();
        for (double zeta : d.values())
        {
            const double value = cvar_objective(d, beta, tail, zeta);
            best = lower ? std::max(best, value) : std::min(best, value);
        }
        return best;
    }

    double cvar(const FiniteDistribution &d, RiskLevel beta, TailConvention tail)
    {
        if (tail == TailConvention::LowerTailGains)
        {
            return cvar_sorted(d, beta, tail);
        }
        return cvar_variational(d, beta, tail);
    }

    CvarLimitReport cvar_limits_check(const FiniteDistribution &d)
    {
        constexpr double eps = 1e-9;
        const double mean = expectation(d);

        CvarLimitReport report;
        report.risk_neutral_residual =
            std::abs(cvar(d, RiskLevel(1.0 - eps), TailConvention::LowerTailGains) - mean);
        report.risk_averse_residual =
            std::abs(cvar(d, RiskLevel(eps), TailConvention::LowerTailGains) - d.min_value());
        report.tolerance = 1e-6 * (1.0 + std::abs(mean));
        report.passed = report.risk_neutral_residual <= report.tolerance &&
                        report.risk_averse_residual <= report.tolerance;
        return report;
    }

} // namespace riskshield
