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

#include "riskshield/system.hpp"

#include <stdexcept>
#include <string>

namespace riskshield
{

    LinearStochasticSystem::LinearStochasticSystem(std::vector<Outcome> outcomes,
                                                   std::vector<double> probs,
                                                   Eigen::VectorXd u_lower,
                                                   Eigen::VectorXd u_upper)
        : outcomes_(std::move(outcomes)), probs_(std::move(probs)),
          u_lower_(std::move(u_lower)), u_upper_(std::move(u_upper))
    {
        if (outcomes_.empty())
        {
            throw std::invalid_argument("outcomes: system needs at least one disturbance outcome");
        }
        n_ = static_cast<int>(outcomes_.front().A.rows());
        m_ = static_cast<int>(outcomes_.front().B.cols());
        if (n_ == 0)
        {
            throw std::invalid_argument("A: state dimension must be positive");
        }
        for (std::size_t i = 0; i < outcomes_.size(); ++i)
        {
            const Outcome &o = outcomes_[i];
            const std::string where = "outcome " + std::to_string(i);
            if (o.A.rows() != n_ || o.A.cols() != n_)
            {
                throw std::invalid_argument("A: " + where + " is not " + std::to_string(n_) +
                                            "x" + std::to_string(n_));
            }
            if (o.B.rows() != n_ || o.B.cols() != m_)
            {
                throw std::invalid_argument("B: " + where + " is not " + std::to_string(n_) +
                                            "x" + std::to_string(m_));
            }
            if (o.G.size() != n_)
            {
                throw std::invalid_argument("G: " + where + " has wrong length");
            }
            if (!o.A.allFinite() || !o.B.allFinite() || !o.G.allFinite())
            {
                throw std::invalid_argument("A/B/G: " + where + " has non-finite entries");
            }
        }
        if (probs_.size() != outcomes_.size())
        {
            throw std::invalid_argument("probs: expected one probability per outcome");
        }
        // Reuse the distribution validator for the probability vector.
        FiniteDistribution(std::vector<double>(probs_.size(), 0.0), probs_);

        if (u_lower_.size() != m_ || u_upper_.size() != m_)
        {
            throw std::invalid_argument("u_lower/u_upper: expected length " + std::to_string(m_));
        }
        if ((u_lower_.array() > u_upper_.array()).any())
        {
            throw std::invalid_argument("u_lower: exceeds u_upper in some component");
        }
    }

    LinearStochasticSystem LinearStochasticSystem::additive(
        const Eigen::MatrixXd &A, const Eigen::MatrixXd &B,
        const std::vector<Eigen::VectorXd> &disturbances, std::vector<double> probs,
        Eigen::VectorXd u_lower, Eigen::VectorXd u_upper)
    {
        std::vector<Outcome> outcomes;
        outcomes.reserve(disturbances.size());
        for (const auto &w : disturbances)
        {
            outcomes.push_back({A, B, w});
        }
        return LinearStochasticSystem(std::move(outcomes), std::move(probs), std::move(u_lower),
                                      std::move(u_upper));
    }

    ControlVector LinearStochasticSystem::clip(const ControlVector &u) const
    {
        return u.cwiseMax(u_lower_).cwiseMin(u_upper_);
    }

    bool LinearStochasticSystem::within_bounds(const ControlVector &u, double tol) const
    {
        return ((u - u_lower_).array() >= -tol).all() && ((u_upper_ - u).array() >= -tol).all();
    }

    StateVector step(const LinearStochasticSystem &sys, const StateVector &x,
                     const ControlVector &u, std::size_t outcome_index)
    {
        if (outcome_index >= sys.num_outcomes())
        {
            throw std::out_of_range("outcome index " + std::to_string(outcome_index) +
                                    " out of range for " + std::to_string(sys.num_outcomes()) +
                                    " outcomes");
        }
        const Outcome &o = sys.outcome(outcome_index);
        return o.A * x + o.B * u + o.G;
    }

    std::size_t sample_outcome(const LinearStochasticSystem &sys, Rng &rng)
    {
        const double draw = rng.uniform01();
        const auto &probs = sys.probs();
        double cumulative = 0.0;
        std::size_t last_positive = 0;
        for (std::size_t i = 0; i < probs.size(); ++i)
        {
            if (probs[i] <= 0.0)
            {
                continue;
            }
            last_positive = i;
            cumulative += probs[i];
            if (draw < cumulative)
            {
                return i;
            }
        }
        return last_positive;
    }

    FiniteDistribution successor_value_distribution(const LinearStochasticSystem &sys,
                                                    const StateVector &x, const ControlVector &u,
                                                    const ValueFunction &value_fn)
    {
        std::vector<double> values;
        values.reserve(sys.num_outcomes());
        for (std::size_t i = 0; i < sys.num_outcomes(); ++i)
        {
            values.push_back(value_fn(step(sys, x, u, i)));
        }
        return FiniteDistribution(std::move(values), sys.probs());
    }

} // namespace riskshield
