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

#ifndef RISKSHIELD_SYSTEM_HPP
#define RISKSHIELD_SYSTEM_HPP

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "riskshield/risk.hpp"
#include "riskshield/rng.hpp"

namespace riskshield
{

    using StateVector = Eigen::VectorXd;
    using ControlVector = Eigen::VectorXd;

    /// Dynamics for one disturbance outcome: x+ = A x + B u + G.
    struct Outcome
    {
        Eigen::MatrixXd A;
        Eigen::MatrixXd B;
        Eigen::VectorXd G;
    };

    /**
     * @brief Linear dynamics driven by a finite, state-independent disturbance.
     *
     * Outcome i occurs with probability probs[i] at every step, independently
     * of the history. Control bounds are carried along because every filter
     * built on the system needs them.
     */
    class LinearStochasticSystem
    {
    public:
        LinearStochasticSystem(std::vector<Outcome> outcomes, std::vector<double> probs,
                               Eigen::VectorXd u_lower, Eigen::VectorXd u_upper);

        /// Shared A, B with additive disturbance samples G_i = w_i.
        static LinearStochasticSystem additive(const Eigen::MatrixXd &A, const Eigen::MatrixXd &B,
                                               const std::vector<Eigen::VectorXd> &disturbances,
                                               std::vector<double> probs,
                                               Eigen::VectorXd u_lower, Eigen::VectorXd u_upper);

        int state_dim() const { return n_; }
        int control_dim() const { return m_; }
        std::size_t num_outcomes() const { return outcomes_.size(); }

        const Outcome &outcome(std::size_t i) const { return outcomes_.at(i); }
        const std::vector<Outcome> &outcomes() const { return outcomes_; }
        const std::vector<double> &probs() const { return probs_; }
        const Eigen::VectorXd &u_lower() const { return u_lower_; }
        const Eigen::VectorXd &u_upper() const { return u_upper_; }

        ControlVector clip(const ControlVector &u) const;
        bool within_bounds(const ControlVector &u, double tol = 0.0) const;

    private:
        int n_;
        int m_;
        std::vector<Outcome> outcomes_;
        std::vector<double> probs_;
        Eigen::VectorXd u_lower_;
        Eigen::VectorXd u_upper_;
    };

    /// A_i x + B_i u + G_i. Throws std::out_of_range for a bad outcome index.
    StateVector step(const LinearStochasticSystem &sys, const StateVector &x,
                     const ControlVector &u, std::size_t outcome_index);

    /// Inverse-CDF draw of an outcome index.
    std::size_t sample_outcome(const LinearStochasticSystem &sys, Rng &rng);

    using ValueFunction = std::function<double(const StateVector &)>;

    /// Distribution of value_fn(x+) over the disturbance outcomes. Atoms keep
    /// the outcome order; ties are not merged here.
    FiniteDistribution successor_value_distribution(const LinearStochasticSystem &sys,
                                                    const StateVector &x, const ControlVector &u,
                                                    const ValueFunction &value_fn);

} // namespace riskshield

#endif // RISKSHIELD_SYSTEM_HPP
