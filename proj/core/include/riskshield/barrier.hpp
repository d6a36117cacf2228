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

#ifndef RISKSHIELD_BARRIER_HPP
#define RISKSHIELD_BARRIER_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "riskshield/risk.hpp"
#include "riskshield/system.hpp"

namespace riskshield
{

    /// h(x) = H x + l with a nonzero row H.
    class LinearBarrier
    {
    public:
        LinearBarrier(Eigen::RowVectorXd H, double l);

        const Eigen::RowVectorXd &H() const { return H_; }
        double l() const { return l_; }
        int dim() const { return static_cast<int>(H_.size()); }

        double evaluate(const StateVector &x) const;
        LinearBarrier negated() const { return LinearBarrier(-H_, -l_); }

    private:
        Eigen::RowVectorXd H_;
        double l_;
    };

    /**
     * @brief Composition tree over linear barriers.
     *
     * Min encodes conjunction of safe sets, Max disjunction, Neg the
     * complement. Nodes are shared and immutable, so copies are cheap.
     */
    class BarrierExpr
    {
    public:
        enum class Kind
        {
            Leaf,
            Min,
            Max,
            Neg,
        };

        BarrierExpr(LinearBarrier leaf); // NOLINT(google-explicit-constructor)

        static BarrierExpr min(std::vector<BarrierExpr> children);
        static BarrierExpr max(std::vector<BarrierExpr> children);
        static BarrierExpr neg(BarrierExpr child);

        Kind kind() const;
        const LinearBarrier &leaf() const;
        const std::vector<BarrierExpr> &children() const;

        /// State dimension shared by every leaf.
        int dim() const;

        /// Throws std::invalid_argument on a dimension mismatch.
        double evaluate(const StateVector &x) const;

    private:
        struct Node;
        explicit BarrierExpr(std::shared_ptr<const Node> node);
        std::shared_ptr<const Node> node_;
    };

    /// alpha in (0,1) and the CVaR confidence level.
    class BarrierCertificate
    {
    public:
        BarrierCertificate(double alpha, RiskLevel beta);
        double alpha() const { return alpha_; }
        RiskLevel beta() const { return beta_; }

    private:
        double alpha_;
        RiskLevel beta_;
    };

    /// CVaR(h(x+)) - alpha h(x). Nonnegative iff the one-step barrier
    /// condition holds at (x, u). Bounds on u are not checked.
    double one_step_cvar_margin(const BarrierExpr &b, const LinearStochasticSystem &sys,
                                const StateVector &x, const ControlVector &u,
                                const BarrierCertificate &cert,
                                TailConvention tail = TailConvention::LowerTailGains);

    /// Raised when an exhaustive scenario tree would exceed its node budget.
    class ResourceLimitError : public std::runtime_error
    {
    public:
        ResourceLimitError(std::uint64_t required, std::uint64_t budget);
        std::uint64_t required() const { return required_; }
        std::uint64_t budget() const { return budget_; }

    private:
        std::uint64_t required_;
        std::uint64_t budget_;
    };

    using Policy = std::function<ControlVector(const StateVector &, int)>;

    struct NestedCvarRow
    {
        int t = 0;
        double nested = 0.0; ///< CVaR_beta composed t times over h(x^t)
        double bound = 0.0;  ///< alpha^t h(x0)
        bool holds = false;  ///< nested >= bound - 1e-9
    };

    struct NestedCvarReport
    {
        std::vector<NestedCvarRow> rows; ///< t = 0..horizon
        double min_one_step_margin = 0.0; ///< over every internal tree node
        std::uint64_t nodes = 0;
        bool all_hold() const;
    };

    inline constexpr std::uint64_t kDefaultNodeBudget = 1'000'000;
    inline constexpr double kNestedFlagTolerance = 1e-9;

    /// Number of leaves |W|^horizon, saturating at UINT64_MAX.
    std::uint64_t scenario_tree_leaves(std::size_t num_outcomes, int horizon);

    /**
     * @brief Exact nested CVaR over the full disturbance scenario tree.
     *
     * The policy is queried once per internal node with (state, depth). Every
     * node value is the lower-tail CVaR of its children, leaves carry h(x^t).
     * All horizons 0..T are produced in a single traversal.
     *
     * Throws ResourceLimitError when |W|^horizon exceeds @p node_budget.
     */
    NestedCvarReport nested_cvar_verify(const BarrierExpr &b, const LinearStochasticSystem &sys,
                                        const Policy &policy, const StateVector &x0,
                                        const BarrierCertificate &cert, int horizon,
                                        std::uint64_t node_budget = kDefaultNodeBudget);

    enum class Composition
    {
        Conjunction,
        Disjunction,
    };

    /// Margin of the min (conjunction) or max (disjunction) composition.
    double composite_condition_check(const std::vector<LinearBarrier> &barriers, Composition mode,
                                     const LinearStochasticSystem &sys, const StateVector &x,
                                     const ControlVector &u, const BarrierCertificate &cert);

} // namespace riskshield

#endif // RISKSHIELD_BARRIER_HPP
