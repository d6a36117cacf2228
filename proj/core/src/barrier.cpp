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

#include "riskshield/barrier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace riskshield
{

    LinearBarrier::LinearBarrier(Eigen::RowVectorXd H, double l) : H_(std::move(H)), l_(l)
    {
        if (H_.size() == 0)
        {
            throw std::invalid_argument("H: barrier row must be nonempty");
        }
        if (!H_.allFinite() || !std::isfinite(l_))
        {
            throw std::invalid_argument("H: barrier coefficients must be finite");
        }
        if (H_.isZero(0.0))
        {
            throw std::invalid_argument("H: constant barrier (all-zero row) is degenerate");
        }
    }

    double LinearBarrier::evaluate(const StateVector &x) const
    {
        if (x.size() != H_.size())
        {
            throw std::invalid_argument("x: dimension " + std::to_string(x.size()) +
                                        " does not match barrier dimension " +
                                        std::to_string(H_.size()));
        }
        return H_.dot(x) + l_;
    }

    struct BarrierExpr::Node
    {
        Kind kind;
        std::vector<LinearBarrier> leaf; // one element for Leaf nodes
        std::vector<BarrierExpr> children;
        int dim;
    };

    BarrierExpr::BarrierExpr(LinearBarrier leaf)
        : node_(std::make_shared<const Node>(Node{Kind::Leaf, {leaf}, {}, leaf.dim()}))
    {
    }

    BarrierExpr::BarrierExpr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

    namespace
    {
        int common_dim(const std::vector<BarrierExpr> &children)
        {
            if (children.empty())
            {
                throw std::invalid_argument("barrier: composition needs at least one child");
            }
            const int dim = children.front().dim();
            for (const auto &c : children)
            {
                if (c.dim() != dim)
                {
                    throw std::invalid_argument("barrier: children have inconsistent dimensions");
                }
            }
            return dim;
        }
    } // namespace

    BarrierExpr BarrierExpr::min(std::vector<BarrierExpr> children)
    {
        const int dim = common_dim(children);
        return BarrierExpr(std::make_shared<const Node>(Node{Kind::Min, {}, std::move(children), dim}));
    }

    BarrierExpr BarrierExpr::max(std::vector<BarrierExpr> children)
    {
        const int dim = common_dim(children);
        return BarrierExpr(std::make_shared<const Node>(Node{Kind::Max, {}, std::move(children), dim}));
    }

    BarrierExpr BarrierExpr::neg(BarrierExpr child)
    {
        const int dim = child.dim();
        return BarrierExpr(std::make_shared<const Node>(Node{Kind::Neg, {}, {std::move(child)}, dim}));
    }

    BarrierExpr::Kind BarrierExpr::kind() const { return node_->kind; }

    const LinearBarrier &BarrierExpr::leaf() const
    {
        if (node_->kind != Kind::Leaf)
        {
            throw std::logic_error("barrier: leaf() called on a composite node");
        }
        return node_->leaf.front();
    }

    const std::vector<BarrierExpr> &BarrierExpr::children() const { return node_->children; }

    int BarrierExpr::dim() const { return node_->dim; }

    double BarrierExpr::evaluate(const StateVector &x) const
    {
        switch (node_->kind)
        {
        case Kind::Leaf:
            return node_->leaf.front().evaluate(x);
        case Kind::Neg:
            return -node_->children.front().evaluate(x);
        case Kind::Min:
        {
            double v = std::numeric_limits<double>::infinity();
            for (const auto &c : node_->children)
            {
                v = std::min(v, c.evaluate(x));
            }
            return v;
        }
        case Kind::Max:
        {
            double v = -std::numeric_limits<double>::infinity();
            for (const auto &c : node_->children)
            {
                v = std::max(v, c.evaluate(x));
            }
            return v;
        }
        }
        return 0.0;
    }

    BarrierCertificate::BarrierCertificate(double alpha, RiskLevel beta) : alpha_(alpha), beta_(beta)
    {
        if (!(alpha > 0.0 && alpha < 1.0))
        {
            throw std::invalid_argument("alpha: must lie strictly inside (0, 1), got " +
                                        std::to_string(alpha));
        }
    }

    double one_step_cvar_margin(const BarrierExpr &b, const LinearStochasticSystem &sys,
                                const StateVector &x, const ControlVector &u,
                                const BarrierCertificate &cert, TailConvention tail)
    {
        const auto successors = successor_value_distribution(
            sys, x, u, [&b](const StateVector &xn) { return b.evaluate(xn); });
        return cvar(successors, cert.beta(), tail) - cert.alpha() * b.evaluate(x);
    }

    ResourceLimitError::ResourceLimitError(std::uint64_t required, std::uint64_t budget)
        : std::runtime_error("scenario tree needs " + std::to_string(required) +
                             " leaves, budget is " + std::to_string(budget)),
          required_(required), budget_(budget)
    {
    }

    bool NestedCvarReport::all_hold() const
    {
        return std::all_of(rows.begin(), rows.end(), [](const NestedCvarRow &r) { return r.holds; });
    }

    std::uint64_t scenario_tree_leaves(std::size_t num_outcomes, int horizon)
    {
        std::uint64_t leaves = 1;
        for (int t = 0; t < horizon; ++t)
        {
            if (num_outcomes != 0 &&
                leaves > std::numeric_limits<std::uint64_t>::max() / num_outcomes)
            {
                return std::numeric_limits<std::uint64_t>::max();
            }
            leaves *= num_outcomes;
        }
        return leaves;
    }

    namespace
    {
        struct TreeWalker
        {
            const BarrierExpr &barrier;
            const LinearStochasticSystem &sys;
            const Policy &policy;
            const BarrierCertificate &cert;
            int horizon;
            double min_margin = std::numeric_limits<double>::infinity();
            std::uint64_t nodes = 0;

            // values[k] = nested CVaR of h at depth + k, seen from this node.
            std::vector<double> visit(const StateVector &x, int depth)
            {
                ++nodes;
                const int remaining = horizon - depth;
                std::vector<double> values(static_cast<std::size_t>(remaining) + 1);
                values[0] = barrier.evaluate(x);
                if (remaining == 0)
                {
                    return values;
                }

                const ControlVector u = policy(x, depth);
                min_margin = std::min(min_margin, one_step_cvar_margin(barrier, sys, x, u, cert));

                const std::size_t W = sys.num_outcomes();
                std::vector<std::vector<double>> child_values;
                child_values.reserve(W);
                for (std::size_t i = 0; i < W; ++i)
                {
                    child_values.push_back(visit(step(sys, x, u, i), depth + 1));
                }

                std::vector<double> atoms(W);
                for (int k = 1; k <= remaining; ++k)
                {
                    for (std::size_t i = 0; i < W; ++i)
                    {
                        atoms[i] = child_values[i][static_cast<std::size_t>(k) - 1];
                    }
                    values[static_cast<std::size_t>(k)] =
                        cvar(FiniteDistribution(atoms, sys.probs()), cert.beta(),
                             TailConvention::LowerTailGains);
                }
                return values;
            }
        };
    } // namespace

    NestedCvarReport nested_cvar_verify(const BarrierExpr &b, const LinearStochasticSystem &sys,
                                        const Policy &policy, const StateVector &x0,
                                        const BarrierCertificate &cert, int horizon,
                                        std::uint64_t node_budget)
    {
        if (horizon < 0)
        {
            throw std::invalid_argument("horizon: must be nonnegative");
        }
        const std::uint64_t leaves = scenario_tree_leaves(sys.num_outcomes(), horizon);
        if (leaves > node_budget)
        {
            throw ResourceLimitError(leaves, node_budget);
        }

        TreeWalker walker{b, sys, policy, cert, horizon};
        const std::vector<double> nested = walker.visit(x0, 0);
        const double h0 = nested.front();

        NestedCvarReport report;
        report.nodes = walker.nodes;
        report.min_one_step_margin =
            horizon == 0 ? std::numeric_limits<double>::infinity() : walker.min_margin;
        for (int t = 0; t <= horizon; ++t)
        {
            NestedCvarRow row;
            row.t = t;
            row.nested = nested[static_cast<std::size_t>(t)];
            row.bound = std::pow(cert.alpha(), t) * h0;
            row.holds = row.nested >= row.bound - kNestedFlagTolerance;
            report.rows.push_back(row);
        }
        return report;
    }

    double composite_condition_check(const std::vector<LinearBarrier> &barriers, Composition mode,
                                     const LinearStochasticSystem &sys, const StateVector &x,
                                     const ControlVector &u, const BarrierCertificate &cert)
    {
        if (barriers.empty())
        {
            throw std::invalid_argument("barriers: composite condition needs at least one barrier");
        }
        std::vector<BarrierExpr> children(barriers.begin(), barriers.end());
        const BarrierExpr tree = mode == Composition::Conjunction
                                     ? BarrierExpr::min(std::move(children))
                                     : BarrierExpr::max(std::move(children));
        return one_step_cvar_margin(tree, sys, x, u, cert);
    }

} // namespace riskshield
