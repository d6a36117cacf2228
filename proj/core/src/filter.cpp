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

#include "riskshield/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace riskshield
{

    std::string_view to_string(FilterMethod method)
    {
        return method == FilterMethod::EpigraphExact ? "epigraph" : "dccp";
    }

    std::string_view to_string(FilterStatus status)
    {
        switch (status)
        {
        case FilterStatus::Safe:
            return "Safe";
        case FilterStatus::InfeasibleFallback:
            return "InfeasibleFallback";
        case FilterStatus::SolverFailure:
            return "SolverFailure";
        case FilterStatus::Bypassed:
            return "Bypassed";
        }
        return "SolverFailure";
    }

    std::string_view to_string(InitialPointRule rule)
    {
        return rule == InitialPointRule::ClippedLegacy ? "clipped_legacy" : "bounds_midpoint";
    }

    FilterMethod method_from_string(std::string_view text)
    {
        if (text == "epigraph" || text == "EpigraphExact")
        {
            return FilterMethod::EpigraphExact;
        }
        if (text == "dccp" || text == "PaperDccp")
        {
            return FilterMethod::PaperDccp;
        }
        throw std::invalid_argument("method: expected 'epigraph' or 'dccp', got '" +
                                    std::string(text) + "'");
    }

    InitialPointRule initial_point_from_string(std::string_view text)
    {
        if (text == "clipped_legacy")
        {
            return InitialPointRule::ClippedLegacy;
        }
        if (text == "bounds_midpoint")
        {
            return InitialPointRule::BoundsMidpoint;
        }
        throw std::invalid_argument("initial_point: unknown rule '" + std::string(text) + "'");
    }

    RolloutError::RolloutError(int step, const std::string &what)
        : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step)
    {
    }

    namespace
    {
        void lower_into(const BarrierExpr &e, const StateVector &x, bool negate, LoweredBarrier &out)
        {
            using Kind = BarrierExpr::Kind;
            switch (e.kind())
            {
            case Kind::Leaf:
                out.atoms.push_back(negate ? e.leaf().negated() : e.leaf());
                return;
            case Kind::Neg:
                lower_into(e.children().front(), x, !negate, out);
                return;
            case Kind::Min:
            case Kind::Max:
                break;
            }

            const bool min_type = (e.kind() == Kind::Min) != negate;
            if (min_type)
            {
                for (const auto &c : e.children())
                {
                    lower_into(c, x, negate, out);
                }
                return;
            }

            const auto &children = e.children();
            std::size_t best = 0;
            double best_value = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < children.size(); ++i)
            {
                const double v = negate ? -children[i].evaluate(x) : children[i].evaluate(x);
                if (v > best_value)
                {
                    best_value = v;
                    best = i;
                }
            }
            if (children.size() > 1)
            {
                out.conservative = true;
            }
            lower_into(children[best], x, negate, out);
        }

        void check_request(const FilterRequest &req, const LinearStochasticSystem &sys)
        {
            if (req.x.size() != sys.state_dim())
            {
                throw std::invalid_argument("x: expected length " + std::to_string(sys.state_dim()));
            }
            if (req.u_legacy.size() != sys.control_dim())
            {
                throw std::invalid_argument("u_legacy: expected length " +
                                            std::to_string(sys.control_dim()));
            }
            if (req.barrier.dim() != sys.state_dim())
            {
                throw std::invalid_argument("barrier: dimension does not match the system");
            }
        }

        double min_atom_value(const LoweredBarrier &lowered, const StateVector &x)
        {
            double v = std::numeric_limits<double>::infinity();
            for (const auto &a : lowered.atoms)
            {
                v = std::min(v, a.evaluate(x));
            }
            return v;
        }

        // Rows shared by the epigraph QP and its phase-1 variant. Column
        // layout: u (m), zeta, s (W), then @p extra trailing columns.
        QpProblem epigraph_rows(const FilterRequest &req, const LinearStochasticSystem &sys,
                                const LoweredBarrier &lowered, int extra)
        {
            const int m = sys.control_dim();
            const int W = static_cast<int>(sys.num_outcomes());
            const int k = static_cast<int>(lowered.atoms.size());
            const int d = m + 1 + W + extra;
            const int c = 2 * m + W + k * W + 1;
            const int zeta = m;
            const int s0 = m + 1;
            const double beta = req.cert.beta().value();

            QpProblem p;
            p.P = Eigen::MatrixXd::Zero(d, d);
            p.q = Eigen::VectorXd::Zero(d);
            p.G = Eigen::MatrixXd::Zero(c, d);
            p.g = Eigen::VectorXd::Zero(c);

            int r = 0;
            for (int j = 0; j < m; ++j, ++r)
            {
                p.G(r, j) = 1.0;
                p.g[r] = sys.u_upper()[j];
            }
            for (int j = 0; j < m; ++j, ++r)
            {
                p.G(r, j) = -1.0;
                p.g[r] = -sys.u_lower()[j];
            }
            for (int i = 0; i < W; ++i, ++r)
            {
                p.G(r, s0 + i) = -1.0;
            }
            for (const LinearBarrier &atom : lowered.atoms)
            {
                for (int i = 0; i < W; ++i, ++r)
                {
                    const Outcome &o = sys.outcome(static_cast<std::size_t>(i));
                    p.G(r, zeta) = 1.0;
                    p.G(r, s0 + i) = -1.0;
                    p.G.row(r).head(m) = -(atom.H() * o.B);
                    p.g[r] = atom.H().dot(o.A * req.x + o.G) + atom.l();
                }
            }
            p.G(r, zeta) = -1.0;
            for (int i = 0; i < W; ++i)
            {
                p.G(r, s0 + i) = sys.probs()[static_cast<std::size_t>(i)] / beta;
            }
            p.g[r] = -(req.cert.alpha() * min_atom_value(lowered, req.x) + req.options.margin_backoff);

            // Slacks of zero-probability outcomes do not enter the CVaR row and
            // would otherwise be unbounded above on the optimal face.
            for (int i = 0; i < W; ++i)
            {
                if (sys.probs()[static_cast<std::size_t>(i)] <= 0.0)
                {
                    p.P(s0 + i, s0 + i) = 1e-9;
                }
            }
            return p;
        }

        void fill_margins(FilterResult &res, const FilterRequest &req,
                          const LinearStochasticSystem &sys)
        {
            res.objective = (res.u_star - req.u_legacy).squaredNorm();
            res.lower_tail_margin = one_step_cvar_margin(req.barrier, sys, req.x, res.u_star,
                                                         req.cert, TailConvention::LowerTailGains);
            res.paper_margin = one_step_cvar_margin(req.barrier, sys, req.x, res.u_star, req.cert,
                                                    TailConvention::PaperLiteral);
            res.margin = req.options.tail == TailConvention::LowerTailGains ? res.lower_tail_margin
                                                                            : res.paper_margin;
            const auto successors = successor_value_distribution(
                sys, req.x, res.u_star, [&](const StateVector &xn) { return req.barrier.evaluate(xn); });
            res.zeta_star = req.options.tail == TailConvention::LowerTailGains
                                ? value_at_risk(successors, req.cert.beta())
                                : upper_value_at_risk(successors, req.cert.beta());
        }

        // The barrier module, not the QP residual, decides whether a point is safe.
        void settle_safe_status(FilterResult &res)
        {
            if (res.margin >= -kSafeMarginTolerance)
            {
                res.status = FilterStatus::Safe;
            }
            else
            {
                res.status = FilterStatus::SolverFailure;
                res.message = "solver returned a point that fails the post-hoc margin check";
            }
        }

        ControlVector phase_one_control(const FilterRequest &req, const LinearStochasticSystem &sys,
                                        const LoweredBarrier &lowered)
        {
            const int m = sys.control_dim();
            QpProblem p = epigraph_rows(req, sys, lowered, 1);
            const int d = p.num_variables();
            const int v = d - 1;
            const int c = p.num_constraints();

            // Relax the CVaR row by v >= 0 and add the row -v <= 0.
            p.G(c - 1, v) = -1.0;
            p.G.conservativeResize(c + 1, Eigen::NoChange);
            p.G.row(c).setZero();
            p.G(c, v) = -1.0;
            p.g.conservativeResize(c + 1);
            p.g[c] = 0.0;

            // Minimize the violation; a small pull toward u_legacy breaks ties.
            constexpr double tie_weight = 1e-6;
            p.q[v] = 1.0;
            p.P.topLeftCorner(m, m).diagonal().setConstant(2.0 * tie_weight);
            p.q.head(m) = -2.0 * tie_weight * req.u_legacy;

            const QpSolution sol = solve_qp(p, req.options.qp);
            if (sol.status == QpStatus::Optimal)
            {
                return sys.clip(sol.z.head(m));
            }
            return sys.clip(req.u_legacy);
        }

        FilterResult solve_epigraph(const FilterRequest &req, const LinearStochasticSystem &sys)
        {
            const LoweredBarrier lowered = lower_barrier(req.barrier, req.x);
            const QpProblem qp = build_epigraph_qp(req, sys);
            const QpSolution sol = solve_qp(qp, req.options.qp);

            FilterResult res;
            res.conservative = lowered.conservative;
            res.iterations = sol.iterations;
            res.converged = sol.status != QpStatus::IterLimit;
            const int m = sys.control_dim();
            switch (sol.status)
            {
            case QpStatus::Optimal:
                res.u_star = sys.clip(sol.z.head(m));
                fill_margins(res, req, sys);
                settle_safe_status(res);
                break;
            case QpStatus::Infeasible:
                res.u_star = phase_one_control(req, sys, lowered);
                fill_margins(res, req, sys);
                res.status = FilterStatus::InfeasibleFallback;
                res.message = "no control within bounds satisfies the barrier condition";
                break;
            case QpStatus::IterLimit:
                res.u_star = sys.clip(sol.z.head(m));
                fill_margins(res, req, sys);
                res.status = FilterStatus::SolverFailure;
                res.message = "QP solver hit its iteration limit";
                break;
            }
            return res;
        }

        // Literal DC form with a single linear atom. The inner infimum over
        // zeta is attained at an atom value v_j(u), so the constraint is
        // f_j(u) >= q3 for every j, with the convex function
        //   f_j(u) = v_j(u) + (1/beta) sum_i p_i (v_i(u) - v_j(u))_+.
        // Each f_j is replaced by its supporting affine minorant at u_k.
        struct LiteralDcForm
        {
            Eigen::VectorXd offsets; // c_i: value of atom at outcome i with u = 0
            Eigen::MatrixXd slopes;  // row i: b_i = H B_i
            std::vector<double> probs;
            double beta;
            double q3;

            double value(std::size_t i, const ControlVector &u) const
            {
                return offsets[static_cast<Eigen::Index>(i)] + slopes.row(static_cast<Eigen::Index>(i)).dot(u);
            }

            double f(std::size_t j, const ControlVector &u) const
            {
                const double vj = value(j, u);
                double acc = 0.0;
                for (std::size_t i = 0; i < probs.size(); ++i)
                {
                    acc += probs[i] * std::max(value(i, u) - vj, 0.0);
                }
                return vj + acc / beta;
            }

            // Active-piece subgradient: slope when the argument is positive,
            // zero when negative or exactly zero.
            Eigen::RowVectorXd subgradient(std::size_t j, const ControlVector &u) const
            {
                const double vj = value(j, u);
                Eigen::RowVectorXd grad = slopes.row(static_cast<Eigen::Index>(j));
                for (std::size_t i = 0; i < probs.size(); ++i)
                {
                    if (value(i, u) - vj > 0.0)
                    {
                        grad += (probs[i] / beta) *
                                (slopes.row(static_cast<Eigen::Index>(i)) -
                                 slopes.row(static_cast<Eigen::Index>(j)));
                    }
                }
                return grad;
            }
        };

        struct Linearization
        {
            Eigen::MatrixXd grads; // row j
            Eigen::VectorXd consts; // lin_j(u) = consts_j + grads_j u
        };

        Linearization linearize(const LiteralDcForm &form, const ControlVector &uk)
        {
            const std::size_t W = form.probs.size();
            Linearization lin;
            lin.grads.resize(static_cast<Eigen::Index>(W), uk.size());
            lin.consts.resize(static_cast<Eigen::Index>(W));
            for (std::size_t j = 0; j < W; ++j)
            {
                const Eigen::RowVectorXd gj = form.subgradient(j, uk);
                lin.grads.row(static_cast<Eigen::Index>(j)) = gj;
                lin.consts[static_cast<Eigen::Index>(j)] = form.f(j, uk) - gj.dot(uk);
            }
            return lin;
        }

        double linearized_violation(const Linearization &lin, double q3, const ControlVector &u)
        {
            const Eigen::VectorXd values = lin.consts + lin.grads * u;
            return std::max(0.0, (Eigen::VectorXd::Constant(values.size(), q3) - values).maxCoeff());
        }

        QpProblem dccp_subproblem(const Linearization &lin, double q3, const FilterRequest &req,
                                  const LinearStochasticSystem &sys)
        {
            const int m = sys.control_dim();
            const auto W = lin.grads.rows();
            QpProblem p;
            p.P = 2.0 * Eigen::MatrixXd::Identity(m, m);
            p.q = -2.0 * req.u_legacy;
            p.G = Eigen::MatrixXd::Zero(2 * m + W, m);
            p.g = Eigen::VectorXd::Zero(2 * m + W);
            p.G.topRows(m) = Eigen::MatrixXd::Identity(m, m);
            p.g.head(m) = sys.u_upper();
            p.G.middleRows(m, m) = -Eigen::MatrixXd::Identity(m, m);
            p.g.segment(m, m) = -sys.u_lower();
            p.G.bottomRows(W) = -lin.grads;
            p.g.tail(W) = lin.consts.array() - q3;
            return p;
        }

        // min v + eps ||u - u_k||^2  s.t. bounds, lin_j(u) + v >= q3, v >= 0
        QpProblem restoration_subproblem(const Linearization &lin, double q3,
                                         const ControlVector &uk, const LinearStochasticSystem &sys)
        {
            constexpr double prox = 1e-6;
            const int m = sys.control_dim();
            const auto W = lin.grads.rows();
            QpProblem p;
            p.P = Eigen::MatrixXd::Zero(m + 1, m + 1);
            p.P.topLeftCorner(m, m).diagonal().setConstant(2.0 * prox);
            p.q = Eigen::VectorXd::Zero(m + 1);
            p.q.head(m) = -2.0 * prox * uk;
            p.q[m] = 1.0;
            p.G = Eigen::MatrixXd::Zero(2 * m + W + 1, m + 1);
            p.g = Eigen::VectorXd::Zero(2 * m + W + 1);
            p.G.topLeftCorner(m, m) = Eigen::MatrixXd::Identity(m, m);
            p.g.head(m) = sys.u_upper();
            p.G.block(m, 0, m, m) = -Eigen::MatrixXd::Identity(m, m);
            p.g.segment(m, m) = -sys.u_lower();
            p.G.block(2 * m, 0, W, m) = -lin.grads;
            p.G.block(2 * m, m, W, 1).setConstant(-1.0);
            p.g.segment(2 * m, W) = lin.consts.array() - q3;
            p.G(2 * m + W, m) = -1.0;
            return p;
        }

        FilterResult solve_literal_dccp(const FilterRequest &req, const LinearStochasticSystem &sys)
        {
            const LoweredBarrier lowered = lower_barrier(req.barrier, req.x);
            if (lowered.atoms.size() != 1)
            {
                throw std::invalid_argument(
                    "barrier: the literal DC form needs a single linear atom after lowering");
            }
            const LinearBarrier &atom = lowered.atoms.front();
            const std::size_t W = sys.num_outcomes();
            const int m = sys.control_dim();

            LiteralDcForm form;
            form.offsets.resize(static_cast<Eigen::Index>(W));
            form.slopes.resize(static_cast<Eigen::Index>(W), m);
            for (std::size_t i = 0; i < W; ++i)
            {
                const Outcome &o = sys.outcome(i);
                form.offsets[static_cast<Eigen::Index>(i)] = atom.H().dot(o.A * req.x + o.G) + atom.l();
                form.slopes.row(static_cast<Eigen::Index>(i)) = atom.H() * o.B;
            }
            form.probs = sys.probs();
            form.beta = req.cert.beta().value();
            form.q3 = req.cert.alpha() * atom.evaluate(req.x) + req.options.margin_backoff;

            const DccpOptions &opt = req.options.dccp;
            ControlVector uk = opt.initial_point == InitialPointRule::ClippedLegacy
                                   ? sys.clip(req.u_legacy)
                                   : ControlVector(0.5 * (sys.u_lower() + sys.u_upper()));

            FilterResult res;
            res.conservative = lowered.conservative;
            bool converged = false;
            bool stalled = false;
            bool failed = false;
            bool last_accepted = false;

            for (int k = 0; k < opt.max_iters; ++k)
            {
                const Linearization lin = linearize(form, uk);
                const QpSolution sol = solve_qp(dccp_subproblem(lin, form.q3, req, sys), req.options.qp);
                res.iterations = k + 1;

                if (sol.status == QpStatus::IterLimit)
                {
                    failed = true;
                    break;
                }

                ControlVector next;
                DccpIterate rec;
                rec.k = k + 1;
                if (sol.status == QpStatus::Optimal)
                {
                    next = sys.clip(sol.z);
                    rec.accepted = true;
                }
                else
                {
                    const QpSolution fix =
                        solve_qp(restoration_subproblem(lin, form.q3, uk, sys), req.options.qp);
                    if (fix.status != QpStatus::Optimal)
                    {
                        failed = true;
                        break;
                    }
                    next = sys.clip(fix.z.head(m));
                }
                rec.objective = (next - req.u_legacy).squaredNorm();
                rec.linearized_residual = linearized_violation(lin, form.q3, next);
                res.dccp_trace.push_back(rec);
                res.linearized_residual = rec.linearized_residual;
                last_accepted = rec.accepted;

                const double move = (next - uk).norm();
                uk = next;
                if (move <= opt.stationarity_tol)
                {
                    if (rec.accepted)
                    {
                        converged = true;
                    }
                    else
                    {
                        stalled = true;
                    }
                    break;
                }
            }

            res.u_star = uk;
            res.converged = converged;
            fill_margins(res, req, sys);
            if (failed)
            {
                res.status = FilterStatus::SolverFailure;
                res.message = "QP subproblem failed inside the convex-concave iteration";
            }
            else if (stalled || !last_accepted)
            {
                res.status = FilterStatus::InfeasibleFallback;
                res.message = "convex-concave iteration could not reach the feasible set";
            }
            else
            {
                if (!converged)
                {
                    res.message = "convex-concave iteration stopped at max_iters";
                }
                settle_safe_status(res);
            }
            return res;
        }
    } // namespace

    LoweredBarrier lower_barrier(const BarrierExpr &barrier, const StateVector &x)
    {
        LoweredBarrier out;
        lower_into(barrier, x, false, out);
        return out;
    }

    QpProblem build_epigraph_qp(const FilterRequest &req, const LinearStochasticSystem &sys)
    {
        check_request(req, sys);
        const LoweredBarrier lowered = lower_barrier(req.barrier, req.x);
        QpProblem p = epigraph_rows(req, sys, lowered, 0);
        const int m = sys.control_dim();
        p.P.topLeftCorner(m, m).diagonal().setConstant(2.0);
        p.q.head(m) = -2.0 * req.u_legacy;
        return p;
    }

    FilterResult solve_filter(const FilterRequest &req, const LinearStochasticSystem &sys)
    {
        check_request(req, sys);
        const bool lower = req.options.tail == TailConvention::LowerTailGains;
        if (req.options.method == FilterMethod::EpigraphExact)
        {
            if (!lower)
            {
                throw std::invalid_argument(
                    "tail: the epigraph QP is exact only for the lower-tail convention");
            }
            return solve_epigraph(req, sys);
        }

        if (lower)
        {
            // The lower-tail constraint has no concave part: the convexified
            // subproblem does not depend on the linearization point and the
            // iteration ends after one solve.
            FilterResult res = solve_epigraph(req, sys);
            res.iterations = 1;
            res.dccp_trace.push_back({1, res.objective, 0.0, res.status == FilterStatus::Safe});
            return res;
        }
        return solve_literal_dccp(req, sys);
    }

    std::vector<TraceRecord> filter_rollout(const LinearStochasticSystem &sys,
                                            const BarrierExpr &barrier,
                                            const BarrierCertificate &cert,
                                            const LegacyLaw &legacy_law, const StateVector &x0,
                                            int steps, Rng &rng,
                                            const std::optional<FilterOptions> &options)
    {
        if (steps < 1)
        {
            throw std::invalid_argument("steps: must be at least 1");
        }
        std::vector<TraceRecord> trace;
        trace.reserve(static_cast<std::size_t>(steps));
        StateVector x = x0;
        for (int t = 0; t < steps; ++t)
        {
            try
            {
                TraceRecord rec;
                rec.t = t;
                rec.x = x;
                rec.u_legacy = legacy_law(x, t);
                rec.h = barrier.evaluate(x);
                if (options)
                {
                    const FilterRequest req{x, rec.u_legacy, barrier, cert, *options};
                    const FilterResult res = solve_filter(req, sys);
                    rec.u = res.u_star;
                    rec.margin = res.margin;
                    rec.status = res.status;
                }
                else
                {
                    rec.u = rec.u_legacy;
                    rec.margin = one_step_cvar_margin(barrier, sys, x, rec.u, cert);
                    rec.status = FilterStatus::Bypassed;
                }
                rec.interference = (rec.u - rec.u_legacy).squaredNorm();
                rec.outcome = sample_outcome(sys, rng);
                x = step(sys, x, rec.u, rec.outcome);
                rec.h_next = barrier.evaluate(x);
                trace.push_back(std::move(rec));
            }
            catch (const RolloutError &)
            {
                throw;
            }
            catch (const std::exception &e)
            {
                throw RolloutError(t, e.what());
            }
        }
        return trace;
    }

} // namespace riskshield
