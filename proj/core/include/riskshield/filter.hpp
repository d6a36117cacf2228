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

#ifndef RISKSHIELD_FILTER_HPP
#define RISKSHIELD_FILTER_HPP

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "riskshield/barrier.hpp"
#include "riskshield/qp.hpp"
#include "riskshield/risk.hpp"
#include "riskshield/rng.hpp"
#include "riskshield/system.hpp"

namespace riskshield
{

    enum class FilterMethod
    {
        EpigraphExact,
        PaperDccp,
    };

    enum class FilterStatus
    {
        Safe,
        InfeasibleFallback,
        SolverFailure,
        Bypassed, ///< rollouts without a filter: u = u_legacy
    };

    enum class InitialPointRule
    {
        ClippedLegacy,
        BoundsMidpoint,
    };

    std::string_view to_string(FilterMethod method);
    std::string_view to_string(FilterStatus status);
    std::string_view to_string(InitialPointRule rule);
    FilterMethod method_from_string(std::string_view text);
    InitialPointRule initial_point_from_string(std::string_view text);

    /// Achieved margins above -kSafeMarginTolerance count as safe.
    inline constexpr double kSafeMarginTolerance = 1e-7;

    struct DccpOptions
    {
        int max_iters = 50;
        double stationarity_tol = 1e-8;
        InitialPointRule initial_point = InitialPointRule::ClippedLegacy;
    };

    struct FilterOptions
    {
        FilterMethod method = FilterMethod::EpigraphExact;
        TailConvention tail = TailConvention::LowerTailGains;
        DccpOptions dccp;
        QpSettings qp;
        /// Added to the right-hand side alpha h(x) so that solver round-off
        /// lands on the safe side of the constraint.
        double margin_backoff = 1e-10;
    };

    struct FilterRequest
    {
        StateVector x;
        ControlVector u_legacy;
        BarrierExpr barrier;
        BarrierCertificate cert;
        FilterOptions options;
    };

    struct DccpIterate
    {
        int k = 0;
        double objective = 0.0;        ///< ||u_k - u_legacy||^2 after the subproblem
        double linearized_residual = 0.0; ///< max_j (q3 - lin_j(u_k))_+
        bool accepted = false;         ///< false for feasibility-restoration steps
    };

    struct FilterResult
    {
        ControlVector u_star;
        double zeta_star = 0.0;
        FilterStatus status = FilterStatus::SolverFailure;
        double objective = 0.0;         ///< ||u* - u_legacy||^2
        double margin = 0.0;            ///< one-step margin in the request's tail convention
        double lower_tail_margin = 0.0; ///< always the lower-tail (gains) margin
        double paper_margin = 0.0;      ///< always the literal infimum-form margin
        int iterations = 0;
        bool converged = false;         ///< stopping test met before max_iters
        bool conservative = false;      ///< a Max branch was fixed during lowering
        double linearized_residual = 0.0;
        std::vector<DccpIterate> dccp_trace;
        std::string message;
    };

    /// A composition tree reduced to "min over linear atoms" at a given state.
    struct LoweredBarrier
    {
        std::vector<LinearBarrier> atoms;
        bool conservative = false;
    };

    /**
     * Pushes negations to the leaves, flattens Min-type nodes, and replaces
     * each Max-type node by the child with the largest value at @p x. The
     * replacement is a lower bound of the original that agrees with it at x,
     * so enforcing the barrier condition on it is sufficient.
     */
    LoweredBarrier lower_barrier(const BarrierExpr &barrier, const StateVector &x);

    /**
     * Epigraph QP of the lower-tail CVaR filter.
     *
     * Variables z = (u, zeta, s_1..s_W). Rows, in order: u <= u_upper,
     * -u <= -u_lower, -s_i <= 0, zeta - s_i - H_a B_i u <= H_a(A_i x + G_i) + l_a
     * for every atom a and outcome i, and -zeta + sum_i p_i s_i / beta <=
     * -alpha h(x). With one atom this is m + 1 + W variables and
     * 2m + 2W + 1 rows.
     */
    QpProblem build_epigraph_qp(const FilterRequest &req, const LinearStochasticSystem &sys);

    /// Minimally interfering safe control. See README for the two methods.
    FilterResult solve_filter(const FilterRequest &req, const LinearStochasticSystem &sys);

    struct TraceRecord
    {
        int t = 0;
        StateVector x;
        ControlVector u_legacy;
        ControlVector u;
        double h = 0.0;      ///< barrier value at x
        double h_next = 0.0; ///< barrier value at the sampled successor
        double margin = 0.0;
        double interference = 0.0; ///< ||u - u_legacy||^2
        FilterStatus status = FilterStatus::Bypassed;
        std::size_t outcome = 0;
    };

    using LegacyLaw = std::function<ControlVector(const StateVector &, int)>;

    class RolloutError : public std::runtime_error
    {
    public:
        RolloutError(int step, const std::string &what);
        int step() const { return step_; }

    private:
        int step_;
    };

    /**
     * Closed-loop simulation. With @p options empty the legacy law drives the
     * system directly and the filter margin is still recorded.
     * Throws RolloutError carrying the step index on any failure.
     */
    std::vector<TraceRecord> filter_rollout(const LinearStochasticSystem &sys,
                                            const BarrierExpr &barrier,
                                            const BarrierCertificate &cert,
                                            const LegacyLaw &legacy_law, const StateVector &x0,
                                            int steps, Rng &rng,
                                            const std::optional<FilterOptions> &options);

} // namespace riskshield

#endif // RISKSHIELD_FILTER_HPP
