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

#ifndef RISKSHIELD_SCENARIO_HPP
#define RISKSHIELD_SCENARIO_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "riskshield/barrier.hpp"
#include "riskshield/filter.hpp"
#include "riskshield/system.hpp"

namespace riskshield
{

    inline constexpr int kScenarioSchemaVersion = 1;

    /// Validation failure that names the offending config field.
    class ConfigError : public std::invalid_argument
    {
    public:
        ConfigError(std::string field, const std::string &message);
        const std::string &field() const { return field_; }

    private:
        std::string field_;
    };

    struct SystemSpec
    {
        /// "s2s_planar" for the built-in step-to-step surrogate, "custom" otherwise.
        std::string template_id = "custom";
        double step_period = 0.4;
        Eigen::MatrixXd A;
        Eigen::MatrixXd B;
        Eigen::VectorXd u_lower;
        Eigen::VectorXd u_upper;
        /// Optional outcome-dependent dynamics. When non-empty it replaces the
        /// additive model (A, B, G_i = disturbance sample i).
        std::vector<Outcome> outcomes;
    };

    struct DisturbanceSpec
    {
        std::vector<Eigen::VectorXd> samples;
        bool uniform = true;
        std::vector<double> probs; ///< used only when uniform == false
        /// Box the samples were drawn from (documentation only once sampled).
        Eigen::VectorXd box_lower;
        Eigen::VectorXd box_upper;
        std::uint64_t seed = 0;
    };

    enum class BarrierComposition
    {
        Single,
        Min,
        Max,
    };

    std::string_view to_string(BarrierComposition c);
    BarrierComposition composition_from_string(std::string_view text);

    struct BarrierAtomSpec
    {
        Eigen::VectorXd H;
        double l = 0.0;
    };

    struct BarrierSpec
    {
        BarrierComposition composition = BarrierComposition::Single;
        std::vector<BarrierAtomSpec> atoms;
    };

    struct CertificateSpec
    {
        double alpha = 0.9;
        double beta = 0.1;
        TailConvention tail = TailConvention::LowerTailGains;
    };

    enum class LegacyType
    {
        ReferenceTracking,
        Constant,
    };

    std::string_view to_string(LegacyType t);
    LegacyType legacy_type_from_string(std::string_view text);

    /**
     * Legacy law. ReferenceTracking, per control j:
     *   r_j(t) = start_j + velocity_j * T * t + amplitude_j * sin(2 pi t / period)
     *   u_j    = velocity_j * T + gain * (r_j(t) - x[position_index_j])
     * clipped to the control bounds. Constant returns constant_u.
     */
    struct LegacySpec
    {
        LegacyType type = LegacyType::ReferenceTracking;
        std::vector<int> position_index;
        Eigen::VectorXd velocity;
        Eigen::VectorXd reference_start;
        Eigen::VectorXd sine_amplitude;
        double sine_period_steps = 20.0;
        double gain = 0.5;
        Eigen::VectorXd constant_u;
    };

    struct FilterSpec
    {
        bool enabled = true;
        FilterMethod method = FilterMethod::EpigraphExact;
        DccpOptions dccp;
    };

    struct ScenarioConfig
    {
        int schema_version = kScenarioSchemaVersion;
        std::string name;
        SystemSpec system;
        DisturbanceSpec disturbance;
        BarrierSpec barrier;
        CertificateSpec certificate;
        LegacySpec legacy;
        FilterSpec filter;
        Eigen::VectorXd x0;
        int steps = 1;
        int num_rollouts = 1;
        std::uint64_t master_seed = 0;
    };

    /// Throws ConfigError naming the first inconsistent field.
    void validate(const ScenarioConfig &cfg);

    LinearStochasticSystem make_system(const ScenarioConfig &cfg);
    BarrierExpr make_barrier(const ScenarioConfig &cfg);
    BarrierCertificate make_certificate(const ScenarioConfig &cfg);
    LegacyLaw make_legacy_law(const ScenarioConfig &cfg);
    /// Empty when the filter is disabled.
    std::optional<FilterOptions> make_filter_options(const ScenarioConfig &cfg);

    enum class BuiltinCase
    {
        Case1,
        Case2,
        Case3,
    };

    BuiltinCase builtin_case_from_string(std::string_view text);
    std::string_view to_string(BuiltinCase c);

    /// Optional knobs for builtin_scenario. Case-specific knobs are rejected
    /// for the other cases.
    struct ScenarioOverrides
    {
        std::optional<double> p_x; ///< Case1 obstacle position
        std::optional<double> k;   ///< Case2 wall slope
        std::optional<double> p;   ///< Case2 wall location
        std::optional<double> p1;  ///< Case3 offsets
        std::optional<double> p2;
        std::optional<double> alpha;
        std::optional<double> beta;
        std::optional<int> num_outcomes;
        std::optional<std::uint64_t> disturbance_seed;
        std::optional<Eigen::VectorXd> box_lower;
        std::optional<Eigen::VectorXd> box_upper;
        std::optional<int> steps;
        std::optional<int> num_rollouts;
        std::optional<std::uint64_t> master_seed;
        std::optional<FilterMethod> method;
        std::optional<bool> filter_enabled;
        std::optional<double> step_period;
        std::optional<double> forward_speed;
    };

    /**
     * Planar step-to-step surrogate. State (c_x, v_x, c_y, v_y), control is
     * the step length per axis. Each axis follows
     *   c+ = c + (T/2) v + s/2,   v+ = s / T
     * plus the additive disturbance.
     */
    void s2s_planar_matrices(double step_period, Eigen::MatrixXd &A, Eigen::MatrixXd &B);

    ScenarioConfig builtin_scenario(BuiltinCase which, const ScenarioOverrides &overrides = {});

    struct FailedRollout
    {
        int index = 0;
        int step = 0;
        std::string message;
    };

    struct ViolationReport
    {
        int num_rollouts = 0;
        std::vector<double> min_barrier; ///< per rollout, over x_0..x_T (NaN if failed)
        int violation_count = 0;
        double violation_rate = 0.0;
        int worst_rollout = -1;
        double worst_min_barrier = 0.0;
        std::vector<FailedRollout> failed;
        int infeasible_steps = 0;
        int solver_failure_steps = 0;
        double mean_interference = 0.0; ///< mean ||u - u_legacy||^2 over all steps
        double mean_margin = 0.0;
        double runtime_seconds = 0.0;
    };

    struct MonteCarloResult
    {
        ViolationReport report;
        std::vector<std::vector<TraceRecord>> traces; ///< by rollout index
    };

    /// Seeds rollout r with derive_seed(master_seed, r). Rollouts run on
    /// @p threads workers (0 = hardware concurrency); results do not depend
    /// on the thread count.
    MonteCarloResult run_monte_carlo_traces(const ScenarioConfig &cfg, unsigned threads = 0);
    ViolationReport run_monte_carlo(const ScenarioConfig &cfg, unsigned threads = 0);

    struct SweepRow
    {
        double beta = 0.0;
        ViolationReport report;
    };

    /// One Monte Carlo batch per beta at identical seeds.
    std::vector<SweepRow> sweep_beta(const ScenarioConfig &cfg, const std::vector<double> &betas,
                                     unsigned threads = 0);

} // namespace riskshield

#endif // RISKSHIELD_SCENARIO_HPP
