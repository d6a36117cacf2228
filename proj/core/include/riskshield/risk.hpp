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

#ifndef RISKSHIELD_RISK_HPP
#define RISKSHIELD_RISK_HPP

#include <span>
#include <string_view>
#include <vector>

namespace riskshield
{

    /// Tolerance on the sum of a probability vector.
    inline constexpr double kProbabilitySumTolerance = 1e-12;

    /**
     * @brief A real-valued random variable with finitely many atoms.
     *
     * Atoms are stored exactly as given; equal values are merged only inside
     * the quantile/CVaR routines. Immutable after construction.
     */
    class FiniteDistribution
    {
    public:
        /// Throws std::invalid_argument when the probabilities are not a valid
        /// probability vector or the lengths disagree.
        FiniteDistribution(std::vector<double> values, std::vector<double> probs);

        /// Point mass at @p value.
        static FiniteDistribution point(double value);
        /// Equal mass on every value.
        static FiniteDistribution uniform(std::vector<double> values);

        std::span<const double> values() const { return values_; }
        std::span<const double> probs() const { return probs_; }
        std::size_t size() const { return values_.size(); }

        double min_value() const;
        double max_value() const;

    private:
        std::vector<double> values_;
        std::vector<double> probs_;
    };

    /// Confidence level strictly inside (0, 1).
    class RiskLevel
    {
    public:
        explicit RiskLevel(double beta);
        double value() const { return beta_; }

    private:
        double beta_;
    };

    /**
     * Which tail the risk functional averages.
     *
     * LowerTailGains treats h as a gain (larger is safer) and averages the
     * worst beta-mass of low values. PaperLiteral is the infimum form
     * inf_z E[z + (h - z)_+ / beta], which averages the highest beta-mass.
     */
    enum class TailConvention
    {
        LowerTailGains,
        PaperLiteral,
    };

    std::string_view to_string(TailConvention tail);
    /// Accepts "lower" / "paper" (and the enumerator names).
    TailConvention tail_from_string(std::string_view text);

    double expectation(const FiniteDistribution &d);

    /// Lower beta-quantile: smallest atom v with P(h <= v) >= beta.
    double value_at_risk(const FiniteDistribution &d, RiskLevel beta);

    /// Upper beta-quantile: largest atom v with P(h >= v) >= beta.
    double upper_value_at_risk(const FiniteDistribution &d, RiskLevel beta);

    /// CVaR in the requested convention. LowerTailGains uses the sorted
    /// closed form; PaperLiteral enumerates the infimum over atom values.
    double cvar(const FiniteDistribution &d, RiskLevel beta,
                TailConvention tail = TailConvention::LowerTailGains);

    /// Closed form: average of the beta-mass in the selected tail with the
    /// boundary atom split fractionally.
    double cvar_sorted(const FiniteDistribution &d, RiskLevel beta, TailConvention tail);

    /**
     * Variational form evaluated at every atom.
     *
     * LowerTailGains: max over atoms z of z - E[(z - h)_+] / beta.
     * PaperLiteral:   min over atoms z of z + E[(h - z)_+] / beta.
     * Both objectives are piecewise linear with breakpoints at the atoms, so
     * the extremum is attained at one of them.
     */
    double cvar_variational(const FiniteDistribution &d, RiskLevel beta, TailConvention tail);

    /// The variational objective at a fixed auxiliary value @p zeta.
    double cvar_objective(const FiniteDistribution &d, RiskLevel beta, TailConvention tail,
                          double zeta);

    struct CvarLimitReport
    {
        double risk_neutral_residual = 0.0; ///< |CVaR_{1-eps} - E|
        double risk_averse_residual = 0.0;  ///< |CVaR_{eps} - min|
        double tolerance = 0.0;
        bool passed = false;
    };

    /// Checks the beta -> 1 and beta -> 0 limits of the lower-tail CVaR.
    CvarLimitReport cvar_limits_check(const FiniteDistribution &d);

} // namespace riskshield

#endif // RISKSHIELD_RISK_HPP
