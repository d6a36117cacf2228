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

#ifndef RISKSHIELD_QP_HPP
#define RISKSHIELD_QP_HPP

#include <optional>
#include <string_view>

#include <Eigen/Dense>

namespace riskshield
{

    /// minimize 0.5 z'Pz + q'z  subject to  G z <= g
    struct QpProblem
    {
        Eigen::MatrixXd P;
        Eigen::VectorXd q;
        Eigen::MatrixXd G;
        Eigen::VectorXd g;

        static constexpr int kMaxVariables = 64;
        static constexpr int kMaxConstraints = 256;

        int num_variables() const { return static_cast<int>(q.size()); }
        int num_constraints() const { return static_cast<int>(g.size()); }

        /// Shape, symmetry (1e-10) and PSD (eigenvalue >= -1e-8) checks.
        /// Throws std::invalid_argument.
        void validate() const;

        double objective(const Eigen::VectorXd &z) const;
    };

    enum class QpStatus
    {
        Optimal,
        Infeasible,
        IterLimit,
    };

    std::string_view to_string(QpStatus status);

    struct KktResiduals
    {
        double stationarity = 0.0;    ///< ||P z + q + G' y||_inf
        double primal = 0.0;          ///< ||(G z - g)_+||_inf
        double complementarity = 0.0; ///< max_i |y_i (g - G z)_i|

        double max() const;
    };

    /// Farkas-type certificate: y >= 0, sum(y) = 1, G'y ~ 0 and g'y < 0.
    struct InfeasibilityCertificate
    {
        Eigen::VectorXd y;
        double g_dot_y = 0.0;
        double residual = 0.0;      ///< ||G'y||_inf
        double min_violation = 0.0; ///< smallest achievable max_i (G z - g)_i
    };

    struct QpSettings
    {
        int max_iterations = 10'000;
        /// Target for the scaled residuals inside the interior-point loop.
        double tolerance = 1e-11;
        /// Contract threshold: Optimal requires every KKT residual below
        /// certify_tolerance * (1 + ||q||_inf).
        double certify_tolerance = 1e-6;
        /// Phase-1 decides infeasibility when min_violation exceeds this
        /// (scaled by 1 + ||g||_inf).
        double feasibility_tolerance = 1e-8;
    };

    struct QpSolution
    {
        Eigen::VectorXd z;
        Eigen::VectorXd duals;
        QpStatus status = QpStatus::IterLimit;
        KktResiduals kkt;
        double objective = 0.0;
        int iterations = 0;
        std::optional<InfeasibilityCertificate> certificate;
    };

    /**
     * @brief Dense primal-dual interior-point QP solver.
     *
     * Mehrotra predictor-corrector on the slack form G z + s = g, s >= 0.
     * When the main loop fails to certify, a phase-1 program
     *   min t  s.t.  G z - t <= g,  t >= -1
     * decides feasibility and supplies the certificate.
     */
    QpSolution solve_qp(const QpProblem &problem, const QpSettings &settings = {});

    /// Residuals of an arbitrary primal/dual pair.
    KktResiduals kkt_residuals(const QpProblem &problem, const Eigen::VectorXd &z,
                               const Eigen::VectorXd &duals);

} // namespace riskshield

#endif // RISKSHIELD_QP_HPP
