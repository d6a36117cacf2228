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

#include "riskshield/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace riskshield
{

    void QpProblem::validate() const
    {
        const Eigen::Index d = q.size();
        const Eigen::Index c = g.size();
        if (d == 0)
        {
            throw std::invalid_argument("q: problem has no variables");
        }
        if (P.rows() != d || P.cols() != d)
        {
            throw std::invalid_argument("P: expected " + std::to_string(d) + "x" + std::to_string(d));
        }
        if (G.rows() != c || (c > 0 && G.cols() != d))
        {
            throw std::invalid_argument("G: expected " + std::to_string(c) + "x" + std::to_string(d));
        }
        if (d > kMaxVariables || c > kMaxConstraints)
        {
            throw std::invalid_argument("q: problem exceeds the dense solver limits (" +
                                        std::to_string(d) + " variables, " + std::to_string(c) +
                                        " constraints)");
        }
        if (!P.allFinite() || !q.allFinite() || !G.allFinite() || !g.allFinite())
        {
            throw std::invalid_argument("P/q/G/g: non-finite entries");
        }
        if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-10)
        {
            throw std::invalid_argument("P: matrix is not symmetric");
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(P, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() < -1e-8)
        {
            throw std::invalid_argument("P: matrix is not positive semidefinite (min eigenvalue " +
                                        std::to_string(eig.eigenvalues().minCoeff()) + ")");
        }
    }

    double QpProblem::objective(const Eigen::VectorXd &z) const
    {
        return 0.5 * z.dot(P * z) + q.dot(z);
    }

    std::string_view to_string(QpStatus status)
    {
        switch (status)
        {
        case QpStatus::Optimal:
            return "Optimal";
        case QpStatus::Infeasible:
            return "Infeasible";
        case QpStatus::IterLimit:
            return "IterLimit";
        }
        return "IterLimit";
    }

    double KktResiduals::max() const
    {
        return std::max({stationarity, primal, complementarity});
    }

    KktResiduals kkt_residuals(const QpProblem &problem, const Eigen::VectorXd &z,
                               const Eigen::VectorXd &duals)
    {
        KktResiduals r;
        Eigen::VectorXd grad = problem.P * z + problem.q;
        if (problem.num_constraints() > 0)
        {
            grad += problem.G.transpose() * duals;
            const Eigen::VectorXd slack = problem.g - problem.G * z;
            r.primal = (-slack).cwiseMax(0.0).maxCoeff();
            r.complementarity = duals.cwiseProduct(slack).cwiseAbs().maxCoeff();
        }
        r.stationarity = grad.cwiseAbs().maxCoeff();
        return r;
    }

    namespace
    {
        struct IpmResult
        {
            Eigen::VectorXd z;
            Eigen::VectorXd lambda;
            int iterations = 0;
            bool converged = false;
        };

        double step_to_boundary(const Eigen::VectorXd &v, const Eigen::VectorXd &dv)
        {
            double alpha = 1.0;
            for (Eigen::Index i = 0; i < v.size(); ++i)
            {
                if (dv[i] < 0.0)
                {
                    alpha = std::min(alpha, -v[i] / dv[i]);
                }
            }
            return alpha;
        }

        IpmResult interior_point(const Eigen::MatrixXd &P, const Eigen::VectorXd &q,
                                 const Eigen::MatrixXd &G, const Eigen::VectorXd &g,
                                 double tolerance, int max_iterations)
        {
            const Eigen::Index d = q.size();
            const Eigen::Index c = g.size();
            const double q_scale = 1.0 + (d > 0 ? q.cwiseAbs().maxCoeff() : 0.0);
            const double g_scale = 1.0 + g.cwiseAbs().maxCoeff();

            // Least-squares start: minimize 0.5 z'Pz + q'z + 0.5 ||G z - g||^2,
            // then shift slacks and multipliers into the interior.
            Eigen::MatrixXd K0 = P + G.transpose() * G;
            K0.diagonal().array() += 1e-8 * (1.0 + K0.diagonal().cwiseAbs().maxCoeff());
            Eigen::VectorXd z = K0.ldlt().solve(G.transpose() * g - q);
            if (!z.allFinite())
            {
                z.setZero();
            }
            Eigen::VectorXd s = g - G * z;
            Eigen::VectorXd lambda = -s;
            const double shift_s = std::max(0.0, -s.minCoeff()) + 1.0;
            const double shift_l = std::max(0.0, -lambda.minCoeff()) + 1.0;
            s.array() += shift_s;
            lambda.array() += shift_l;

            IpmResult best{z, lambda, 0, false};
            double best_merit = std::numeric_limits<double>::infinity();
            int stalled = 0;

            Eigen::MatrixXd K(d, d);
            Eigen::LDLT<Eigen::MatrixXd> ldlt;

            for (int it = 0; it < max_iterations; ++it)
            {
                const Eigen::VectorXd r_d = P * z + q + G.transpose() * lambda;
                const Eigen::VectorXd r_p = G * z + s - g;
                const double mu = s.dot(lambda) / static_cast<double>(c);

                const double merit = std::max({r_d.cwiseAbs().maxCoeff() / q_scale,
                                               r_p.cwiseAbs().maxCoeff() / g_scale, mu});
                if (!std::isfinite(merit))
                {
                    break;
                }
                if (merit < best_merit)
                {
                    best_merit = merit;
                    best.z = z;
                    best.lambda = lambda;
                    best.iterations = it;
                }
                if (merit <= tolerance)
                {
                    best.converged = true;
                    return best;
                }
                if (z.cwiseAbs().maxCoeff() > 1e14 || lambda.cwiseAbs().maxCoeff() > 1e14)
                {
                    break; // diverging: infeasible or unbounded
                }

                const Eigen::VectorXd w = lambda.cwiseQuotient(s);
                K = P + G.transpose() * w.asDiagonal() * G;
                const double reg = 1e-13 * (1.0 + K.diagonal().cwiseAbs().maxCoeff());
                Eigen::MatrixXd K_reg = K;
                K_reg.diagonal().array() += reg;
                ldlt.compute(K_reg);

                auto direction = [&](const Eigen::VectorXd &r_c, Eigen::VectorXd &dz,
                                     Eigen::VectorXd &ds, Eigen::VectorXd &dl)
                {
                    const Eigen::VectorXd rhs =
                        -r_d - G.transpose() * (lambda.cwiseProduct(r_p) - r_c).cwiseQuotient(s);
                    dz = ldlt.solve(rhs);
                    dz += ldlt.solve(rhs - K * dz); // one step of iterative refinement
                    ds = -r_p - G * dz;
                    dl = (-r_c - lambda.cwiseProduct(ds)).cwiseQuotient(s);
                };

                Eigen::VectorXd dz, ds, dl;
                const Eigen::VectorXd r_c_aff = s.cwiseProduct(lambda);
                direction(r_c_aff, dz, ds, dl);
                const double alpha_aff = std::min(step_to_boundary(s, ds), step_to_boundary(lambda, dl));
                const double mu_aff =
                    (s + alpha_aff * ds).dot(lambda + alpha_aff * dl) / static_cast<double>(c);
                const double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);

                const Eigen::VectorXd r_c =
                    r_c_aff + ds.cwiseProduct(dl) - Eigen::VectorXd::Constant(c, sigma * mu);
                direction(r_c, dz, ds, dl);
                const double alpha =
                    std::min(1.0, 0.99 * std::min(step_to_boundary(s, ds), step_to_boundary(lambda, dl)));

                z += alpha * dz;
                s += alpha * ds;
                lambda += alpha * dl;
                // Keep strictly interior in the face of rounding.
                s = s.cwiseMax(1e-300);
                lambda = lambda.cwiseMax(1e-300);

                stalled = alpha < 1e-10 ? stalled + 1 : 0;
                if (stalled >= 5)
                {
                    break;
                }
            }
            return best;
        }

        bool certified(const KktResiduals &r, const QpProblem &p, const QpSettings &settings)
        {
            const double scale = 1.0 + (p.q.size() > 0 ? p.q.cwiseAbs().maxCoeff() : 0.0);
            return r.max() <= settings.certify_tolerance * scale;
        }

        // min t  s.t.  G z - t <= g,  -t <= 1, with a vanishing proximal term on z.
        InfeasibilityCertificate phase_one(const QpProblem &p, const QpSettings &settings,
                                           Eigen::VectorXd &z_out)
        {
            const Eigen::Index d = p.num_variables();
            const Eigen::Index c = p.num_constraints();

            Eigen::MatrixXd P1 = Eigen::MatrixXd::Zero(d + 1, d + 1);
            P1.topLeftCorner(d, d).diagonal().setConstant(1e-10);
            Eigen::VectorXd q1 = Eigen::VectorXd::Zero(d + 1);
            q1[d] = 1.0;
            Eigen::MatrixXd G1 = Eigen::MatrixXd::Zero(c + 1, d + 1);
            G1.topLeftCorner(c, d) = p.G;
            G1.col(d).head(c).setConstant(-1.0);
            G1(c, d) = -1.0;
            Eigen::VectorXd g1(c + 1);
            g1.head(c) = p.g;
            g1[c] = 1.0;

            const IpmResult r = interior_point(P1, q1, G1, g1, settings.tolerance, 500);

            InfeasibilityCertificate cert;
            z_out = r.z.head(d);
            cert.min_violation = (p.G * z_out - p.g).maxCoeff();
            Eigen::VectorXd y = r.lambda.head(c).cwiseMax(0.0);
            const double total = y.sum();
            if (total > 0.0)
            {
                y /= total;
            }
            cert.y = y;
            cert.g_dot_y = p.g.dot(y);
            cert.residual = (p.G.transpose() * y).cwiseAbs().maxCoeff();
            return cert;
        }

        // Re-solves the equality-constrained KKT system on the active set
        // guessed from the interior-point iterate. Kept only when it is
        // primal-dual feasible and improves the residuals.
        void polish(const QpProblem &p, QpSolution &sol)
        {
            const Eigen::Index d = p.num_variables();
            const Eigen::VectorXd slack = p.g - p.G * sol.z;
            std::vector<Eigen::Index> active;
            for (Eigen::Index i = 0; i < p.num_constraints(); ++i)
            {
                if (sol.duals[i] > slack[i])
                {
                    active.push_back(i);
                }
            }
            const auto k = static_cast<Eigen::Index>(active.size());
            if (k > d)
            {
                return;
            }
            constexpr double delta = 1e-11;
            Eigen::MatrixXd K = Eigen::MatrixXd::Zero(d + k, d + k);
            Eigen::MatrixXd Kreg;
            Eigen::VectorXd rhs(d + k);
            K.topLeftCorner(d, d) = p.P;
            rhs.head(d) = -p.q;
            for (Eigen::Index a = 0; a < k; ++a)
            {
                K.block(d + a, 0, 1, d) = p.G.row(active[static_cast<std::size_t>(a)]);
                K.block(0, d + a, d, 1) = p.G.row(active[static_cast<std::size_t>(a)]).transpose();
                rhs[d + a] = p.g[active[static_cast<std::size_t>(a)]];
            }
            Kreg = K;
            Kreg.topLeftCorner(d, d).diagonal().array() += delta;
            Kreg.bottomRightCorner(k, k).diagonal().array() -= delta;
            const Eigen::PartialPivLU<Eigen::MatrixXd> lu(Kreg);
            Eigen::VectorXd x = lu.solve(rhs);
            for (int it = 0; it < 5; ++it)
            {
                x += lu.solve(rhs - K * x);
            }
            if (!x.allFinite())
            {
                return;
            }

            Eigen::VectorXd y = Eigen::VectorXd::Zero(p.num_constraints());
            for (Eigen::Index a = 0; a < k; ++a)
            {
                if (x[d + a] < -1e-10)
                {
                    return;
                }
                y[active[static_cast<std::size_t>(a)]] = std::max(x[d + a], 0.0);
            }
            const Eigen::VectorXd z = x.head(d);
            const KktResiduals before = kkt_residuals(p, sol.z, sol.duals);
            const KktResiduals after = kkt_residuals(p, z, y);
            if (after.max() <= before.max())
            {
                sol.z = z;
                sol.duals = y;
            }
        }

        QpSolution solve_unconstrained(const QpProblem &p, const QpSettings &settings)
        {
            QpSolution sol;
            sol.z = p.P.completeOrthogonalDecomposition().solve(-p.q);
            sol.duals = Eigen::VectorXd(0);
            sol.kkt = kkt_residuals(p, sol.z, sol.duals);
            sol.status = certified(sol.kkt, p, settings) ? QpStatus::Optimal : QpStatus::IterLimit;
            sol.objective = p.objective(sol.z);
            return sol;
        }
    } // namespace

    QpSolution solve_qp(const QpProblem &problem, const QpSettings &settings)
    {
        problem.validate();
        if (problem.num_constraints() == 0)
        {
            return solve_unconstrained(problem, settings);
        }

        auto finish = [&](QpSolution sol)
        {
            if (sol.status == QpStatus::Optimal)
            {
                polish(problem, sol);
            }
            sol.kkt = kkt_residuals(problem, sol.z, sol.duals);
            sol.objective = problem.objective(sol.z);
            return sol;
        };

        // Most problems certify well within this many iterations; the rest go
        // through phase 1 before the full budget is spent.
        const int first_pass = std::min(settings.max_iterations, 200);
        IpmResult r = interior_point(problem.P, problem.q, problem.G, problem.g,
                                     settings.tolerance, first_pass);
        QpSolution sol;
        sol.z = r.z;
        sol.duals = r.lambda;
        sol.iterations = r.iterations;
        sol.kkt = kkt_residuals(problem, sol.z, sol.duals);
        if (certified(sol.kkt, problem, settings))
        {
            sol.status = QpStatus::Optimal;
            return finish(std::move(sol));
        }

        Eigen::VectorXd z_phase_one;
        InfeasibilityCertificate cert = phase_one(problem, settings, z_phase_one);
        const double g_scale = 1.0 + problem.g.cwiseAbs().maxCoeff();
        if (cert.min_violation > settings.feasibility_tolerance * g_scale)
        {
            sol.status = QpStatus::Infeasible;
            sol.z = z_phase_one;
            sol.duals = Eigen::VectorXd::Zero(problem.num_constraints());
            sol.certificate = std::move(cert);
            return finish(std::move(sol));
        }

        if (settings.max_iterations > first_pass)
        {
            r = interior_point(problem.P, problem.q, problem.G, problem.g, settings.tolerance,
                               settings.max_iterations);
            sol.z = r.z;
            sol.duals = r.lambda;
            sol.iterations = first_pass + r.iterations;
            sol.kkt = kkt_residuals(problem, sol.z, sol.duals);
        }
        sol.status = certified(sol.kkt, problem, settings) ? QpStatus::Optimal : QpStatus::IterLimit;
        return finish(std::move(sol));
    }

} // namespace riskshield
