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

#include "riskshield/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

#include "riskshield/rng.hpp"

namespace riskshield
{

    ConfigError::ConfigError(std::string field, const std::string &message)
        : std::invalid_argument(field + ": " + message), field_(std::move(field))
    {
    }

    std::string_view to_string(BarrierComposition c)
    {
        switch (c)
        {
        case BarrierComposition::Single:
            return "single";
        case BarrierComposition::Min:
            return "min";
        case BarrierComposition::Max:
            return "max";
        }
        return "single";
    }

    BarrierComposition composition_from_string(std::string_view text)
    {
        if (text == "single")
            return BarrierComposition::Single;
        if (text == "min")
            return BarrierComposition::Min;
        if (text == "max")
            return BarrierComposition::Max;
        throw ConfigError("barrier.composition", "expected single, min or max");
    }

    std::string_view to_string(LegacyType t)
    {
        return t == LegacyType::ReferenceTracking ? "reference_tracking" : "constant";
    }

    LegacyType legacy_type_from_string(std::string_view text)
    {
        if (text == "reference_tracking")
            return LegacyType::ReferenceTracking;
        if (text == "constant")
            return LegacyType::Constant;
        throw ConfigError("legacy.type", "expected reference_tracking or constant");
    }

    BuiltinCase builtin_case_from_string(std::string_view text)
    {
        if (text == "case1" || text == "Case1")
            return BuiltinCase::Case1;
        if (text == "case2" || text == "Case2")
            return BuiltinCase::Case2;
        if (text == "case3" || text == "Case3")
            return BuiltinCase::Case3;
        throw std::invalid_argument("case: unknown builtin scenario '" + std::string(text) + "'");
    }

    std::string_view to_string(BuiltinCase c)
    {
        switch (c)
        {
        case BuiltinCase::Case1:
            return "case1";
        case BuiltinCase::Case2:
            return "case2";
        case BuiltinCase::Case3:
            return "case3";
        }
        return "case1";
    }

    // ---------------------------------------------------------------------
    // Validation and construction

    namespace
    {
        void require(bool ok, const std::string &field, const std::string &message)
        {
            if (!ok)
            {
                throw ConfigError(field, message);
            }
        }
    } // namespace

    void validate(const ScenarioConfig &cfg)
    {
        require(cfg.schema_version == kScenarioSchemaVersion, "schema_version",
                "unsupported version " + std::to_string(cfg.schema_version));

        const SystemSpec &s = cfg.system;
        const Eigen::Index n = cfg.x0.size();
        require(n > 0, "x0", "state must be nonempty");
        require(cfg.x0.allFinite(), "x0", "entries must be finite");

        Eigen::Index m = 0;
        if (s.outcomes.empty())
        {
            require(s.A.rows() == n && s.A.cols() == n, "system.A",
                    "expected " + std::to_string(n) + "x" + std::to_string(n));
            require(s.B.rows() == n && s.B.cols() > 0, "system.B",
                    "expected " + std::to_string(n) + " rows");
            m = s.B.cols();
            require(!cfg.disturbance.samples.empty(), "disturbance.samples",
                    "need at least one disturbance sample");
            for (const auto &w : cfg.disturbance.samples)
            {
                require(w.size() == n, "disturbance.samples",
                        "each sample must have length " + std::to_string(n));
            }
        }
        else
        {
            m = s.outcomes.front().B.cols();
            for (const auto &o : s.outcomes)
            {
                require(o.A.rows() == n && o.A.cols() == n, "system.outcomes.A", "wrong shape");
                require(o.B.rows() == n && o.B.cols() == m, "system.outcomes.B", "wrong shape");
                require(o.G.size() == n, "system.outcomes.G", "wrong length");
            }
        }
        require(s.u_lower.size() == m, "system.u_lower", "expected length " + std::to_string(m));
        require(s.u_upper.size() == m, "system.u_upper", "expected length " + std::to_string(m));
        require((s.u_lower.array() <= s.u_upper.array()).all(), "system.u_lower",
                "must not exceed system.u_upper");
        require(s.step_period > 0.0, "system.step_period", "must be positive");

        const std::size_t W = s.outcomes.empty() ? cfg.disturbance.samples.size() : s.outcomes.size();
        if (!cfg.disturbance.uniform || !cfg.disturbance.probs.empty())
        {
            require(cfg.disturbance.probs.size() == W, "probs",
                    "expected one probability per outcome");
            double total = 0.0;
            for (double p : cfg.disturbance.probs)
            {
                require(p >= 0.0, "probs", "entries must be nonnegative");
                total += p;
            }
            require(std::abs(total - 1.0) <= kProbabilitySumTolerance, "probs",
                    "entries sum to " + std::to_string(total) + ", expected 1");
        }

        require(!cfg.barrier.atoms.empty(), "barrier.atoms", "need at least one atom");
        require(cfg.barrier.composition != BarrierComposition::Single ||
                    cfg.barrier.atoms.size() == 1,
                "barrier.composition", "single composition takes exactly one atom");
        for (const auto &a : cfg.barrier.atoms)
        {
            require(a.H.size() == n, "barrier.atoms.H", "expected length " + std::to_string(n));
            require(!a.H.isZero(0.0), "barrier.atoms.H", "all-zero row is degenerate");
        }

        require(cfg.certificate.alpha > 0.0 && cfg.certificate.alpha < 1.0, "certificate.alpha",
                "must lie strictly inside (0, 1)");
        require(cfg.certificate.beta > 0.0 && cfg.certificate.beta < 1.0, "certificate.beta",
                "must lie strictly inside (0, 1)");

        const LegacySpec &l = cfg.legacy;
        if (l.type == LegacyType::Constant)
        {
            require(l.constant_u.size() == m, "legacy.constant_u",
                    "expected length " + std::to_string(m));
        }
        else
        {
            require(static_cast<Eigen::Index>(l.position_index.size()) == m,
                    "legacy.position_index", "expected one state index per control");
            for (int idx : l.position_index)
            {
                require(idx >= 0 && idx < n, "legacy.position_index", "index out of range");
            }
            require(l.velocity.size() == m, "legacy.velocity", "expected length " + std::to_string(m));
            require(l.reference_start.size() == m, "legacy.reference_start",
                    "expected length " + std::to_string(m));
            require(l.sine_amplitude.size() == m, "legacy.sine_amplitude",
                    "expected length " + std::to_string(m));
            require(l.sine_period_steps > 0.0, "legacy.sine_period_steps", "must be positive");
        }

        require(cfg.filter.dccp.max_iters >= 1, "filter.dccp.max_iters", "must be at least 1");
        require(cfg.filter.dccp.stationarity_tol > 0.0, "filter.dccp.stationarity_tol",
                "must be positive");
        require(cfg.steps >= 1, "steps", "must be at least 1");
        require(cfg.num_rollouts >= 1, "num_rollouts", "must be at least 1");
    }

    LinearStochasticSystem make_system(const ScenarioConfig &cfg)
    {
        const std::size_t W = cfg.system.outcomes.empty() ? cfg.disturbance.samples.size()
                                                         : cfg.system.outcomes.size();
        std::vector<double> probs = cfg.disturbance.probs;
        if (cfg.disturbance.uniform)
        {
            probs.assign(W, 1.0 / static_cast<double>(W));
            double head = 0.0;
            for (std::size_t i = 0; i + 1 < W; ++i)
            {
                head += probs[i];
            }
            probs.back() = 1.0 - head;
        }
        if (!cfg.system.outcomes.empty())
        {
            return LinearStochasticSystem(cfg.system.outcomes, std::move(probs), cfg.system.u_lower,
                                          cfg.system.u_upper);
        }
        return LinearStochasticSystem::additive(cfg.system.A, cfg.system.B, cfg.disturbance.samples,
                                                std::move(probs), cfg.system.u_lower,
                                                cfg.system.u_upper);
    }

    BarrierExpr make_barrier(const ScenarioConfig &cfg)
    {
        std::vector<BarrierExpr> atoms;
        for (const auto &a : cfg.barrier.atoms)
        {
            atoms.emplace_back(LinearBarrier(a.H.transpose(), a.l));
        }
        switch (cfg.barrier.composition)
        {
        case BarrierComposition::Single:
            return atoms.front();
        case BarrierComposition::Min:
            return BarrierExpr::min(std::move(atoms));
        case BarrierComposition::Max:
            return BarrierExpr::max(std::move(atoms));
        }
        return atoms.front();
    }

    BarrierCertificate make_certificate(const ScenarioConfig &cfg)
    {
        return BarrierCertificate(cfg.certificate.alpha, RiskLevel(cfg.certificate.beta));
    }

    LegacyLaw make_legacy_law(const ScenarioConfig &cfg)
    {
        const LegacySpec spec = cfg.legacy;
        const Eigen::VectorXd lo = cfg.system.u_lower;
        const Eigen::VectorXd hi = cfg.system.u_upper;
        if (spec.type == LegacyType::Constant)
        {
            return [spec](const StateVector &, int) { return ControlVector(spec.constant_u); };
        }
        const double T = cfg.system.step_period;
        return [spec, lo, hi, T](const StateVector &x, int t)
        {
            const Eigen::Index m = spec.velocity.size();
            ControlVector u(m);
            const double phase = 2.0 * std::numbers::pi * t / spec.sine_period_steps;
            for (Eigen::Index j = 0; j < m; ++j)
            {
                const double feedforward = spec.velocity[j] * T;
                const double reference = spec.reference_start[j] + feedforward * t +
                                         spec.sine_amplitude[j] * std::sin(phase);
                u[j] = feedforward + spec.gain * (reference - x[spec.position_index[static_cast<std::size_t>(j)]]);
            }
            return ControlVector(u.cwiseMax(lo).cwiseMin(hi));
        };
    }

    std::optional<FilterOptions> make_filter_options(const ScenarioConfig &cfg)
    {
        if (!cfg.filter.enabled)
        {
            return std::nullopt;
        }
        FilterOptions opt;
        opt.method = cfg.filter.method;
        opt.tail = cfg.certificate.tail;
        opt.dccp = cfg.filter.dccp;
        return opt;
    }

    // ---------------------------------------------------------------------
    // Built-in cases

    void s2s_planar_matrices(double step_period, Eigen::MatrixXd &A, Eigen::MatrixXd &B)
    {
        A = Eigen::MatrixXd::Zero(4, 4);
        B = Eigen::MatrixXd::Zero(4, 2);
        for (int axis = 0; axis < 2; ++axis)
        {
            const int c = 2 * axis;
            const int v = c + 1;
            A(c, c) = 1.0;
            A(c, v) = 0.5 * step_period;
            B(c, axis) = 0.5;
            B(v, axis) = 1.0 / step_period;
        }
    }

    namespace
    {
        Eigen::VectorXd vec(std::initializer_list<double> xs)
        {
            Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
            Eigen::Index i = 0;
            for (double x : xs)
            {
                v[i++] = x;
            }
            return v;
        }

        void reject_foreign(BuiltinCase which, const ScenarioOverrides &o)
        {
            auto bad = [](const char *field, const char *owner)
            {
                throw ConfigError(std::string("overrides.") + field,
                                  std::string("only valid for ") + owner);
            };
            if (which != BuiltinCase::Case1 && o.p_x)
                bad("p_x", "case1");
            if (which != BuiltinCase::Case2 && (o.k || o.p))
                bad(o.k ? "k" : "p", "case2");
            if (which != BuiltinCase::Case3 && (o.p1 || o.p2))
                bad(o.p1 ? "p1" : "p2", "case3");
        }

        std::vector<Eigen::VectorXd> sample_box(const Eigen::VectorXd &lo, const Eigen::VectorXd &hi,
                                                int count, std::uint64_t seed)
        {
            Rng rng(seed);
            std::vector<Eigen::VectorXd> samples;
            samples.reserve(static_cast<std::size_t>(count));
            for (int i = 0; i < count; ++i)
            {
                Eigen::VectorXd w(lo.size());
                for (Eigen::Index j = 0; j < lo.size(); ++j)
                {
                    w[j] = rng.uniform(lo[j], hi[j]);
                }
                samples.push_back(std::move(w));
            }
            return samples;
        }
    } // namespace

    ScenarioConfig builtin_scenario(BuiltinCase which, const ScenarioOverrides &o)
    {
        reject_foreign(which, o);

        ScenarioConfig cfg;
        cfg.name = std::string(to_string(which));
        cfg.system.template_id = "s2s_planar";
        cfg.system.step_period = o.step_period.value_or(0.4);
        s2s_planar_matrices(cfg.system.step_period, cfg.system.A, cfg.system.B);
        cfg.system.u_lower = vec({-0.6, -0.6});
        cfg.system.u_upper = vec({0.6, 0.6});

        const double forward = o.forward_speed.value_or(0.5);
        cfg.legacy.type = LegacyType::ReferenceTracking;
        cfg.legacy.position_index = {0, 2};
        cfg.legacy.velocity = vec({forward, 0.0});
        cfg.legacy.sine_amplitude = vec({0.0, 0.0});
        cfg.legacy.sine_period_steps = 20.0;
        cfg.legacy.gain = 0.5;

        cfg.certificate.alpha = 0.9;
        cfg.filter.enabled = true;
        cfg.filter.method = FilterMethod::EpigraphExact;
        cfg.master_seed = 2021;
        cfg.num_rollouts = 100;
        cfg.disturbance.seed = 7;

        int num_outcomes = 10;
        switch (which)
        {
        case BuiltinCase::Case1:
        {
            // Wall ahead at c_x = p_x:  h = p_x - c_x.
            const double p_x = o.p_x.value_or(1.0);
            cfg.barrier.composition = BarrierComposition::Single;
            cfg.barrier.atoms = {{vec({-1.0, 0.0, 0.0, 0.0}), p_x}};
            cfg.certificate.beta = 0.1;
            cfg.x0 = vec({0.0, 0.0, 0.0, 0.0});
            cfg.steps = 25;
            cfg.disturbance.box_lower = vec({-0.03, -0.05, -0.02, -0.02});
            cfg.disturbance.box_upper = vec({0.07, 0.05, 0.02, 0.02});
            break;
        }
        case BuiltinCase::Case2:
        {
            // Slanted wall:  h = c_y + k (c_x - p).
            const double k = o.k.value_or(-0.5);
            const double p = o.p.value_or(2.0);
            cfg.barrier.composition = BarrierComposition::Single;
            cfg.barrier.atoms = {{vec({k, 0.0, 1.0, 0.0}), -k * p}};
            cfg.certificate.beta = 0.5;
            cfg.x0 = vec({0.0, 0.0, 0.0, 0.0});
            cfg.steps = 40;
            cfg.disturbance.box_lower = vec({-0.03, -0.05, -0.05, -0.05});
            cfg.disturbance.box_upper = vec({0.05, 0.05, 0.03, 0.05});
            break;
        }
        case BuiltinCase::Case3:
        {
            // Corridor:  min(c_y + p1, -c_y + p2).
            const double p1 = o.p1.value_or(2.0);
            const double p2 = o.p2.value_or(0.0);
            cfg.barrier.composition = BarrierComposition::Min;
            cfg.barrier.atoms = {{vec({0.0, 0.0, 1.0, 0.0}), p1}, {vec({0.0, 0.0, -1.0, 0.0}), p2}};
            cfg.certificate.beta = 0.5;
            cfg.x0 = vec({0.0, 0.0, -1.0, 0.0});
            cfg.steps = 40;
            cfg.legacy.sine_amplitude = vec({0.0, 1.5});
            cfg.disturbance.box_lower = vec({-0.03, -0.05, -0.04, -0.05});
            cfg.disturbance.box_upper = vec({0.03, 0.05, 0.04, 0.05});
            break;
        }
        }
        cfg.legacy.reference_start = vec({cfg.x0[0], cfg.x0[2]});

        if (o.alpha)
            cfg.certificate.alpha = *o.alpha;
        if (o.beta)
            cfg.certificate.beta = *o.beta;
        if (o.num_outcomes)
            num_outcomes = *o.num_outcomes;
        if (o.disturbance_seed)
            cfg.disturbance.seed = *o.disturbance_seed;
        if (o.box_lower)
            cfg.disturbance.box_lower = *o.box_lower;
        if (o.box_upper)
            cfg.disturbance.box_upper = *o.box_upper;
        if (o.steps)
            cfg.steps = *o.steps;
        if (o.num_rollouts)
            cfg.num_rollouts = *o.num_rollouts;
        if (o.master_seed)
            cfg.master_seed = *o.master_seed;
        if (o.method)
            cfg.filter.method = *o.method;
        if (o.filter_enabled)
            cfg.filter.enabled = *o.filter_enabled;

        if (num_outcomes < 1)
        {
            throw ConfigError("overrides.num_outcomes", "must be at least 1");
        }
        if (cfg.disturbance.box_lower.size() != 4 || cfg.disturbance.box_upper.size() != 4 ||
            (cfg.disturbance.box_lower.array() > cfg.disturbance.box_upper.array()).any())
        {
            throw ConfigError("overrides.box_lower", "box must be 4-dimensional with lower <= upper");
        }
        cfg.disturbance.uniform = true;
        cfg.disturbance.samples = sample_box(cfg.disturbance.box_lower, cfg.disturbance.box_upper,
                                             num_outcomes, cfg.disturbance.seed);
        validate(cfg);
        return cfg;
    }

    // ---------------------------------------------------------------------
    // Monte Carlo

    namespace
    {
        struct RolloutOutcome
        {
            std::vector<TraceRecord> trace;
            bool failed = false;
            int failed_step = 0;
            std::string message;
        };
    } // namespace

    MonteCarloResult run_monte_carlo_traces(const ScenarioConfig &cfg, unsigned threads)
    {
        validate(cfg);
        const auto start = std::chrono::steady_clock::now();

        const LinearStochasticSystem sys = make_system(cfg);
        const BarrierExpr barrier = make_barrier(cfg);
        const BarrierCertificate cert = make_certificate(cfg);
        const LegacyLaw legacy = make_legacy_law(cfg);
        const std::optional<FilterOptions> options = make_filter_options(cfg);

        const auto R = static_cast<std::size_t>(cfg.num_rollouts);
        std::vector<RolloutOutcome> outcomes(R);
        std::atomic<std::size_t> next{0};

        auto worker = [&]
        {
            for (std::size_t r = next++; r < R; r = next++)
            {
                Rng rng(derive_seed(cfg.master_seed, r));
                try
                {
                    outcomes[r].trace =
                        filter_rollout(sys, barrier, cert, legacy, cfg.x0, cfg.steps, rng, options);
                }
                catch (const RolloutError &e)
                {
                    outcomes[r].failed = true;
                    outcomes[r].failed_step = e.step();
                    outcomes[r].message = e.what();
                }
            }
        };

        unsigned n_threads = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
        n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, R));
        if (n_threads <= 1)
        {
            worker();
        }
        else
        {
            std::vector<std::thread> pool;
            pool.reserve(n_threads);
            for (unsigned i = 0; i < n_threads; ++i)
            {
                pool.emplace_back(worker);
            }
            for (auto &t : pool)
            {
                t.join();
            }
        }

        MonteCarloResult result;
        ViolationReport &rep = result.report;
        rep.num_rollouts = cfg.num_rollouts;
        rep.min_barrier.assign(R, std::numeric_limits<double>::quiet_NaN());
        double interference = 0.0;
        double margin = 0.0;
        std::size_t steps_seen = 0;
        for (std::size_t r = 0; r < R; ++r)
        {
            const RolloutOutcome &out = outcomes[r];
            if (out.failed)
            {
                rep.failed.push_back({static_cast<int>(r), out.failed_step, out.message});
                continue;
            }
            double min_h = std::numeric_limits<double>::infinity();
            for (const TraceRecord &rec : out.trace)
            {
                min_h = std::min({min_h, rec.h, rec.h_next});
                interference += rec.interference;
                margin += rec.margin;
                ++steps_seen;
                if (rec.status == FilterStatus::InfeasibleFallback)
                    ++rep.infeasible_steps;
                if (rec.status == FilterStatus::SolverFailure)
                    ++rep.solver_failure_steps;
            }
            rep.min_barrier[r] = min_h;
            if (min_h < 0.0)
            {
                ++rep.violation_count;
            }
            if (rep.worst_rollout < 0 || min_h < rep.worst_min_barrier)
            {
                rep.worst_rollout = static_cast<int>(r);
                rep.worst_min_barrier = min_h;
            }
        }
        rep.violation_rate = static_cast<double>(rep.violation_count) / static_cast<double>(R);
        if (steps_seen > 0)
        {
            rep.mean_interference = interference / static_cast<double>(steps_seen);
            rep.mean_margin = margin / static_cast<double>(steps_seen);
        }
        result.traces.reserve(R);
        for (auto &out : outcomes)
        {
            result.traces.push_back(std::move(out.trace));
        }
        rep.runtime_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return result;
    }

    ViolationReport run_monte_carlo(const ScenarioConfig &cfg, unsigned threads)
    {
        return run_monte_carlo_traces(cfg, threads).report;
    }

    std::vector<SweepRow> sweep_beta(const ScenarioConfig &cfg, const std::vector<double> &betas,
                                     unsigned threads)
    {
        if (betas.empty())
        {
            throw ConfigError("betas", "need at least one confidence level");
        }
        std::vector<SweepRow> rows;
        rows.reserve(betas.size());
        for (double beta : betas)
        {
            if (!(beta > 0.0 && beta < 1.0))
            {
                throw ConfigError("betas", "every beta must lie strictly inside (0, 1)");
            }
            ScenarioConfig c = cfg;
            c.certificate.beta = beta;
            rows.push_back({beta, run_monte_carlo(c, threads)});
        }
        return rows;
    }

} // namespace riskshield
