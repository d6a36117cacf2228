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

#include "riskshield_cli/commands.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "riskshield/barrier.hpp"
#include "riskshield/filter.hpp"
#include "riskshield_cli/config_io.hpp"

namespace riskshield::cli
{

    using nlohmann::json;
    namespace fs = std::filesystem;

    namespace
    {
        class IoError : public std::runtime_error
        {
        public:
            using std::runtime_error::runtime_error;
        };

        void ensure_dir(const fs::path &dir)
        {
            std::error_code ec;
            fs::create_directories(dir, ec);
            if (ec || !fs::is_directory(dir))
            {
                throw IoError("cannot create output directory '" + dir.string() + "'" +
                              (ec ? ": " + ec.message() : std::string()));
            }
        }

        void write_file(const fs::path &path, const std::string &content)
        {
            std::ofstream out(path, std::ios::binary | std::ios::trunc);
            if (!out)
            {
                throw IoError("cannot write '" + path.string() + "'");
            }
            out << content;
            out.close();
            if (!out)
            {
                throw IoError("failed writing '" + path.string() + "'");
            }
        }

        json number_or_null(double v)
        {
            return std::isfinite(v) ? json(v) : json(nullptr);
        }

        std::string utc_timestamp()
        {
            const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
            std::tm tm{};
            gmtime_r(&now, &tm);
            std::ostringstream os;
            os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
            return os.str();
        }

        ScenarioConfig load_with_flags(const RunFlags &flags)
        {
            ScenarioConfig cfg = load_config(flags.config);
            if (flags.seed)
            {
                cfg.master_seed = *flags.seed;
            }
            if (flags.method)
            {
                cfg.filter.method = *flags.method;
            }
            validate(cfg);
            return cfg;
        }

        json report_json(const ViolationReport &r)
        {
            json min_barrier = json::array();
            for (double v : r.min_barrier)
            {
                min_barrier.push_back(number_or_null(v));
            }
            json failed = json::array();
            for (const auto &f : r.failed)
            {
                failed.push_back({{"index", f.index}, {"step", f.step}, {"message", f.message}});
            }
            return {{"num_rollouts", r.num_rollouts},
                    {"min_barrier", min_barrier},
                    {"violation_count", r.violation_count},
                    {"violation_rate", r.violation_rate},
                    {"worst_rollout", r.worst_rollout},
                    {"worst_min_barrier", number_or_null(r.worst_min_barrier)},
                    {"failed", failed},
                    {"infeasible_steps", r.infeasible_steps},
                    {"solver_failure_steps", r.solver_failure_steps},
                    {"mean_interference", r.mean_interference},
                    {"mean_margin", r.mean_margin},
                    {"runtime_seconds", r.runtime_seconds}};
        }

        json manifest_json(const std::string &command, const ScenarioConfig &cfg,
                           const RunFlags &flags, const std::string &started, double wall,
                           const std::vector<std::string> &outputs)
        {
            return {{"schema_version", kOutputSchemaVersion},
                    {"tool_version", kToolVersion},
                    {"command", command},
                    {"config_path", flags.config.string()},
                    {"config_hash", config_hash(cfg)},
                    {"master_seed", cfg.master_seed},
                    {"seed_derivation",
                     "splitmix64(master_seed ^ splitmix64(rollout_index + 0x9E3779B97F4A7C15))"},
                    {"rng", "mt19937_64"},
                    {"started_at_utc", started},
                    {"wall_clock_seconds", wall},
                    {"outputs", outputs}};
        }

        /// Runs @p body and maps exceptions onto exit codes.
        template <typename F>
        int guarded(std::ostream &err, F body)
        {
            try
            {
                return body();
            }
            catch (const ConfigError &e)
            {
                err << "error: invalid config: " << e.what() << "\n";
                return kExitValidation;
            }
            catch (const IoError &e)
            {
                err << "error: " << e.what() << "\n";
                return kExitIo;
            }
            catch (const ResourceLimitError &e)
            {
                err << "error: " << e.what() << "\n";
                return kExitBudget;
            }
            catch (const std::invalid_argument &e)
            {
                err << "error: invalid input: " << e.what() << "\n";
                return kExitValidation;
            }
            catch (const std::exception &e)
            {
                err << "error: " << e.what() << "\n";
                return kExitSolverFailure;
            }
        }
    } // namespace

    std::string format_double(double value)
    {
        char buf[64];
        const auto res = std::to_chars(buf, buf + sizeof(buf), value);
        return std::string(buf, res.ptr);
    }

    std::string trace_file_name(int rollout)
    {
        std::ostringstream os;
        os << "rollout_" << std::setw(5) << std::setfill('0') << rollout << ".csv";
        return os.str();
    }

    std::string trace_csv(const std::vector<TraceRecord> &trace)
    {
        std::string out;
        if (trace.empty())
        {
            return out;
        }
        const Eigen::Index n = trace.front().x.size();
        const Eigen::Index m = trace.front().u.size();
        out += "t";
        for (Eigen::Index i = 1; i <= n; ++i)
        {
            out += ",x_" + std::to_string(i);
        }
        for (Eigen::Index j = 1; j <= m; ++j)
        {
            out += ",u_legacy_" + std::to_string(j);
        }
        for (Eigen::Index j = 1; j <= m; ++j)
        {
            out += ",u_" + std::to_string(j);
        }
        out += ",h,margin,status\n";
        for (const TraceRecord &r : trace)
        {
            out += std::to_string(r.t);
            for (Eigen::Index i = 0; i < n; ++i)
            {
                out += ',' + format_double(r.x[i]);
            }
            for (Eigen::Index j = 0; j < m; ++j)
            {
                out += ',' + format_double(r.u_legacy[j]);
            }
            for (Eigen::Index j = 0; j < m; ++j)
            {
                out += ',' + format_double(r.u[j]);
            }
            out += ',' + format_double(r.h) + ',' + format_double(r.margin) + ',';
            out += to_string(r.status);
            out += '\n';
        }
        return out;
    }

    std::vector<double> parse_betas(const std::string &text)
    {
        std::vector<double> betas;
        std::size_t pos = 0;
        while (pos <= text.size())
        {
            const std::size_t comma = std::min(text.find(',', pos), text.size());
            std::string item = text.substr(pos, comma - pos);
            const auto first = item.find_first_not_of(" \t");
            const auto last = item.find_last_not_of(" \t");
            item = first == std::string::npos ? std::string() : item.substr(first, last - first + 1);
            if (item.empty())
            {
                if (!text.empty())
                {
                    throw ConfigError("betas", "empty entry in '" + text + "'");
                }
                break;
            }
            double v = 0.0;
            const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
            if (res.ec != std::errc() || res.ptr != item.data() + item.size())
            {
                throw ConfigError("betas", "'" + item + "' is not a number");
            }
            if (!(v > 0.0 && v < 1.0))
            {
                throw ConfigError("betas", "'" + item + "' is outside (0, 1)");
            }
            betas.push_back(v);
            pos = comma + 1;
        }
        if (betas.empty())
        {
            throw ConfigError("betas", "need at least one confidence level");
        }
        return betas;
    }

    int cmd_simulate(const RunFlags &flags, const fs::path &out_dir, std::ostream &out,
                     std::ostream &err)
    {
        return guarded(err, [&]
                       {
            const auto t0 = std::chrono::steady_clock::now();
            const std::string started = utc_timestamp();
            const ScenarioConfig cfg = load_with_flags(flags);
            ensure_dir(out_dir);
            ensure_dir(out_dir / "traces");

            MonteCarloResult mc = run_monte_carlo_traces(cfg, flags.threads);

            std::vector<std::string> outputs;
            for (std::size_t r = 0; r < mc.traces.size(); ++r)
            {
                if (mc.traces[r].empty())
                {
                    continue;
                }
                const std::string rel = "traces/" + trace_file_name(static_cast<int>(r));
                write_file(out_dir / rel, trace_csv(mc.traces[r]));
                outputs.push_back(rel);
            }

            json summary = report_json(mc.report);
            summary["schema_version"] = kOutputSchemaVersion;
            summary["name"] = cfg.name;
            summary["config_hash"] = config_hash(cfg);
            summary["beta"] = cfg.certificate.beta;
            summary["filter_enabled"] = cfg.filter.enabled;
            summary["method"] = to_string(cfg.filter.method);
            write_file(out_dir / "summary.json", summary.dump(2) + "\n");
            outputs.push_back("summary.json");
            outputs.push_back("manifest.json");

            const double wall =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            write_file(out_dir / "manifest.json",
                       manifest_json("simulate", cfg, flags, started, wall, outputs).dump(2) + "\n");

            const ViolationReport &rep = mc.report;
            out << "rollouts " << rep.num_rollouts << "  violations " << rep.violation_count
                << "  rate " << format_double(rep.violation_rate) << "  failed "
                << rep.failed.size() << "  solver_failure_steps " << rep.solver_failure_steps
                << "\n";
            for (const auto &f : rep.failed)
            {
                err << "rollout " << f.index << " failed: " << f.message << "\n";
            }
            const bool failure = !rep.failed.empty() || rep.solver_failure_steps > 0;
            return failure ? kExitSolverFailure : kExitOk; });
    }

    int cmd_verify(const RunFlags &flags, int horizon, std::ostream &out, std::ostream &err)
    {
        return guarded(err, [&]
                       {
            if (horizon < 1)
            {
                throw ConfigError("horizon", "must be at least 1");
            }
            const ScenarioConfig cfg = load_with_flags(flags);
            const LinearStochasticSystem sys = make_system(cfg);
            const BarrierExpr barrier = make_barrier(cfg);
            const BarrierCertificate cert = make_certificate(cfg);
            const LegacyLaw legacy = make_legacy_law(cfg);
            const std::optional<FilterOptions> options = make_filter_options(cfg);

            Policy policy = legacy;
            if (options)
            {
                policy = [&](const StateVector &x, int t)
                {
                    FilterRequest req{x, legacy(x, t), barrier, cert, *options};
                    return solve_filter(req, sys).u_star;
                };
            }

            const NestedCvarReport rep =
                nested_cvar_verify(barrier, sys, policy, cfg.x0, cert, horizon);

            out << "policy " << (options ? "filter:" + std::string(to_string(options->method)) : "legacy")
                << "  alpha " << format_double(cert.alpha()) << "  beta "
                << format_double(cert.beta().value()) << "  h(x0) "
                << format_double(barrier.evaluate(cfg.x0)) << "\n";
            out << "t,nested_cvar,bound,holds\n";
            for (const NestedCvarRow &row : rep.rows)
            {
                if (row.t < 1)
                {
                    continue;
                }
                out << row.t << ',' << format_double(row.nested) << ',' << format_double(row.bound)
                    << ',' << (row.holds ? "true" : "false") << "\n";
            }
            out << "min_one_step_margin " << format_double(rep.min_one_step_margin) << "\n";
            return rep.all_hold() ? kExitOk : kExitVerifyFailed; });
    }

    int cmd_sweep(const RunFlags &flags, const std::string &betas_text, const fs::path &out_dir,
                  std::ostream &out, std::ostream &err)
    {
        return guarded(err, [&]
                       {
            const auto t0 = std::chrono::steady_clock::now();
            const std::string started = utc_timestamp();
            const std::vector<double> betas = parse_betas(betas_text);
            const ScenarioConfig cfg = load_with_flags(flags);
            ensure_dir(out_dir);

            const std::vector<SweepRow> rows = sweep_beta(cfg, betas, flags.threads);
            std::string csv = "beta,violation_rate,violation_count,mean_interference,mean_margin,"
                              "infeasible_steps,failed_rollouts\n";
            bool failure = false;
            for (const SweepRow &row : rows)
            {
                const ViolationReport &r = row.report;
                csv += format_double(row.beta) + ',' + format_double(r.violation_rate) + ',' +
                       std::to_string(r.violation_count) + ',' + format_double(r.mean_interference) +
                       ',' + format_double(r.mean_margin) + ',' + std::to_string(r.infeasible_steps) +
                       ',' + std::to_string(r.failed.size()) + '\n';
                failure = failure || !r.failed.empty() || r.solver_failure_steps > 0;
            }
            write_file(out_dir / "sweep.csv", csv);
            const double wall =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            write_file(out_dir / "manifest.json",
                       manifest_json("sweep", cfg, flags, started, wall, {"sweep.csv", "manifest.json"})
                               .dump(2) +
                           "\n");
            out << csv;
            return failure ? kExitSolverFailure : kExitOk; });
    }

    int cmd_builtin(const std::string &which, const ScenarioOverrides &overrides,
                    const fs::path &out_path, std::ostream &out, std::ostream &err)
    {
        return guarded(err, [&]
                       {
            const ScenarioConfig cfg = builtin_scenario(builtin_case_from_string(which), overrides);
            if (out_path.has_parent_path())
            {
                ensure_dir(out_path.parent_path());
            }
            write_file(out_path, config_to_json(cfg).dump(2) + "\n");
            out << "wrote " << out_path.string() << " (hash " << config_hash(cfg) << ")\n";
            return kExitOk; });
    }

} // namespace riskshield::cli
