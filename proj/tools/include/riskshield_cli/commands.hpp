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

#ifndef RISKSHIELD_CLI_COMMANDS_HPP
#define RISKSHIELD_CLI_COMMANDS_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "riskshield/scenario.hpp"

namespace riskshield::cli
{

    enum ExitCode : int
    {
        kExitOk = 0,
        kExitVerifyFailed = 1,
        kExitValidation = 2,
        kExitSolverFailure = 3,
        kExitIo = 4,
        kExitBudget = 5,
    };

    inline constexpr int kOutputSchemaVersion = 1;
    inline constexpr const char *kToolVersion = "0.3.0";

    /// Flags shared by every command that loads a config.
    struct RunFlags
    {
        std::filesystem::path config;
        std::optional<std::uint64_t> seed;
        std::optional<FilterMethod> method;
        unsigned threads = 0;
    };

    int cmd_simulate(const RunFlags &flags, const std::filesystem::path &out_dir, std::ostream &out,
                     std::ostream &err);

    int cmd_verify(const RunFlags &flags, int horizon, std::ostream &out, std::ostream &err);

    int cmd_sweep(const RunFlags &flags, const std::string &betas,
                  const std::filesystem::path &out_dir, std::ostream &out, std::ostream &err);

    /// Writes a builtin scenario config to @p out_path.
    int cmd_builtin(const std::string &which, const ScenarioOverrides &overrides,
                    const std::filesystem::path &out_path, std::ostream &out, std::ostream &err);

    /// Comma-separated reals, each strictly inside (0, 1). Throws ConfigError("betas", ...).
    std::vector<double> parse_betas(const std::string &text);

    /// Shortest round-trip decimal form.
    std::string format_double(double value);

    std::string trace_csv(const std::vector<TraceRecord> &trace);
    std::string trace_file_name(int rollout);

} // namespace riskshield::cli

#endif // RISKSHIELD_CLI_COMMANDS_HPP
