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

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "riskshield_cli/commands.hpp"

int main(int argc, char **argv)
{
    using namespace riskshield;
    using namespace riskshield::cli;

    CLI::App app{"riskshield: CVaR barrier-function safety filter toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    RunFlags flags;
    std::string out_dir = "out";
    std::string method;
    std::uint64_t seed = 0;
    std::string betas;
    int horizon = 3;

    auto add_run_flags = [&](CLI::App *cmd)
    {
        cmd->add_option("--config", flags.config, "Scenario config (JSON)")->required();
        cmd->add_option("--seed", seed, "Override the master seed");
        cmd->add_option("--method", method, "Filter method: epigraph | dccp");
        cmd->add_option("--threads", flags.threads, "Rollout workers (0 = all cores)");
    };

    CLI::App *simulate = app.add_subcommand("simulate", "Monte Carlo rollouts with traces");
    add_run_flags(simulate);
    simulate->add_option("--out", out_dir, "Output directory");

    CLI::App *verify = app.add_subcommand("verify", "Exact nested-CVaR check over the scenario tree");
    add_run_flags(verify);
    verify->add_option("--horizon", horizon, "Tree depth");

    CLI::App *sweep = app.add_subcommand("sweep", "Violation statistics across confidence levels");
    add_run_flags(sweep);
    sweep->add_option("--betas", betas, "Comma-separated confidence levels")->required();
    sweep->add_option("--out", out_dir, "Output directory");

    CLI::App *builtin = app.add_subcommand("builtin", "Write a builtin scenario config");
    std::string which;
    std::string builtin_out = "scenario.json";
    ScenarioOverrides overrides;
    bool legacy_only = false;
    builtin->add_option("case", which, "case1 | case2 | case3")->required();
    builtin->add_option("--out", builtin_out, "Config file to write");
    builtin->add_option("--alpha", overrides.alpha);
    builtin->add_option("--beta", overrides.beta);
    builtin->add_option("--num-outcomes", overrides.num_outcomes);
    builtin->add_option("--steps", overrides.steps);
    builtin->add_option("--rollouts", overrides.num_rollouts);
    builtin->add_option("--seed", overrides.master_seed);
    builtin->add_option("--disturbance-seed", overrides.disturbance_seed);
    builtin->add_flag("--legacy-only", legacy_only, "Disable the filter");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    for (CLI::App *cmd : {simulate, verify, sweep})
    {
        if (cmd->parsed())
        {
            if (cmd->count("--seed") > 0)
            {
                flags.seed = seed;
            }
            if (!method.empty())
            {
                try
                {
                    flags.method = method_from_string(method);
                }
                catch (const std::invalid_argument &e)
                {
                    std::cerr << "error: --method: " << e.what() << "\n";
                    return kExitValidation;
                }
            }
        }
    }

    if (simulate->parsed())
    {
        return cmd_simulate(flags, out_dir, std::cout, std::cerr);
    }
    if (verify->parsed())
    {
        return cmd_verify(flags, horizon, std::cout, std::cerr);
    }
    if (sweep->parsed())
    {
        return cmd_sweep(flags, betas, out_dir, std::cout, std::cerr);
    }
    if (legacy_only)
    {
        overrides.filter_enabled = false;
    }
    return cmd_builtin(which, overrides, builtin_out, std::cout, std::cerr);
}
