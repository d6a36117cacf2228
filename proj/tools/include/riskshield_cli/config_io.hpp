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

#ifndef RISKSHIELD_CLI_CONFIG_IO_HPP
#define RISKSHIELD_CLI_CONFIG_IO_HPP

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "riskshield/scenario.hpp"

namespace riskshield::cli
{

    /// JSON document for @p cfg with field names as in ScenarioConfig.
    nlohmann::json config_to_json(const ScenarioConfig &cfg);

    /// Parses and validates. Throws ConfigError naming the offending field.
    ScenarioConfig config_from_json(const nlohmann::json &doc);

    /// Reads a config file. Missing or unparsable files raise ConfigError
    /// with field "config".
    ScenarioConfig load_config(const std::filesystem::path &path);

    /// Sorted keys, no whitespace, shortest round-trip numbers.
    std::string canonical_dump(const nlohmann::json &doc);

    /// FNV-1a 64-bit hash of the canonical dump, as 16 lowercase hex digits.
    std::string config_hash(const ScenarioConfig &cfg);

    std::uint64_t fnv1a64(std::string_view bytes);

} // namespace riskshield::cli

#endif // RISKSHIELD_CLI_CONFIG_IO_HPP
