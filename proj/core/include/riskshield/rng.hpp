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

#ifndef RISKSHIELD_RNG_HPP
#define RISKSHIELD_RNG_HPP

#include <cstdint>
#include <random>

namespace riskshield
{

    /// SplitMix64 finalizer (Steele, Lea, Flood 2014).
    std::uint64_t splitmix64(std::uint64_t x);

    /**
     * Per-rollout seed derivation:
     *   seed' = splitmix64(master_seed ^ splitmix64(rollout_index + 0x9E3779B97F4A7C15))
     * Each rollout therefore owns an independent stream, and adding rollouts
     * never perturbs the existing ones.
     */
    std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t rollout_index);

    /**
     * Seedable generator with a platform-independent uniform draw.
     *
     * std::mt19937_64 output is fixed by the standard; the [0,1) mapping uses
     * the top 53 bits directly instead of std::uniform_real_distribution,
     * whose algorithm is implementation-defined.
     */
    class Rng
    {
    public:
        explicit Rng(std::uint64_t seed) : engine_(seed) {}

        /// Uniform double in [0, 1).
        double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
        double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
        std::uint64_t next() { return engine_(); }

    private:
        std::mt19937_64 engine_;
    };

} // namespace riskshield

#endif // RISKSHIELD_RNG_HPP
