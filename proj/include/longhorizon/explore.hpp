/*
 * Copyright 2026 The LongHorizon Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef LONGHORIZON_EXPLORE_HPP_
#define LONGHORIZON_EXPLORE_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "longhorizon/data.hpp"
#include "longhorizon/matrix.hpp"
#include "longhorizon/ope.hpp"
#include "longhorizon/policy.hpp"

namespace longhorizon {

struct BtsConfig {
  int replicates = 100;
  double floor = 0.0;
  double ceiling = 1.0;
  std::uint64_t seed = 0;

  // Throws ArgumentError unless 0 <= floor < ceiling <= 1, R >= 1 and the
  // bounds are feasible for K actions.
  void Validate(int n_actions) const;
};

// Clamps entries into [floor, ceiling] while keeping the row sum at 1:
// entry i becomes clamp(lambda * p_i, floor, ceiling) with the scale lambda
// solved exactly, so entries strictly inside the bounds keep their relative
// proportions. Zero entries sit at the floor, unless the positive entries
// all reach the ceiling, in which case the zero entries share the remaining
// mass equally. Rows already inside the bounds are returned unchanged.
std::vector<double> ClipProbabilities(std::span<const double> row, double floor, double ceiling);

struct BtsResult {
  PolicySnapshot snapshot;  // clipped, stochastic
  Matrix tallies;  // N x K win counts over successful replicates
  Matrix pre_clip;  // tallies / successful replicates
  int replicates = 0;
  int dropped_replicates = 0;
  std::vector<std::vector<int>> replicate_actions;  // successful replicates only
  std::vector<std::string> warnings;
};

// Pre-clip probabilities tallies / R followed by row clipping.
BtsResult BtsFromReplicateActions(std::vector<std::vector<int>> replicate_actions,
                                  std::size_t n_units, int n_actions, double floor,
                                  double ceiling);

// Each replicate resamples units with replacement, reruns the full
// scores -> policy pipeline and records its action for every unit of
// `assign_features` (the experiment's own features when null). Failed
// replicates are dropped and counted; an error is raised if all fail.
BtsResult BootstrapThompson(const ExperimentalDataset& exp, std::span<const double> outcomes,
                            const PolicyPipelineConfig& pipeline, const BtsConfig& config,
                            const Table* assign_features = nullptr);

struct DesignPolicyConfig {
  double sigma = 0.003;
  double tau = 0.0068;
  double cap = 0.5;

  void Validate() const;
};

inline constexpr double kDesignPolicyFloor = 1e-6;

// Binary snapshot with treat probability max(1e-6, min(cap, Phi((R - tau) / sigma))).
PolicySnapshot DesignPolicyFromRisk(std::span<const double> risk, const DesignPolicyConfig& config);

// One draw per unit from its row of `snapshot`.
std::vector<int> SampleActions(const PolicySnapshot& snapshot, std::uint64_t seed);

// unit_id, p0..p{K-1}, sampled_action, seed
void WriteAssignment(const std::filesystem::path& path, std::span<const std::int64_t> unit_ids,
                     const PolicySnapshot& snapshot, std::span<const int> sampled,
                     std::uint64_t seed);

}  // namespace longhorizon

#endif  // LONGHORIZON_EXPLORE_HPP_
