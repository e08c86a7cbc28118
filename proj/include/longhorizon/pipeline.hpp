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

#ifndef LONGHORIZON_PIPELINE_HPP_
#define LONGHORIZON_PIPELINE_HPP_

// End-to-end targeting cycle over files: simulate or load data, fit the
// surrogate index, impute, learn a policy on a training split, evaluate it
// against treat-none on the held-out split and export a BTS assignment.
//
// Stage seeds are DeriveSeed(seed, "<stage>") for the stages "simulate",
// "surrogate", "split", "policy", "evaluation-model", "bootstrap", "bts" and
// "assignment".

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "longhorizon/csv.hpp"
#include "longhorizon/explore.hpp"
#include "longhorizon/model_io.hpp"
#include "longhorizon/ope.hpp"
#include "longhorizon/policy.hpp"
#include "longhorizon/sim.hpp"
#include "longhorizon/surrogate.hpp"

namespace longhorizon {

inline constexpr const char* kLibraryVersion = "0.1.0";

struct EvaluationConfig {
  double test_fraction = 0.2;
  int bootstrap = 1000;
  double level = 0.95;
  Estimator estimator = Estimator::kDr;
};

struct PipelineConfig {
  // Either a simulator block or the two dataset files plus their schema.
  std::optional<DgpConfig> simulate;
  std::filesystem::path historical_path;
  std::filesystem::path experiment_path;
  DatasetSchema schema;

  SurrogateFitOptions surrogate;
  PolicyPipelineConfig policy;
  // When non-empty the policy classifier is chosen from these by CV.
  std::vector<LearnerSpec> classifier_candidates;
  EvaluationConfig evaluation;
  bool run_bts = true;
  BtsConfig bts;
  std::filesystem::path output_dir = "longhorizon_out";
  std::uint64_t seed = 0;

  // Throws ArgumentError on invalid values and DataError naming the first
  // dataset path that does not exist.
  void Validate() const;
};

Json ToJson(const DgpConfig& config);
DgpConfig DgpConfigFromJson(const Json& j);
Json ToJson(const DatasetSchema& schema);
DatasetSchema DatasetSchemaFromJson(const Json& j);
Json ToJson(const PipelineConfig& config);
// Unknown keys raise ArgumentError. Relative dataset paths are resolved
// against `base_dir`.
PipelineConfig PipelineConfigFromJson(const Json& j, const std::filesystem::path& base_dir = {});

// Schema of an in-memory experiment / history pair.
DatasetSchema SchemaOf(const ExperimentalDataset& exp);

// 16 hex digits of the FNV-1a hash of the canonical config JSON.
std::string ConfigHash(const PipelineConfig& config);

struct RunManifest {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::filesystem::path>> artifacts;
  std::vector<std::pair<std::string, double>> timings;  // seconds per stage
  std::vector<std::pair<std::string, std::string>> versions;
  std::vector<std::string> warnings;
};

Json ToJson(const RunManifest& manifest);

// Evaluation of one policy against treat-none on a dataset:
// {estimator, n_units, outcome, level, replicates, target, baseline,
//  difference, action_shares, warnings}. Contains no timings, so reruns
// are byte-identical.
Json EvaluatePolicyReport(const ExperimentalDataset& exp, std::span<const double> outcomes,
                          const PolicySnapshot& target, const std::string& outcome_name,
                          const LearnerSpec& outcome_model, int n_folds,
                          const EvaluationConfig& config, std::uint64_t seed);

Json ToJson(const ValueEstimate& v);

// Writes `<path>.partial` through `write` and renames it into place; a
// failure leaves the .partial file behind.
template <typename WriteFn>
void WriteArtifact(const std::filesystem::path& path, WriteFn&& write) {
  std::filesystem::path partial = path;
  partial += ".partial";
  write(partial);
  std::filesystem::rename(partial, path);
}

// Runs every stage and writes manifest.json into the output directory. A
// failing stage rethrows its error (same category) prefixed with the stage
// name.
RunManifest RunPipeline(const PipelineConfig& config);

// Loads the outcome column of an outcome file and checks that its unit ids
// match `unit_ids` in order.
std::vector<double> LoadAlignedOutcomes(const std::filesystem::path& path, const std::string& column,
                                        std::span<const std::int64_t> unit_ids);

}  // namespace longhorizon

#endif  // LONGHORIZON_PIPELINE_HPP_
