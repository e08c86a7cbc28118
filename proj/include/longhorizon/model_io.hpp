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

#ifndef LONGHORIZON_MODEL_IO_HPP_
#define LONGHORIZON_MODEL_IO_HPP_

#include <filesystem>
#include <string>

#include "json.hpp"
#include "longhorizon/learners.hpp"

namespace longhorizon {

using Json = nlohmann::ordered_json;

inline constexpr int kModelFormatVersion = 1;

Json ToJson(const LearnerSpec& spec);
LearnerSpec LearnerSpecFromJson(const Json& j);

Json ToJson(const FeatureSchema& schema);
FeatureSchema FeatureSchemaFromJson(const Json& j);

// {format_version, family, hyperparameters, parameters, feature_schema}
// plus "labels" for classifiers.
Json ToJson(const FittedRegressor& model);
Json ToJson(const FittedClassifier& model);
FittedRegressor RegressorFromJson(const Json& j);
FittedClassifier ClassifierFromJson(const Json& j);

// Whole-file helpers. Writes go to `<path>.partial` and are renamed into
// place once complete.
Json ReadJsonFile(const std::filesystem::path& path);
void WriteJsonFile(const std::filesystem::path& path, const Json& j);

}  // namespace longhorizon

#endif  // LONGHORIZON_MODEL_IO_HPP_
