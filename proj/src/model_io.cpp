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

#include "longhorizon/model_io.hpp"

#include <fstream>

#include "longhorizon/error.hpp"

namespace longhorizon {

namespace {

template <typename T>
T Field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw DataError(std::string("model JSON lacks '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model JSON field '") + key + "': " + e.what());
  }
}

Json TreeToJson(const Tree& tree) {
  Json nodes = Json::array();
  for (const auto& n : tree.nodes) {
    if (n.is_leaf()) {
      nodes.push_back({{"value", n.value}});
    } else {
      nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
    }
  }
  return nodes;
}

Tree TreeFromJson(const Json& j) {
  Tree tree;
  for (const auto& jn : j) {
    TreeNode n;
    if (jn.contains("value")) {
      n.value = jn.at("value").get<std::vector<double>>();
    } else {
      n.feature = Field<int>(jn, "feature");
      n.threshold = Field<double>(jn, "threshold");
      n.left = Field<int>(jn, "left");
      n.right = Field<int>(jn, "right");
    }
    tree.nodes.push_back(std::move(n));
  }
  const int size = static_cast<int>(tree.nodes.size());
  if (size == 0) throw DataError("model JSON: empty tree");
  for (const auto& n : tree.nodes) {
    if (!n.is_leaf() && (n.left <= 0 || n.left >= size || n.right <= 0 || n.right >= size)) {
      throw DataError("model JSON: tree child index out of range");
    }
  }
  return tree;
}

Json ParamsToJson(const ModelParams& params) {
  return std::visit(
      [](const auto& p) -> Json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LinearParams>) {
          return {{"type", "linear"}, {"intercept", p.intercept}, {"coef", p.coef}};
        } else if constexpr (std::is_same_v<T, TreeEnsemble>) {
          Json trees = Json::array();
          for (const auto& t : p.trees) trees.push_back(TreeToJson(t));
          return {{"type", "trees"}, {"base", p.base}, {"trees", trees}};
        } else if constexpr (std::is_same_v<T, KnnParams>) {
          return {{"type", "knn"},   {"k", p.k},           {"width", p.width},
                  {"points", p.points}, {"targets", p.targets}, {"weights", p.weights}};
        } else {
          return {{"type", "constant"}, {"value", p.value}};
        }
      },
      params);
}

ModelParams ParamsFromJson(const Json& j) {
  const auto type = Field<std::string>(j, "type");
  if (type == "linear") {
    return LinearParams{Field<double>(j, "intercept"), Field<std::vector<double>>(j, "coef")};
  }
  if (type == "trees") {
    TreeEnsemble ens;
    ens.base = Field<std::vector<double>>(j, "base");
    for (const auto& t : j.at("trees")) ens.trees.push_back(TreeFromJson(t));
    return ens;
  }
  if (type == "knn") {
    KnnParams knn;
    knn.k = Field<int>(j, "k");
    knn.width = Field<std::size_t>(j, "width");
    knn.points = Field<std::vector<double>>(j, "points");
    knn.targets = Field<std::vector<double>>(j, "targets");
    knn.weights = Field<std::vector<double>>(j, "weights");
    if (knn.points.size() != knn.width * knn.targets.size() || knn.weights.size() != knn.targets.size()) {
      throw DataError("model JSON: knn arrays inconsistent");
    }
    return knn;
  }
  if (type == "constant") return ConstantParams{Field<double>(j, "value")};
  throw DataError("model JSON: unknown parameter type '" + type + "'");
}

void CheckVersion(const Json& j) {
  const int v = Field<int>(j, "format_version");
  if (v != kModelFormatVersion) {
    throw DataError("unsupported model format_version " + std::to_string(v));
  }
}

Json ModelToJson(const LearnerSpec& spec, const FeatureSchema& schema, const ModelParams& params) {
  Json j;
  j["format_version"] = kModelFormatVersion;
  j["family"] = std::string(ToString(spec.family));
  j["hyperparameters"] = spec.hyperparameters;
  j["seed"] = spec.seed;
  j["parameters"] = ParamsToJson(params);
  j["feature_schema"] = ToJson(schema);
  return j;
}

}  // namespace

Json ToJson(const LearnerSpec& spec) {
  return {{"family", std::string(ToString(spec.family))},
          {"hyperparameters", spec.hyperparameters},
          {"seed", spec.seed}};
}

LearnerSpec LearnerSpecFromJson(const Json& j) {
  if (!j.is_object() || !j.contains("family")) throw ArgumentError("learner spec needs a 'family'");
  LearnerSpec spec;
  spec.family = ParseLearnerFamily(j.at("family").get<std::string>());
  if (j.contains("hyperparameters")) {
    for (const auto& [k, v] : j.at("hyperparameters").items()) {
      if (!v.is_number()) throw ArgumentError("hyperparameter '" + k + "' must be a number");
      spec.hyperparameters[k] = v.get<double>();
    }
  }
  if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
  spec.Validate();
  return spec;
}

Json ToJson(const FeatureSchema& schema) {
  Json cols = Json::array();
  for (std::size_t k = 0; k < schema.columns().size(); ++k) {
    Json c = {{"name", schema.columns()[k].name}, {"kind", std::string(ToString(schema.columns()[k].kind))}};
    if (schema.columns()[k].kind == ColumnKind::kCategorical) c["levels"] = schema.levels()[k];
    cols.push_back(std::move(c));
  }
  return cols;
}

FeatureSchema FeatureSchemaFromJson(const Json& j) {
  std::vector<ColumnSpec> cols;
  std::vector<std::vector<std::string>> levels;
  for (const auto& c : j) {
    cols.push_back({Field<std::string>(c, "name"), ParseColumnKind(Field<std::string>(c, "kind"))});
    levels.push_back(c.contains("levels") ? c.at("levels").get<std::vector<std::string>>()
                                          : std::vector<std::string>{});
  }
  return FeatureSchema(std::move(cols), std::move(levels));
}

Json ToJson(const FittedRegressor& model) {
  return ModelToJson(model.spec(), model.schema(), model.params());
}

Json ToJson(const FittedClassifier& model) {
  Json j = ModelToJson(model.spec(), model.schema(), model.params());
  j["labels"] = model.labels();
  return j;
}

FittedRegressor RegressorFromJson(const Json& j) {
  CheckVersion(j);
  LearnerSpec spec = LearnerSpecFromJson(j);
  return {std::move(spec), FeatureSchemaFromJson(j.at("feature_schema")), ParamsFromJson(j.at("parameters"))};
}

FittedClassifier ClassifierFromJson(const Json& j) {
  CheckVersion(j);
  LearnerSpec spec = LearnerSpecFromJson(j);
  return {std::move(spec), FeatureSchemaFromJson(j.at("feature_schema")), Field<std::vector<int>>(j, "labels"),
          ParamsFromJson(j.at("parameters"))};
}

Json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("invalid JSON in '" + path.string() + "': " + e.what());
  }
}

void WriteJsonFile(const std::filesystem::path& path, const Json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto partial = std::filesystem::path(path.string() + ".partial");
  {
    std::ofstream out(partial);
    if (!out) throw DataError("cannot write '" + partial.string() + "'");
    out << j.dump(2) << '\n';
    if (!out) throw DataError("write failed for '" + partial.string() + "'");
  }
  std::filesystem::rename(partial, path);
}

}  // namespace longhorizon
