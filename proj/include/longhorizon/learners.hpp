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

#ifndef LONGHORIZON_LEARNERS_HPP_
#define LONGHORIZON_LEARNERS_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "longhorizon/data.hpp"
#include "longhorizon/matrix.hpp"

namespace longhorizon {

enum class LearnerFamily { kRidgeLinear, kCartTree, kGradientBoostedTrees, kKnn, kLogistic };

std::string_view ToString(LearnerFamily family);
LearnerFamily ParseLearnerFamily(std::string_view text);

// Family plus hyperparameters. Recognised keys (defaults in parentheses):
//   ridge_linear:           l2_penalty (0)
//   cart_tree:              max_depth (4), min_leaf (1), min_leaf_fraction (0)
//   gradient_boosted_trees: n_trees (100), max_depth (3), learning_rate (0.1),
//                           min_leaf (1), min_leaf_fraction (0)
//   knn:                    k (5)
//   logistic:               l2_penalty (1e-6), max_iter (100)
// Losses are normalised by the total weight, so scaling every weight by a
// constant leaves the fit unchanged.
struct LearnerSpec {
  LearnerFamily family = LearnerFamily::kRidgeLinear;
  std::map<std::string, double> hyperparameters;
  std::uint64_t seed = 0;

  // Value of `key`, falling back to the family default.
  double Get(const std::string& key) const;
  // Throws ArgumentError on unknown keys or out-of-range values.
  void Validate() const;

  static LearnerSpec Ridge(double l2_penalty = 0.0);
  static LearnerSpec Cart(int max_depth, int min_leaf = 1);
  static LearnerSpec Boosted(int n_trees, int max_depth, double learning_rate);
  static LearnerSpec Knn(int k);
  static LearnerSpec Logistic(double l2_penalty = 1e-6);

  friend bool operator==(const LearnerSpec&, const LearnerSpec&) = default;
};

// Column layout a model was trained on. Numeric columns map to one design
// column each, categorical columns to one indicator per training level (an
// unseen level encodes as all zeros). Lookup is by name, so column order in
// the prediction table does not matter.
class FeatureSchema {
 public:
  FeatureSchema() = default;
  FeatureSchema(std::vector<ColumnSpec> columns, std::vector<std::vector<std::string>> levels);
  static FeatureSchema FromTable(const Table& table);

  const std::vector<ColumnSpec>& columns() const { return columns_; }
  const std::vector<std::vector<std::string>>& levels() const { return levels_; }
  std::size_t width() const;
  std::vector<std::string> ExpandedNames() const;
  // Throws SchemaError when a column is missing or has a different kind.
  void Check(const Table& table) const;

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;

 private:
  std::vector<ColumnSpec> columns_;
  std::vector<std::vector<std::string>> levels_;
};

struct LinearParams {
  double intercept = 0.0;
  std::vector<double> coef;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // rows with x <= threshold go left
  int left = -1;
  int right = -1;
  std::vector<double> value;  // leaf output(s)

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // root at index 0
};

// Sum of `base` and the leaf outputs of every tree (leaf values already carry
// the learning rate). A single CART is an ensemble with base 0 and one tree.
struct TreeEnsemble {
  std::vector<double> base;
  std::vector<Tree> trees;
};

struct KnnParams {
  int k = 5;
  std::size_t width = 0;
  std::vector<double> points;  // row-major n x width
  std::vector<double> targets;  // regression target or class index
  std::vector<double> weights;
};

struct ConstantParams {
  double value = 0.0;  // regression value or class index
};

using ModelParams = std::variant<LinearParams, TreeEnsemble, KnnParams, ConstantParams>;

class FittedRegressor {
 public:
  FittedRegressor(LearnerSpec spec, FeatureSchema schema, ModelParams params)
      : spec_(std::move(spec)), schema_(std::move(schema)), params_(std::move(params)) {}

  const LearnerSpec& spec() const { return spec_; }
  const FeatureSchema& schema() const { return schema_; }
  const ModelParams& params() const { return params_; }

  std::vector<double> Predict(const Table& features) const;
  // Ensemble prediction using only the first `n_trees` trees.
  std::vector<double> PredictPrefix(const Table& features, std::size_t n_trees) const;

 private:
  LearnerSpec spec_;
  FeatureSchema schema_;
  ModelParams params_;
};

class FittedClassifier {
 public:
  FittedClassifier(LearnerSpec spec, FeatureSchema schema, std::vector<int> labels,
                   ModelParams params, std::vector<std::string> warnings = {})
      : spec_(std::move(spec)),
        schema_(std::move(schema)),
        labels_(std::move(labels)),
        params_(std::move(params)),
        warnings_(std::move(warnings)) {}

  const LearnerSpec& spec() const { return spec_; }
  const FeatureSchema& schema() const { return schema_; }
  // Sorted class labels the model can emit.
  const std::vector<int>& labels() const { return labels_; }
  const ModelParams& params() const { return params_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  std::vector<int> Predict(const Table& features) const;
  // N x labels().size() class scores (probabilities for trees / logistic,
  // vote shares for knn, a +-1 margin split for ridge).
  Matrix PredictScores(const Table& features) const;

 private:
  LearnerSpec spec_;
  FeatureSchema schema_;
  std::vector<int> labels_;
  ModelParams params_;
  std::vector<std::string> warnings_;
};

// Weighted squared-loss fit. Empty `weights` means uniform. Throws
// ArgumentError on empty data, length mismatch, negative weights or
// non-finite targets.
FittedRegressor FitRegressor(const LearnerSpec& spec, const Table& features,
                             std::span<const double> targets,
                             std::span<const double> weights = {});

// Weighted classification fit. Classes whose total weight is zero are dropped
// with a warning; a single remaining class gives a constant classifier.
// ridge_linear, logistic and gradient_boosted_trees are binary only.
FittedClassifier FitClassifier(const LearnerSpec& spec, const Table& features,
                               std::span<const int> labels,
                               std::span<const double> weights = {});

// a is strictly simpler than b: fewer trees, then shallower, then larger
// penalty, then larger k, then smaller learning rate.
bool SimplerThan(const LearnerSpec& a, const LearnerSpec& b);

// Fixed documented grids used when a caller asks for tuning without listing
// candidates.
std::vector<LearnerSpec> DefaultGrid(LearnerFamily family);

struct CvSelection {
  LearnerSpec best;
  std::vector<double> mean_loss;  // per candidate, in input order
};

// K-fold selection by mean validation loss (weighted MSE / weighted
// misclassification). Ties within 1e-12 relative go to the simpler spec.
CvSelection SelectRegressorByCv(std::span<const LearnerSpec> candidates, const Table& features,
                                std::span<const double> targets, std::span<const double> weights,
                                int n_folds, std::uint64_t seed);
CvSelection SelectClassifierByCv(std::span<const LearnerSpec> candidates, const Table& features,
                                 std::span<const int> labels, std::span<const double> weights,
                                 int n_folds, std::uint64_t seed);

// ---- Interpretation -------------------------------------------------------

using PredictFn = std::function<std::vector<double>(const Table&)>;

PredictFn AsPredictFn(const FittedRegressor& model);
// Predicted labels as doubles.
PredictFn AsPredictFn(const FittedClassifier& model);

enum class ImportanceMetric { kMse, kMisclassification };

struct FeatureImportance {
  std::string feature;
  double importance = 0.0;  // mean metric increase over repeats
  double std_error = 0.0;
};

// Within-column permutation importance for every column of `features`.
std::vector<FeatureImportance> PermutationImportance(const PredictFn& predict,
                                                     const Table& features,
                                                     std::span<const double> targets,
                                                     ImportanceMetric metric, int n_repeats,
                                                     std::uint64_t seed);

struct AleCurve {
  std::vector<double> edges;  // equal-frequency bin edges
  std::vector<double> centers;
  std::vector<double> values;  // centred: count-weighted mean is zero
  std::vector<std::size_t> counts;
};

// First-order accumulated local effects of a float column.
AleCurve AccumulatedLocalEffects(const PredictFn& predict, const Table& features,
                                 const std::string& focal, int n_bins);

}  // namespace longhorizon

#endif  // LONGHORIZON_LEARNERS_HPP_
