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

#include "longhorizon/learners.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>

#include "longhorizon/error.hpp"
#include "longhorizon/rng.hpp"
#include "longhorizon/stats.hpp"
#include "tree.hpp"

namespace longhorizon {

using internal::EncodeFeatures;

// ---- Spec -----------------------------------------------------------------

namespace {

const std::map<std::string, double>& Defaults(LearnerFamily family) {
  static const std::map<std::string, double> kRidge{{"l2_penalty", 0.0}};
  static const std::map<std::string, double> kCart{
      {"max_depth", 4}, {"min_leaf", 1}, {"min_leaf_fraction", 0.0}};
  static const std::map<std::string, double> kBoosted{{"n_trees", 100},
                                                      {"max_depth", 3},
                                                      {"learning_rate", 0.1},
                                                      {"min_leaf", 1},
                                                      {"min_leaf_fraction", 0.0}};
  static const std::map<std::string, double> kKnn{{"k", 5}};
  static const std::map<std::string, double> kLogistic{{"l2_penalty", 1e-6}, {"max_iter", 100}};
  switch (family) {
    case LearnerFamily::kRidgeLinear:
      return kRidge;
    case LearnerFamily::kCartTree:
      return kCart;
    case LearnerFamily::kGradientBoostedTrees:
      return kBoosted;
    case LearnerFamily::kKnn:
      return kKnn;
    case LearnerFamily::kLogistic:
      return kLogistic;
  }
  return kRidge;
}

bool IsWholeNumber(double v) { return std::floor(v) == v; }

}  // namespace

std::string_view ToString(LearnerFamily family) {
  switch (family) {
    case LearnerFamily::kRidgeLinear:
      return "ridge_linear";
    case LearnerFamily::kCartTree:
      return "cart_tree";
    case LearnerFamily::kGradientBoostedTrees:
      return "gradient_boosted_trees";
    case LearnerFamily::kKnn:
      return "knn";
    case LearnerFamily::kLogistic:
      return "logistic";
  }
  return "ridge_linear";
}

LearnerFamily ParseLearnerFamily(std::string_view text) {
  for (auto f : {LearnerFamily::kRidgeLinear, LearnerFamily::kCartTree,
                 LearnerFamily::kGradientBoostedTrees, LearnerFamily::kKnn,
                 LearnerFamily::kLogistic}) {
    if (ToString(f) == text) return f;
  }
  throw ArgumentError("unknown learner family '" + std::string(text) + "'");
}

double LearnerSpec::Get(const std::string& key) const {
  if (auto it = hyperparameters.find(key); it != hyperparameters.end()) return it->second;
  const auto& d = Defaults(family);
  if (auto it = d.find(key); it != d.end()) return it->second;
  throw ArgumentError("hyperparameter '" + key + "' not defined for " +
                      std::string(ToString(family)));
}

void LearnerSpec::Validate() const {
  const auto& d = Defaults(family);
  for (const auto& [key, value] : hyperparameters) {
    if (!d.contains(key)) {
      throw ArgumentError("unknown hyperparameter '" + key + "' for " +
                          std::string(ToString(family)));
    }
    if (!std::isfinite(value)) throw ArgumentError("hyperparameter '" + key + "' is not finite");
  }
  auto require = [&](bool ok, const std::string& what) {
    if (!ok) throw ArgumentError(std::string(ToString(family)) + ": " + what);
  };
  switch (family) {
    case LearnerFamily::kRidgeLinear:
      require(Get("l2_penalty") >= 0.0, "l2_penalty must be >= 0");
      break;
    case LearnerFamily::kLogistic:
      require(Get("l2_penalty") >= 0.0, "l2_penalty must be >= 0");
      require(Get("max_iter") >= 1.0 && IsWholeNumber(Get("max_iter")), "max_iter must be a positive integer");
      break;
    case LearnerFamily::kGradientBoostedTrees:
      require(Get("n_trees") >= 1.0 && IsWholeNumber(Get("n_trees")), "n_trees must be a positive integer");
      require(Get("learning_rate") > 0.0 && Get("learning_rate") <= 1.0,
              "learning_rate must be in (0, 1]");
      [[fallthrough]];
    case LearnerFamily::kCartTree:
      require(Get("max_depth") >= 1.0 && IsWholeNumber(Get("max_depth")), "max_depth must be >= 1");
      require(Get("min_leaf") >= 1.0 && IsWholeNumber(Get("min_leaf")), "min_leaf must be >= 1");
      require(Get("min_leaf_fraction") >= 0.0 && Get("min_leaf_fraction") < 0.5,
              "min_leaf_fraction must be in [0, 0.5)");
      break;
    case LearnerFamily::kKnn:
      require(Get("k") >= 1.0 && IsWholeNumber(Get("k")), "k must be >= 1");
      break;
  }
}

LearnerSpec LearnerSpec::Ridge(double l2_penalty) {
  return {LearnerFamily::kRidgeLinear, {{"l2_penalty", l2_penalty}}, 0};
}
LearnerSpec LearnerSpec::Cart(int max_depth, int min_leaf) {
  return {LearnerFamily::kCartTree,
          {{"max_depth", static_cast<double>(max_depth)}, {"min_leaf", static_cast<double>(min_leaf)}},
          0};
}
LearnerSpec LearnerSpec::Boosted(int n_trees, int max_depth, double learning_rate) {
  return {LearnerFamily::kGradientBoostedTrees,
          {{"n_trees", static_cast<double>(n_trees)},
           {"max_depth", static_cast<double>(max_depth)},
           {"learning_rate", learning_rate}},
          0};
}
LearnerSpec LearnerSpec::Knn(int k) {
  return {LearnerFamily::kKnn, {{"k", static_cast<double>(k)}}, 0};
}
LearnerSpec LearnerSpec::Logistic(double l2_penalty) {
  return {LearnerFamily::kLogistic, {{"l2_penalty", l2_penalty}}, 0};
}

// ---- Schema ---------------------------------------------------------------

FeatureSchema::FeatureSchema(std::vector<ColumnSpec> columns,
                             std::vector<std::vector<std::string>> levels)
    : columns_(std::move(columns)), levels_(std::move(levels)) {
  if (levels_.size() != columns_.size()) throw ArgumentError("FeatureSchema: levels size mismatch");
}

FeatureSchema FeatureSchema::FromTable(const Table& table) {
  std::vector<ColumnSpec> cols = table.Schema();
  std::vector<std::vector<std::string>> levels(cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j].kind == ColumnKind::kCategorical) levels[j] = table.column(j).levels();
  }
  return FeatureSchema(std::move(cols), std::move(levels));
}

std::size_t FeatureSchema::width() const {
  std::size_t w = 0;
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    w += columns_[j].kind == ColumnKind::kCategorical ? levels_[j].size() : 1;
  }
  return w;
}

std::vector<std::string> FeatureSchema::ExpandedNames() const {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    if (columns_[j].kind != ColumnKind::kCategorical) {
      out.push_back(columns_[j].name);
    } else {
      for (const auto& l : levels_[j]) out.push_back(columns_[j].name + "=" + l);
    }
  }
  return out;
}

void FeatureSchema::Check(const Table& table) const {
  std::vector<std::string> problems;
  for (const auto& spec : columns_) {
    auto j = table.Find(spec.name);
    if (!j) {
      problems.push_back("missing '" + spec.name + "'");
    } else if (table.column(*j).kind() != spec.kind) {
      problems.push_back("'" + spec.name + "' is " + std::string(ToString(table.column(*j).kind())) +
                         ", model expects " + std::string(ToString(spec.kind)));
    }
  }
  if (!problems.empty()) {
    std::string msg = "feature schema mismatch:";
    for (const auto& p : problems) msg += " " + p + ";";
    throw SchemaError(msg);
  }
}

// ---- Fitting helpers ------------------------------------------------------

namespace {

std::vector<double> ResolveWeights(std::span<const double> weights, std::size_t n) {
  if (weights.empty()) return std::vector<double>(n, 1.0);
  if (weights.size() != n) throw ArgumentError("weights length does not match rows");
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ArgumentError("weights must be finite and >= 0");
  }
  return {weights.begin(), weights.end()};
}

double TotalWeight(const std::vector<double>& w) { return std::accumulate(w.begin(), w.end(), 0.0); }

internal::GrowParams TreeParams(const LearnerSpec& spec) {
  return {static_cast<int>(spec.Get("max_depth")), static_cast<int>(spec.Get("min_leaf")),
          spec.Get("min_leaf_fraction")};
}

// Weighted ridge with an unpenalised intercept:
//   min sum_i w_i (t_i - b0 - x_i' b)^2 / W + l2 |b|^2.
// Solved as an augmented least-squares problem with a complete orthogonal
// decomposition, which returns the minimum-norm solution when rank deficient.
LinearParams SolveRidge(const Eigen::MatrixXd& x, std::span<const double> t,
                        const std::vector<double>& w, double l2) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  const double total = TotalWeight(w);
  if (!(total > 0.0)) throw NumericError("ridge: total weight is zero");
  const Eigen::Index extra = l2 > 0.0 ? p : 0;
  Eigen::MatrixXd z(n + extra, p + 1);
  Eigen::VectorXd rhs(n + extra);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = std::sqrt(w[static_cast<std::size_t>(i)] / total);
    z(i, 0) = s;
    z.block(i, 1, 1, p) = s * x.row(i);
    rhs(i) = s * t[static_cast<std::size_t>(i)];
  }
  if (extra > 0) {
    z.bottomRows(extra).setZero();
    const double s = std::sqrt(l2);
    for (Eigen::Index j = 0; j < p; ++j) z(n + j, j + 1) = s;
    rhs.tail(extra).setZero();
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(z);
  const Eigen::VectorXd beta = cod.solve(rhs);
  LinearParams out;
  out.intercept = beta(0);
  out.coef.assign(beta.data() + 1, beta.data() + 1 + p);
  return out;
}

double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Binary weighted logistic regression by damped Newton iterations on
//   sum_i w_i logloss_i / W + l2 |b|^2.
LinearParams SolveLogistic(const Eigen::MatrixXd& x, const std::vector<double>& y01,
                           const std::vector<double>& w, double l2, int max_iter) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  const double total = TotalWeight(w);
  if (!(total > 0.0)) throw NumericError("logistic: total weight is zero");
  Eigen::MatrixXd z(n, p + 1);
  z.col(0).setOnes();
  z.rightCols(p) = x;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p + 1);
  auto objective = [&](const Eigen::VectorXd& b) {
    const Eigen::VectorXd eta = z * b;
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double e = eta(i);
      // log(1 + exp(e)) - y e, computed stably
      const double softplus = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
      s += w[static_cast<std::size_t>(i)] * (softplus - y01[static_cast<std::size_t>(i)] * e);
    }
    return s / total + l2 * b.tail(p).squaredNorm();
  };
  double obj = objective(beta);
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd eta = z * beta;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(p + 1);
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(p + 1, p + 1);
    Eigen::VectorXd hw(n);
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double pi = Sigmoid(eta(i));
      const double wi = w[static_cast<std::size_t>(i)] / total;
      r(i) = wi * (pi - y01[static_cast<std::size_t>(i)]);
      hw(i) = wi * pi * (1.0 - pi);
    }
    grad = z.transpose() * r;
    hess.noalias() = z.transpose() * hw.asDiagonal() * z;
    for (Eigen::Index j = 1; j <= p; ++j) {
      grad(j) += 2.0 * l2 * beta(j);
      hess(j, j) += 2.0 * l2;
    }
    hess.diagonal().array() += 1e-12;
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    double scale = 1.0;
    Eigen::VectorXd candidate = beta - step;
    double cand_obj = objective(candidate);
    while (cand_obj > obj && scale > 1e-10) {
      scale *= 0.5;
      candidate = beta - scale * step;
      cand_obj = objective(candidate);
    }
    if (cand_obj > obj) break;
    const double change = (scale * step).lpNorm<Eigen::Infinity>();
    beta = candidate;
    const double improvement = obj - cand_obj;
    obj = cand_obj;
    if (change < 1e-10 || improvement < 1e-15) break;
  }
  LinearParams out;
  out.intercept = beta(0);
  out.coef.assign(beta.data() + 1, beta.data() + 1 + p);
  return out;
}

double LinearPredict(const LinearParams& lp, const Eigen::MatrixXd& x, Eigen::Index i) {
  double s = lp.intercept;
  for (Eigen::Index j = 0; j < x.cols(); ++j) s += lp.coef[static_cast<std::size_t>(j)] * x(i, j);
  return s;
}

TreeEnsemble FitBoostedRegression(const Eigen::MatrixXd& x, std::span<const double> y,
                                  const std::vector<double>& w, const LearnerSpec& spec) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto sorted = internal::SortColumns(x);
  const auto params = TreeParams(spec);
  const double lr = spec.Get("learning_rate");
  const int n_trees = static_cast<int>(spec.Get("n_trees"));
  TreeEnsemble ens;
  ens.base = {stats::WeightedMean(y, w)};
  std::vector<double> f(n, ens.base[0]);
  std::vector<double> numer(n);
  for (int t = 0; t < n_trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) numer[i] = w[i] * (y[i] - f[i]);
    Tree tree = internal::GrowTree(x, sorted, numer, 1, w, params);
    for (auto& node : tree.nodes) {
      for (auto& v : node.value) v *= lr;
    }
    for (std::size_t i = 0; i < n; ++i) {
      f[i] += internal::Descend(tree, x, static_cast<Eigen::Index>(i)).value[0];
    }
    ens.trees.push_back(std::move(tree));
  }
  return ens;
}

TreeEnsemble FitBoostedLogistic(const Eigen::MatrixXd& x, const std::vector<double>& y01,
                                const std::vector<double>& w, const LearnerSpec& spec) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto sorted = internal::SortColumns(x);
  const auto params = TreeParams(spec);
  const double lr = spec.Get("learning_rate");
  const int n_trees = static_cast<int>(spec.Get("n_trees"));
  const double prior = std::clamp(stats::WeightedMean(y01, w), 1e-6, 1.0 - 1e-6);
  TreeEnsemble ens;
  ens.base = {std::log(prior / (1.0 - prior))};
  std::vector<double> f(n, ens.base[0]);
  std::vector<double> numer(n), denom(n);
  for (int t = 0; t < n_trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = Sigmoid(f[i]);
      numer[i] = w[i] * (y01[i] - p);
      denom[i] = w[i] * std::max(p * (1.0 - p), 1e-12);
    }
    Tree tree = internal::GrowTree(x, sorted, numer, 1, denom, params);
    for (auto& node : tree.nodes) {
      for (auto& v : node.value) v = lr * std::clamp(v, -10.0, 10.0);
    }
    for (std::size_t i = 0; i < n; ++i) {
      f[i] += internal::Descend(tree, x, static_cast<Eigen::Index>(i)).value[0];
    }
    ens.trees.push_back(std::move(tree));
  }
  return ens;
}

std::vector<double> EnsembleOutput(const TreeEnsemble& ens, const Eigen::MatrixXd& x,
                                   Eigen::Index i, std::size_t n_trees) {
  std::vector<double> out = ens.base;
  const std::size_t limit = std::min(n_trees, ens.trees.size());
  for (std::size_t t = 0; t < limit; ++t) {
    const auto& v = internal::Descend(ens.trees[t], x, i).value;
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += v[c];
  }
  return out;
}

// k nearest training points of row i (ties -> lower training index).
std::vector<std::size_t> Neighbours(const KnnParams& knn, const Eigen::MatrixXd& x, Eigen::Index i) {
  const std::size_t n = knn.targets.size();
  std::vector<std::pair<double, std::size_t>> d(n);
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < knn.width; ++j) {
      const double diff = knn.points[r * knn.width + j] - x(i, static_cast<Eigen::Index>(j));
      s += diff * diff;
    }
    d[r] = {s, r};
  }
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(knn.k), n);
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
  std::vector<std::size_t> out(k);
  for (std::size_t j = 0; j < k; ++j) out[j] = d[j].second;
  return out;
}

KnnParams MakeKnn(const Eigen::MatrixXd& x, std::vector<double> targets, std::vector<double> w, int k) {
  KnnParams knn;
  knn.k = k;
  knn.width = static_cast<std::size_t>(x.cols());
  knn.points.resize(static_cast<std::size_t>(x.rows() * x.cols()));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      knn.points[static_cast<std::size_t>(i * x.cols() + j)] = x(i, j);
  knn.targets = std::move(targets);
  knn.weights = std::move(w);
  return knn;
}

void CheckInputs(const Table& features, std::size_t n_targets) {
  if (features.n_rows() == 0) throw ArgumentError("cannot fit on empty data");
  if (features.n_rows() != n_targets) throw ArgumentError("targets length does not match rows");
}

}  // namespace

// ---- Regressor ------------------------------------------------------------

FittedRegressor FitRegressor(const LearnerSpec& spec, const Table& features,
                             std::span<const double> targets, std::span<const double> weights) {
  spec.Validate();
  CheckInputs(features, targets.size());
  for (double t : targets) {
    if (!std::isfinite(t)) throw ArgumentError("non-finite regression target");
  }
  const auto w = ResolveWeights(weights, targets.size());
  if (!(TotalWeight(w) > 0.0)) throw ArgumentError("regression weights sum to zero");
  FeatureSchema schema = FeatureSchema::FromTable(features);
  const Eigen::MatrixXd x = EncodeFeatures(schema, features);
  switch (spec.family) {
    case LearnerFamily::kRidgeLinear:
      return {spec, std::move(schema), SolveRidge(x, targets, w, spec.Get("l2_penalty"))};
    case LearnerFamily::kCartTree: {
      std::vector<double> numer(targets.size());
      for (std::size_t i = 0; i < numer.size(); ++i) numer[i] = w[i] * targets[i];
      TreeEnsemble ens;
      ens.base = {0.0};
      ens.trees.push_back(internal::GrowTree(x, internal::SortColumns(x), numer, 1, w, TreeParams(spec)));
      return {spec, std::move(schema), std::move(ens)};
    }
    case LearnerFamily::kGradientBoostedTrees:
      return {spec, std::move(schema), FitBoostedRegression(x, targets, w, spec)};
    case LearnerFamily::kKnn:
      return {spec, std::move(schema),
              MakeKnn(x, {targets.begin(), targets.end()}, w, static_cast<int>(spec.Get("k")))};
    case LearnerFamily::kLogistic:
      break;
  }
  throw ArgumentError("logistic is a classification family; use FitClassifier");
}

std::vector<double> FittedRegressor::Predict(const Table& features) const {
  return PredictPrefix(features, static_cast<std::size_t>(-1));
}

std::vector<double> FittedRegressor::PredictPrefix(const Table& features, std::size_t n_trees) const {
  if (features.n_rows() == 0) {
    schema_.Check(features);
    return {};
  }
  const Eigen::MatrixXd x = EncodeFeatures(schema_, features);
  std::vector<double> out(features.n_rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    out[k] = std::visit(
        [&](const auto& p) -> double {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, LinearParams>) {
            return LinearPredict(p, x, i);
          } else if constexpr (std::is_same_v<T, TreeEnsemble>) {
            return EnsembleOutput(p, x, i, n_trees)[0];
          } else if constexpr (std::is_same_v<T, KnnParams>) {
            const auto nb = Neighbours(p, x, i);
            double sw = 0.0, swy = 0.0, sy = 0.0;
            for (std::size_t r : nb) {
              sw += p.weights[r];
              swy += p.weights[r] * p.targets[r];
              sy += p.targets[r];
            }
            return sw > 0.0 ? swy / sw : sy / static_cast<double>(nb.size());
          } else {
            return p.value;
          }
        },
        params_);
  }
  return out;
}

// ---- Classifier -----------------------------------------------------------

FittedClassifier FitClassifier(const LearnerSpec& spec, const Table& features,
                               std::span<const int> labels, std::span<const double> weights) {
  spec.Validate();
  CheckInputs(features, labels.size());
  const auto w = ResolveWeights(weights, labels.size());
  FeatureSchema schema = FeatureSchema::FromTable(features);

  std::map<int, double> class_weight;
  for (std::size_t i = 0; i < labels.size(); ++i) class_weight[labels[i]] += w[i];
  std::vector<int> classes;
  std::vector<std::string> warnings;
  for (const auto& [label, total] : class_weight) {
    if (total > 0.0) {
      classes.push_back(label);
    } else {
      warnings.push_back("class " + std::to_string(label) + " has zero total weight; dropped");
    }
  }
  if (classes.empty()) {
    warnings.emplace_back("all weights are zero; constant classifier on the smallest label");
    classes.push_back(class_weight.begin()->first);
  }
  if (classes.size() == 1) {
    return {spec, std::move(schema), classes, ConstantParams{0.0}, std::move(warnings)};
  }

  const Eigen::MatrixXd x = EncodeFeatures(schema, features);
  std::vector<double> cls(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto it = std::lower_bound(classes.begin(), classes.end(), labels[i]);
    // Rows of dropped classes carry zero weight; park them on class 0.
    cls[i] = (it != classes.end() && *it == labels[i]) ? static_cast<double>(it - classes.begin()) : 0.0;
  }
  const std::size_t n_classes = classes.size();
  const bool binary = n_classes == 2;
  auto require_binary = [&]() {
    if (!binary) {
      throw ArgumentError(std::string(ToString(spec.family)) +
                          " classifier supports exactly two classes, got " +
                          std::to_string(n_classes));
    }
  };

  switch (spec.family) {
    case LearnerFamily::kLogistic: {
      require_binary();
      return {spec, std::move(schema), classes,
              SolveLogistic(x, cls, w, spec.Get("l2_penalty"), static_cast<int>(spec.Get("max_iter"))),
              std::move(warnings)};
    }
    case LearnerFamily::kRidgeLinear: {
      require_binary();
      std::vector<double> t(cls.size());
      for (std::size_t i = 0; i < t.size(); ++i) t[i] = cls[i] > 0.5 ? 1.0 : -1.0;
      return {spec, std::move(schema), classes, SolveRidge(x, t, w, spec.Get("l2_penalty")),
              std::move(warnings)};
    }
    case LearnerFamily::kGradientBoostedTrees: {
      require_binary();
      return {spec, std::move(schema), classes, FitBoostedLogistic(x, cls, w, spec), std::move(warnings)};
    }
    case LearnerFamily::kCartTree: {
      std::vector<double> numer(cls.size() * n_classes, 0.0);
      for (std::size_t i = 0; i < cls.size(); ++i) numer[i * n_classes + static_cast<std::size_t>(cls[i])] = w[i];
      TreeEnsemble ens;
      ens.base.assign(n_classes, 0.0);
      ens.trees.push_back(internal::GrowTree(x, internal::SortColumns(x), numer,
                                             static_cast<int>(n_classes), w, TreeParams(spec)));
      return {spec, std::move(schema), classes, std::move(ens), std::move(warnings)};
    }
    case LearnerFamily::kKnn:
      return {spec, std::move(schema), classes, MakeKnn(x, cls, w, static_cast<int>(spec.Get("k"))),
              std::move(warnings)};
  }
  throw ArgumentError("unsupported classifier family");
}

Matrix FittedClassifier::PredictScores(const Table& features) const {
  const std::size_t n_classes = labels_.size();
  Matrix out(features.n_rows(), n_classes, 0.0);
  if (features.n_rows() == 0) return out;
  if (std::holds_alternative<ConstantParams>(params_)) {
    schema_.Check(features);
    const auto c = static_cast<std::size_t>(std::get<ConstantParams>(params_).value);
    for (std::size_t i = 0; i < out.rows(); ++i) out(i, c) = 1.0;
    return out;
  }
  const Eigen::MatrixXd x = EncodeFeatures(schema_, features);
  for (Eigen::Index ii = 0; ii < x.rows(); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    if (const auto* lp = std::get_if<LinearParams>(&params_)) {
      const double eta = LinearPredict(*lp, x, ii);
      const double p = spec_.family == LearnerFamily::kLogistic ? Sigmoid(eta) : 0.5 * (1.0 + eta);
      out(i, 0) = 1.0 - p;
      out(i, 1) = p;
    } else if (const auto* ens = std::get_if<TreeEnsemble>(&params_)) {
      const auto v = EnsembleOutput(*ens, x, ii, ens->trees.size());
      if (spec_.family == LearnerFamily::kGradientBoostedTrees) {
        const double p = Sigmoid(v[0]);
        out(i, 0) = 1.0 - p;
        out(i, 1) = p;
      } else {
        for (std::size_t c = 0; c < n_classes; ++c) out(i, c) = v[c];
      }
    } else if (const auto* knn = std::get_if<KnnParams>(&params_)) {
      const auto nb = Neighbours(*knn, x, ii);
      double sw = 0.0;
      for (std::size_t r : nb) sw += knn->weights[r];
      for (std::size_t r : nb) {
        const double vote = sw > 0.0 ? knn->weights[r] / sw : 1.0 / static_cast<double>(nb.size());
        out(i, static_cast<std::size_t>(knn->targets[r])) += vote;
      }
    }
  }
  return out;
}

std::vector<int> FittedClassifier::Predict(const Table& features) const {
  const Matrix scores = PredictScores(features);
  std::vector<int> out(scores.rows());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < scores.cols(); ++c) {
      if (scores(i, c) > scores(i, best)) best = c;
    }
    out[i] = labels_[best];
  }
  return out;
}

// ---- Model selection -------------------------------------------------------

bool SimplerThan(const LearnerSpec& a, const LearnerSpec& b) {
  auto key = [](const LearnerSpec& s) {
    auto get = [&](const char* k, double fallback) {
      try {
        return s.Get(k);
      } catch (const ArgumentError&) {
        return fallback;
      }
    };
    return std::make_tuple(get("n_trees", 0.0), get("max_depth", 0.0), -get("l2_penalty", 0.0),
                           -get("k", 0.0), get("learning_rate", 0.0));
  };
  return key(a) < key(b);
}

std::vector<LearnerSpec> DefaultGrid(LearnerFamily family) {
  std::vector<LearnerSpec> grid;
  switch (family) {
    case LearnerFamily::kRidgeLinear:
      for (double l2 : {0.0, 0.01, 0.1, 1.0}) grid.push_back(LearnerSpec::Ridge(l2));
      break;
    case LearnerFamily::kCartTree:
      for (int d : {2, 3, 4}) grid.push_back(LearnerSpec::Cart(d));
      break;
    case LearnerFamily::kGradientBoostedTrees:
      for (int d : {2, 3, 4})
        for (int t : {50, 200})
          for (double lr : {0.1, 0.3}) grid.push_back(LearnerSpec::Boosted(t, d, lr));
      break;
    case LearnerFamily::kKnn:
      for (int k : {5, 10, 25}) grid.push_back(LearnerSpec::Knn(k));
      break;
    case LearnerFamily::kLogistic:
      for (double l2 : {1e-6, 1e-3, 1e-1}) grid.push_back(LearnerSpec::Logistic(l2));
      break;
  }
  return grid;
}

namespace {

template <typename FoldLoss>
CvSelection SelectByCv(std::span<const LearnerSpec> candidates, std::size_t n, int n_folds,
                       std::uint64_t seed, FoldLoss&& fold_loss) {
  if (candidates.empty()) throw ArgumentError("cross-validation needs at least one candidate");
  const FoldAssignment folds = MakeFolds(n, n_folds, seed);
  CvSelection sel;
  sel.mean_loss.assign(candidates.size(), 0.0);
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    double s = 0.0;
    for (int f = 0; f < n_folds; ++f) s += fold_loss(candidates[c], folds.Complement(f), folds.Members(f));
    sel.mean_loss[c] = s / n_folds;
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < candidates.size(); ++c) {
    const double tol = 1e-12 * std::max(std::abs(sel.mean_loss[best]), 1e-300);
    if (sel.mean_loss[c] < sel.mean_loss[best] - tol) {
      best = c;
    } else if (std::abs(sel.mean_loss[c] - sel.mean_loss[best]) <= tol &&
               SimplerThan(candidates[c], candidates[best])) {
      best = c;
    }
  }
  sel.best = candidates[best];
  return sel;
}

template <typename T>
std::vector<T> Gather(std::span<const T> v, const std::vector<std::size_t>& rows) {
  std::vector<T> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = v[rows[i]];
  return out;
}

}  // namespace

CvSelection SelectRegressorByCv(std::span<const LearnerSpec> candidates, const Table& features,
                                std::span<const double> targets, std::span<const double> weights,
                                int n_folds, std::uint64_t seed) {
  const auto w = ResolveWeights(weights, targets.size());
  return SelectByCv(candidates, targets.size(), n_folds, seed,
                    [&](const LearnerSpec& spec, const std::vector<std::size_t>& train,
                        const std::vector<std::size_t>& valid) {
                      const auto model = FitRegressor(spec, features.Take(train),
                                                      Gather<double>(targets, train),
                                                      Gather<double>(w, train));
                      const auto pred = model.Predict(features.Take(valid));
                      double sw = 0.0, se = 0.0;
                      for (std::size_t i = 0; i < valid.size(); ++i) {
                        const double d = pred[i] - targets[valid[i]];
                        sw += w[valid[i]];
                        se += w[valid[i]] * d * d;
                      }
                      return sw > 0.0 ? se / sw : 0.0;
                    });
}

CvSelection SelectClassifierByCv(std::span<const LearnerSpec> candidates, const Table& features,
                                 std::span<const int> labels, std::span<const double> weights,
                                 int n_folds, std::uint64_t seed) {
  const auto w = ResolveWeights(weights, labels.size());
  return SelectByCv(candidates, labels.size(), n_folds, seed,
                    [&](const LearnerSpec& spec, const std::vector<std::size_t>& train,
                        const std::vector<std::size_t>& valid) {
                      const auto model = FitClassifier(spec, features.Take(train),
                                                       Gather<int>(labels, train),
                                                       Gather<double>(w, train));
                      const auto pred = model.Predict(features.Take(valid));
                      double sw = 0.0, err = 0.0;
                      for (std::size_t i = 0; i < valid.size(); ++i) {
                        sw += w[valid[i]];
                        if (pred[i] != labels[valid[i]]) err += w[valid[i]];
                      }
                      return sw > 0.0 ? err / sw : 0.0;
                    });
}

// ---- Interpretation -------------------------------------------------------

PredictFn AsPredictFn(const FittedRegressor& model) {
  return [model](const Table& t) { return model.Predict(t); };
}

PredictFn AsPredictFn(const FittedClassifier& model) {
  return [model](const Table& t) {
    const auto labels = model.Predict(t);
    return std::vector<double>(labels.begin(), labels.end());
  };
}

namespace {

double Metric(ImportanceMetric metric, const std::vector<double>& pred, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (metric == ImportanceMetric::kMse) {
      s += (pred[i] - y[i]) * (pred[i] - y[i]);
    } else if (pred[i] != y[i]) {
      s += 1.0;
    }
  }
  return s / static_cast<double>(y.size());
}

Table ReplaceColumn(const Table& t, std::size_t j, Column c) {
  std::vector<Column> cols;
  cols.reserve(t.n_cols());
  for (std::size_t k = 0; k < t.n_cols(); ++k) cols.push_back(k == j ? c : t.column(k));
  return Table(std::move(cols));
}

}  // namespace

std::vector<FeatureImportance> PermutationImportance(const PredictFn& predict,
                                                     const Table& features,
                                                     std::span<const double> targets,
                                                     ImportanceMetric metric, int n_repeats,
                                                     std::uint64_t seed) {
  if (n_repeats < 1) throw ArgumentError("n_repeats must be >= 1");
  if (features.n_rows() != targets.size() || targets.empty()) {
    throw ArgumentError("permutation importance: targets must match a non-empty table");
  }
  const double base = Metric(metric, predict(features), targets);
  Rng rng(seed);
  std::vector<FeatureImportance> out;
  std::vector<std::size_t> perm(features.n_rows());
  for (std::size_t j = 0; j < features.n_cols(); ++j) {
    std::vector<double> inc(static_cast<std::size_t>(n_repeats));
    for (int r = 0; r < n_repeats; ++r) {
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      std::shuffle(perm.begin(), perm.end(), rng);
      const Table permuted = ReplaceColumn(features, j, features.column(j).Take(perm));
      inc[static_cast<std::size_t>(r)] = Metric(metric, predict(permuted), targets) - base;
    }
    FeatureImportance fi;
    fi.feature = features.column(j).name();
    fi.importance = stats::Mean(inc);
    fi.std_error = n_repeats > 1 ? std::sqrt(stats::SampleVariance(inc) / n_repeats) : 0.0;
    out.push_back(std::move(fi));
  }
  return out;
}

AleCurve AccumulatedLocalEffects(const PredictFn& predict, const Table& features,
                                 const std::string& focal, int n_bins) {
  if (n_bins < 2) throw ArgumentError("ALE needs n_bins >= 2");
  const auto j = features.Find(focal);
  if (!j) throw SchemaError("missing column '" + focal + "'");
  const Column& col = features.column(*j);
  if (col.kind() != ColumnKind::kFloat) throw ArgumentError("ALE focal feature must be float");
  std::vector<double> sorted(col.values().begin(), col.values().end());
  std::sort(sorted.begin(), sorted.end());
  AleCurve ale;
  for (int k = 0; k <= n_bins; ++k) {
    const double q = stats::SortedQuantile(sorted, static_cast<double>(k) / n_bins);
    if (ale.edges.empty() || q > ale.edges.back()) ale.edges.push_back(q);
  }
  if (ale.edges.size() < 2) throw ArgumentError("ALE focal feature '" + focal + "' is constant");
  const std::size_t bins = ale.edges.size() - 1;

  const std::size_t n = features.n_rows();
  std::vector<std::size_t> bin_of(n);
  std::vector<double> lower(n), upper(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = std::lower_bound(ale.edges.begin() + 1, ale.edges.end(), col[i]);
    std::size_t b = static_cast<std::size_t>(it - ale.edges.begin()) - 1;
    b = std::min(b, bins - 1);
    bin_of[i] = b;
    lower[i] = ale.edges[b];
    upper[i] = ale.edges[b + 1];
  }
  const auto lo_pred = predict(ReplaceColumn(features, *j, Column::Float(focal, lower)));
  const auto hi_pred = predict(ReplaceColumn(features, *j, Column::Float(focal, upper)));
  std::vector<double> diff(bins, 0.0);
  ale.counts.assign(bins, 0);
  for (std::size_t i = 0; i < n; ++i) {
    diff[bin_of[i]] += hi_pred[i] - lo_pred[i];
    ale.counts[bin_of[i]] += 1;
  }
  double acc = 0.0;
  double weighted = 0.0;
  ale.values.resize(bins);
  ale.centers.resize(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    const double prev = acc;
    if (ale.counts[b] > 0) acc += diff[b] / static_cast<double>(ale.counts[b]);
    ale.values[b] = 0.5 * (prev + acc);
    ale.centers[b] = 0.5 * (ale.edges[b] + ale.edges[b + 1]);
    weighted += static_cast<double>(ale.counts[b]) * ale.values[b];
  }
  const double shift = weighted / static_cast<double>(n);
  for (auto& v : ale.values) v -= shift;
  return ale;
}

}  // namespace longhorizon
