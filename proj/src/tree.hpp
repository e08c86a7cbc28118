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

#ifndef LONGHORIZON_SRC_TREE_HPP_
#define LONGHORIZON_SRC_TREE_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "longhorizon/learners.hpp"

namespace longhorizon::internal {

// Design matrix (column-major, rows = units) for `table` under `schema`.
Eigen::MatrixXd EncodeFeatures(const FeatureSchema& schema, const Table& table);

struct GrowParams {
  int max_depth = 3;
  int min_leaf = 1;
  double min_leaf_fraction = 0.0;
};

// Row indices of every design column, sorted by value (stable).
using SortedColumns = std::vector<std::vector<std::uint32_t>>;
SortedColumns SortColumns(const Eigen::MatrixXd& x);

// Exact greedy tree on "ratio" targets: every row carries m numerators and one
// denominator; a leaf predicts sum(num) / sum(den) and a split's gain is
//   B_L B_R / B * sum_c (A_Lc / B_L - A_Rc / B_R)^2.
// With num = w y, den = w this is weighted least squares; with one-hot class
// indicators it is weighted Gini; with gradient / hessian it is a Newton step.
// Ties go to the lowest feature, then the lowest threshold.
Tree GrowTree(const Eigen::MatrixXd& x, const SortedColumns& sorted,
              std::span<const double> numer, int n_outputs, std::span<const double> denom,
              const GrowParams& params);

// Leaf reached by design row `r`.
const TreeNode& Descend(const Tree& tree, const Eigen::MatrixXd& x, Eigen::Index r);

}  // namespace longhorizon::internal

#endif  // LONGHORIZON_SRC_TREE_HPP_
