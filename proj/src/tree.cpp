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

#include "tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "longhorizon/error.hpp"

namespace longhorizon::internal {

Eigen::MatrixXd EncodeFeatures(const FeatureSchema& schema, const Table& table) {
  schema.Check(table);
  const auto n = static_cast<Eigen::Index>(table.n_rows());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(schema.width()));
  Eigen::Index j = 0;
  for (std::size_t c = 0; c < schema.columns().size(); ++c) {
    const auto& spec = schema.columns()[c];
    const Column& col = table.column(spec.name);
    if (spec.kind != ColumnKind::kCategorical) {
      for (Eigen::Index i = 0; i < n; ++i) x(i, j) = col[static_cast<std::size_t>(i)];
      ++j;
      continue;
    }
    const auto& train_levels = schema.levels()[c];
    // Map the table's level codes onto training levels once.
    std::vector<int> remap(col.levels().size(), -1);
    for (std::size_t l = 0; l < col.levels().size(); ++l) {
      auto it = std::find(train_levels.begin(), train_levels.end(), col.levels()[l]);
      if (it != train_levels.end()) remap[l] = static_cast<int>(it - train_levels.begin());
    }
    const auto width = static_cast<Eigen::Index>(train_levels.size());
    x.middleCols(j, width).setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      const int m = remap[static_cast<std::size_t>(col[static_cast<std::size_t>(i)])];
      if (m >= 0) x(i, j + m) = 1.0;
    }
    j += width;
  }
  return x;
}

SortedColumns SortColumns(const Eigen::MatrixXd& x) {
  SortedColumns out(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    auto& order = out[static_cast<std::size_t>(f)];
    order.resize(static_cast<std::size_t>(x.rows()));
    std::iota(order.begin(), order.end(), 0U);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return x(a, f) < x(b, f); });
  }
  return out;
}

namespace {

struct NodeStats {
  std::vector<double> a;
  double b = 0.0;
  std::size_t count = 0;
};

struct Candidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

struct Scan {
  std::vector<double> a;
  double b = 0.0;
  std::size_t count = 0;
  double prev = 0.0;
  bool has_prev = false;
};

double SplitGain(const std::vector<double>& a_left, double b_left, const NodeStats& total) {
  const double b_right = total.b - b_left;
  if (!(b_left > 0.0) || !(b_right > 0.0)) return 0.0;
  double s = 0.0;
  for (std::size_t c = 0; c < a_left.size(); ++c) {
    const double d = a_left[c] / b_left - (total.a[c] - a_left[c]) / b_right;
    s += d * d;
  }
  return b_left * b_right / total.b * s;
}

double GainTolerance(const NodeStats& s) {
  double m2 = 1.0;
  if (s.b > 0.0) {
    for (double v : s.a) m2 = std::max(m2, (v / s.b) * (v / s.b));
  }
  return 1e-24 * std::abs(s.b) * m2;
}

}  // namespace

Tree GrowTree(const Eigen::MatrixXd& x, const SortedColumns& sorted,
              std::span<const double> numer, int n_outputs, std::span<const double> denom,
              const GrowParams& params) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto m = static_cast<std::size_t>(n_outputs);
  if (numer.size() != n * m || denom.size() != n) throw ArgumentError("GrowTree: size mismatch");

  Tree tree;
  std::vector<int> node_of_row(n, 0);
  std::vector<NodeStats> stats;

  auto make_node = [&](const NodeStats& s) {
    TreeNode node;
    node.value.assign(m, 0.0);
    if (s.b > 0.0) {
      for (std::size_t c = 0; c < m; ++c) node.value[c] = s.a[c] / s.b;
    }
    tree.nodes.push_back(std::move(node));
    stats.push_back(s);
    return static_cast<int>(tree.nodes.size() - 1);
  };

  NodeStats root{std::vector<double>(m, 0.0), 0.0, n};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < m; ++c) root.a[c] += numer[i * m + c];
    root.b += denom[i];
  }
  make_node(root);
  const double min_leaf_weight = params.min_leaf_fraction * root.b;
  const auto min_leaf = static_cast<std::size_t>(std::max(1, params.min_leaf));

  std::vector<int> frontier{0};
  for (int depth = 0; depth < params.max_depth && !frontier.empty(); ++depth) {
    // slot_of_node maps a frontier node to its scan slot (-1 when not active).
    std::vector<int> slot_of_node(tree.nodes.size(), -1);
    for (std::size_t s = 0; s < frontier.size(); ++s) slot_of_node[static_cast<std::size_t>(frontier[s])] = static_cast<int>(s);
    std::vector<Candidate> best(frontier.size());

    for (std::size_t f = 0; f < sorted.size(); ++f) {
      std::vector<Scan> scan(frontier.size());
      for (auto& sc : scan) sc.a.assign(m, 0.0);
      for (std::uint32_t r : sorted[f]) {
        const int node = node_of_row[r];
        if (node < 0 || static_cast<std::size_t>(node) >= slot_of_node.size()) continue;
        const int slot = slot_of_node[static_cast<std::size_t>(node)];
        if (slot < 0) continue;
        Scan& sc = scan[static_cast<std::size_t>(slot)];
        const NodeStats& total = stats[static_cast<std::size_t>(node)];
        const double v = x(r, static_cast<Eigen::Index>(f));
        if (sc.has_prev && v > sc.prev && sc.count >= min_leaf && total.count - sc.count >= min_leaf &&
            sc.b >= min_leaf_weight && total.b - sc.b >= min_leaf_weight) {
          const double gain = SplitGain(sc.a, sc.b, total);
          Candidate& cand = best[static_cast<std::size_t>(slot)];
          if (gain > cand.gain) {
            double t = sc.prev + 0.5 * (v - sc.prev);
            if (!(t < v)) t = sc.prev;
            cand = {gain, static_cast<int>(f), t};
          }
        }
        for (std::size_t c = 0; c < m; ++c) sc.a[c] += numer[r * m + c];
        sc.b += denom[r];
        sc.count += 1;
        sc.prev = v;
        sc.has_prev = true;
      }
    }

    std::vector<int> next;
    for (std::size_t s = 0; s < frontier.size(); ++s) {
      const int node = frontier[s];
      const Candidate& cand = best[s];
      if (cand.feature < 0 || cand.gain <= GainTolerance(stats[static_cast<std::size_t>(node)])) continue;
      NodeStats left{std::vector<double>(m, 0.0), 0.0, 0};
      NodeStats right{std::vector<double>(m, 0.0), 0.0, 0};
      for (std::size_t i = 0; i < n; ++i) {
        if (node_of_row[i] != node) continue;
        NodeStats& side = x(static_cast<Eigen::Index>(i), cand.feature) <= cand.threshold ? left : right;
        for (std::size_t c = 0; c < m; ++c) side.a[c] += numer[i * m + c];
        side.b += denom[i];
        side.count += 1;
      }
      const int l = make_node(left);
      const int r = make_node(right);
      TreeNode& parent = tree.nodes[static_cast<std::size_t>(node)];
      parent.feature = cand.feature;
      parent.threshold = cand.threshold;
      parent.left = l;
      parent.right = r;
      parent.value.clear();
      next.push_back(l);
      next.push_back(r);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const int node = node_of_row[i];
      if (node < 0) continue;
      const TreeNode& t = tree.nodes[static_cast<std::size_t>(node)];
      if (t.is_leaf()) {
        node_of_row[i] = -1;
        continue;
      }
      node_of_row[i] = x(static_cast<Eigen::Index>(i), t.feature) <= t.threshold ? t.left : t.right;
    }
    frontier = std::move(next);
  }
  return tree;
}

const TreeNode& Descend(const Tree& tree, const Eigen::MatrixXd& x, Eigen::Index r) {
  const TreeNode* node = &tree.nodes.front();
  while (!node->is_leaf()) {
    node = &tree.nodes[static_cast<std::size_t>(x(r, node->feature) <= node->threshold ? node->left
                                                                                       : node->right)];
  }
  return *node;
}

}  // namespace longhorizon::internal
