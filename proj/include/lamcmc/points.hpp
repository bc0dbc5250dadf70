// Copyright 2026 The lamcmc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/// \file
/// The evaluated set: every point at which the expensive model has been run,
/// with its exact value, plus exact k-nearest-neighbor queries.
///
/// Queries run on every MCMC step, so the set keeps a bucketed k-d tree that
/// grows by insertion. Below `kExhaustiveBelow` points a linear scan is used.
/// Both paths return identical results: distances are accumulated in the same
/// coordinate order and ties are resolved by insertion index.

#ifndef LAMCMC_POINTS_HPP
#define LAMCMC_POINTS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lamcmc/errors.hpp"

namespace lamcmc {

using Point = std::vector<double>;

struct NeighborQueryResult {
  std::vector<std::size_t> indices;
  std::vector<double> distances;  // nondecreasing
  double radius = 0.0;            // == distances.back()
};

namespace detail {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline double norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

// Max-heap of the best k (squared distance, index) pairs seen so far.
// Lexicographic order on the pair gives the lower-index tie-break.
class KBest {
 public:
  explicit KBest(std::size_t k) : k_(k) { heap_.reserve(k + 1); }

  bool full() const { return heap_.size() == k_; }

  // Squared distance a candidate must not exceed to be worth visiting.
  double bound() const {
    return full() ? heap_.front().first : std::numeric_limits<double>::infinity();
  }

  void offer(double d2, std::size_t index) {
    const std::pair<double, std::size_t> c{d2, index};
    if (!full()) {
      heap_.push_back(c);
      std::push_heap(heap_.begin(), heap_.end());
    } else if (c < heap_.front()) {
      std::pop_heap(heap_.begin(), heap_.end());
      heap_.back() = c;
      std::push_heap(heap_.begin(), heap_.end());
    }
  }

  NeighborQueryResult finish() && {
    std::sort_heap(heap_.begin(), heap_.end());
    NeighborQueryResult r;
    r.indices.reserve(heap_.size());
    r.distances.reserve(heap_.size());
    for (const auto& [d2, i] : heap_) {
      r.indices.push_back(i);
      r.distances.push_back(std::sqrt(d2));
    }
    r.radius = r.distances.empty() ? 0.0 : r.distances.back();
    return r;
  }

 private:
  std::size_t k_;
  std::vector<std::pair<double, std::size_t>> heap_;
};

}  // namespace detail

/// Archive of points with exact function values.
class EvaluatedSet {
 public:
  static constexpr std::size_t kExhaustiveBelow = 64;
  static constexpr std::size_t kBucketSize = 24;

  struct Inserted {
    std::size_t index;
    bool added;
  };

  explicit EvaluatedSet(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw DomainError("evaluated set dimension must be positive");
    nodes_.push_back(Node{});
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  double value(std::size_t i) const { return values_[i]; }
  const std::vector<double>& values() const noexcept { return values_; }
  const std::vector<double>& coordinates() const noexcept { return coords_; }

  /// Two points are duplicates when closer than 1e-12 * (1 + |x|).
  static double duplicate_tolerance(std::span<const double> x) {
    return 1e-12 * (1.0 + detail::norm(x));
  }

  /// Index of a stored point within duplicate tolerance of x, if any.
  std::optional<std::size_t> find_duplicate(std::span<const double> x) const {
    check_point(x);
    if (empty()) return std::nullopt;
    const auto nn = knn(x, 1);
    if (nn.distances[0] < duplicate_tolerance(x)) return nn.indices[0];
    return std::nullopt;
  }

  /// Adds (x, g). A duplicate of an existing point leaves the set unchanged
  /// and returns the existing index.
  Inserted insert(std::span<const double> x, double g) {
    check_point(x);
    if (!std::isfinite(g)) throw DomainError("non-finite function value");
    if (auto dup = find_duplicate(x)) return {*dup, false};
    const std::size_t idx = values_.size();
    coords_.insert(coords_.end(), x.begin(), x.end());
    values_.push_back(g);
    tree_insert(idx);
    return {idx, true};
  }

  /// The k stored points closest to x in Euclidean distance.
  NeighborQueryResult knn(std::span<const double> x, std::size_t k) const {
    if (x.size() != dim_) throw DomainError("query dimension mismatch");
    if (k == 0) throw DomainError("k must be positive");
    if (k > size()) throw InsufficientPoints(k, size());
    detail::KBest best(k);
    if (size() < kExhaustiveBelow) {
      for (std::size_t i = 0; i < size(); ++i) best.offer(detail::squared_distance(point(i), x), i);
    } else {
      search(0, x, best);
    }
    return std::move(best).finish();
  }

  NeighborQueryResult knn_exhaustive(std::span<const double> x, std::size_t k) const {
    if (k > size()) throw InsufficientPoints(k, size());
    detail::KBest best(k);
    for (std::size_t i = 0; i < size(); ++i) best.offer(detail::squared_distance(point(i), x), i);
    return std::move(best).finish();
  }

  double ball_radius(std::span<const double> x, std::size_t k) const { return knn(x, k).radius; }

 private:
  struct Node {
    int split_dim = -1;  // -1 marks a leaf
    double split = 0.0;
    std::size_t left = 0, right = 0;
    std::vector<std::size_t> bucket;
  };

  void check_point(std::span<const double> x) const {
    if (x.size() != dim_)
      throw DomainError("point has " + std::to_string(x.size()) + " coordinates, expected " +
                        std::to_string(dim_));
    for (double v : x)
      if (!std::isfinite(v)) throw DomainError("non-finite coordinate");
  }

  void tree_insert(std::size_t idx) {
    const auto p = point(idx);
    std::size_t n = 0;
    while (nodes_[n].split_dim >= 0) {
      const auto& node = nodes_[n];
      n = p[node.split_dim] < node.split ? node.left : node.right;
    }
    nodes_[n].bucket.push_back(idx);
    if (nodes_[n].bucket.size() > kBucketSize) split_leaf(n);
  }

  void split_leaf(std::size_t n) {
    std::vector<std::size_t> bucket = std::move(nodes_[n].bucket);
    int best_dim = 0;
    double best_spread = -1.0;
    for (std::size_t d = 0; d < dim_; ++d) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (auto i : bucket) {
        lo = std::min(lo, coords_[i * dim_ + d]);
        hi = std::max(hi, coords_[i * dim_ + d]);
      }
      if (hi - lo > best_spread) {
        best_spread = hi - lo;
        best_dim = static_cast<int>(d);
      }
    }
    std::vector<double> vals;
    vals.reserve(bucket.size());
    for (auto i : bucket) vals.push_back(coords_[i * dim_ + best_dim]);
    std::sort(vals.begin(), vals.end());
    double split = vals[vals.size() / 2];
    if (!(split > vals.front())) split = 0.5 * (vals.front() + vals.back());

    Node left, right;
    for (auto i : bucket) {
      (coords_[i * dim_ + best_dim] < split ? left : right).bucket.push_back(i);
    }
    const std::size_t li = nodes_.size();
    nodes_.push_back(std::move(left));
    nodes_.push_back(std::move(right));
    nodes_[n].split_dim = best_dim;
    nodes_[n].split = split;
    nodes_[n].left = li;
    nodes_[n].right = li + 1;
  }

  void search(std::size_t n, std::span<const double> x, detail::KBest& best) const {
    const Node& node = nodes_[n];
    if (node.split_dim < 0) {
      for (auto i : node.bucket) best.offer(detail::squared_distance(point(i), x), i);
      return;
    }
    const double diff = x[node.split_dim] - node.split;
    const std::size_t near = diff < 0 ? node.left : node.right;
    const std::size_t far = diff < 0 ? node.right : node.left;
    search(near, x, best);
    // Visit on equality so equal-distance points with lower indices are seen.
    if (diff * diff <= best.bound()) search(far, x, best);
  }

  std::size_t dim_;
  std::vector<double> coords_;
  std::vector<double> values_;
  std::vector<Node> nodes_;
};

}  // namespace lamcmc

#endif  // LAMCMC_POINTS_HPP
