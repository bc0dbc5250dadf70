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
/// Polynomial spaces described by multi-index sets, and monomial evaluation
/// in local coordinates z = (x - center) / scale.

#ifndef LAMCMC_BASIS_HPP
#define LAMCMC_BASIS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "lamcmc/errors.hpp"

namespace lamcmc {

using MultiIndex = std::vector<unsigned>;

/// Immutable set of multi-indices in graded lexicographic order: by total
/// degree, then lexicographically descending in the leading coordinates
/// (x1 before x2, x1^2 before x1 x2 before x2^2).
class MultiIndexSet {
 public:
  std::size_t dim() const noexcept { return dim_; }
  unsigned max_degree() const noexcept { return max_degree_; }
  double nu() const noexcept { return nu_; }
  std::size_t size() const noexcept { return indices_.size(); }
  const std::vector<MultiIndex>& indices() const noexcept { return indices_; }
  const MultiIndex& operator[](std::size_t j) const { return indices_[j]; }

  /// Whether alpha satisfies ||alpha||_nu <= p. nu = 0 admits only
  /// multi-indices with a single nonzero component of size at most p.
  static bool admissible(const MultiIndex& alpha, unsigned p, double nu) {
    unsigned nonzero = 0, total = 0;
    for (unsigned a : alpha) {
      nonzero += a > 0;
      total += a;
    }
    if (total <= 1) return total <= p;
    if (nu == 0.0) return nonzero == 1 && total <= p;
    if (nu == 1.0) return total <= p;
    double s = 0.0;
    for (unsigned a : alpha)
      if (a > 0) s += std::pow(static_cast<double>(a), nu);
    // Relative slack absorbs rounding for points exactly on the boundary.
    return std::pow(s, 1.0 / nu) <= static_cast<double>(p) * (1.0 + 1e-12);
  }

  friend MultiIndexSet sparse_set(std::size_t d, unsigned p, double nu);

 private:
  MultiIndexSet(std::size_t d, unsigned p, double nu) : dim_(d), max_degree_(p), nu_(nu) {}

  std::size_t dim_;
  unsigned max_degree_;
  double nu_;
  std::vector<MultiIndex> indices_;
};

namespace detail {

// All compositions of `degree` into d parts, leading coordinate largest first.
inline void compositions(std::size_t pos, unsigned remaining, MultiIndex& cur,
                         std::vector<MultiIndex>& out) {
  if (pos + 1 == cur.size()) {
    cur[pos] = remaining;
    out.push_back(cur);
    return;
  }
  for (unsigned a = remaining + 1; a-- > 0;) {
    cur[pos] = a;
    compositions(pos + 1, remaining - a, cur, out);
  }
  cur[pos] = 0;
}

}  // namespace detail

/// Multi-indices with ||alpha||_nu <= p, nu in [0, 1].
inline MultiIndexSet sparse_set(std::size_t d, unsigned p, double nu) {
  if (d == 0) throw DomainError("basis dimension must be positive");
  if (!(nu >= 0.0 && nu <= 1.0)) throw DomainError("nu must lie in [0, 1]");
  MultiIndexSet set(d, p, nu);
  MultiIndex cur(d, 0);
  for (unsigned degree = 0; degree <= p; ++degree) {
    std::vector<MultiIndex> level;
    detail::compositions(0, degree, cur, level);
    for (auto& alpha : level)
      if (MultiIndexSet::admissible(alpha, p, nu)) set.indices_.push_back(std::move(alpha));
  }
  return set;
}

/// All multi-indices of total degree at most p; binomial(d + p, p) of them.
inline MultiIndexSet total_degree_set(std::size_t d, unsigned p) { return sparse_set(d, p, 1.0); }

/// Affine map to local coordinates.
struct LocalFrame {
  std::vector<double> center;
  double scale = 1.0;

  LocalFrame() = default;
  LocalFrame(std::vector<double> c, double s) : center(std::move(c)), scale(s > 0.0 ? s : 1.0) {
    if (!std::isfinite(scale)) throw DomainError("local frame scale must be finite");
  }

  void to_local(std::span<const double> x, std::span<double> z) const {
    for (std::size_t i = 0; i < center.size(); ++i) z[i] = (x[i] - center[i]) / scale;
  }
};

/// Monomials of already-local coordinates z, ordered as set.indices().
inline void eval_monomials(const MultiIndexSet& set, std::span<const double> z, std::span<double> out) {
  const std::size_t d = set.dim();
  const unsigned p = set.max_degree();
  // powers[i * (p + 1) + a] = z_i^a
  double stack_buf[64];
  std::vector<double> heap_buf;
  double* powers = stack_buf;
  if (d * (p + 1) > 64) {
    heap_buf.resize(d * (p + 1));
    powers = heap_buf.data();
  }
  for (std::size_t i = 0; i < d; ++i) {
    double v = 1.0;
    for (unsigned a = 0; a <= p; ++a) {
      powers[i * (p + 1) + a] = v;
      v *= z[i];
    }
  }
  const auto& idx = set.indices();
  for (std::size_t j = 0; j < idx.size(); ++j) {
    double m = 1.0;
    for (std::size_t i = 0; i < d; ++i)
      if (idx[j][i]) m *= powers[i * (p + 1) + idx[j][i]];
    out[j] = m;
  }
}

inline std::vector<double> eval_basis(const MultiIndexSet& set, const LocalFrame& frame,
                                      std::span<const double> x) {
  if (x.size() != set.dim()) throw DomainError("basis evaluation dimension mismatch");
  std::vector<double> z(set.dim()), out(set.size());
  frame.to_local(x, z);
  eval_monomials(set, z, out);
  return out;
}

}  // namespace lamcmc

#endif  // LAMCMC_BASIS_HPP
