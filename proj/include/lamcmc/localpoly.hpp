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
/// Local weighted least-squares polynomial fits over a k-nearest-neighbor
/// ball, their Lagrange polynomials, and the poisedness constant
///
///     Lambda_2(x) = max_{x' in B_k(x)} || lambda(x') ||_2
///
/// All systems are assembled in the local frame z = (x' - x) / Delta(x) and
/// solved by column-pivoted Householder QR.

#ifndef LAMCMC_LOCALPOLY_HPP
#define LAMCMC_LOCALPOLY_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "lamcmc/basis.hpp"
#include "lamcmc/errors.hpp"
#include "lamcmc/points.hpp"

namespace lamcmc {

using BasisPtr = std::shared_ptr<const MultiIndexSet>;

/// Points, values and kernel weights of the ball around a query point.
struct Neighborhood {
  std::size_t dim = 0;
  std::vector<double> points;  // row-major, size() x dim
  std::vector<double> values;
  std::vector<double> weights;
  std::vector<std::size_t> indices;

  std::size_t size() const noexcept { return values.size(); }
  std::span<const double> point(std::size_t i) const { return {points.data() + i * dim, dim}; }
};

/// Hat kernel: every selected neighbor has weight 1.
inline Neighborhood gather(const EvaluatedSet& set, const NeighborQueryResult& nn) {
  Neighborhood h;
  h.dim = set.dim();
  h.points.reserve(nn.indices.size() * h.dim);
  for (auto i : nn.indices) {
    const auto p = set.point(i);
    h.points.insert(h.points.end(), p.begin(), p.end());
    h.values.push_back(set.value(i));
  }
  h.weights.assign(nn.indices.size(), 1.0);
  h.indices = nn.indices;
  return h;
}

/// Fits above this pivoted-QR condition estimate are treated as rank deficient.
inline constexpr double kMaxCondition = 1e10;

struct LocalFit {
  LocalFrame frame;
  BasisPtr basis;
  std::vector<double> coefficients;
  double radius = 0.0;
  std::vector<std::size_t> neighbor_indices;
  double condition_estimate = 1.0;
};

namespace detail {

inline double max_distance(std::span<const double> x, const Neighborhood& h) {
  double r2 = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) r2 = std::max(r2, squared_distance(h.point(i), x));
  return std::sqrt(r2);
}

inline Eigen::MatrixXd vandermonde(const MultiIndexSet& basis, const LocalFrame& frame,
                                   const Neighborhood& h) {
  const std::size_t k = h.size(), q = basis.size();
  Eigen::MatrixXd v(k, q);
  std::vector<double> z(h.dim), row(q);
  for (std::size_t i = 0; i < k; ++i) {
    frame.to_local(h.point(i), z);
    eval_monomials(basis, z, row);
    for (std::size_t j = 0; j < q; ++j) v(i, j) = row[j];
  }
  return v;
}

struct Factorization {
  LocalFrame frame;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
  double condition = 1.0;
};

inline Factorization factor(std::span<const double> x, const Neighborhood& h,
                            const MultiIndexSet& basis, bool weighted) {
  if (h.dim != basis.dim() || x.size() != basis.dim())
    throw DomainError("local fit dimension mismatch");
  if (h.size() < basis.size())
    throw DomainError("local fit needs k >= q (k = " + std::to_string(h.size()) +
                      ", q = " + std::to_string(basis.size()) + ")");
  Factorization f;
  f.frame = LocalFrame(std::vector<double>(x.begin(), x.end()), max_distance(x, h));
  Eigen::MatrixXd v = vandermonde(basis, f.frame, h);
  if (weighted) {
    for (std::size_t i = 0; i < h.size(); ++i) v.row(i) *= std::sqrt(h.weights[i]);
  }
  f.qr.compute(v);
  const auto& r = f.qr.matrixR();
  const Eigen::Index q = static_cast<Eigen::Index>(basis.size());
  const double rmax = std::abs(r(0, 0));
  const double rmin = std::abs(r(q - 1, q - 1));
  f.condition = rmin > 0.0 ? std::max(1.0, rmax / rmin) : std::numeric_limits<double>::infinity();
  if (!(f.condition <= kMaxCondition))
    throw DegenerateGeometry("rank-deficient local Vandermonde system", f.condition);
  return f;
}

}  // namespace detail

/// Weighted least-squares polynomial through the neighbors, centered at x.
inline LocalFit fit(std::span<const double> x, const Neighborhood& h, BasisPtr basis) {
  auto f = detail::factor(x, h, *basis, true);
  Eigen::VectorXd rhs(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) rhs(i) = std::sqrt(h.weights[i]) * h.values[i];
  const Eigen::VectorXd a = f.qr.solve(rhs);

  LocalFit out;
  out.radius = detail::max_distance(x, h);
  out.frame = std::move(f.frame);
  out.basis = std::move(basis);
  out.coefficients.assign(a.data(), a.data() + a.size());
  out.neighbor_indices = h.indices;
  out.condition_estimate = f.condition;
  return out;
}

/// Surrogate value phi(x)^T a.
inline double evaluate(const LocalFit& f, std::span<const double> x) {
  const auto phi = eval_basis(*f.basis, f.frame, x);
  double s = 0.0;
  for (std::size_t j = 0; j < phi.size(); ++j) s += phi[j] * f.coefficients[j];
  return s;
}

/// Value at the fit's own center: only the constant monomial is nonzero there.
inline double center_value(const LocalFit& f) { return f.coefficients.front(); }

/// The k Lagrange polynomials of a neighborhood, as columns of a q x k
/// coefficient matrix (the pseudo-inverse of the Vandermonde matrix).
class LagrangeBasis {
 public:
  LagrangeBasis(std::span<const double> x, const Neighborhood& h, BasisPtr basis)
      : basis_(std::move(basis)) {
    auto f = detail::factor(x, h, *basis_, false);
    frame_ = std::move(f.frame);
    condition_ = f.condition;
    coeffs_ = f.qr.solve(Eigen::MatrixXd::Identity(h.size(), h.size()));
    z_.resize(h.dim);
    phi_.resize(basis_->size());
  }

  std::size_t size() const noexcept { return static_cast<std::size_t>(coeffs_.cols()); }
  const LocalFrame& frame() const noexcept { return frame_; }
  double condition_estimate() const noexcept { return condition_; }

  /// Coefficient vector of lambda_j.
  std::vector<double> coefficients(std::size_t j) const {
    const Eigen::VectorXd c = coeffs_.col(static_cast<Eigen::Index>(j));
    return {c.data(), c.data() + c.size()};
  }

  /// [lambda_1(x'), ..., lambda_k(x')]
  std::vector<double> values(std::span<const double> xp) const {
    const Eigen::VectorXd l = lambda(xp);
    return {l.data(), l.data() + l.size()};
  }

  double norm(std::span<const double> xp) const { return lambda(xp).norm(); }

 private:
  Eigen::VectorXd lambda(std::span<const double> xp) const {
    frame_.to_local(xp, z_);
    eval_monomials(*basis_, z_, phi_);
    const Eigen::Map<const Eigen::VectorXd> phi(phi_.data(), static_cast<Eigen::Index>(phi_.size()));
    return coeffs_.transpose() * phi;
  }

  BasisPtr basis_;
  LocalFrame frame_;
  double condition_ = 1.0;
  Eigen::MatrixXd coeffs_;
  mutable std::vector<double> z_, phi_;
};

/// Coefficient vectors of lambda_1..lambda_k, each of length q.
inline std::vector<std::vector<double>> lagrange(std::span<const double> x, const Neighborhood& h,
                                                 BasisPtr basis) {
  LagrangeBasis lb(x, h, std::move(basis));
  std::vector<std::vector<double>> out;
  out.reserve(lb.size());
  for (std::size_t j = 0; j < lb.size(); ++j) out.push_back(lb.coefficients(j));
  return out;
}

struct PoisednessReport {
  double lambda2 = 0.0;
  Point site;
  std::size_t evaluations = 0;
};

inline constexpr std::size_t kDefaultPoisednessBudget = 1024;

namespace detail {

inline double radical_inverse(std::size_t i, unsigned base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

inline unsigned nth_prime(std::size_t n) {
  static constexpr unsigned primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41,
                                        43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};
  if (n < std::size(primes)) return primes[n];
  unsigned c = primes[std::size(primes) - 1];
  std::size_t found = std::size(primes) - 1;
  while (found < n) {
    c += 2;
    bool prime = true;
    for (unsigned f = 3; f * f <= c; f += 2)
      if (c % f == 0) {
        prime = false;
        break;
      }
    if (prime) ++found;
  }
  return c;
}

/// i-th point of a Halton-driven sequence in the unit ball: d Halton
/// coordinates become a Gaussian direction, coordinate d+1 the radius
/// quantile. `shift` is a Cranley-Patterson rotation in [0,1)^{d+1}.
inline void ball_point(std::size_t i, std::size_t d, std::span<const double> shift,
                       std::span<double> out) {
  double n2 = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double u = radical_inverse(i, nth_prime(j));
    if (!shift.empty()) u = std::fmod(u + shift[j], 1.0);
    u = std::clamp(u, 1e-12, 1.0 - 1e-12);
    out[j] = boost::math::erf_inv(2.0 * u - 1.0);
    n2 += out[j] * out[j];
  }
  double u = radical_inverse(i, nth_prime(d));
  if (!shift.empty()) u = std::fmod(u + shift[d], 1.0);
  const double r = std::pow(u, 1.0 / static_cast<double>(d));
  const double n = std::sqrt(n2);
  for (std::size_t j = 0; j < d; ++j) out[j] = n > 0.0 ? r * out[j] / n : 0.0;
}

}  // namespace detail

/// Lower bound on Lambda_2(x) and the point achieving it. Candidates are
/// min(budget, 64 d + 256) quasi-random points in the ball, the 2d axis
/// extremes, and the neighbors themselves; the best one is then polished by
/// 20 rounds of coordinate-wise golden-section search projected to the ball.
inline PoisednessReport poisedness(std::span<const double> x, const Neighborhood& h, BasisPtr basis,
                                   std::size_t budget = kDefaultPoisednessBudget) {
  const LagrangeBasis lb(x, h, basis);
  const std::size_t d = x.size();
  const double radius = detail::max_distance(x, h);

  PoisednessReport rep;
  rep.site.assign(x.begin(), x.end());
  rep.lambda2 = lb.norm(x);
  rep.evaluations = 1;
  if (radius == 0.0) return rep;

  Point cand(d), unit(d);
  auto consider = [&](const Point& p) {
    const double v = lb.norm(p);
    ++rep.evaluations;
    if (v > rep.lambda2) {
      rep.lambda2 = v;
      rep.site = p;
    }
    return v;
  };

  const std::size_t n_quasi = std::min(budget, 64 * d + 256);
  for (std::size_t i = 1; i <= n_quasi; ++i) {
    detail::ball_point(i, d, {}, unit);
    for (std::size_t j = 0; j < d; ++j) cand[j] = x[j] + radius * unit[j];
    consider(cand);
  }
  for (std::size_t j = 0; j < d; ++j) {
    for (double s : {-1.0, 1.0}) {
      cand.assign(x.begin(), x.end());
      cand[j] += s * radius;
      consider(cand);
    }
  }
  for (std::size_t i = 0; i < h.size(); ++i) {
    const auto p = h.point(i);
    cand.assign(p.begin(), p.end());
    consider(cand);
  }

  constexpr int kRounds = 20;
  constexpr int kGoldenSteps = 30;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int round = 0; round < kRounds; ++round) {
    const double before = rep.lambda2;
    for (std::size_t j = 0; j < d; ++j) {
      const Point base = rep.site;
      Point p(d);
      const double lo = x[j] - radius, hi = x[j] + radius;
      // Move coordinate j, then project radially back onto the ball, so the
      // search can also slide along the boundary.
      auto at = [&](double t) {
        p = base;
        p[j] = t;
        double r2 = 0.0;
        for (std::size_t i = 0; i < d; ++i) r2 += (p[i] - x[i]) * (p[i] - x[i]);
        if (r2 > radius * radius) {
          const double f = radius / std::sqrt(r2);
          for (std::size_t i = 0; i < d; ++i) p[i] = x[i] + f * (p[i] - x[i]);
        }
        return consider(p);
      };
      at(lo);
      at(hi);
      double a = lo, b = hi;
      double c1 = b - inv_phi * (b - a), c2 = a + inv_phi * (b - a);
      double f1 = at(c1), f2 = at(c2);
      for (int s = 0; s < kGoldenSteps; ++s) {
        if (f1 > f2) {
          b = c2;
          c2 = c1;
          f2 = f1;
          c1 = b - inv_phi * (b - a);
          f1 = at(c1);
        } else {
          a = c1;
          c1 = c2;
          f1 = f2;
          c2 = a + inv_phi * (b - a);
          f2 = at(c2);
        }
      }
    }
    if (!(rep.lambda2 > before)) break;
  }
  return rep;
}

/// The poisedness extremizer, where a new evaluation does the most for the
/// geometry of the ball.
inline Point refinement_site(const PoisednessReport& report) { return report.site; }

/// Delta^{p+1}.
inline double error_indicator(double radius, unsigned p) {
  return std::pow(radius, static_cast<double>(p + 1));
}

}  // namespace lamcmc

#endif  // LAMCMC_LOCALPOLY_HPP
