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

// Small seeded generators and brute-force oracles shared by the tests.

#ifndef LAMCMC_TESTS_SUPPORT_HPP
#define LAMCMC_TESTS_SUPPORT_HPP

#include <unistd.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "lamcmc/basis.hpp"
#include "lamcmc/localpoly.hpp"
#include "lamcmc/points.hpp"

namespace testing_support {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  double normal() { return std::normal_distribution<double>()(eng_); }
  std::size_t index(std::size_t lo, std::size_t hi) {  // inclusive
    return std::uniform_int_distribution<std::size_t>(lo, hi)(eng_);
  }
  std::vector<double> point(std::size_t d, double lo = -1.0, double hi = 1.0) {
    std::vector<double> p(d);
    for (auto& v : p) v = uniform(lo, hi);
    return p;
  }
  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

/// Sort all (distance, index) pairs and keep the first k.
inline std::vector<std::pair<double, std::size_t>> brute_knn(const std::vector<std::vector<double>>& pts,
                                                             const std::vector<double>& x, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += (pts[i][j] - x[j]) * (pts[i][j] - x[j]);
    all.emplace_back(s, i);
  }
  std::sort(all.begin(), all.end());
  all.resize(k);
  for (auto& a : all) a.first = std::sqrt(a.first);
  return all;
}

/// Neighborhood built directly from explicit points and values.
inline lamcmc::Neighborhood make_neighborhood(const std::vector<std::vector<double>>& pts,
                                              const std::vector<double>& vals) {
  lamcmc::Neighborhood h;
  h.dim = pts.front().size();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    h.points.insert(h.points.end(), pts[i].begin(), pts[i].end());
    h.values.push_back(vals[i]);
    h.weights.push_back(1.0);
    h.indices.push_back(i);
  }
  return h;
}

/// Raw monomial value prod z_i^alpha_i, independent of eval_monomials.
inline double monomial(const lamcmc::MultiIndex& a, const std::vector<double>& z) {
  double v = 1.0;
  for (std::size_t i = 0; i < a.size(); ++i) v *= std::pow(z[i], static_cast<double>(a[i]));
  return v;
}

/// Dense Vandermonde in local coordinates of center x and scale s.
inline Eigen::MatrixXd dense_vandermonde(const lamcmc::MultiIndexSet& basis, const std::vector<double>& x, double s,
                                         const std::vector<std::vector<double>>& pts) {
  Eigen::MatrixXd v(static_cast<Eigen::Index>(pts.size()), static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::vector<double> z(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) z[j] = (pts[i][j] - x[j]) / s;
    for (std::size_t j = 0; j < basis.size(); ++j)
      v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = monomial(basis[j], z);
  }
  return v;
}

inline double max_dist(const std::vector<double>& x, const std::vector<std::vector<double>>& pts) {
  double r = 0.0;
  for (const auto& p : pts) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += (p[j] - x[j]) * (p[j] - x[j]);
    r = std::max(r, std::sqrt(s));
  }
  return r;
}

/// Fresh empty directory under the build tree's temp area.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("lamcmc-test-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing_support

#endif  // LAMCMC_TESTS_SUPPORT_HPP
