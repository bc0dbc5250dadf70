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
/// Target models: the expensive function g whose evaluations are counted,
/// plus an optional exact log-prior that is added outside the surrogate.

#ifndef LAMCMC_MODEL_HPP
#define LAMCMC_MODEL_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lamcmc/errors.hpp"

namespace lamcmc {

/// log pi(x) = -x^2 / 2 + sin(4 pi x), up to a constant.
inline double builtin_toy1d(std::span<const double> x) {
  const double v = x[0];
  return -0.5 * v * v + std::sin(4.0 * std::numbers::pi * v);
}

/// log pi(x) = -x1^2 - (x2 - 5 x1^2)^2, up to a constant.
inline double builtin_banana(std::span<const double> x) {
  const double r = x[1] - 5.0 * x[0] * x[0];
  return -x[0] * x[0] - r * r;
}

/// -|x|^2
inline double builtin_quadratic(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return -s;
}

/// Unnormalized Gaussian log-density -(x - m)^T S^{-1} (x - m) / 2.
class GaussianLogDensity {
 public:
  GaussianLogDensity(std::vector<double> mean, const Eigen::MatrixXd& covariance)
      : mean_(std::move(mean)) {
    const auto d = static_cast<Eigen::Index>(mean_.size());
    if (covariance.rows() != d || covariance.cols() != d)
      throw DomainError("gaussian covariance shape does not match mean");
    if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() >
        1e-12 * (1.0 + covariance.cwiseAbs().maxCoeff()))
      throw DomainError("gaussian covariance is not symmetric");
    llt_.compute(covariance);
    if (llt_.info() != Eigen::Success) throw DomainError("gaussian covariance is not positive definite");
  }

  std::size_t dim() const noexcept { return mean_.size(); }
  const std::vector<double>& mean() const noexcept { return mean_; }

  double operator()(std::span<const double> x) const {
    Eigen::VectorXd r(static_cast<Eigen::Index>(mean_.size()));
    for (std::size_t i = 0; i < mean_.size(); ++i) r(static_cast<Eigen::Index>(i)) = x[i] - mean_[i];
    const Eigen::VectorXd w = llt_.matrixL().solve(r);
    return -0.5 * w.squaredNorm();
  }

 private:
  std::vector<double> mean_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

using LogDensityFn = std::function<double(std::span<const double>)>;

/// A counted evaluator of g. Every call to evaluate() is one true-model
/// evaluation; surrogate evaluations never go through here.
class TargetModel {
 public:
  explicit TargetModel(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw DomainError("model dimension must be positive");
  }
  virtual ~TargetModel() = default;
  TargetModel(const TargetModel&) = delete;
  TargetModel& operator=(const TargetModel&) = delete;

  std::size_t dim() const noexcept { return dim_; }
  virtual std::string name() const = 0;

  /// The surrogated quantity g(x). Throws ModelError carrying x on failure.
  double evaluate(std::span<const double> x) {
    if (x.size() != dim_) throw DomainError("model evaluation dimension mismatch");
    double v;
    try {
      v = do_evaluate(x);
    } catch (const ModelError& e) {
      ++evaluations_;
      throw ModelError(e.what(), {x.begin(), x.end()});
    }
    ++evaluations_;
    if (prior_ && !prior_outside_) v += prior_(x);
    if (!std::isfinite(v)) throw ModelError(name() + " returned a non-finite value", {x.begin(), x.end()});
    return v;
  }

  /// Log-density addend applied outside the surrogate (0 unless a prior is
  /// attached with `outside_surrogate`).
  double exact_addend(std::span<const double> x) const {
    return prior_ && prior_outside_ ? prior_(x) : 0.0;
  }

  /// Full log-density g(x) + exact_addend(x).
  double log_density(std::span<const double> x) { return evaluate(x) + exact_addend(x); }

  /// Attach an exact prior. When `outside_surrogate`, the model output is
  /// treated as a log-likelihood and the prior is added after
  /// approximation; otherwise it is folded into g.
  void set_prior(LogDensityFn prior, bool outside_surrogate) {
    prior_ = std::move(prior);
    prior_outside_ = outside_surrogate;
  }

  std::uint64_t evaluations() const noexcept { return evaluations_; }
  void set_evaluations(std::uint64_t n) noexcept { evaluations_ = n; }

 protected:
  virtual double do_evaluate(std::span<const double> x) = 0;

 private:
  std::size_t dim_;
  std::uint64_t evaluations_ = 0;
  LogDensityFn prior_;
  bool prior_outside_ = false;
};

/// Wraps a plain function as a model.
class FunctionModel final : public TargetModel {
 public:
  FunctionModel(std::string name, std::size_t dim, LogDensityFn fn)
      : TargetModel(dim), name_(std::move(name)), fn_(std::move(fn)) {}

  std::string name() const override { return name_; }

 protected:
  double do_evaluate(std::span<const double> x) override { return fn_(x); }

 private:
  std::string name_;
  LogDensityFn fn_;
};

inline std::unique_ptr<TargetModel> make_toy1d() {
  return std::make_unique<FunctionModel>("toy1d", 1, builtin_toy1d);
}

inline std::unique_ptr<TargetModel> make_banana() {
  return std::make_unique<FunctionModel>("banana", 2, builtin_banana);
}

inline std::unique_ptr<TargetModel> make_quadratic(std::size_t dim) {
  return std::make_unique<FunctionModel>("quadratic", dim, builtin_quadratic);
}

inline std::unique_ptr<TargetModel> make_gaussian(std::vector<double> mean, const Eigen::MatrixXd& cov) {
  auto g = std::make_shared<GaussianLogDensity>(std::move(mean), cov);
  const auto d = g->dim();
  return std::make_unique<FunctionModel>("gaussian", d,
                                         [g](std::span<const double> x) { return (*g)(x); });
}

}  // namespace lamcmc

#endif  // LAMCMC_MODEL_HPP
