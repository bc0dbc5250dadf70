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
/// Symmetric Gaussian proposals: fixed random walk, and Haario-style
/// adaptive Metropolis with covariance s_d (C_t + eps I).

#ifndef LAMCMC_PROPOSAL_HPP
#define LAMCMC_PROPOSAL_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lamcmc/errors.hpp"
#include "lamcmc/points.hpp"
#include "lamcmc/rng.hpp"

namespace lamcmc {

struct ProposalSpec {
  enum class Kind { RandomWalk, AdaptiveMetropolis };

  Kind kind = Kind::RandomWalk;
  /// Step covariance of the random walk, or the pre-adaptation covariance.
  Eigen::MatrixXd covariance;
  /// s_d; a nonpositive value means 2.38^2 / d.
  double scale = 0.0;
  double regularization = 1e-6;
  std::uint64_t adapt_start = 1000;
  /// Freeze adaptation at step `freeze_at` (0 = never).
  std::uint64_t freeze_at = 0;

  static ProposalSpec random_walk(const Eigen::MatrixXd& cov) {
    ProposalSpec s;
    s.covariance = cov;
    return s;
  }

  static ProposalSpec isotropic(std::size_t dim, double step_sd) {
    return random_walk(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dim),
                                                 static_cast<Eigen::Index>(dim)) *
                       (step_sd * step_sd));
  }
};

inline const char* to_string(ProposalSpec::Kind k) {
  return k == ProposalSpec::Kind::RandomWalk ? "random-walk-gaussian" : "adaptive-metropolis";
}

class Proposal {
 public:
  Proposal(ProposalSpec spec, std::size_t dim) : spec_(std::move(spec)), dim_(dim) {
    const auto d = static_cast<Eigen::Index>(dim);
    if (spec_.covariance.rows() != d || spec_.covariance.cols() != d)
      throw DomainError("proposal covariance must be " + std::to_string(dim) + " x " + std::to_string(dim));
    if (!spec_.covariance.isApprox(spec_.covariance.transpose()))
      throw DomainError("proposal covariance is not symmetric");
    if (spec_.scale <= 0.0) spec_.scale = 2.38 * 2.38 / static_cast<double>(dim);
    set_factor(spec_.covariance);
    mean_ = Eigen::VectorXd::Zero(d);
    m2_ = Eigen::MatrixXd::Zero(d, d);
  }

  const ProposalSpec& spec() const noexcept { return spec_; }
  std::size_t dim() const noexcept { return dim_; }

  Point propose(std::span<const double> x, Rng& rng) const {
    const auto d = static_cast<Eigen::Index>(dim_);
    Eigen::VectorXd z(d);
    for (Eigen::Index i = 0; i < d; ++i) z(i) = rng.gaussian();
    const Eigen::VectorXd step = chol_ * z;
    Point out(dim_);
    for (std::size_t i = 0; i < dim_; ++i) out[i] = x[i] + step(static_cast<Eigen::Index>(i));
    return out;
  }

  /// log q(x | x') - log q(x' | x); zero for these symmetric kernels.
  double log_ratio(std::span<const double>, std::span<const double>) const { return 0.0; }

  /// Feed the chain state after step t (t >= 1).
  void observe(std::span<const double> x, std::uint64_t t) {
    if (spec_.kind != ProposalSpec::Kind::AdaptiveMetropolis) return;
    if (spec_.freeze_at > 0 && t > spec_.freeze_at) return;
    ++count_;
    const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(dim_));
    const Eigen::VectorXd delta = v - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (v - mean_).transpose();
    if (t >= spec_.adapt_start && count_ > dim_ + 1) {
      const auto d = static_cast<Eigen::Index>(dim_);
      Eigen::MatrixXd c = m2_ / static_cast<double>(count_ - 1);
      c = 0.5 * (c + c.transpose()).eval();
      c += spec_.regularization * Eigen::MatrixXd::Identity(d, d);
      set_factor(spec_.scale * c);
    }
  }

  struct State {
    std::uint64_t count = 0;
    std::vector<double> mean, m2, chol;
  };

  State state() const {
    State s;
    s.count = count_;
    s.mean.assign(mean_.data(), mean_.data() + mean_.size());
    s.m2.assign(m2_.data(), m2_.data() + m2_.size());
    s.chol.assign(chol_.data(), chol_.data() + chol_.size());
    return s;
  }

  void restore(const State& s) {
    const auto d = static_cast<Eigen::Index>(dim_);
    if (s.mean.size() != dim_ || s.m2.size() != dim_ * dim_ || s.chol.size() != dim_ * dim_)
      throw CheckpointError("proposal state has the wrong dimension");
    count_ = s.count;
    mean_ = Eigen::Map<const Eigen::VectorXd>(s.mean.data(), d);
    m2_ = Eigen::Map<const Eigen::MatrixXd>(s.m2.data(), d, d);
    chol_ = Eigen::Map<const Eigen::MatrixXd>(s.chol.data(), d, d);
  }

  const Eigen::MatrixXd& factor() const noexcept { return chol_; }

 private:
  void set_factor(const Eigen::MatrixXd& cov) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw DomainError("proposal covariance is not positive definite");
    chol_ = llt.matrixL();
  }

  ProposalSpec spec_;
  std::size_t dim_;
  Eigen::MatrixXd chol_;
  std::uint64_t count_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd m2_;
};

}  // namespace lamcmc

#endif  // LAMCMC_PROPOSAL_HPP
