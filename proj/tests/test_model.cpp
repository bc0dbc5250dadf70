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

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <vector>

#include "lamcmc/model.hpp"
#include "support.hpp"

TEST(Builtins, Toy1d) {
  EXPECT_EQ(lamcmc::builtin_toy1d(std::vector<double>{0.0}), 0.0);
  EXPECT_NEAR(lamcmc::builtin_toy1d(std::vector<double>{0.125}), 0.9921875, 1e-15);
  const double a = lamcmc::builtin_toy1d(std::vector<double>{0.1});
  const double b = lamcmc::builtin_toy1d(std::vector<double>{-0.1});
  EXPECT_NEAR(a - b, 2.0 * std::sin(0.4 * std::numbers::pi), 1e-14);
  EXPECT_GT(std::abs(a - b), 1.0);
}

TEST(Builtins, Banana) {
  EXPECT_EQ(lamcmc::builtin_banana(std::vector<double>{0.0, 0.0}), 0.0);
  EXPECT_EQ(lamcmc::builtin_banana(std::vector<double>{1.0, 5.0}), -1.0);
  EXPECT_EQ(lamcmc::builtin_banana(std::vector<double>{1.0, 0.0}), -26.0);
}

TEST(Builtins, Quadratic) { EXPECT_EQ(lamcmc::builtin_quadratic(std::vector<double>{1.0, -2.0, 0.5}), -5.25); }

TEST(Gaussian, TwoByTwoAgainstExplicitInverse) {
  Eigen::Matrix2d cov;
  cov << 2.0, 0.6, 0.6, 1.0;
  const double det = 2.0 * 1.0 - 0.6 * 0.6;
  const double i00 = 1.0 / det, i01 = -0.6 / det, i11 = 2.0 / det;
  const lamcmc::GaussianLogDensity g({1.0, -1.0}, cov);
  testing_support::Gen gen(1);
  for (int i = 0; i < 50; ++i) {
    const auto x = gen.point(2, -3, 3);
    const double a = x[0] - 1.0, b = x[1] + 1.0;
    const double want = -0.5 * (i00 * a * a + 2.0 * i01 * a * b + i11 * b * b);
    EXPECT_NEAR(g(x), want, 1e-12 * (1.0 + std::abs(want)));
  }
}

TEST(Gaussian, RejectsBadCovariance) {
  Eigen::Matrix2d asym;
  asym << 1.0, 0.5, 0.1, 1.0;
  EXPECT_THROW(lamcmc::GaussianLogDensity({0, 0}, asym), lamcmc::DomainError);
  Eigen::Matrix2d indef;
  indef << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(lamcmc::GaussianLogDensity({0, 0}, indef), lamcmc::DomainError);
  EXPECT_THROW(lamcmc::GaussianLogDensity({0, 0, 0}, Eigen::Matrix2d::Identity()), lamcmc::DomainError);
}

TEST(TargetModel, CountsEveryEvaluation) {
  auto m = lamcmc::make_toy1d();
  EXPECT_EQ(m->evaluations(), 0u);
  for (int i = 0; i < 17; ++i) m->evaluate(std::vector<double>{0.01 * i});
  EXPECT_EQ(m->evaluations(), 17u);
  EXPECT_EQ(m->exact_addend(std::vector<double>{0.3}), 0.0);
  EXPECT_EQ(m->evaluations(), 17u);
}

TEST(TargetModel, PureAndDeterministic) {
  auto a = lamcmc::make_banana(), b = lamcmc::make_banana();
  testing_support::Gen gen(2);
  for (int i = 0; i < 20; ++i) {
    const auto x = gen.point(2, -2, 2);
    EXPECT_EQ(a->evaluate(x), b->evaluate(x));
    EXPECT_EQ(a->evaluate(x), a->evaluate(x));
  }
}

TEST(TargetModel, NonFiniteValueIsModelErrorWithPoint) {
  lamcmc::FunctionModel m("bad", 1, [](std::span<const double> x) { return std::log(x[0]); });
  try {
    m.evaluate(std::vector<double>{-1.0});
    FAIL();
  } catch (const lamcmc::ModelError& e) {
    EXPECT_EQ(e.point(), (std::vector<double>{-1.0}));
  }
  EXPECT_EQ(m.evaluations(), 1u);
}

TEST(TargetModel, PriorInsideOrOutsideSurrogate) {
  auto prior = [](std::span<const double> x) { return -0.5 * x[0] * x[0]; };
  auto folded = lamcmc::make_quadratic(1);
  folded->set_prior(prior, false);
  auto outside = lamcmc::make_quadratic(1);
  outside->set_prior(prior, true);
  const std::vector<double> x{2.0};
  EXPECT_EQ(folded->evaluate(x), -6.0);
  EXPECT_EQ(folded->exact_addend(x), 0.0);
  EXPECT_EQ(outside->evaluate(x), -4.0);
  EXPECT_EQ(outside->exact_addend(x), -2.0);
  EXPECT_EQ(folded->log_density(x), outside->log_density(x));
}

TEST(TargetModel, DimensionMismatch) {
  auto m = lamcmc::make_banana();
  EXPECT_THROW(m->evaluate(std::vector<double>{1.0}), lamcmc::DomainError);
}
