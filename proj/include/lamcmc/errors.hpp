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

#ifndef LAMCMC_ERRORS_HPP
#define LAMCMC_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lamcmc {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite or dimensionally inconsistent input.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A neighbor query asked for more points than the evaluated set holds.
class InsufficientPoints : public Error {
 public:
  InsufficientPoints(std::size_t requested, std::size_t available)
      : Error("need " + std::to_string(requested) + " evaluated points, have " +
              std::to_string(available)),
        requested_(requested),
        available_(available) {}

  std::size_t requested() const noexcept { return requested_; }
  std::size_t available() const noexcept { return available_; }

 private:
  std::size_t requested_;
  std::size_t available_;
};

/// The weighted Vandermonde system of a local fit is numerically rank deficient.
class DegenerateGeometry : public Error {
 public:
  DegenerateGeometry(const std::string& what, double condition_estimate)
      : Error(what), condition_estimate_(condition_estimate) {}

  double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  double condition_estimate_;
};

/// A true-model evaluation failed. Carries the query point.
class ModelError : public Error {
 public:
  ModelError(const std::string& what, std::vector<double> point = {})
      : Error(what), point_(std::move(point)) {}

  const std::vector<double>& point() const noexcept { return point_; }

 private:
  std::vector<double> point_;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

/// Too few points for a diagnostic (e.g. a slope fit on under five checkpoints).
class InsufficientData : public Error {
 public:
  using Error::Error;
};

}  // namespace lamcmc

#endif  // LAMCMC_ERRORS_HPP
