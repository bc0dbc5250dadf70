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
/// Refinement schedule: levels l(t) = floor((t / tau0)^{1 / (2 gamma1)}),
/// thresholds gamma_l(x) = gamma0 l^{-gamma1} V(x), the Lyapunov penalty
/// V(x) = exp(nu0 |x - center|^{nu1}) and the signed tail correction Q_V.

#ifndef LAMCMC_SCHEDULE_HPP
#define LAMCMC_SCHEDULE_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lamcmc/errors.hpp"

namespace lamcmc {

struct LyapunovSpec {
  double nu0 = 1.0;
  double nu1 = 1.0;
  std::vector<double> center;

  void validate() const {
    if (!(nu0 > 0.0)) throw DomainError("lyapunov nu0 must be > 0");
    if (!(nu1 > 0.0 && nu1 <= 1.0)) throw DomainError("lyapunov nu1 must lie in (0, 1]");
  }
};

inline double lyapunov_value(std::span<const double> x, const LyapunovSpec& spec) {
  double r2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double c = i < spec.center.size() ? spec.center[i] : 0.0;
    r2 += (x[i] - c) * (x[i] - c);
  }
  return std::exp(spec.nu0 * std::pow(std::sqrt(r2), spec.nu1));
}

struct RefinementSchedule {
  double gamma0 = 0.1;
  double gamma1 = 1.0;
  double tau0 = 1.0;
  double eta = 0.0;
  LyapunovSpec lyapunov;
  /// Admits gamma1 <= 0.5, whose level lengths shrink.
  bool allow_slow_decay = false;

  void validate() const {
    if (!(gamma0 > 0.0)) throw DomainError("gamma0 must be > 0");
    if (!(gamma1 > 0.0)) throw DomainError("gamma1 must be > 0");
    if (!(gamma1 > 0.5) && !allow_slow_decay)
      throw DomainError("gamma1 must exceed 0.5 (got " + std::to_string(gamma1) +
                        "); set allow_slow_decay to override");
    if (!(tau0 >= 1.0)) throw DomainError("tau0 must be >= 1");
    if (!(eta >= 0.0)) throw DomainError("eta must be >= 0");
    lyapunov.validate();
  }
};

inline std::uint64_t level(std::uint64_t t, const RefinementSchedule& s) {
  if (t == 0) return 0;
  const double v = std::pow(static_cast<double>(t) / s.tau0, 1.0 / (2.0 * s.gamma1));
  return static_cast<std::uint64_t>(std::floor(v));
}

/// gamma0 l^{-gamma1} V(x); level 0 uses gamma0 V(x).
inline double threshold(std::span<const double> x, std::uint64_t ell, const RefinementSchedule& s) {
  const double v = lyapunov_value(x, s.lyapunov);
  if (ell == 0) return s.gamma0 * v;
  return s.gamma0 * std::pow(static_cast<double>(ell), -s.gamma1) * v;
}

/// +eta (gamma(x') + gamma(x)) if V(x') < V(x), otherwise the negative.
inline double tail_correction(std::span<const double> x, std::span<const double> x_prime, double gamma_x,
                              double gamma_xp, double eta, const LyapunovSpec& spec) {
  if (eta == 0.0) return 0.0;
  const double mag = eta * (gamma_xp + gamma_x);
  return lyapunov_value(x_prime, spec) < lyapunov_value(x, spec) ? mag : -mag;
}

}  // namespace lamcmc

#endif  // LAMCMC_SCHEDULE_HPP
