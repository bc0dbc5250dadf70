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
/// Post-processing of chain output: autocorrelation, effective sample size,
/// running variance error curves and their log-log slopes, histogram
/// distances, and refinement counts.

#ifndef LAMCMC_DIAGNOSTICS_HPP
#define LAMCMC_DIAGNOSTICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "lamcmc/chain.hpp"
#include "lamcmc/errors.hpp"

namespace lamcmc {

namespace detail {

inline double mean(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

// Biased autocovariance at `lag` about mean m.
inline double autocov(std::span<const double> x, double m, std::size_t lag) {
  double s = 0.0;
  for (std::size_t t = 0; t + lag < x.size(); ++t) s += (x[t] - m) * (x[t + lag] - m);
  return s / static_cast<double>(x.size());
}

}  // namespace detail

/// rho_0..rho_max_lag with the biased (1/T) normalization.
inline std::vector<double> acf(std::span<const double> series, std::size_t max_lag) {
  if (series.size() <= max_lag) throw InsufficientData("acf needs more samples than max_lag");
  const double m = detail::mean(series);
  const double c0 = detail::autocov(series, m, 0);
  if (!(c0 > 0.0)) throw InsufficientData("autocorrelation of a constant series is undefined");
  std::vector<double> rho(max_lag + 1);
  rho[0] = 1.0;
  for (std::size_t k = 1; k <= max_lag; ++k) rho[k] = detail::autocov(series, m, k) / c0;
  return rho;
}

/// T / tau with tau = -1 + 2 sum_m Gamma_m, Gamma_m = rho_{2m} + rho_{2m+1},
/// summed over Geyer's initial positive sequence. Capped at 1.5 T.
inline double ess(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 100) throw InsufficientData("ess needs at least 100 samples");
  const double m = detail::mean(series);
  const double c0 = detail::autocov(series, m, 0);
  if (!(c0 > 0.0)) throw InsufficientData("ess of a constant series is undefined");
  double tau = -1.0;
  for (std::size_t lag = 0; lag + 1 < n; lag += 2) {
    const double pair = (detail::autocov(series, m, lag) + detail::autocov(series, m, lag + 1)) / c0;
    if (!(pair > 0.0)) break;
    tau += 2.0 * pair;
  }
  const double t = static_cast<double>(n);
  // Antithetic series can drive tau to zero or below.
  if (!(tau > 0.0)) return 1.5 * t;
  return std::min(t / tau, 1.5 * t);
}

struct ErrorCurve {
  std::vector<std::uint64_t> steps;
  std::vector<double> errors;
  double reference = 0.0;
};

/// Checkpoints at 20 per decade, rounded and deduplicated, ending at T.
inline std::vector<std::uint64_t> log_checkpoints(std::uint64_t T, int per_decade = 20) {
  std::vector<std::uint64_t> out;
  for (int j = 0;; ++j) {
    const auto t = static_cast<std::uint64_t>(std::llround(std::pow(10.0, j / static_cast<double>(per_decade))));
    if (t >= T) break;
    if (out.empty() || t > out.back()) out.push_back(t);
  }
  out.push_back(T);
  return out;
}

/// e_t = |reference - sigma_t^2|, sigma_t^2 the (1/t) running variance of
/// the first t samples.
inline ErrorCurve variance_error_curve(std::span<const double> samples, double reference) {
  if (!std::isfinite(reference)) throw DomainError("reference variance must be finite");
  if (samples.empty()) throw InsufficientData("variance error curve of an empty series");
  ErrorCurve c;
  c.reference = reference;
  c.steps = log_checkpoints(samples.size());
  // Welford running moments.
  double mean = 0.0, m2 = 0.0;
  std::size_t next = 0;
  for (std::size_t t = 1; t <= samples.size(); ++t) {
    const double d = samples[t - 1] - mean;
    mean += d / static_cast<double>(t);
    m2 += d * (samples[t - 1] - mean);
    if (t == c.steps[next]) {
      c.errors.push_back(std::abs(reference - m2 / static_cast<double>(t)));
      if (++next == c.steps.size()) break;
    }
  }
  return c;
}

/// Pointwise mean of curves sharing checkpoints.
inline ErrorCurve average_curves(std::span<const ErrorCurve> curves) {
  if (curves.empty()) throw InsufficientData("no curves to average");
  ErrorCurve out;
  out.steps = curves.front().steps;
  out.reference = curves.front().reference;
  out.errors.assign(out.steps.size(), 0.0);
  for (const auto& c : curves) {
    if (c.steps != out.steps) throw DomainError("curves have different checkpoints");
    for (std::size_t i = 0; i < c.errors.size(); ++i) out.errors[i] += c.errors[i];
  }
  for (auto& e : out.errors) e /= static_cast<double>(curves.size());
  return out;
}

/// Least-squares slope of log(error) on log(t) over checkpoints in
/// [t_min, t_max].
inline double loglog_slope(const ErrorCurve& curve, std::uint64_t t_min, std::uint64_t t_max) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < curve.steps.size(); ++i) {
    const auto t = curve.steps[i];
    if (t < t_min || t > t_max || !(curve.errors[i] > 0.0)) continue;
    lx.push_back(std::log(static_cast<double>(t)));
    ly.push_back(std::log(curve.errors[i]));
  }
  if (lx.size() < 5) throw InsufficientData("slope needs at least 5 checkpoints in the window");
  const double mx = detail::mean(lx), my = detail::mean(ly);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

struct Histogram {
  double lo = 0.0, hi = 1.0;
  std::vector<double> mass;  // bins, then underflow, then overflow
};

/// Normalized bin masses on [lo, hi) with underflow/overflow cells.
inline Histogram histogram(std::span<const double> samples, std::size_t bins, double lo, double hi) {
  if (bins == 0 || !(hi > lo)) throw DomainError("histogram needs bins > 0 and hi > lo");
  if (samples.empty()) throw InsufficientData("histogram of an empty sample");
  Histogram h{lo, hi, std::vector<double>(bins + 2, 0.0)};
  const double w = (hi - lo) / static_cast<double>(bins);
  for (double v : samples) {
    std::size_t cell;
    if (v < lo) {
      cell = bins;
    } else if (v >= hi) {
      cell = bins + 1;
    } else {
      cell = std::min(bins - 1, static_cast<std::size_t>((v - lo) / w));
    }
    h.mass[cell] += 1.0;
  }
  for (auto& m : h.mass) m /= static_cast<double>(samples.size());
  return h;
}

/// Half the L1 distance between the two normalized histograms.
inline double histogram_tv(std::span<const double> a, std::span<const double> b, std::size_t bins, double lo,
                           double hi) {
  const auto ha = histogram(a, bins, lo, hi), hb = histogram(b, bins, lo, hi);
  double s = 0.0;
  for (std::size_t i = 0; i < ha.mass.size(); ++i) s += std::abs(ha.mass[i] - hb.mass[i]);
  return std::clamp(0.5 * s, 0.0, 1.0);
}

struct RefinementCurve {
  std::vector<std::uint64_t> steps;
  std::vector<std::uint64_t> evaluations;  // bootstrap + refinements up to each step
};

/// Cumulative model evaluations at t = 0 and at log-spaced checkpoints.
inline RefinementCurve refinement_curve(std::span<const TraceRecord> trace, std::uint64_t bootstrap_size) {
  RefinementCurve c;
  c.steps.push_back(0);
  c.evaluations.push_back(bootstrap_size);
  if (trace.empty()) return c;
  for (auto t : log_checkpoints(trace.size())) {
    c.steps.push_back(t);
    c.evaluations.push_back(bootstrap_size + trace[t - 1].n);
  }
  return c;
}

/// Column-wise mean over chains of refinement curves with equal checkpoints.
inline std::vector<double> mean_evaluations(std::span<const RefinementCurve> curves) {
  std::vector<double> out(curves.front().steps.size(), 0.0);
  for (const auto& c : curves)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += static_cast<double>(c.evaluations[i]);
  for (auto& v : out) v /= static_cast<double>(curves.size());
  return out;
}

}  // namespace lamcmc

#endif  // LAMCMC_DIAGNOSTICS_HPP
