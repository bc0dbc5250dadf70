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
/// Local-approximation Metropolis-Hastings.
///
/// Each step proposes X' from the current state, possibly refines the
/// surrogate at X_t (when Delta(X_t)^{p+1} > gamma(X_t), or when the
/// poisedness constant exceeds lambda_bar), and accepts X' with
///
///     min(1, exp(Lhat(X') + Q_V(X_t, X') - Lhat(X_t)) q(X_t|X') / q(X'|X_t)).
///
/// `exact_step` is the same kernel with true model evaluations.

#ifndef LAMCMC_CHAIN_HPP
#define LAMCMC_CHAIN_HPP

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <iostream>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lamcmc/basis.hpp"
#include "lamcmc/errors.hpp"
#include "lamcmc/localpoly.hpp"
#include "lamcmc/model.hpp"
#include "lamcmc/points.hpp"
#include "lamcmc/proposal.hpp"
#include "lamcmc/rng.hpp"
#include "lamcmc/schedule.hpp"

namespace lamcmc {

struct KernelConfig {
  std::size_t k = 6;
  BasisPtr basis;
  RefinementSchedule schedule;
  /// Poisedness threshold; infinity disables the poisedness trigger.
  double lambda_bar = std::numeric_limits<double>::infinity();
  /// Bootstrap design: max(k, q) + extra points in a ball of this radius.
  double bootstrap_radius = 1.0;
  std::size_t bootstrap_extra = 2;
  std::size_t poisedness_budget = kDefaultPoisednessBudget;

  std::size_t q() const { return basis ? basis->size() : 0; }
  unsigned degree() const { return basis->max_degree(); }
  std::size_t bootstrap_size() const { return std::max(k, q()) + bootstrap_extra; }

  void validate() const {
    if (!basis) throw DomainError("kernel has no basis");
    if (k < q())
      throw DomainError("k = " + std::to_string(k) + " must be at least q = " + std::to_string(q()));
    if (!(lambda_bar > 1.0)) throw DomainError("lambda_bar must exceed 1");
    if (!(bootstrap_radius > 0.0)) throw DomainError("bootstrap radius must be positive");
    schedule.validate();
  }
};

struct Counters {
  std::uint64_t proposals = 0;
  std::uint64_t accepted = 0;
  std::uint64_t refinements = 0;
  std::uint64_t poisedness_refinements = 0;
  std::uint64_t random_refinements = 0;
  std::uint64_t nonfinite_rejections = 0;

  friend bool operator==(const Counters&, const Counters&) = default;
};

struct ChainState {
  std::uint64_t t = 0;
  Point x;
  /// Lhat(x) including any exact prior addend. Exact chains hold L(x).
  double log_target_x = 0.0;
  std::uint64_t level = 0;
  Rng rng;
  Counters counters;
};

/// One row of the per-step trace.
struct TraceRecord {
  std::uint64_t t = 0;
  bool accepted = false;
  bool refined = false;
  double delta = std::numeric_limits<double>::quiet_NaN();  // Delta(X_t) before refinement
  double gamma = std::numeric_limits<double>::quiet_NaN();  // gamma(X_t)
  std::uint64_t level = 0;
  /// Cumulative model evaluations after initialization.
  std::uint64_t n = 0;
};

/// Result of refinement bookkeeping at the current state.
struct RefineCheck {
  double gamma = 0.0;
  double delta = 0.0;
  bool refined = false;
  bool poisedness_triggered = false;
  bool random_fallback = false;
};

/// Surrogate value at a point, or failure (degenerate neighbor geometry).
struct Prediction {
  double value = 0.0;
  bool ok = false;
};

template <class S>
concept Surrogate = requires(S s, std::span<const double> x, std::uint64_t ell, Rng& rng) {
  { s.check_and_refine(x, ell, rng) } -> std::same_as<RefineCheck>;
  { s.predict(x) } -> std::same_as<Prediction>;
  { s.evaluations() } -> std::convertible_to<std::uint64_t>;
};

/// Evaluated set plus the local polynomial machinery over it.
class LocalSurrogate {
 public:
  LocalSurrogate(const KernelConfig& config, TargetModel& model)
      : config_(&config), model_(&model), store_(model.dim()) {}

  LocalSurrogate(const KernelConfig& config, TargetModel& model, EvaluatedSet store)
      : config_(&config), model_(&model), store_(std::move(store)) {}

  const EvaluatedSet& store() const noexcept { return store_; }
  EvaluatedSet& store() noexcept { return store_; }
  const KernelConfig& config() const noexcept { return *config_; }
  TargetModel& model() noexcept { return *model_; }

  /// Total true-model evaluations that landed in the store.
  std::uint64_t evaluations() const noexcept { return store_.size(); }

  /// Lhat(x) = ghat(x) + exact prior addend.
  Prediction predict(std::span<const double> x) const {
    const auto nn = store_.knn(x, config_->k);
    try {
      const auto f = fit(x, gather(store_, nn), config_->basis);
      const double v = center_value(f) + model_->exact_addend(x);
      return {v, std::isfinite(v)};
    } catch (const DegenerateGeometry&) {
      return {std::numeric_limits<double>::quiet_NaN(), false};
    }
  }

  LocalFit local_fit(std::span<const double> x) const {
    return fit(x, gather(store_, store_.knn(x, config_->k)), config_->basis);
  }

  /// Refines once if the error indicator exceeds gamma_ell(x) or the
  /// poisedness constant exceeds lambda_bar. A degenerate fit at x with no
  /// refinement due is repaired by random in-ball insertions.
  RefineCheck check_and_refine(std::span<const double> x, std::uint64_t ell, Rng& rng) {
    RefineCheck c;
    const auto nn = store_.knn(x, config_->k);
    c.delta = nn.radius;
    c.gamma = threshold(x, ell, config_->schedule);
    const bool error_trigger = error_indicator(c.delta, config_->degree()) > c.gamma;

    std::optional<PoisednessReport> report;
    if (std::isfinite(config_->lambda_bar)) {
      try {
        report = poisedness(x, gather(store_, nn), config_->basis, config_->poisedness_budget);
        c.poisedness_triggered = !error_trigger && report->lambda2 > config_->lambda_bar;
      } catch (const DegenerateGeometry&) {
        c.poisedness_triggered = !error_trigger;
      }
    }
    if (error_trigger || c.poisedness_triggered) {
      c.random_fallback = refine_surrogate(x, rng, report ? &*report : nullptr);
      c.refined = true;
    }
    if (!c.refined && !predict(x).ok) {
      refine_random(x, rng);
      c.refined = true;
      c.random_fallback = true;
    }
    for (int attempt = 0; c.refined && !predict(x).ok; ++attempt) {
      if (attempt >= kMaxCollisions)
        throw DegenerateGeometry("local fit stays degenerate after random refinements", 0.0);
      refine_random(x, rng);
    }
    return c;
  }

  /// Evaluates the model at the poisedness site of B_k(x), or at a uniform
  /// random point of the ball when that site is already in the store.
  /// Returns whether the random fallback was used.
  bool refine_surrogate(std::span<const double> x, Rng& rng, const PoisednessReport* known = nullptr) {
    const auto nn = store_.knn(x, config_->k);
    std::optional<Point> site;
    if (known) {
      site = refinement_site(*known);
    } else {
      try {
        site = refinement_site(poisedness(x, gather(store_, nn), config_->basis, config_->poisedness_budget));
      } catch (const DegenerateGeometry&) {
      }
    }
    if (site && !store_.find_duplicate(*site)) {
      add(*site);
      return false;
    }
    refine_random(x, rng);
    return true;
  }

  /// Inserts a uniform random point of B_k(x).
  void refine_random(std::span<const double> x, Rng& rng) {
    const double radius = store_.ball_radius(x, config_->k);
    const std::size_t d = x.size();
    Point p(d);
    for (int attempt = 0; attempt < kMaxCollisions; ++attempt) {
      double n2 = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        p[i] = rng.gaussian();
        n2 += p[i] * p[i];
      }
      const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d)) / std::sqrt(n2);
      for (std::size_t i = 0; i < d; ++i) p[i] = x[i] + r * p[i];
      if (!store_.find_duplicate(p)) {
        add(p);
        return;
      }
    }
    throw DegenerateGeometry("repeated duplicate collisions while refining a degenerate ball", 0.0);
  }

  /// Evaluates the model at p and stores the result.
  void add(std::span<const double> p) { store_.insert(p, model_->evaluate(p)); }

  static constexpr int kMaxCollisions = 8;

 private:
  const KernelConfig* config_;
  TargetModel* model_;
  EvaluatedSet store_;
};

/// The true log-density used as its own, never refined, surrogate.
class ExactSurrogate {
 public:
  ExactSurrogate(const RefinementSchedule& schedule, TargetModel& model)
      : schedule_(&schedule), model_(&model) {}

  RefineCheck check_and_refine(std::span<const double> x, std::uint64_t ell, Rng&) {
    RefineCheck c;
    c.gamma = threshold(x, ell, *schedule_);
    return c;
  }

  Prediction predict(std::span<const double> x) const {
    const double v = model_->log_density(x);
    return {v, std::isfinite(v)};
  }

  std::uint64_t evaluations() const { return model_->evaluations(); }

 private:
  const RefinementSchedule* schedule_;
  TargetModel* model_;
};

/// Sink for diagnostics about rejected non-finite proposals.
using WarningSink = std::function<void(const std::string&)>;

inline void default_warning(const std::string& msg) { std::cerr << "lamcmc: warning: " << msg << '\n'; }

namespace detail {

inline bool metropolis_accept(double log_alpha, Rng& rng) {
  const double u = rng.uniform();
  if (std::isnan(log_alpha)) return false;
  return log_alpha >= 0.0 || u < std::exp(log_alpha);
}

}  // namespace detail

/// log Ltilde(x') - log Lhat(x) with Ltilde = Lhat + Q_V, before the
/// proposal-density ratio.
inline double corrected_log_ratio(std::span<const double> x, std::span<const double> xp, double lhat_x,
                                  double lhat_xp, double gamma_x, double gamma_xp, const RefinementSchedule& s) {
  return lhat_xp + tail_correction(x, xp, gamma_x, gamma_xp, s.eta, s.lyapunov) - lhat_x;
}

/// One LA-MCMC transition. `state` is updated only if the step completes;
/// a model failure leaves it untouched (the RNG included).
template <Surrogate S>
TraceRecord la_step(ChainState& state, S& surrogate, Proposal& proposal,
                    const RefinementSchedule& schedule, std::uint64_t bootstrap_size,
                    const WarningSink& warn = default_warning) {
  ChainState next = state;
  const std::uint64_t t = state.t + 1;
  // At most one level per step; equal to level(t) whenever gamma1 >= 0.5.
  const std::uint64_t ell = std::min(state.level + 1, level(t, schedule));

  const Point xp = proposal.propose(state.x, next.rng);
  const RefineCheck check = surrogate.check_and_refine(state.x, ell, next.rng);
  if (check.refined) {
    next.counters.refinements++;
    if (check.poisedness_triggered) next.counters.poisedness_refinements++;
    if (check.random_fallback) next.counters.random_refinements++;
    next.log_target_x = surrogate.predict(state.x).value;
  }

  const double gamma_xp = threshold(xp, ell, schedule);
  const Prediction pred = surrogate.predict(xp);
  double log_alpha = -std::numeric_limits<double>::infinity();
  if (pred.ok) {
    log_alpha = corrected_log_ratio(state.x, xp, next.log_target_x, pred.value, check.gamma, gamma_xp, schedule) +
                proposal.log_ratio(state.x, xp);
  } else {
    next.counters.nonfinite_rejections++;
    if (warn) warn("rejecting proposal with non-finite surrogate value at step " + std::to_string(t));
  }
  const bool accepted = detail::metropolis_accept(log_alpha, next.rng);
  next.counters.proposals++;
  if (accepted) {
    next.counters.accepted++;
    next.x = xp;
    next.log_target_x = pred.value;
  }
  next.t = t;
  next.level = ell;
  proposal.observe(next.x, t);

  TraceRecord rec;
  rec.t = t;
  rec.accepted = accepted;
  rec.refined = check.refined;
  rec.delta = check.delta;
  rec.gamma = check.gamma;
  rec.level = ell;
  rec.n = surrogate.evaluations() - bootstrap_size;
  state = std::move(next);
  return rec;
}

/// Random-walk Metropolis-Hastings with exact evaluations. Uses the RNG
/// stream in the same order as la_step.
inline TraceRecord exact_step(ChainState& state, TargetModel& model, Proposal& proposal) {
  ChainState next = state;
  const std::uint64_t t = state.t + 1;
  const Point xp = proposal.propose(state.x, next.rng);
  const double lp = model.log_density(xp);
  const double log_alpha = lp - state.log_target_x + proposal.log_ratio(state.x, xp);
  const bool accepted = detail::metropolis_accept(log_alpha, next.rng);
  next.counters.proposals++;
  if (accepted) {
    next.counters.accepted++;
    next.x = xp;
    next.log_target_x = lp;
  }
  next.t = t;
  proposal.observe(next.x, t);

  TraceRecord rec;
  rec.t = t;
  rec.accepted = accepted;
  rec.n = t;
  state = std::move(next);
  return rec;
}

/// Initial design: x0 plus max(k, q) + extra - 1 quasi-random points in the
/// ball of radius r0 around x0, randomly rotated by the chain RNG.
inline EvaluatedSet bootstrap(std::span<const double> x0, const KernelConfig& config, TargetModel& model,
                              Rng& rng) {
  config.validate();
  const std::size_t d = x0.size();
  if (d != model.dim()) throw DomainError("initial point dimension does not match the model");
  EvaluatedSet store(d);
  store.insert(x0, model.evaluate(x0));
  std::vector<double> shift(d + 1);
  for (auto& s : shift) s = rng.uniform();
  Point unit(d), p(d);
  const std::size_t want = config.bootstrap_size();
  for (std::size_t i = 1; store.size() < want; ++i) {
    detail::ball_point(i, d, shift, unit);
    for (std::size_t j = 0; j < d; ++j) p[j] = x0[j] + config.bootstrap_radius * unit[j];
    if (store.find_duplicate(p)) continue;
    store.insert(p, model.evaluate(p));
  }
  return store;
}

enum class Mode { LocalApproximation, Exact };

/// A single chain: owns its state, evaluated set and proposal; borrows the
/// kernel config and the model.
class Chain {
 public:
  Chain(Mode mode, const KernelConfig& config, TargetModel& model, ProposalSpec proposal,
        std::span<const double> x0, Rng rng)
      : mode_(mode),
        config_(&config),
        model_(&model),
        proposal_(std::move(proposal), x0.size()),
        surrogate_(config, model) {
    state_.x.assign(x0.begin(), x0.end());
    state_.rng = std::move(rng);
    if (mode_ == Mode::LocalApproximation) {
      surrogate_.store() = bootstrap(x0, config, model, state_.rng);
      bootstrap_size_ = surrogate_.store().size();
      const auto pred = surrogate_.predict(x0);
      if (!pred.ok) throw DegenerateGeometry("bootstrap design does not support a fit at x0", 0.0);
      state_.log_target_x = pred.value;
    } else {
      state_.log_target_x = model.log_density(x0);
      bootstrap_size_ = 1;
    }
  }

  /// Resumes from saved pieces.
  Chain(Mode mode, const KernelConfig& config, TargetModel& model, Proposal proposal, ChainState state,
        EvaluatedSet store, std::uint64_t bootstrap_size)
      : mode_(mode),
        config_(&config),
        model_(&model),
        proposal_(std::move(proposal)),
        surrogate_(config, model, std::move(store)),
        state_(std::move(state)),
        bootstrap_size_(bootstrap_size) {}

  TraceRecord step(const WarningSink& warn = default_warning) {
    if (mode_ == Mode::Exact) return exact_step(state_, *model_, proposal_);
    return la_step(state_, surrogate_, proposal_, config_->schedule, bootstrap_size_, warn);
  }

  Mode mode() const noexcept { return mode_; }
  const ChainState& state() const noexcept { return state_; }
  const EvaluatedSet& store() const noexcept { return surrogate_.store(); }
  const Proposal& proposal() const noexcept { return proposal_; }
  LocalSurrogate& surrogate() noexcept { return surrogate_; }
  std::uint64_t bootstrap_size() const noexcept { return bootstrap_size_; }
  TargetModel& model() noexcept { return *model_; }

 private:
  Mode mode_;
  const KernelConfig* config_;
  TargetModel* model_;
  Proposal proposal_;
  LocalSurrogate surrogate_;
  ChainState state_;
  std::uint64_t bootstrap_size_ = 0;
};

struct RunResult {
  std::size_t dim = 0;
  std::vector<double> samples;  // row-major, T x dim; row t-1 holds X_t
  std::vector<TraceRecord> trace;
  std::uint64_t bootstrap_size = 0;
  std::uint64_t model_evaluations = 0;
  Counters counters;

  std::span<const double> sample(std::size_t i) const { return {samples.data() + i * dim, dim}; }
  std::vector<double> coordinate(std::size_t j) const {
    std::vector<double> c(trace.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = samples[i * dim + j];
    return c;
  }
};

/// T steps from x0. Deterministic given the RNG.
inline RunResult run(Mode mode, std::span<const double> x0, std::uint64_t steps, const KernelConfig& config,
                     TargetModel& model, const ProposalSpec& proposal, Rng rng,
                     const WarningSink& warn = default_warning) {
  if (steps < 1) throw DomainError("run needs at least one step");
  Chain chain(mode, config, model, proposal, x0, std::move(rng));
  RunResult r;
  r.dim = x0.size();
  r.bootstrap_size = chain.bootstrap_size();
  r.samples.reserve(steps * r.dim);
  r.trace.reserve(steps);
  for (std::uint64_t i = 0; i < steps; ++i) {
    r.trace.push_back(chain.step(warn));
    const auto& x = chain.state().x;
    r.samples.insert(r.samples.end(), x.begin(), x.end());
  }
  r.model_evaluations = model.evaluations();
  r.counters = chain.state().counters;
  return r;
}

}  // namespace lamcmc

#endif  // LAMCMC_CHAIN_HPP
