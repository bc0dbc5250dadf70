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
/// Run configuration: a JSON document whose schema is described in
/// docs/config.md. Unknown and repeated keys are errors, and every error
/// names the offending key path.

#ifndef LAMCMC_CONFIG_HPP
#define LAMCMC_CONFIG_HPP

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lamcmc/basis.hpp"
#include "lamcmc/chain.hpp"
#include "lamcmc/errors.hpp"
#include "lamcmc/external_model.hpp"
#include "lamcmc/model.hpp"
#include "lamcmc/proposal.hpp"

namespace lamcmc {

using json = nlohmann::json;

struct GaussianSpec {
  std::vector<double> mean;
  Eigen::MatrixXd covariance;
};

struct TargetSpec {
  /// toy1d, banana, quadratic, gaussian; empty for external models.
  std::string builtin;
  std::size_t dim = 0;
  GaussianSpec gaussian;
  std::vector<std::string> command;
  double timeout_s = 600.0;
  std::optional<GaussianSpec> prior;
};

struct DiagnosticsSpec {
  std::vector<double> reference_variance;  // empty: pooled sample variance
  std::size_t histogram_bins = 50;
  double histogram_lo = -3.0, histogram_hi = 3.0;
  std::size_t max_lag = 100;
};

struct RunConfig {
  TargetSpec target;
  ProposalSpec proposal;
  bool freeze_after_half = false;
  KernelConfig kernel;
  unsigned degree = 2;
  double nu = 1.0;
  /// The surrogate approximates the log-likelihood; the prior is exact.
  bool surrogate_log_likelihood = false;
  std::uint64_t steps = 0;
  std::size_t chains = 1;
  std::uint64_t seed = 0;
  std::string output_dir = "lamcmc-out";
  std::uint64_t checkpoint_interval = 0;
  Mode mode = Mode::LocalApproximation;
  std::vector<double> x0;
  DiagnosticsSpec diagnostics;
  /// The document as parsed, for echoing and hashing.
  json document;

  std::size_t dim() const { return target.dim; }
};

namespace detail {

// Reads fields from one JSON object, remembering which keys were used.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& at(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) throw ConfigError(key_path(key), "missing required key");
    return j_.at(key);
  }

  double number(const std::string& key) {
    const auto& v = at(key);
    if (!v.is_number()) throw ConfigError(key_path(key), "expected a number");
    return v.get<double>();
  }

  double number_or(const std::string& key, double def) { return has(key) ? number(key) : mark(key, def); }

  std::uint64_t count(const std::string& key) {
    const auto& v = at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_float() && v.get<double>() >= 0 && std::floor(v.get<double>()) == v.get<double>())
      return static_cast<std::uint64_t>(v.get<double>());
    throw ConfigError(key_path(key), "expected a nonnegative integer");
  }

  std::uint64_t count_or(const std::string& key, std::uint64_t def) { return has(key) ? count(key) : mark(key, def); }

  bool boolean_or(const std::string& key, bool def) {
    if (!has(key)) return mark(key, def);
    const auto& v = at(key);
    if (!v.is_boolean()) throw ConfigError(key_path(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key) {
    const auto& v = at(key);
    if (!v.is_string()) throw ConfigError(key_path(key), "expected a string");
    return v.get<std::string>();
  }

  std::string string_or(const std::string& key, std::string def) {
    return has(key) ? string(key) : mark(key, std::move(def));
  }

  std::vector<double> vector(const std::string& key) {
    const auto& v = at(key);
    if (!v.is_array()) throw ConfigError(key_path(key), "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(key_path(key), "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  Eigen::MatrixXd matrix(const std::string& key, std::size_t dim) {
    const auto& v = at(key);
    const auto d = static_cast<Eigen::Index>(dim);
    Eigen::MatrixXd m(d, d);
    if (!v.is_array() || v.size() != dim) throw ConfigError(key_path(key), "expected a " + shape(dim) + " matrix");
    for (std::size_t i = 0; i < dim; ++i) {
      if (!v[i].is_array() || v[i].size() != dim)
        throw ConfigError(key_path(key), "expected a " + shape(dim) + " matrix");
      for (std::size_t j = 0; j < dim; ++j) {
        if (!v[i][j].is_number()) throw ConfigError(key_path(key), "matrix entries must be numbers");
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[i][j].get<double>();
      }
    }
    return m;
  }

  ObjectReader object(const std::string& key) { return ObjectReader(at(key), key_path(key)); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(key_path(it.key()), "unknown key");
  }

 private:
  template <class T>
  T mark(const std::string& key, T v) {
    used_.insert(key);
    return v;
  }
  static std::string shape(std::size_t d) { return std::to_string(d) + "x" + std::to_string(d); }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

inline json parse_strict(const std::string& text) {
  // One key set and one enclosing key name per open object.
  std::vector<std::set<std::string>> keys;
  std::vector<std::string> names;
  std::string last_key, dup;
  json::parser_callback_t cb = [&](int, json::parse_event_t ev, json& parsed) {
    switch (ev) {
      case json::parse_event_t::object_start:
        keys.emplace_back();
        names.push_back(keys.size() == 1 ? "" : last_key);
        break;
      case json::parse_event_t::object_end:
        keys.pop_back();
        names.pop_back();
        break;
      case json::parse_event_t::key: {
        last_key = parsed.get<std::string>();
        if (!keys.back().insert(last_key).second && dup.empty()) {
          for (std::size_t i = 1; i < names.size(); ++i) dup += names[i] + ".";
          dup += last_key;
        }
        break;
      }
      default:
        break;
    }
    return true;
  };
  json j;
  try {
    j = json::parse(text, cb);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed configuration: ") + e.what());
  }
  if (!dup.empty()) throw ConfigError(dup, "key given more than once");
  return j;
}

inline GaussianSpec read_gaussian(ObjectReader& r, std::size_t dim) {
  GaussianSpec g;
  g.mean = r.vector("mean");
  if (dim == 0) dim = g.mean.size();
  if (g.mean.size() != dim) throw ConfigError(r.key_path("mean"), "length does not match dimension");
  g.covariance = r.matrix("covariance", dim);
  try {
    GaussianLogDensity check(g.mean, g.covariance);
  } catch (const DomainError& e) {
    throw ConfigError(r.key_path("covariance"), e.what());
  }
  return g;
}

inline double read_lambda_bar(ObjectReader& r) {
  const auto& v = r.at("lambda_bar");
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    throw ConfigError(r.key_path("lambda_bar"), "expected a number or \"inf\"");
  }
  if (!v.is_number()) throw ConfigError(r.key_path("lambda_bar"), "expected a number or \"inf\"");
  return v.get<double>();
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
  RunConfig c;
  c.document = detail::parse_strict(text);
  detail::ObjectReader root(c.document, "");

  {  // target
    auto t = root.object("target");
    if (t.has("builtin") == t.has("external"))
      throw ConfigError("target", "exactly one of 'builtin' or 'external' is required");
    if (t.has("builtin")) {
      c.target.builtin = t.string("builtin");
      const auto& b = c.target.builtin;
      if (b == "toy1d") {
        c.target.dim = 1;
      } else if (b == "banana") {
        c.target.dim = 2;
      } else if (b == "quadratic") {
        c.target.dim = t.count("dim");
      } else if (b == "gaussian") {
        c.target.gaussian = detail::read_gaussian(t, 0);
        c.target.dim = c.target.gaussian.mean.size();
      } else {
        throw ConfigError("target.builtin", "unknown builtin target '" + b + "'");
      }
    } else {
      auto e = t.object("external");
      const auto& cmd = e.at("command");
      if (!cmd.is_array() || cmd.empty())
        throw ConfigError("target.external.command", "expected a nonempty array of strings");
      for (const auto& a : cmd) {
        if (!a.is_string()) throw ConfigError("target.external.command", "expected strings");
        c.target.command.push_back(a.get<std::string>());
      }
      c.target.dim = e.count("dim");
      c.target.timeout_s = e.number_or("timeout_s", 600.0);
      if (!(c.target.timeout_s > 0)) throw ConfigError("target.external.timeout_s", "must be positive");
      e.finish();
    }
    if (c.target.dim == 0) throw ConfigError("target", "dimension must be positive");
    if (t.has("prior")) {
      auto p = t.object("prior");
      c.target.prior = detail::read_gaussian(p, c.target.dim);
      p.finish();
    }
    t.finish();
  }
  const std::size_t d = c.target.dim;

  {  // kernel
    auto k = root.object("kernel");
    c.kernel.k = k.count("k");
    c.degree = static_cast<unsigned>(k.count("p"));
    c.nu = k.number_or("nu", 1.0);
    if (!(c.nu >= 0.0 && c.nu <= 1.0)) throw ConfigError("kernel.nu", "must lie in [0, 1]");
    auto& s = c.kernel.schedule;
    s.gamma0 = k.number("gamma0");
    s.gamma1 = k.number("gamma1");
    c.kernel.lambda_bar = detail::read_lambda_bar(k);
    s.tau0 = k.number("tau0");
    s.eta = k.number("eta");
    s.allow_slow_decay = k.boolean_or("allow_slow_decay", false);
    {
      auto l = k.object("lyapunov");
      s.lyapunov.nu0 = l.number("nu0");
      s.lyapunov.nu1 = l.number("nu1");
      s.lyapunov.center = l.has("center") ? l.vector("center") : std::vector<double>(d, 0.0);
      if (s.lyapunov.center.size() != d)
        throw ConfigError("kernel.lyapunov.center", "length does not match the target dimension");
      l.finish();
    }
    c.kernel.bootstrap_radius = k.number_or("bootstrap_radius", 1.0);
    c.kernel.poisedness_budget = k.count_or("poisedness_budget", kDefaultPoisednessBudget);
    const auto st = k.string_or("surrogate_target", "log-density");
    if (st == "log-likelihood") {
      c.surrogate_log_likelihood = true;
    } else if (st != "log-density") {
      throw ConfigError("kernel.surrogate_target", "expected 'log-density' or 'log-likelihood'");
    }
    k.finish();

    if (!(s.gamma0 > 0)) throw ConfigError("kernel.gamma0", "must be > 0");
    if (!(s.gamma1 > 0)) throw ConfigError("kernel.gamma1", "must be > 0");
    if (!(s.gamma1 > 0.5) && !s.allow_slow_decay)
      throw ConfigError("kernel.gamma1",
                        "must exceed 0.5 so that level lengths increase; set allow_slow_decay to override");
    if (!(s.tau0 >= 1)) throw ConfigError("kernel.tau0", "must be >= 1");
    if (!(s.eta >= 0)) throw ConfigError("kernel.eta", "must be >= 0");
    if (!(s.lyapunov.nu0 > 0)) throw ConfigError("kernel.lyapunov.nu0", "must be > 0");
    if (!(s.lyapunov.nu1 > 0 && s.lyapunov.nu1 <= 1)) throw ConfigError("kernel.lyapunov.nu1", "must lie in (0, 1]");
    if (!(c.kernel.lambda_bar > 1)) throw ConfigError("kernel.lambda_bar", "must exceed 1");
    if (!(c.kernel.bootstrap_radius > 0)) throw ConfigError("kernel.bootstrap_radius", "must be positive");
    if (c.surrogate_log_likelihood && !c.target.prior)
      throw ConfigError("kernel.surrogate_target", "log-likelihood surrogates need target.prior");
    c.kernel.basis = std::make_shared<const MultiIndexSet>(sparse_set(d, c.degree, c.nu));
    if (c.kernel.k < c.kernel.q())
      throw ConfigError("kernel.k", "must be at least q = " + std::to_string(c.kernel.q()) + " (got " +
                                        std::to_string(c.kernel.k) + ")");
  }

  {  // proposal
    auto p = root.object("proposal");
    const auto kind = p.string("kind");
    if (kind == "random-walk-gaussian") {
      c.proposal.kind = ProposalSpec::Kind::RandomWalk;
    } else if (kind == "adaptive-metropolis") {
      c.proposal.kind = ProposalSpec::Kind::AdaptiveMetropolis;
    } else {
      throw ConfigError("proposal.kind", "expected 'random-walk-gaussian' or 'adaptive-metropolis'");
    }
    if (p.has("covariance") == p.has("step_sd"))
      throw ConfigError("proposal", "exactly one of 'covariance' or 'step_sd' is required");
    if (p.has("covariance")) {
      c.proposal.covariance = p.matrix("covariance", d);
    } else {
      const double sd = p.number("step_sd");
      if (!(sd > 0)) throw ConfigError("proposal.step_sd", "must be positive");
      c.proposal.covariance = ProposalSpec::isotropic(d, sd).covariance;
    }
    if (c.proposal.kind == ProposalSpec::Kind::AdaptiveMetropolis) {
      c.proposal.scale = p.number_or("scale", 2.38 * 2.38 / static_cast<double>(d));
      c.proposal.regularization = p.number_or("regularization", 1e-6);
      c.proposal.adapt_start = p.count_or("adapt_start", 1000);
      c.freeze_after_half = p.boolean_or("freeze_after_half", false);
    }
    p.finish();
    try {
      Proposal check(c.proposal, d);
    } catch (const DomainError& e) {
      throw ConfigError("proposal.covariance", e.what());
    }
  }

  {  // run
    auto r = root.object("run");
    c.steps = r.count("steps");
    if (c.steps < 1) throw ConfigError("run.steps", "must be at least 1");
    c.chains = r.count_or("chains", 1);
    if (c.chains < 1) throw ConfigError("run.chains", "must be at least 1");
    c.seed = r.count_or("seed", 0);
    c.output_dir = r.string_or("output_dir", "lamcmc-out");
    c.checkpoint_interval = r.count_or("checkpoint_interval", 0);
    const auto mode = r.string_or("mode", "la");
    if (mode == "la") {
      c.mode = Mode::LocalApproximation;
    } else if (mode == "exact") {
      c.mode = Mode::Exact;
    } else {
      throw ConfigError("run.mode", "expected 'la' or 'exact'");
    }
    c.x0 = r.has("x0") ? r.vector("x0") : std::vector<double>(d, 0.0);
    if (c.x0.size() != d) throw ConfigError("run.x0", "length does not match the target dimension");
    r.finish();
  }
  if (c.freeze_after_half) c.proposal.freeze_at = c.steps / 2;

  if (root.has("diagnostics")) {
    auto g = root.object("diagnostics");
    if (g.has("reference_variance")) {
      c.diagnostics.reference_variance = g.vector("reference_variance");
      if (c.diagnostics.reference_variance.size() != d)
        throw ConfigError("diagnostics.reference_variance", "length does not match the target dimension");
    }
    if (g.has("histogram")) {
      auto h = g.object("histogram");
      c.diagnostics.histogram_bins = h.count("bins");
      const auto range = h.vector("range");
      if (range.size() != 2 || !(range[1] > range[0]) || c.diagnostics.histogram_bins == 0)
        throw ConfigError("diagnostics.histogram", "need bins > 0 and range [lo, hi] with hi > lo");
      c.diagnostics.histogram_lo = range[0];
      c.diagnostics.histogram_hi = range[1];
      h.finish();
    }
    c.diagnostics.max_lag = g.count_or("max_lag", 100);
    g.finish();
  }
  root.finish();
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open configuration file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// A fresh model instance for one chain.
inline std::unique_ptr<TargetModel> make_model(const RunConfig& c) {
  std::unique_ptr<TargetModel> m;
  const auto& t = c.target;
  if (t.builtin == "toy1d") {
    m = make_toy1d();
  } else if (t.builtin == "banana") {
    m = make_banana();
  } else if (t.builtin == "quadratic") {
    m = make_quadratic(t.dim);
  } else if (t.builtin == "gaussian") {
    m = make_gaussian(t.gaussian.mean, t.gaussian.covariance);
  } else {
    m = std::make_unique<ExternalModel>(
        t.command, t.dim, std::chrono::milliseconds(static_cast<long long>(t.timeout_s * 1000.0)));
  }
  if (t.prior) {
    auto prior = std::make_shared<GaussianLogDensity>(t.prior->mean, t.prior->covariance);
    m->set_prior([prior](std::span<const double> x) { return (*prior)(x); }, c.surrogate_log_likelihood);
  }
  return m;
}

}  // namespace lamcmc

#endif  // LAMCMC_CONFIG_HPP
