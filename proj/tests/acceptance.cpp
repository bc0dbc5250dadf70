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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails. Chain runs use the shipped configs.

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "geometries.hpp"
#include "lamcmc/checkpoint.hpp"
#include "lamcmc/diagnostics.hpp"
#include "lamcmc/experiment.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using testing_support::Gen;

namespace {

const fs::path kConfigs = fs::path(LAMCMC_SOURCE_DIR) / "configs";
const lamcmc::WarningSink kQuiet = [](const std::string&) {};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

lamcmc::RunConfig load(const std::string& name) { return lamcmc::load_config((kConfigs / name).string()); }

// Runs chain `stream` of cfg in memory for `steps` steps.
lamcmc::RunResult run_chain(const lamcmc::RunConfig& cfg, std::size_t stream, std::uint64_t steps) {
  auto model = lamcmc::make_model(cfg);
  auto result = lamcmc::run(cfg.mode, cfg.x0, steps, cfg.kernel, *model, cfg.proposal,
                            lamcmc::Rng::for_stream(cfg.seed, stream), kQuiet);
  return result;
}

// Mean and variance of the toy density by the trapezoid rule on [-12, 12].
std::pair<double, double> toy_moments() {
  constexpr int n = 2'000'000;
  const double lo = -12.0, hi = 12.0, h = (hi - lo) / n;
  double z = 0.0, m1 = 0.0, m2 = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = lo + h * i;
    const double w = (i == 0 || i == n ? 0.5 : 1.0) * std::exp(-0.5 * x * x + std::sin(4.0 * std::numbers::pi * x));
    z += w;
    m1 += w * x;
    m2 += w * x * x;
  }
  const double mean = m1 / z;
  return {mean, m2 / z - mean * mean};
}

double pooled_variance(const std::vector<std::vector<double>>& chains) {
  double s = 0.0, s2 = 0.0, n = 0.0;
  for (const auto& c : chains)
    for (double v : c) {
      s += v;
      s2 += v * v;
      n += 1.0;
    }
  const double m = s / n;
  return s2 / n - m * m;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::function<Outcome()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("criterion %d: %s  %s  (%.1f s)\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
              seconds_since(t0));
  std::fflush(stdout);
}

// Toy chains shared by criteria 1 to 4.
struct ToyRuns {
  double reference = 0.0;
  std::vector<std::pair<double, double>> slopes;  // (gamma1, slope)
  double slope_slow = 0.0;
  std::vector<std::vector<double>> pooled;  // first 1e5 samples of 10 gamma1 = 1 chains
  // Chain-averaged model evaluations (bootstrap included) at kCountSteps.
  std::vector<double> evaluations;
};

const std::uint64_t kCountSteps[] = {10'000, 20'000, 100'000, 200'000};

constexpr std::size_t kToyChains = 20;
constexpr std::uint64_t kToySteps = 100'000;

double toy_slope(lamcmc::RunConfig cfg, double gamma1, ToyRuns& runs, bool keep) {
  cfg.kernel.schedule.gamma1 = gamma1;
  cfg.kernel.schedule.allow_slow_decay = gamma1 <= 0.5;
  // gamma1 = 1 runs twice as long to supply the refinement curves.
  const std::uint64_t steps = keep ? 2 * kToySteps : kToySteps;
  std::vector<lamcmc::ErrorCurve> errors;
  for (std::size_t i = 0; i < kToyChains; ++i) {
    const auto r = run_chain(cfg, i, steps);
    auto x = r.coordinate(0);
    x.resize(kToySteps);
    errors.push_back(lamcmc::variance_error_curve(x, runs.reference));
    if (keep) {
      runs.evaluations.resize(std::size(kCountSteps));
      for (std::size_t j = 0; j < std::size(kCountSteps); ++j)
        runs.evaluations[j] += static_cast<double>(r.bootstrap_size + r.trace[kCountSteps[j] - 1].n) / kToyChains;
      if (runs.pooled.size() < 10) runs.pooled.push_back(std::move(x));
    }
  }
  return lamcmc::loglog_slope(lamcmc::average_curves(errors), 1'000, 100'000);
}

ToyRuns toy_runs() {
  ToyRuns runs;
  runs.reference = toy_moments().second;
  const auto cfg = load("toy1d.json");
  for (double g : {0.5, 1.0, 2.0}) runs.slopes.emplace_back(g, toy_slope(cfg, g, runs, g == 1.0));
  const auto slow = load("toy1d_gamma1_0.25.json");
  runs.slope_slow = toy_slope(slow, slow.kernel.schedule.gamma1, runs, false);
  return runs;
}

Outcome criterion1(const ToyRuns& runs) {
  Outcome o{true, fmt("reference var %.5f;", runs.reference)};
  for (const auto& [g, s] : runs.slopes) {
    o.pass = o.pass && s >= -0.65 && s <= -0.35;
    o.detail += fmt(" slope(gamma1=%g) = %.3f", g, s);
  }
  o.detail += " (want [-0.65, -0.35])";
  return o;
}

Outcome criterion2(const ToyRuns& runs) {
  double base = 0.0;
  for (const auto& [g, s] : runs.slopes)
    if (g == 1.0) base = s;
  const double diff = runs.slope_slow - base;
  return {diff >= 0.10, fmt("slope(gamma1=0.25) = %.3f, slope(gamma1=1) = %.3f, difference %.3f (want >= 0.10)",
                            runs.slope_slow, base, diff)};
}

Outcome criterion3(const ToyRuns& runs) {
  const auto cfg = load("toy1d.json");
  const auto single = run_chain(cfg, 0, 1'000'000);
  const auto evals = single.model_evaluations;
  const bool band = evals >= 100 && evals <= 5000;

  auto at = [&](std::uint64_t t) {
    const auto it = std::find(std::begin(kCountSteps), std::end(kCountSteps), t);
    return runs.evaluations.at(static_cast<std::size_t>(it - std::begin(kCountSteps)));
  };
  bool slowing = true;
  std::string detail = fmt("T=1e6 run: %llu evaluations (%llu refinements), want [100, 5000];",
                           static_cast<unsigned long long>(evals),
                           static_cast<unsigned long long>(single.counters.refinements));
  for (std::uint64_t t : {10'000ull, 100'000ull}) {
    const double n1 = at(t), n2 = at(2 * t);
    slowing = slowing && n2 - n1 < n1;
    detail += fmt(" n(%llu) = %.1f, n(%llu) = %.1f;", static_cast<unsigned long long>(t), n1,
                  static_cast<unsigned long long>(2 * t), n2);
  }
  return {band && slowing, detail};
}

Outcome criterion4(const ToyRuns& runs) {
  std::vector<double> la;
  for (const auto& c : runs.pooled) la.insert(la.end(), c.begin(), c.end());
  const auto cfg = load("toy1d_exact.json");
  const auto exact = run_chain(cfg, 0, cfg.steps).coordinate(0);
  const double tv = lamcmc::histogram_tv(la, exact, 50, -3.0, 3.0);
  return {tv < 0.05, fmt("TV(LA %zu pooled, exact %zu) = %.4f (want < 0.05)", la.size(), exact.size(), tv)};
}

// Pooled x2 samples and the largest |x2| over the config's chains.
struct BananaRuns {
  std::vector<std::vector<double>> x2;
  double max_abs = 0.0;
};

BananaRuns banana(const std::string& name) {
  const auto cfg = load(name);
  BananaRuns b;
  for (std::size_t i = 0; i < cfg.chains; ++i) {
    auto x = run_chain(cfg, i, cfg.steps).coordinate(1);
    for (double v : x) b.max_abs = std::max(b.max_abs, std::abs(v));
    b.x2.push_back(std::move(x));
  }
  return b;
}

Outcome criterion5() {
  const auto exact = banana("banana_exact.json");
  const auto tail = banana("banana_eta0.01.json");
  const auto loose = banana("banana_eta5.json");
  const double ref = pooled_variance(exact.x2), v1 = pooled_variance(tail.x2), v5 = pooled_variance(loose.x2);
  const bool a = tail.max_abs < 50.0 && std::abs(v1 - ref) <= 0.2 * ref;
  const bool b = v5 <= 0.8 * ref;
  return {a && b, fmt("exact Var(x2) = %.3f (analytic 13); (a) eta=0.01: max|x2| = %.2f, Var(x2) = %.3f, "
                      "ratio %.3f %s; (b) eta=5: Var(x2) = %.3f, ratio %.3f %s",
                      ref, tail.max_abs, v1, v1 / ref, a ? "ok" : "FAIL", v5, v5 / ref, b ? "ok" : "FAIL")};
}

Outcome criterion6() {
  Gen gen(606);
  int violations = 0, decreasing = 0;
  for (int i = 0; i < 10'000; ++i) {
    const std::size_t d = gen.index(1, 5);
    lamcmc::RefinementSchedule s;
    s.gamma0 = gen.uniform(0.01, 3.0);
    s.gamma1 = gen.uniform(0.6, 3.0);
    s.eta = gen.uniform(1e-3, 5.0);
    s.lyapunov.nu0 = gen.uniform(0.05, 2.0);
    s.lyapunov.nu1 = gen.uniform(0.1, 1.0);
    s.lyapunov.center = gen.point(d, -1, 1);
    const auto x = gen.point(d, -4, 4);
    auto xp = x;
    for (auto& v : xp) v += gen.normal();
    const auto ell = gen.index(0, 10'000);
    const double gx = lamcmc::threshold(x, ell, s), gxp = lamcmc::threshold(xp, ell, s);
    // Surrogate errors within the correction budget eta (gamma(x) + gamma(x')).
    const double budget = s.eta * (gx + gxp), w = gen.uniform(), u = gen.uniform();
    const double ex = (gen.uniform() < 0.5 ? -1.0 : 1.0) * budget * w * u;
    const double exp_ = (gen.uniform() < 0.5 ? -1.0 : 1.0) * budget * w * (1.0 - u);
    const double lx = gen.normal() * 10.0, lxp = gen.normal() * 10.0;
    const double exact = lxp - lx;
    const double corrected = lamcmc::corrected_log_ratio(x, xp, lx + ex, lxp + exp_, gx, gxp, s);
    const bool down = lamcmc::lyapunov_value(xp, s.lyapunov) < lamcmc::lyapunov_value(x, s.lyapunov);
    decreasing += down;
    if (down ? corrected < exact - 1e-12 : corrected > exact + 1e-12) ++violations;
  }
  return {violations == 0, fmt("%d violations over 10000 triples (%d V-decreasing)", violations, decreasing)};
}

lamcmc::BasisPtr td(std::size_t d, unsigned p) {
  return std::make_shared<const lamcmc::MultiIndexSet>(lamcmc::total_degree_set(d, p));
}

std::vector<double> ball_point(Gen& gen, const std::vector<double>& x, double r) {
  while (true) {
    auto y = gen.point(x.size(), -r, r);
    double n2 = 0.0;
    for (double v : y) n2 += v * v;
    if (n2 > r * r) continue;
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += x[i];
    return y;
  }
}

Outcome criterion7() {
  Gen gen(707);
  // Reproduction of random polynomials in P.
  double worst_repro = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = gen.index(1, 3);
    const unsigned p = static_cast<unsigned>(gen.index(1, 3));
    const auto basis = td(d, p);
    const auto x = gen.point(d, -3, 3);
    const double r = gen.uniform(0.05, 2.0);
    const auto shift = gen.point(d);
    std::vector<double> coef;
    for (std::size_t j = 0; j < basis->size(); ++j) coef.push_back(gen.normal());
    auto g = [&](const std::vector<double>& y) {
      std::vector<double> z(d);
      for (std::size_t i = 0; i < d; ++i) z[i] = y[i] - shift[i];
      double v = 0.0;
      for (std::size_t j = 0; j < basis->size(); ++j) v += coef[j] * testing_support::monomial((*basis)[j], z);
      return v;
    };
    std::vector<std::vector<double>> pts;
    std::vector<double> vals;
    while (pts.size() < 2 * basis->size()) {
      pts.push_back(ball_point(gen, x, r));
      vals.push_back(g(pts.back()));
    }
    const auto f = lamcmc::fit(x, testing_support::make_neighborhood(pts, vals), basis);
    for (int q = 0; q < 20; ++q) {
      const auto y = ball_point(gen, x, r);
      const double want = g(y);
      worst_repro = std::max(worst_repro, std::abs(lamcmc::evaluate(f, y) - want) / (1.0 + std::abs(want)));
    }
  }

  // Order of convergence for sin under radius halving.
  bool order_ok = true;
  std::string factors;
  const double x0 = 0.7;
  for (unsigned p = 1; p <= 3; ++p) {
    const auto basis = td(1, p);
    const std::size_t k = 2 * (p + 1);
    auto max_error = [&](double delta) {
      std::vector<std::vector<double>> pts;
      std::vector<double> vals;
      for (std::size_t i = 0; i < k; ++i) {
        const double y = x0 - delta + 2.0 * delta * static_cast<double>(i) / static_cast<double>(k - 1);
        pts.push_back({y});
        vals.push_back(std::sin(y));
      }
      const auto f = lamcmc::fit(std::vector<double>{x0}, testing_support::make_neighborhood(pts, vals), basis);
      double e = 0.0;
      for (int i = 0; i <= 2000; ++i) {
        const double y = x0 - delta + 2.0 * delta * i / 2000.0;
        e = std::max(e, std::abs(lamcmc::evaluate(f, std::vector<double>{y}) - std::sin(y)));
      }
      return e;
    };
    double lo = INFINITY, hi = 0.0;
    for (double delta = 0.4; delta > 0.02; delta /= 2) {
      const double factor = max_error(delta) / max_error(delta / 2);
      lo = std::min(lo, factor);
      hi = std::max(hi, factor);
      order_ok = order_ok && factor >= std::pow(2.0, p) && factor <= std::pow(2.0, p + 2);
    }
    factors += fmt(" p=%u [%.2f, %.2f]", p, lo, hi);
  }

  // Lagrange identity l_j(y_i) = delta_ij for k = q.
  double worst_lagrange = 0.0;
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = gen.index(1, 3);
    const unsigned p = static_cast<unsigned>(gen.index(1, 3));
    const auto basis = td(d, p);
    const auto x = gen.point(d, -2, 2);
    std::vector<std::vector<double>> pts;
    for (std::size_t i = 0; i < basis->size(); ++i) pts.push_back(ball_point(gen, x, 0.5));
    const auto h = testing_support::make_neighborhood(pts, std::vector<double>(pts.size()));
    try {
      const lamcmc::LagrangeBasis lb(x, h, basis);
      if (lb.condition_estimate() >= 1e8) continue;
      ++checked;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto v = lb.values(pts[i]);
        for (std::size_t j = 0; j < pts.size(); ++j)
          worst_lagrange = std::max(worst_lagrange, std::abs(v[j] - (i == j ? 1.0 : 0.0)));
      }
    } catch (const lamcmc::DegenerateGeometry&) {
    }
  }
  const bool pass = worst_repro <= 1e-8 && order_ok && worst_lagrange <= 1e-9 && checked >= 100;
  return {pass, fmt("reproduction max rel error %.2e (want <= 1e-8); sin factors%s (want [2^p, 2^(p+2)]); "
                    "Lagrange max error %.2e over %d sets (want <= 1e-9)",
                    worst_repro, factors.c_str(), worst_lagrange, checked)};
}

Outcome criterion8() {
  struct Case {
    unsigned p;
    double nu;
    std::size_t want;
  };
  bool pass = true;
  std::string detail;
  for (const auto& c : {Case{1, 1.0, 11}, Case{2, 1.0, 66}, Case{2, 0.5, 21}, Case{3, 0.75, 76}, Case{3, 0.5, 31}}) {
    const auto q = lamcmc::sparse_set(10, c.p, c.nu).size();
    pass = pass && q == c.want;
    detail += fmt(" q(p=%u, nu=%g) = %zu;", c.p, c.nu, q);
  }
  return {pass, detail};
}

Outcome criterion9() {
  Gen gen(909);
  // knn against an exhaustive scan.
  int knn_mismatch = 0;
  {
    lamcmc::EvaluatedSet s(3);
    for (int i = 0; i < 500; ++i) s.insert(gen.point(3), 0.0);
    for (int q = 0; q < 1000; ++q) {
      const auto x = gen.point(3, -1.2, 1.2);
      const std::size_t k = gen.index(1, 30);
      const auto a = s.knn(x, k), b = s.knn_exhaustive(x, k);
      knn_mismatch += a.indices != b.indices || a.distances != b.distances;
    }
  }
  // Weighted least squares against the normal equations.
  double worst_lsq = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = gen.index(1, 3);
    const auto basis = td(d, 2);
    const auto x = gen.point(d);
    const double r = gen.uniform(0.05, 2.0);
    std::vector<std::vector<double>> pts;
    std::vector<double> vals;
    while (pts.size() < 2 * basis->size()) {
      pts.push_back(ball_point(gen, x, r));
      vals.push_back(gen.normal());
    }
    const auto f = lamcmc::fit(x, testing_support::make_neighborhood(pts, vals), basis);
    const Eigen::MatrixXd v =
        testing_support::dense_vandermonde(*basis, x, testing_support::max_dist(x, pts), pts);
    const Eigen::VectorXd g = Eigen::Map<const Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
    const Eigen::VectorXd oracle = (v.transpose() * v).lu().solve(v.transpose() * g);
    const Eigen::VectorXd got =
        Eigen::Map<const Eigen::VectorXd>(f.coefficients.data(), static_cast<Eigen::Index>(f.coefficients.size()));
    worst_lsq = std::max(worst_lsq, (got - oracle).norm() / std::max(1.0, oracle.norm()));
  }
  // Poisedness against the grid oracle.
  double worst_poised = 0.0;
  for (const auto& geo : testing_support::poisedness_geometries()) {
    const auto rep = lamcmc::poisedness(geo.center, geo.neighborhood(), geo.basis());
    const auto oracle = testing_support::grid_oracle(geo);
    worst_poised = std::max(worst_poised, std::abs(rep.lambda2 - oracle.value) / oracle.value);
  }
  // Frozen exact surrogate against the exact kernel on a shared stream.
  std::uint64_t decisions = 0, differing = 0;
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    auto m1 = lamcmc::make_banana(), m2 = lamcmc::make_banana();
    lamcmc::RefinementSchedule schedule;
    lamcmc::ExactSurrogate exact(schedule, *m1);
    lamcmc::Proposal q1(lamcmc::ProposalSpec::isotropic(2, 1.5), 2), q2(lamcmc::ProposalSpec::isotropic(2, 1.5), 2);
    const std::vector<double> x0{0.3, 0.4};
    lamcmc::ChainState a{0, x0, m1->log_density(x0), 0, lamcmc::Rng(seed), {}};
    lamcmc::ChainState b{0, x0, m2->log_density(x0), 0, lamcmc::Rng(seed), {}};
    for (int i = 0; i < 20'000; ++i) {
      const auto ra = lamcmc::la_step(a, exact, q1, schedule, 0, kQuiet);
      const auto rb = lamcmc::exact_step(b, *m2, q2);
      ++decisions;
      differing += ra.accepted != rb.accepted || a.x != b.x;
    }
  }
  const bool pass = knn_mismatch == 0 && worst_lsq <= 1e-8 && worst_poised <= 0.02 && differing == 0;
  return {pass, fmt("knn mismatches %d/1000; LSQ max rel diff %.2e; poisedness max rel gap %.4f; "
                    "frozen-exact decisions differing %llu/%llu",
                    knn_mismatch, worst_lsq, worst_poised, static_cast<unsigned long long>(differing),
                    static_cast<unsigned long long>(decisions))};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool same_files(const fs::path& a, const fs::path& b, std::size_t chains) {
  const lamcmc::RunLayout la{a}, lb{b};
  bool same = true;
  for (std::size_t i = 0; i < chains; ++i)
    same = same && slurp(la.samples(i)) == slurp(lb.samples(i)) && slurp(la.trace(i)) == slurp(lb.trace(i));
  for (const char* t : {"variance_error.tsv", "refinement.tsv", "acf.tsv", "ess.tsv", "histogram.tsv"})
    same = same && slurp(la.tables() / t) == slurp(lb.tables() / t);
  return same;
}

lamcmc::RunOptions quiet_options() {
  static std::ostringstream sink;
  lamcmc::RunOptions o;
  o.log = &sink;
  return o;
}

bool same_trace_row(const lamcmc::TraceRecord& a, const lamcmc::TraceRecord& b) {
  return a.t == b.t && a.accepted == b.accepted && a.refined == b.refined && a.level == b.level && a.n == b.n &&
         std::memcmp(&a.delta, &b.delta, sizeof(double)) == 0 && std::memcmp(&a.gamma, &b.gamma, sizeof(double)) == 0;
}

Outcome criterion10() {
  const auto dir = testing_support::scratch_dir("acceptance");
  std::string detail;
  bool pass = true;

  // Same seed, two runs, different worker counts.
  for (const std::string name : {"toy1d.json", "banana_eta0.01.json"}) {
    auto doc = load(name).document;
    doc["run"]["steps"] = 5000;
    doc["run"]["chains"] = 3;
    doc["run"]["checkpoint_interval"] = 1000;
    auto o = quiet_options();
    doc["run"]["output_dir"] = (dir / "a").string();
    o.workers = 1;
    const bool ok_a = lamcmc::run_experiment(lamcmc::parse_config(doc.dump()), o).exit_code == 0;
    doc["run"]["output_dir"] = (dir / "b").string();
    o.workers = 3;
    const bool ok_b = lamcmc::run_experiment(lamcmc::parse_config(doc.dump()), o).exit_code == 0;
    const bool same = ok_a && ok_b && same_files(dir / "a", dir / "b", 3);
    pass = pass && same;
    detail += fmt(" same-seed %s: %s;", name.c_str(), same ? "identical" : "DIFFERENT");
    fs::remove_all(dir / "a");
    fs::remove_all(dir / "b");
  }

  // Library-level checkpoint halfway through a banana chain.
  for (const auto mode : {lamcmc::Mode::LocalApproximation, lamcmc::Mode::Exact}) {
    auto cfg = load("banana_eta0.01.json");
    constexpr std::uint64_t steps = 20'000;
    cfg.proposal.freeze_at = steps / 2;
    auto m_full = lamcmc::make_banana();
    lamcmc::Chain full(mode, cfg.kernel, *m_full, cfg.proposal, cfg.x0, lamcmc::Rng::for_stream(cfg.seed, 1));
    std::vector<lamcmc::TraceRecord> reference;
    std::vector<lamcmc::Point> xs;
    for (std::uint64_t i = 0; i < steps; ++i) {
      reference.push_back(full.step(kQuiet));
      xs.push_back(full.state().x);
    }
    auto m_a = lamcmc::make_banana();
    lamcmc::Chain first(mode, cfg.kernel, *m_a, cfg.proposal, cfg.x0, lamcmc::Rng::for_stream(cfg.seed, 1));
    for (std::uint64_t i = 0; i < steps / 2; ++i) first.step(kQuiet);
    const auto path = dir / "chain.lamcmc";
    lamcmc::save_checkpoint(path, lamcmc::checkpoint_of(first, 1, "acceptance"));
    auto m_b = lamcmc::make_banana();
    auto resumed = lamcmc::restore_chain(lamcmc::load_checkpoint(path), cfg.kernel, *m_b, cfg.proposal);
    bool same = true;
    for (std::uint64_t i = steps / 2; i < steps; ++i) {
      const auto rec = resumed.step(kQuiet);
      same = same && same_trace_row(rec, reference[i]) && resumed.state().x == xs[i];
    }
    same = same && resumed.state().rng == full.state().rng && m_b->evaluations() == m_full->evaluations();
    pass = pass && same;
    detail += fmt(" banana %s resume: %s;", mode == lamcmc::Mode::Exact ? "exact" : "la",
                  same ? "identical" : "DIFFERENT");
  }

  // Experiment-level resume after the external model dies mid-run.
  {
    auto doc = load("toy1d.json").document;
    doc["run"]["steps"] = 4000;
    doc["run"]["chains"] = 1;
    doc["run"]["checkpoint_interval"] = 25;
    auto with_model = [&](const fs::path& out, long die_after) {
      std::vector<std::string> cmd{LAMCMC_TEST_MODEL, "--dim", "1", "--target", "toy1d"};
      if (die_after >= 0) {
        cmd.push_back("--die-after");
        cmd.push_back(std::to_string(die_after));
      }
      auto j = doc;
      j["target"] = {{"external", {{"command", cmd}, {"dim", 1}, {"timeout_s", 30}}}};
      j["run"]["output_dir"] = out.string();
      return lamcmc::parse_config(j.dump());
    };
    const auto opts = quiet_options();
    const auto full = lamcmc::run_experiment(with_model(dir / "ref", -1), opts);
    const auto die_after = static_cast<long>(full.total_evaluations * 6 / 10);
    const auto first = lamcmc::run_experiment(with_model(dir / "cut", die_after), opts);
    const auto rest = lamcmc::resume_experiment(dir / "cut", opts);
    const bool same = full.exit_code == 0 && first.exit_code == 2 && rest.exit_code == 0 &&
                      rest.total_evaluations == full.total_evaluations && same_files(dir / "ref", dir / "cut", 1);
    pass = pass && same;
    detail += fmt(" external-model resume after failure at step %llu: %s;",
                  static_cast<unsigned long long>(first.chains.empty() ? 0 : first.chains[0].steps),
                  same ? "identical" : "DIFFERENT");
  }
  fs::remove_all(dir);
  return {pass, detail};
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  ToyRuns toy;
  std::string toy_error;
  try {
    toy = toy_runs();
  } catch (const std::exception& e) {
    toy_error = e.what();
  }
  std::printf("toy chains: %.1f s\n", seconds_since(t0));
  const auto needs_toy = [&](auto fn) {
    return [&, fn]() -> Outcome {
      if (!toy_error.empty()) return {false, "toy runs failed: " + toy_error};
      return fn(toy);
    };
  };
  report(1, needs_toy(criterion1));
  report(2, needs_toy(criterion2));
  report(3, needs_toy(criterion3));
  report(4, needs_toy(criterion4));
  report(5, criterion5);
  report(6, criterion6);
  report(7, criterion7);
  report(8, criterion8);
  report(9, criterion9);
  report(10, criterion10);
  std::printf("%d of 10 criteria failed (%.1f s)\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
