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

// lamcmc command-line driver.
//
//   lamcmc run CONFIG [--out DIR] [--seed N] [--chains N] [--force]
//   lamcmc resume DIR
//   lamcmc diagnose DIR
//   lamcmc validate-config CONFIG
//
// Exit status: 0 success, 1 configuration or usage error, 2 runtime failure.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "lamcmc/config.hpp"
#include "lamcmc/errors.hpp"
#include "lamcmc/experiment.hpp"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

void print_summary(const lamcmc::RunConfig& c, std::ostream& out) {
  const auto& s = c.kernel.schedule;
  out << "target: " << (c.target.builtin.empty() ? "external" : c.target.builtin) << " (dim " << c.dim() << ")\n"
      << "mode: " << (c.mode == lamcmc::Mode::Exact ? "exact" : "la") << "\n"
      << "proposal: " << lamcmc::to_string(c.proposal.kind) << "\n"
      << "p: " << c.degree << "  nu: " << c.nu << "  q: " << c.kernel.q() << "  k: " << c.kernel.k << "\n"
      << "gamma0: " << s.gamma0 << "  gamma1: " << s.gamma1 << "  tau0: " << s.tau0 << "  eta: " << s.eta
      << "  lambda_bar: " << c.kernel.lambda_bar << "\n"
      << "lyapunov: nu0 " << s.lyapunov.nu0 << "  nu1 " << s.lyapunov.nu1 << "\n"
      << "steps: " << c.steps << "  chains: " << c.chains << "  seed: " << c.seed << "\n"
      << "output: " << c.output_dir << "\n";
}

int report(const lamcmc::ExperimentResult& r, const std::string& dir) {
  std::size_t failed = 0;
  for (const auto& c : r.chains) failed += c.status != "complete";
  std::cout << "chains: " << r.chains.size() - failed << " complete, " << failed << " failed\n"
            << "model evaluations: " << r.total_evaluations << "\n"
            << "output: " << dir << "\n";
  if (!r.diagnostics_error.empty()) std::cerr << "lamcmc: diagnostics: " << r.diagnostics_error << '\n';
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local-approximation MCMC experiment driver"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(lamcmc::kVersion));

  std::string config_path, out_dir, run_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> chains;
  bool force = false;

  auto* run = app.add_subcommand("run", "Run all chains of an experiment");
  run->add_option("config", config_path, "Configuration file (JSON)")->required();
  run->add_option("--out,-o", out_dir, "Output directory (overrides run.output_dir)");
  run->add_option("--seed", seed, "Master seed (overrides run.seed)");
  run->add_option("--chains", chains, "Chain count (overrides run.chains)");
  run->add_flag("--force", force, "Replace an existing run in the output directory");

  auto* resume = app.add_subcommand("resume", "Continue an interrupted run from its checkpoints");
  resume->add_option("dir", run_dir, "Run directory")->required();

  auto* diagnose = app.add_subcommand("diagnose", "Recompute diagnostic tables of a run directory");
  diagnose->add_option("dir", run_dir, "Run directory")->required();

  auto* validate = app.add_subcommand("validate-config", "Check a configuration file and print its summary");
  validate->add_option("config", config_path, "Configuration file (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*validate) {
      print_summary(lamcmc::load_config(config_path), std::cout);
      return 0;
    }
    if (*run) {
      auto cfg = lamcmc::load_config(config_path);
      lamcmc::apply_overrides(cfg, seed, chains, out_dir.empty() ? std::nullopt : std::optional(out_dir));
      lamcmc::RunOptions opts;
      opts.force = force;
      return report(lamcmc::run_experiment(cfg, opts), cfg.output_dir);
    }
    if (*resume) return report(lamcmc::resume_experiment(run_dir), run_dir);
    if (*diagnose) {
      lamcmc::diagnose(run_dir);
      std::cout << "tables written to " << (lamcmc::fs::path(run_dir) / "tables").string() << '\n';
      return 0;
    }
  } catch (const lamcmc::ConfigError& e) {
    std::cerr << "lamcmc: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "lamcmc: error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
