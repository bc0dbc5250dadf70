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
/// Multi-chain experiment runner. Output directory layout and table
/// schemas are documented in docs/outputs.md.

#ifndef LAMCMC_EXPERIMENT_HPP
#define LAMCMC_EXPERIMENT_HPP

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "lamcmc/chain.hpp"
#include "lamcmc/checkpoint.hpp"
#include "lamcmc/config.hpp"
#include "lamcmc/diagnostics.hpp"
#include "lamcmc/errors.hpp"
#include "lamcmc/textio.hpp"

#ifndef LAMCMC_VERSION
#define LAMCMC_VERSION "0.1.0"
#endif

namespace lamcmc {

namespace fs = std::filesystem;

inline constexpr const char* kVersion = LAMCMC_VERSION;

struct RunLayout {
  fs::path root;

  fs::path config() const { return root / "config.json"; }
  fs::path manifest() const { return root / "manifest.json"; }
  fs::path tables() const { return root / "tables"; }
  fs::path chain_dir(std::size_t i) const {
    char name[32];
    std::snprintf(name, sizeof name, "chain-%03zu", i);
    return root / "chains" / name;
  }
  fs::path samples(std::size_t i) const { return chain_dir(i) / "samples.tsv"; }
  fs::path trace(std::size_t i) const { return chain_dir(i) / "trace.tsv"; }
  fs::path checkpoint(std::size_t i) const { return chain_dir(i) / "checkpoint.lamcmc"; }
};

inline std::string config_hash(const json& document) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", crc32(document.dump()));
  return std::string("crc32:") + buf;
}

inline std::string samples_header(std::size_t dim) {
  std::string h = "t";
  for (std::size_t j = 1; j <= dim; ++j) h += "\tx" + std::to_string(j);
  return h;
}

inline const char* trace_header() { return "t\taccepted\trefined\tdelta\tgamma\tlevel\tn"; }

/// Per-chain sample and trace writers.
class ChainWriter {
 public:
  ChainWriter(const fs::path& samples, const fs::path& trace, std::size_t dim, bool append) {
    const auto mode = append ? std::ios::app : std::ios::trunc;
    samples_.open(samples, std::ios::out | mode);
    trace_.open(trace, std::ios::out | mode);
    if (!samples_ || !trace_) throw Error("cannot open output files in " + samples.parent_path().string());
    if (!append) {
      samples_ << samples_header(dim) << '\n';
      trace_ << trace_header() << '\n';
    }
  }

  void write(std::span<const double> x, const TraceRecord& r) {
    line_ = std::to_string(r.t);
    for (double v : x) {
      line_ += '\t';
      line_ += format_double(v);
    }
    line_ += '\n';
    samples_ << line_;
    line_ = std::to_string(r.t);
    line_ += r.accepted ? "\t1" : "\t0";
    line_ += r.refined ? "\t1\t" : "\t0\t";
    line_ += format_double(r.delta);
    line_ += '\t';
    line_ += format_double(r.gamma);
    line_ += '\t';
    line_ += std::to_string(r.level);
    line_ += '\t';
    line_ += std::to_string(r.n);
    line_ += '\n';
    trace_ << line_;
  }

  void flush() {
    samples_.flush();
    trace_.flush();
    if (!samples_ || !trace_) throw Error("write to chain output failed");
  }

 private:
  std::ofstream samples_, trace_;
  std::string line_;
};

/// Keeps the header and the first `rows` data rows of a table file.
inline void truncate_rows(const fs::path& path, std::uint64_t rows) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot open '" + path.string() + "' for truncation");
  const fs::path tmp = path.string() + ".tmp";
  std::ofstream out(tmp, std::ios::trunc);
  std::string line;
  std::uint64_t kept = 0;
  if (!std::getline(in, line)) throw CheckpointError("'" + path.string() + "' has no header");
  out << line << '\n';
  while (kept < rows && std::getline(in, line)) {
    out << line << '\n';
    ++kept;
  }
  if (kept < rows)
    throw CheckpointError("'" + path.string() + "' has " + std::to_string(kept) +
                          " rows, fewer than the checkpoint's " + std::to_string(rows));
  out.close();
  in.close();
  fs::rename(tmp, path);
}

/// A table of doubles with a fixed header.
struct Table {
  std::vector<std::string> columns;
  std::vector<double> data;  // row-major

  std::size_t rows() const { return columns.empty() ? 0 : data.size() / columns.size(); }
  double at(std::size_t row, std::size_t col) const { return data[row * columns.size() + col]; }
  std::vector<double> column(std::size_t col) const {
    std::vector<double> out(rows());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = at(i, col);
    return out;
  }
};

inline Table read_table(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw Error("'" + path.string() + "' is empty");
  {
    std::istringstream h(line);
    std::string c;
    while (std::getline(h, c, '\t')) t.columns.push_back(c);
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view rest(line);
    std::size_t n = 0;
    while (true) {
      const auto tab = rest.find('\t');
      double v = 0.0;
      if (!parse_double(rest.substr(0, tab), v))
        throw Error("'" + path.string() + "' line " + std::to_string(lineno) + ": bad number");
      t.data.push_back(v);
      ++n;
      if (tab == std::string_view::npos) break;
      rest.remove_prefix(tab + 1);
    }
    if (n != t.columns.size())
      throw Error("'" + path.string() + "' line " + std::to_string(lineno) + ": wrong column count");
  }
  return t;
}

struct ChainOutcome {
  std::size_t index = 0;
  std::string status = "pending";  // complete | failed
  std::string error;
  std::uint64_t steps = 0;
  std::uint64_t bootstrap_size = 0;
  /// n(t) + bootstrap size.
  std::uint64_t evaluations = 0;
  Counters counters;
  double wall_time_s = 0.0;
};

inline json to_json(const ChainOutcome& o, std::uint64_t master_seed) {
  json j = {{"index", o.index},
            {"status", o.status},
            {"seed", {{"master", master_seed}, {"stream", o.index}}},
            {"steps_completed", o.steps},
            {"bootstrap_size", o.bootstrap_size},
            {"model_evaluations", o.evaluations},
            {"proposals", o.counters.proposals},
            {"accepted", o.counters.accepted},
            {"refinements", o.counters.refinements},
            {"poisedness_refinements", o.counters.poisedness_refinements},
            {"random_refinements", o.counters.random_refinements},
            {"nonfinite_rejections", o.counters.nonfinite_rejections},
            {"wall_time_s", o.wall_time_s}};
  if (!o.error.empty()) j["error"] = o.error;
  return j;
}

inline ChainOutcome outcome_from_json(const json& j) {
  ChainOutcome o;
  o.index = j.at("index").get<std::size_t>();
  o.status = j.at("status").get<std::string>();
  if (j.contains("error")) o.error = j.at("error").get<std::string>();
  o.steps = j.at("steps_completed").get<std::uint64_t>();
  o.bootstrap_size = j.at("bootstrap_size").get<std::uint64_t>();
  o.evaluations = j.at("model_evaluations").get<std::uint64_t>();
  o.counters.proposals = j.at("proposals").get<std::uint64_t>();
  o.counters.accepted = j.at("accepted").get<std::uint64_t>();
  o.counters.refinements = j.at("refinements").get<std::uint64_t>();
  o.counters.poisedness_refinements = j.at("poisedness_refinements").get<std::uint64_t>();
  o.counters.random_refinements = j.at("random_refinements").get<std::uint64_t>();
  o.counters.nonfinite_rejections = j.at("nonfinite_rejections").get<std::uint64_t>();
  o.wall_time_s = j.at("wall_time_s").get<double>();
  return o;
}

struct RunOptions {
  bool resume = false;
  /// Replace an existing run in the output directory.
  bool force = false;
  /// Worker threads; 0 reads LAMCMC_WORKERS, then the hardware concurrency.
  std::size_t workers = 0;
  std::ostream* log = &std::cerr;
};

struct ExperimentResult {
  int exit_code = 0;
  std::vector<ChainOutcome> chains;
  std::uint64_t total_evaluations = 0;
  std::string diagnostics_error;
};

namespace detail {

inline std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  ::gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::size_t worker_count(std::size_t requested, std::size_t chains) {
  std::size_t n = requested;
  if (n == 0) {
    if (const char* env = std::getenv("LAMCMC_WORKERS")) {
      try {
        n = static_cast<std::size_t>(std::stoul(env));
      } catch (const std::exception&) {
        throw ConfigError("LAMCMC_WORKERS", "expected a positive integer");
      }
      if (n == 0) throw ConfigError("LAMCMC_WORKERS", "expected a positive integer");
    }
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return std::min(n, chains);
}

inline void write_json(const fs::path& path, const json& j) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << j.dump(2) << '\n';
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

inline json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("'" + path.string() + "' is malformed: " + e.what());
  }
}

class ChainWarnings {
 public:
  ChainWarnings(std::size_t index, std::ostream* log, std::mutex& mu) : index_(index), log_(log), mu_(&mu) {}

  WarningSink sink() {
    return [this](const std::string& msg) {
      if (++count_ > kShown || !log_) return;
      std::lock_guard lock(*mu_);
      *log_ << "lamcmc: chain " << index_ << ": warning: " << msg << '\n';
      if (count_ == kShown) *log_ << "lamcmc: chain " << index_ << ": further warnings suppressed\n";
    };
  }

 private:
  static constexpr std::uint64_t kShown = 5;
  std::size_t index_;
  std::ostream* log_;
  std::mutex* mu_;
  std::uint64_t count_ = 0;
};

}  // namespace detail

/// Runs (or resumes) chain `index` to cfg.steps, writing its files.
inline ChainOutcome run_chain(const RunConfig& cfg, std::size_t index, const RunLayout& layout,
                              const std::string& hash, bool resume, std::ostream* log, std::mutex& log_mu) {
  const auto start = std::chrono::steady_clock::now();
  ChainOutcome o;
  o.index = index;
  std::unique_ptr<TargetModel> model;
  std::optional<Chain> chain;
  std::optional<ChainWriter> writer;
  detail::ChainWarnings warnings(index, log, log_mu);
  const auto warn = warnings.sink();
  const auto save = [&] {
    writer->flush();
    save_checkpoint(layout.checkpoint(index), checkpoint_of(*chain, index, hash));
  };
  try {
    fs::create_directories(layout.chain_dir(index));
    model = make_model(cfg);
    if (resume && fs::exists(layout.checkpoint(index))) {
      auto c = load_checkpoint(layout.checkpoint(index));
      if (c.config_hash != hash) throw CheckpointError("checkpoint was written for a different configuration");
      if (c.chain != index) throw CheckpointError("checkpoint belongs to chain " + std::to_string(c.chain));
      truncate_rows(layout.samples(index), c.state.t);
      truncate_rows(layout.trace(index), c.state.t);
      chain.emplace(restore_chain(std::move(c), cfg.kernel, *model, cfg.proposal));
      writer.emplace(layout.samples(index), layout.trace(index), cfg.dim(), true);
    } else {
      writer.emplace(layout.samples(index), layout.trace(index), cfg.dim(), false);
      chain.emplace(cfg.mode, cfg.kernel, *model, cfg.proposal, cfg.x0, Rng::for_stream(cfg.seed, index));
    }
    while (chain->state().t < cfg.steps) {
      const auto rec = chain->step(warn);
      writer->write(chain->state().x, rec);
      if (cfg.checkpoint_interval > 0 && rec.t % cfg.checkpoint_interval == 0 && rec.t < cfg.steps) save();
    }
    save();
    o.status = "complete";
  } catch (const std::exception& e) {
    o.status = "failed";
    o.error = e.what();
    if (const auto* me = dynamic_cast<const ModelError*>(&e); me && !me->point().empty()) {
      o.error += " at x = [";
      for (std::size_t i = 0; i < me->point().size(); ++i)
        o.error += (i ? ", " : "") + format_double(me->point()[i]);
      o.error += "]";
    }
    if (chain && writer) {
      try {
        save();
      } catch (const std::exception& e2) {
        o.error += std::string("; checkpoint not written: ") + e2.what();
      }
    }
    if (log) {
      std::lock_guard lock(log_mu);
      *log << "lamcmc: chain " << index << " failed: " << o.error << '\n';
    }
  }
  if (chain) {
    o.steps = chain->state().t;
    o.bootstrap_size = chain->bootstrap_size();
    o.counters = chain->state().counters;
    o.evaluations = cfg.mode == Mode::Exact ? o.steps + 1 : chain->store().size();
  }
  o.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return o;
}

/// Writes the merged diagnostic tables for the listed chains.
inline void write_tables(const RunLayout& layout, const RunConfig& cfg, const std::vector<ChainOutcome>& chains) {
  std::vector<const ChainOutcome*> done;
  for (const auto& c : chains)
    if (c.status == "complete") done.push_back(&c);
  if (done.empty()) throw InsufficientData("no completed chains to diagnose");
  fs::create_directories(layout.tables());
  const std::size_t d = cfg.dim();
  const auto& dg = cfg.diagnostics;

  std::vector<double> reference = dg.reference_variance;
  if (reference.empty()) {
    // Pooled (1/N) variance over all completed chains, two passes.
    std::vector<double> grand(d, 0.0);
    reference.assign(d, 0.0);
    double n = 0.0;
    for (const auto* c : done) {
      const auto s = read_table(layout.samples(c->index));
      for (std::size_t i = 0; i < s.rows(); ++i)
        for (std::size_t j = 0; j < d; ++j) grand[j] += s.at(i, j + 1);
      n += static_cast<double>(s.rows());
    }
    for (auto& g : grand) g /= n;
    for (const auto* c : done) {
      const auto s = read_table(layout.samples(c->index));
      for (std::size_t i = 0; i < s.rows(); ++i)
        for (std::size_t j = 0; j < d; ++j) reference[j] += (s.at(i, j + 1) - grand[j]) * (s.at(i, j + 1) - grand[j]);
    }
    for (auto& r : reference) r /= n;
  }

  std::vector<std::vector<ErrorCurve>> curves(d);
  std::vector<std::vector<double>> hist_mass(d);
  std::vector<RefinementCurve> refinement;
  std::ofstream acf_out(layout.tables() / "acf.tsv"), ess_out(layout.tables() / "ess.tsv");
  acf_out << "chain\tcoordinate\tlag\trho\n";
  ess_out << "chain\tcoordinate\tsamples\tess\n";
  for (const auto* c : done) {
    const auto s = read_table(layout.samples(c->index));
    for (std::size_t j = 0; j < d; ++j) {
      const auto col = s.column(j + 1);
      curves[j].push_back(variance_error_curve(col, reference[j]));
      const auto h = histogram(col, dg.histogram_bins, dg.histogram_lo, dg.histogram_hi);
      if (hist_mass[j].empty()) hist_mass[j].assign(h.mass.size(), 0.0);
      for (std::size_t b = 0; b < h.mass.size(); ++b) hist_mass[j][b] += h.mass[b] / static_cast<double>(done.size());
      const std::size_t lags = std::min<std::size_t>(dg.max_lag, col.size() - 1);
      std::vector<double> rho;
      try {
        rho = acf(col, lags);
      } catch (const InsufficientData&) {
        rho.assign(lags + 1, std::nan(""));
      }
      for (std::size_t k = 0; k < rho.size(); ++k)
        acf_out << c->index << '\t' << (j + 1) << '\t' << k << '\t' << format_double(rho[k]) << '\n';
      double e = std::nan("");
      try {
        e = ess(col);
      } catch (const InsufficientData&) {
      }
      ess_out << c->index << '\t' << (j + 1) << '\t' << col.size() << '\t' << format_double(e) << '\n';
    }
    const auto tr = read_table(layout.trace(c->index));
    std::vector<TraceRecord> recs(tr.rows());
    for (std::size_t i = 0; i < recs.size(); ++i) {
      recs[i].t = static_cast<std::uint64_t>(tr.at(i, 0));
      recs[i].n = static_cast<std::uint64_t>(tr.at(i, 6));
    }
    refinement.push_back(refinement_curve(recs, c->bootstrap_size));
  }

  {
    std::ofstream out(layout.tables() / "variance_error.tsv");
    out << "coordinate\tt\terror\treference\n";
    for (std::size_t j = 0; j < d; ++j) {
      const auto avg = average_curves(curves[j]);
      for (std::size_t i = 0; i < avg.steps.size(); ++i)
        out << (j + 1) << '\t' << avg.steps[i] << '\t' << format_double(avg.errors[i]) << '\t'
            << format_double(avg.reference) << '\n';
    }
  }
  {
    std::ofstream out(layout.tables() / "refinement.tsv");
    out << "t\tmean_evaluations\tmin_evaluations\tmax_evaluations\n";
    const auto mean = mean_evaluations(refinement);
    for (std::size_t i = 0; i < mean.size(); ++i) {
      std::uint64_t lo = refinement.front().evaluations[i], hi = lo;
      for (const auto& r : refinement) {
        lo = std::min(lo, r.evaluations[i]);
        hi = std::max(hi, r.evaluations[i]);
      }
      out << refinement.front().steps[i] << '\t' << format_double(mean[i]) << '\t' << lo << '\t' << hi << '\n';
    }
  }
  {
    std::ofstream out(layout.tables() / "histogram.tsv");
    out << "coordinate\tbin_lo\tbin_hi\tmass\n";
    const std::size_t bins = dg.histogram_bins;
    const double w = (dg.histogram_hi - dg.histogram_lo) / static_cast<double>(bins);
    for (std::size_t j = 0; j < d; ++j) {
      out << (j + 1) << "\t-inf\t" << format_double(dg.histogram_lo) << '\t' << format_double(hist_mass[j][bins])
          << '\n';
      for (std::size_t b = 0; b < bins; ++b) {
        const double lo = dg.histogram_lo + w * static_cast<double>(b);
        const double hi = b + 1 == bins ? dg.histogram_hi : lo + w;
        out << (j + 1) << '\t' << format_double(lo) << '\t' << format_double(hi) << '\t'
            << format_double(hist_mass[j][b]) << '\n';
      }
      out << (j + 1) << '\t' << format_double(dg.histogram_hi) << "\tinf\t"
          << format_double(hist_mass[j][bins + 1]) << '\n';
    }
  }
}

inline json make_manifest(const RunConfig& cfg, const std::string& hash, const std::vector<ChainOutcome>& chains,
                          const std::string& status, const std::string& started, double wall,
                          const std::string& diagnostics_error) {
  std::uint64_t total = 0;
  json list = json::array();
  for (const auto& c : chains) {
    total += c.evaluations;
    list.push_back(to_json(c, cfg.seed));
  }
  json m = {{"lamcmc_version", kVersion},
            {"checkpoint_version", kCheckpointVersion},
            {"protocol_version", kProtocolVersion},
            {"compiler", __VERSION__},
            {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                  std::to_string(EIGEN_MINOR_VERSION)},
            {"config_hash", hash},
            {"master_seed", cfg.seed},
            {"seed_derivation", "mt19937_64 seeded by seed_seq(master_lo, master_hi, chain_lo, chain_hi)"},
            {"mode", cfg.mode == Mode::Exact ? "exact" : "la"},
            {"dim", cfg.dim()},
            {"steps", cfg.steps},
            {"status", status},
            {"started_at", started},
            {"wall_time_s", wall},
            {"total_model_evaluations", total},
            {"chains", list}};
  if (!diagnostics_error.empty()) m["diagnostics_error"] = diagnostics_error;
  return m;
}

/// Runs every chain of `cfg` into cfg.output_dir, then writes the tables
/// and the manifest. With options.resume, completed chains are kept and the
/// others continue from their checkpoints.
inline ExperimentResult run_experiment(const RunConfig& cfg, const RunOptions& options = {}) {
  const auto start = std::chrono::steady_clock::now();
  const RunLayout layout{cfg.output_dir};
  const std::string hash = config_hash(cfg.document);
  std::string started = detail::utc_now();
  std::vector<ChainOutcome> outcomes(cfg.chains);
  std::vector<bool> todo(cfg.chains, true);

  if (options.resume) {
    const auto m = detail::read_json(layout.manifest());
    if (m.at("config_hash").get<std::string>() != hash)
      throw CheckpointError("manifest was written for a different configuration");
    started = m.value("started_at", started);
    for (const auto& c : m.at("chains")) {
      auto o = outcome_from_json(c);
      if (o.index >= cfg.chains) continue;
      if (o.status == "complete") todo[o.index] = false;
      outcomes[o.index] = std::move(o);
    }
  } else {
    if (fs::exists(layout.manifest()) && !options.force)
      throw Error("'" + layout.root.string() + "' already holds a run; resume it or choose another output directory");
    if (options.force) fs::remove_all(layout.root / "chains");
    fs::create_directories(layout.root);
    detail::write_json(layout.config(), cfg.document);
  }
  for (std::size_t i = 0; i < cfg.chains; ++i) {
    outcomes[i].index = i;
    if (todo[i]) outcomes[i].status = "running";
  }
  detail::write_json(layout.manifest(), make_manifest(cfg, hash, outcomes, "running", started, 0.0, ""));

  std::mutex log_mu;
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cfg.chains) return;
      if (!todo[i]) continue;
      outcomes[i] = run_chain(cfg, i, layout, hash, options.resume, options.log, log_mu);
    }
  };
  const std::size_t nworkers = detail::worker_count(options.workers, cfg.chains);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < nworkers; ++w) pool.emplace_back(worker);
    worker();
  }

  ExperimentResult r;
  r.chains = outcomes;
  bool all_ok = true;
  for (const auto& o : outcomes) {
    r.total_evaluations += o.evaluations;
    all_ok = all_ok && o.status == "complete";
  }
  try {
    write_tables(layout, cfg, outcomes);
  } catch (const std::exception& e) {
    r.diagnostics_error = e.what();
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  detail::write_json(layout.manifest(), make_manifest(cfg, hash, outcomes, all_ok ? "complete" : "failed", started,
                                                      wall, r.diagnostics_error));
  r.exit_code = all_ok && r.diagnostics_error.empty() ? 0 : 2;
  return r;
}

/// Loads the configuration saved in a run directory.
inline RunConfig load_run_config(const fs::path& dir) {
  auto cfg = load_config((dir / "config.json").string());
  cfg.output_dir = dir.string();
  return cfg;
}

inline ExperimentResult resume_experiment(const fs::path& dir, const RunOptions& options = {}) {
  RunOptions o = options;
  o.resume = true;
  return run_experiment(load_run_config(dir), o);
}

/// Recomputes the tables of a finished run directory.
inline void diagnose(const fs::path& dir) {
  const auto cfg = load_run_config(dir);
  const auto m = detail::read_json(RunLayout{dir}.manifest());
  std::vector<ChainOutcome> chains;
  for (const auto& c : m.at("chains")) chains.push_back(outcome_from_json(c));
  write_tables(RunLayout{dir}, cfg, chains);
}

/// Applies command-line overrides to both the parsed fields and the saved
/// document, so the config hash reflects the effective configuration.
inline void apply_overrides(RunConfig& cfg, std::optional<std::uint64_t> seed, std::optional<std::size_t> chains,
                            std::optional<std::string> output_dir) {
  if (seed) {
    cfg.seed = *seed;
    cfg.document["run"]["seed"] = *seed;
  }
  if (chains) {
    if (*chains < 1) throw ConfigError("run.chains", "must be at least 1");
    cfg.chains = *chains;
    cfg.document["run"]["chains"] = *chains;
  }
  if (output_dir) {
    cfg.output_dir = *output_dir;
    cfg.document["run"]["output_dir"] = *output_dir;
  }
}

}  // namespace lamcmc

#endif  // LAMCMC_EXPERIMENT_HPP
