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
/// Per-chain checkpoint files. Layout:
///
///   lamcmc-checkpoint 1
///   crc32 <8 hex digits> bytes <payload length>
///   <JSON payload>
///
/// Doubles are written in shortest round-trip decimal form, so a restore
/// reproduces every stored value bit for bit.

#ifndef LAMCMC_CHECKPOINT_HPP
#define LAMCMC_CHECKPOINT_HPP

#include <boost/crc.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "lamcmc/chain.hpp"
#include "lamcmc/errors.hpp"
#include "lamcmc/points.hpp"
#include "lamcmc/proposal.hpp"
#include "lamcmc/rng.hpp"

namespace lamcmc {

inline constexpr int kCheckpointVersion = 1;

struct ChainCheckpoint {
  std::uint64_t chain = 0;
  Mode mode = Mode::LocalApproximation;
  std::string config_hash;
  ChainState state;
  Proposal::State proposal;
  EvaluatedSet store{1};
  std::uint64_t bootstrap_size = 0;
  std::uint64_t model_evaluations = 0;
};

inline nlohmann::json to_json(const EvaluatedSet& s) {
  return {{"dim", s.dim()}, {"count", s.size()}, {"points", s.coordinates()}, {"values", s.values()}};
}

inline EvaluatedSet evaluated_set_from_json(const nlohmann::json& j) {
  const auto dim = j.at("dim").get<std::size_t>();
  const auto count = j.at("count").get<std::size_t>();
  const auto coords = j.at("points").get<std::vector<double>>();
  const auto values = j.at("values").get<std::vector<double>>();
  if (coords.size() != dim * count || values.size() != count)
    throw CheckpointError("evaluated set has inconsistent sizes");
  EvaluatedSet s(dim);
  for (std::size_t i = 0; i < count; ++i) {
    const auto r = s.insert(std::span<const double>(coords.data() + i * dim, dim), values[i]);
    if (!r.added) throw CheckpointError("evaluated set contains duplicate points");
  }
  return s;
}

inline std::uint32_t crc32(const std::string& s) {
  boost::crc_32_type crc;
  crc.process_bytes(s.data(), s.size());
  return crc.checksum();
}

inline std::string encode_checkpoint(const ChainCheckpoint& c) {
  const auto& st = c.state;
  const auto& k = st.counters;
  nlohmann::json j = {
      {"chain", c.chain},
      {"mode", c.mode == Mode::Exact ? "exact" : "la"},
      {"config_hash", c.config_hash},
      {"t", st.t},
      {"x", st.x},
      {"log_target_x", st.log_target_x},
      {"level", st.level},
      {"rng", st.rng.serialize()},
      {"counters",
       {{"proposals", k.proposals},
        {"accepted", k.accepted},
        {"refinements", k.refinements},
        {"poisedness_refinements", k.poisedness_refinements},
        {"random_refinements", k.random_refinements},
        {"nonfinite_rejections", k.nonfinite_rejections}}},
      {"proposal",
       {{"count", c.proposal.count},
        {"mean", c.proposal.mean},
        {"m2", c.proposal.m2},
        {"chol", c.proposal.chol}}},
      {"bootstrap_size", c.bootstrap_size},
      {"model_evaluations", c.model_evaluations},
      {"store", to_json(c.store)},
  };
  const std::string payload = j.dump();
  char head[64];
  std::snprintf(head, sizeof head, "crc32 %08x bytes %zu\n", crc32(payload), payload.size());
  return "lamcmc-checkpoint " + std::to_string(kCheckpointVersion) + "\n" + head + payload;
}

inline ChainCheckpoint decode_checkpoint(const std::string& text) {
  const auto nl1 = text.find('\n');
  if (nl1 == std::string::npos) throw CheckpointError("checkpoint is truncated (no header)");
  {
    std::istringstream in(text.substr(0, nl1));
    std::string tag;
    int version = 0;
    if (!(in >> tag >> version) || tag != "lamcmc-checkpoint") throw CheckpointError("not a checkpoint file");
    if (version != kCheckpointVersion)
      throw CheckpointError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                            std::to_string(kCheckpointVersion) + ")");
  }
  const auto nl2 = text.find('\n', nl1 + 1);
  if (nl2 == std::string::npos) throw CheckpointError("checkpoint is truncated (no checksum line)");
  std::uint32_t crc = 0;
  std::size_t bytes = 0;
  {
    std::istringstream in(text.substr(nl1 + 1, nl2 - nl1 - 1));
    std::string tag, btag;
    if (!(in >> tag >> std::hex >> crc >> btag >> std::dec >> bytes) || tag != "crc32" || btag != "bytes")
      throw CheckpointError("checkpoint checksum line is malformed");
  }
  const std::string payload = text.substr(nl2 + 1);
  if (payload.size() != bytes)
    throw CheckpointError("checkpoint checksum failure: payload has " + std::to_string(payload.size()) +
                          " bytes, expected " + std::to_string(bytes) + " (truncated)");
  if (crc32(payload) != crc) throw CheckpointError("checkpoint checksum failure: crc32 mismatch");

  ChainCheckpoint c;
  try {
    const auto j = nlohmann::json::parse(payload);
    c.chain = j.at("chain").get<std::uint64_t>();
    c.mode = j.at("mode").get<std::string>() == "exact" ? Mode::Exact : Mode::LocalApproximation;
    c.config_hash = j.at("config_hash").get<std::string>();
    c.state.t = j.at("t").get<std::uint64_t>();
    c.state.x = j.at("x").get<std::vector<double>>();
    c.state.log_target_x = j.at("log_target_x").get<double>();
    c.state.level = j.at("level").get<std::uint64_t>();
    c.state.rng = Rng::deserialize(j.at("rng").get<std::string>());
    const auto& k = j.at("counters");
    c.state.counters.proposals = k.at("proposals").get<std::uint64_t>();
    c.state.counters.accepted = k.at("accepted").get<std::uint64_t>();
    c.state.counters.refinements = k.at("refinements").get<std::uint64_t>();
    c.state.counters.poisedness_refinements = k.at("poisedness_refinements").get<std::uint64_t>();
    c.state.counters.random_refinements = k.at("random_refinements").get<std::uint64_t>();
    c.state.counters.nonfinite_rejections = k.at("nonfinite_rejections").get<std::uint64_t>();
    const auto& p = j.at("proposal");
    c.proposal.count = p.at("count").get<std::uint64_t>();
    c.proposal.mean = p.at("mean").get<std::vector<double>>();
    c.proposal.m2 = p.at("m2").get<std::vector<double>>();
    c.proposal.chol = p.at("chol").get<std::vector<double>>();
    c.bootstrap_size = j.at("bootstrap_size").get<std::uint64_t>();
    c.model_evaluations = j.at("model_evaluations").get<std::uint64_t>();
    c.store = evaluated_set_from_json(j.at("store"));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint payload is malformed: ") + e.what());
  }
  if (c.state.x.size() != c.store.dim()) throw CheckpointError("checkpoint state dimension mismatch");
  return c;
}

/// Writes to `path` via a temporary file and rename.
inline void save_checkpoint(const std::filesystem::path& path, const ChainCheckpoint& c) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << encode_checkpoint(c);
    out.flush();
    if (!out) throw CheckpointError("cannot write checkpoint '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline ChainCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

/// Snapshot of a chain between steps.
inline ChainCheckpoint checkpoint_of(Chain& chain, std::uint64_t index, std::string config_hash) {
  ChainCheckpoint c;
  c.chain = index;
  c.mode = chain.mode();
  c.config_hash = std::move(config_hash);
  c.state = chain.state();
  c.proposal = chain.proposal().state();
  c.store = chain.store();
  c.bootstrap_size = chain.bootstrap_size();
  c.model_evaluations = chain.model().evaluations();
  return c;
}

/// Rebuilds a chain from a checkpoint; the model's evaluation counter is
/// restored too.
inline Chain restore_chain(ChainCheckpoint c, const KernelConfig& config, TargetModel& model,
                           const ProposalSpec& spec) {
  if (c.store.dim() != model.dim()) throw CheckpointError("checkpoint dimension does not match the model");
  Proposal proposal(spec, model.dim());
  proposal.restore(c.proposal);
  model.set_evaluations(c.model_evaluations);
  return Chain(c.mode, config, model, std::move(proposal), std::move(c.state), std::move(c.store),
               c.bootstrap_size);
}

}  // namespace lamcmc

#endif  // LAMCMC_CHECKPOINT_HPP
