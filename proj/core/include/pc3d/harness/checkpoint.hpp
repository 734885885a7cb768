#pragma once

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include <filesystem>
#include <map>
#include <string>

#include "pc3d/harness/config.hpp"
#include "pc3d/learner/learner.hpp"

namespace pc3d::harness {

// Binary archive: magic, version, config fingerprint, JSON metadata, named float64/int64
// tensors ("actor/...", "critic/...", "shadow/...") and the serialized optimizer state.
struct Checkpoint {
  std::string fingerprint;
  json meta;  // {"config", "seed", "episode", "updates", "rng": {...}}
  std::map<std::string, torch::Tensor> tensors;
  std::string optimizer_state;
};

// Writes through a temporary file and renames, so a crash never leaves a torn archive.
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
// Throws std::runtime_error on a missing, truncated, or foreign file.
Checkpoint read_checkpoint(const std::filesystem::path& path);

// Tensor map of every parameter and buffer, keyed "<prefix>/<name>".
void export_module(const torch::nn::Module& module, const std::string& prefix, std::map<std::string, torch::Tensor>& out);
// Copies "<prefix>/..." entries into the module; throws on missing names or shape mismatch.
void import_module(torch::nn::Module& module, const std::string& prefix, const std::map<std::string, torch::Tensor>& in);

Checkpoint snapshot(learner::Learner& learner, const RunConfig& config, std::uint64_t seed, json progress);
// Restores networks, optimizer state, shuffle rng and the update counter.
void restore(learner::Learner& learner, const Checkpoint& checkpoint);

// Decentralized policy from a checkpoint: only actor tensors are read.
struct LoadedPolicy {
  RunConfig config;
  std::uint64_t seed = 0;
  policy::Actor actor{nullptr};
};
LoadedPolicy load_policy(const Checkpoint& checkpoint);

// Full model set (actor, critic, shadow) for diagnostics.
struct LoadedModels {
  RunConfig config;
  std::uint64_t seed = 0;
  learner::Models models;
};
LoadedModels load_models(const Checkpoint& checkpoint);

std::string rng_state(const Rng& rng);
void set_rng_state(Rng& rng, const std::string& state);

}  // namespace pc3d::harness
