#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>

#include "pc3d/harness/config.hpp"

namespace pc3d::harness {

// <root>/<config name>/<method>[_<ablation>]/seed_<seed>
std::filesystem::path run_directory(const std::filesystem::path& root, const RunConfig& config, std::uint64_t seed);
std::string cell_label(const RunConfig& config);

// Output root: $PC3D_OUTPUT_ROOT if set, else `fallback`.
std::filesystem::path output_root(const std::filesystem::path& fallback = "runs");

struct TrainOptions {
  bool resume = true;
  // Stop (as if interrupted) once this many learner updates have been applied; -1 runs to the end.
  long stop_after_updates = -1;
  std::function<void(const std::string&)> log;
};

struct TrainResult {
  std::filesystem::path run_dir;
  long episodes = 0;
  long updates = 0;
  bool resumed = false;
  bool completed = false;
};

// Curriculum training for one seed. Layout under run_dir:
//   config.json, run.json, metrics.jsonl (one record per update), train_returns.jsonl,
//   checkpoints/{initial,latest,final,update_<k>}.ckpt
// With resume, continues from checkpoints/latest.ckpt when its fingerprint matches the
// config (ConfigError otherwise); logs are cut back to the checkpointed position.
TrainResult run_training(const RunConfig& config, std::uint64_t seed, const std::filesystem::path& run_dir,
                         const TrainOptions& options = {});

}  // namespace pc3d::harness
