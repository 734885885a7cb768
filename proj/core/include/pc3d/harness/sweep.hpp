#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pc3d/harness/diagnostics.hpp"
#include "pc3d/harness/evaluation.hpp"
#include "pc3d/harness/trainer.hpp"

namespace pc3d::harness {

// Every method with ablation "none", plus each listed ablation for pc3d. A non-empty seed
// list replaces the base seeds.
std::vector<RunConfig> plan_sweep(const json& base, const std::vector<std::string>& methods,
                                  const std::vector<std::string>& ablations, const std::vector<std::uint64_t>& seeds);

// Evaluates checkpoints/final.ckpt of a seed directory on the configured splits and writes
// eval/eval.json.
SeedEvaluation evaluate_run(const std::filesystem::path& seed_dir, std::optional<int> rollouts_per_count = std::nullopt,
                            const EvalOptions& options = {});

// Alignment diagnostics on the final checkpoint; writes diagnostics/alignment.json. An empty
// count list means every split count.
AlignmentReport diagnose_run(const std::filesystem::path& seed_dir, std::vector<int> counts = {},
                             std::optional<int> rollouts = std::nullopt);

// Aggregates eval/eval.json of every seed_<k> below cell_dir into eval_summary.json.
EvalReport summarize_cell(const std::filesystem::path& cell_dir);

bool has_teacher(const RunConfig& config);

struct PipelineOptions {
  bool evaluate = true;
  bool diagnose = true;
  bool resume = true;
  std::function<void(const std::string&)> log;
};

// Trains every seed of the config (then evaluates and diagnoses); returns the seed directories.
std::vector<std::filesystem::path> run_cell(const RunConfig& config, const std::filesystem::path& root,
                                            const PipelineOptions& options = {});

}  // namespace pc3d::harness
