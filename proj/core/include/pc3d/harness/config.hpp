#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "pc3d/curriculum.hpp"
#include "pc3d/env/roster_env.hpp"
#include "pc3d/learner/learner.hpp"

namespace pc3d::harness {

using nlohmann::json;

// Fully resolved description of one experiment cell (task x method x ablation) over seeds.
struct RunConfig {
  std::string name;
  std::string task = "spread";  // environment template name
  env::TaskParams task_params;
  learner::Method method = learner::Method::kPc3d;
  learner::Ablation ablation = learner::Ablation::kNone;
  learner::LearnerConfig learner;
  learner::ModelConfig model;
  std::string curriculum_name;
  curriculum::CurriculumPreset curriculum;
  std::vector<std::uint64_t> seeds = {0};
  long total_episodes = 20000;
  int eval_rollouts_per_count = 100;
  int diagnostic_rollouts = 8;
  int checkpoint_every_updates = 50;

  env::EnvTemplateSpec env_spec() const;
  // Throws ConfigError on invalid method/ablation pairs, inadmissible curriculum or split
  // counts, or non-positive budgets.
  void validate() const;
};

// Training budget per task ("spread" 20000, "lbf" 12000, "rware-adapter" 20000).
long default_total_episodes(const std::string& task);

// Final hyperparameters for (task, method); hyper-pc3d shares the PC3D column.
std::pair<learner::LearnerConfig, learner::ModelConfig> final_hyperparameters(const std::string& task,
                                                                              learner::Method method);

// Built-in presets: spread-paper, lbf-paper, rware-paper, spread-desk, smoke.
std::vector<std::string> run_preset_names();
json run_preset(const std::string& name);

// Expands "inherits" chains (user file over preset) with a recursive object merge.
json resolve_inheritance(const json& document);

// Builds the config from a document: task defaults, then the hyperparameter table for
// (task, method), then "learner"/"model" overrides, then the ablation switch.
RunConfig config_from_json(const json& document);
RunConfig load_config(const std::string& path);

// Canonical, fully expanded form. config_from_json(to_json(c)) reproduces c.
json to_json(const RunConfig& config);

// Stable hash of the canonical config without the seed list; guards resume.
std::string fingerprint(const RunConfig& config);

}  // namespace pc3d::harness
