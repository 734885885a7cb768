#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pc3d/curriculum.hpp"
#include "pc3d/harness/checkpoint.hpp"

namespace pc3d::harness {

struct CountResult {
  int count = 0;
  std::string split;
  std::vector<double> returns;  // one per rollout, in reporting units
  double mean = 0.0;
};

// One seed's final checkpoint on every count of every non-empty split.
struct SeedEvaluation {
  std::uint64_t seed = 0;
  std::vector<CountResult> counts;
  std::map<std::string, double> split_means;  // mean of the per-count means
};

struct SplitSummary {
  double mean = 0.0;
  std::optional<double> std;  // sample std across seeds; empty for a single seed
  int seeds = 0;
};

struct EvalReport {
  std::string task;
  std::string method;
  std::string ablation;
  std::string policy = "greedy";
  double scale = 1.0;  // 100 for LBF (normalized return x 10^2)
  std::vector<SeedEvaluation> seeds;
  std::map<std::string, SplitSummary> splits;
  std::vector<std::string> warnings;
};

struct EvalOptions {
  // Evaluate with the policy head reading h directly, as if the modulation path were absent.
  bool bypass_conditioning = false;
};

// Reporting units: raw team return, or normalized return x 100 for LBF.
double reported_return(const std::string& task, double team_return, int roster_size);

// Greedy decentralized rollouts of a loaded actor. Environment seeds derive from
// (policy seed, count, rollout) only. Throws ConfigError for inadmissible counts.
SeedEvaluation evaluate_policy(const LoadedPolicy& policy, const curriculum::RosterSplit& split, int rollouts_per_count,
                               const EvalOptions& options = {});

// Count-mean -> split-mean -> across-seed mean and sample std. Seeds are ordered by value.
EvalReport aggregate_seeds(std::vector<SeedEvaluation> seeds, const RunConfig& config);

EvalReport evaluate_split(const std::filesystem::path& checkpoint, const curriculum::RosterSplit& split,
                          int rollouts_per_count, const EvalOptions& options = {});

// Recomputes every split mean from the stored per-rollout returns; largest absolute deviation.
double audit_report(const EvalReport& report);

json to_json(const SeedEvaluation& evaluation);
SeedEvaluation seed_evaluation_from_json(const json& node);
json to_json(const EvalReport& report);

}  // namespace pc3d::harness
