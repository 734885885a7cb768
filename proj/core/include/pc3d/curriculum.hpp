#pragma once

#include <set>
#include <string>
#include <vector>

#include "pc3d/common.hpp"

namespace pc3d::curriculum {

// One training phase: a fixed roster-size distribution active for a fraction of the episodes.
struct CurriculumStage {
  std::vector<int> roster_counts;
  std::vector<double> probabilities;
  double episode_fraction = 1.0;

  // Throws ConfigError unless lists match in length and probabilities sum to 1 (+-1e-9).
  void validate() const;
};

enum class Split { kTrain, kValidation, kTest };

std::string to_string(Split split);

struct RosterSplit {
  std::set<int> train;
  std::set<int> validation;
  std::set<int> test;

  // Throws ConfigError if any two sets intersect.
  void validate() const;
  const std::set<int>& counts(Split split) const;
  std::set<int> all() const;
};

// Stage whose cumulative fraction interval contains episode_index / total_episodes.
// An index on a boundary belongs to the later stage.
const CurriculumStage& stage_for_episode(long episode_index, long total_episodes,
                                         const std::vector<CurriculumStage>& stages);
int stage_index_for_episode(long episode_index, long total_episodes, const std::vector<CurriculumStage>& stages);

int sample_roster(const CurriculumStage& stage, Rng& rng);

// Throws ConfigError when the count is in no split.
Split split_membership(int count, const RosterSplit& split);

// Curriculum plus splits for one task.
struct CurriculumPreset {
  std::string name;
  std::vector<CurriculumStage> stages;
  RosterSplit split;
};

// "spread-paper", "lbf-paper", "rware-paper", "spread-desk", "smoke".
CurriculumPreset preset(const std::string& name);
std::vector<std::string> preset_names();

// Pearson chi-square statistic of observed counts against the stage probabilities.
double chi_square_statistic(const std::vector<long>& observed, const std::vector<double>& probabilities);

}  // namespace pc3d::curriculum
