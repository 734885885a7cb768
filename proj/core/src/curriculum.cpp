#include "pc3d/curriculum.hpp"

#include <cmath>
#include <numeric>

namespace pc3d::curriculum {

void CurriculumStage::validate() const {
  if (roster_counts.empty()) throw ConfigError("curriculum stage has no roster counts");
  if (roster_counts.size() != probabilities.size()) {
    throw ConfigError("curriculum stage: roster_counts and probabilities differ in length");
  }
  for (double p : probabilities) {
    if (p < 0.0) throw ConfigError("curriculum stage: negative probability");
  }
  const double total = std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("curriculum stage: probabilities sum to " + std::to_string(total));
  if (!(episode_fraction > 0.0 && episode_fraction <= 1.0)) {
    throw ConfigError("curriculum stage: episode_fraction must lie in (0, 1]");
  }
}

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "unknown";
}

void RosterSplit::validate() const {
  for (int c : train) {
    if (validation.contains(c) || test.contains(c)) throw ConfigError("roster splits overlap at " + std::to_string(c));
  }
  for (int c : validation) {
    if (test.contains(c)) throw ConfigError("roster splits overlap at " + std::to_string(c));
  }
}

const std::set<int>& RosterSplit::counts(Split split) const {
  switch (split) {
    case Split::kTrain: return train;
    case Split::kValidation: return validation;
    default: return test;
  }
}

std::set<int> RosterSplit::all() const {
  std::set<int> out = train;
  out.insert(validation.begin(), validation.end());
  out.insert(test.begin(), test.end());
  return out;
}

int stage_index_for_episode(long episode_index, long total_episodes, const std::vector<CurriculumStage>& stages) {
  if (stages.empty()) throw ConfigError("curriculum has no stages");
  if (total_episodes <= 0) throw ConfigError("total_episodes must be positive");
  double total = 0.0;
  for (const auto& s : stages) total += s.episode_fraction;
  if (std::abs(total - 1.0) > 1e-6) throw ConfigError("curriculum episode fractions sum to " + std::to_string(total));

  // The slack absorbs rounding in the cumulative sum so exact boundaries go to the later stage.
  const double position = static_cast<double>(episode_index) / static_cast<double>(total_episodes);
  double cumulative = 0.0;
  for (std::size_t k = 0; k + 1 < stages.size(); ++k) {
    cumulative += stages[k].episode_fraction;
    if (position < cumulative - 1e-12) {
      return static_cast<int>(k);
    }
  }
  return static_cast<int>(stages.size()) - 1;
}

const CurriculumStage& stage_for_episode(long episode_index, long total_episodes,
                                         const std::vector<CurriculumStage>& stages) {
  return stages[stage_index_for_episode(episode_index, total_episodes, stages)];
}

int sample_roster(const CurriculumStage& stage, Rng& rng) {
  const double u = uniform01(rng);
  double cumulative = 0.0;
  for (std::size_t i = 0; i < stage.roster_counts.size(); ++i) {
    cumulative += stage.probabilities[i];
    if (u < cumulative) return stage.roster_counts[i];
  }
  return stage.roster_counts.back();
}

Split split_membership(int count, const RosterSplit& split) {
  if (split.train.contains(count)) return Split::kTrain;
  if (split.validation.contains(count)) return Split::kValidation;
  if (split.test.contains(count)) return Split::kTest;
  throw ConfigError("roster count " + std::to_string(count) + " belongs to no split");
}

CurriculumPreset preset(const std::string& name) {
  CurriculumPreset p;
  p.name = name;
  if (name == "spread-paper") {
    p.stages = {{{1, 2}, {0.40, 0.60}, 0.133},
                {{1, 2, 4}, {0.18, 0.27, 0.55}, 0.167},
                {{1, 2, 4, 6}, {0.10, 0.15, 0.30, 0.45}, 0.200},
                {{1, 2, 4, 6, 8}, {0.06, 0.09, 0.18, 0.27, 0.40}, 0.500}};
    p.split = {{1, 2, 4, 6, 8}, {3, 5, 7}, {9, 10}};
  } else if (name == "lbf-paper") {
    p.stages = {{{2}, {1.00}, 0.20},
                {{2, 4}, {0.35, 0.65}, 0.25},
                {{2, 4, 6}, {0.15, 0.25, 0.60}, 0.25},
                {{2, 4, 6}, {0.10, 0.20, 0.70}, 0.30}};
    p.split = {{2, 4, 6}, {3, 5}, {7, 8}};
  } else if (name == "rware-paper") {
    p.stages = {{{2, 4}, {0.65, 0.35}, 0.20},
                {{2, 4, 6}, {0.30, 0.20, 0.50}, 0.25},
                {{2, 4, 6, 8}, {0.10, 0.15, 0.25, 0.50}, 0.25},
                {{2, 4, 6, 8}, {0.05, 0.10, 0.20, 0.65}, 0.30}};
    p.split = {{2, 4, 6, 8}, {3, 5, 7}, {9, 10}};
  } else if (name == "spread-desk") {
    // Reduced Spread study: train on {1,2,3}, hold out 4.
    p.stages = {{{1, 2}, {0.40, 0.60}, 0.30}, {{1, 2, 3}, {0.20, 0.30, 0.50}, 0.70}};
    p.split = {{1, 2, 3}, {}, {4}};
  } else if (name == "smoke") {
    p.stages = {{{1, 2}, {0.50, 0.50}, 1.0}};
    p.split = {{1, 2}, {}, {3}};
  } else {
    throw ConfigError("unknown curriculum preset '" + name + "'");
  }
  for (const auto& s : p.stages) s.validate();
  p.split.validate();
  return p;
}

std::vector<std::string> preset_names() { return {"spread-paper", "lbf-paper", "rware-paper", "spread-desk", "smoke"}; }

double chi_square_statistic(const std::vector<long>& observed, const std::vector<double>& probabilities) {
  const double n = static_cast<double>(std::accumulate(observed.begin(), observed.end(), 0L));
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double expected = n * probabilities[i];
    const double diff = static_cast<double>(observed[i]) - expected;
    stat += diff * diff / expected;
  }
  return stat;
}

}  // namespace pc3d::curriculum
