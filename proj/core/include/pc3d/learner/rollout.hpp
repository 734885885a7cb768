#pragma once

#include <torch/torch.h>

#include <functional>
#include <vector>

#include "pc3d/common.hpp"
#include "pc3d/env/roster_env.hpp"
#include "pc3d/policy/actor.hpp"

namespace pc3d::learner {

// One recorded episode of a fixed roster. Step t holds the observation the agents acted
// on, the chosen actions with their behavior log-probabilities, and the shared reward.
struct Episode {
  int agents = 0;
  int steps = 0;
  torch::Tensor obs;        // [T, n, obs_width]
  torch::Tensor actions;    // [T, n] int64
  torch::Tensor log_probs;  // [T, n]
  std::vector<double> rewards;
  std::vector<std::uint8_t> dones;

  double team_return() const;
  std::int64_t decision_pairs() const { return static_cast<std::int64_t>(agents) * steps; }
};

// Episodes collected since the last learner update, all under the same parameters.
using RolloutBatch = std::vector<Episode>;

enum class ActionSelection { kSample, kGreedy };

// Called after every decision with the observations [n, W] and the actor heads.
using StepObserver = std::function<void(const torch::Tensor& obs, const policy::ActorOutput& heads)>;

struct CollectOptions {
  ActionSelection selection = ActionSelection::kSample;
  bool bypass_conditioning = false;
  StepObserver observer;
};

// Runs one episode from env.reset() until done. Decisions read only each agent's own
// observation and recurrent state.
Episode collect_episode(policy::ActorImpl& actor, env::RosterEnv& env, Rng& rng, const CollectOptions& options = {});

}  // namespace pc3d::learner
