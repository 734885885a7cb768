#include "pc3d/learner/rollout.hpp"

#include <numeric>

namespace pc3d::learner {

double Episode::team_return() const { return std::accumulate(rewards.begin(), rewards.end(), 0.0); }

namespace {

torch::Tensor to_tensor(const env::Observations& obs) {
  return torch::from_blob(const_cast<double*>(obs.values.data()), {obs.agents, obs.width}, torch::kFloat64).clone();
}

}  // namespace

Episode collect_episode(policy::ActorImpl& actor, env::RosterEnv& env, Rng& rng, const CollectOptions& options) {
  torch::NoGradGuard no_grad;
  Episode episode;
  episode.agents = env.roster_size();
  std::vector<torch::Tensor> obs_steps;
  std::vector<torch::Tensor> action_steps;
  std::vector<torch::Tensor> logp_steps;

  auto obs = to_tensor(env.reset());
  auto h = actor.initial_state(episode.agents);
  std::vector<int> actions(episode.agents);
  while (true) {
    h = actor.actor_step(obs, h);
    auto heads = actor.heads(h, options.bypass_conditioning);
    if (options.observer) options.observer(obs, heads);
    policy::CategoricalDistribution dist(heads.logits);
    auto chosen = options.selection == ActionSelection::kGreedy ? dist.greedy() : dist.sample(rng);
    auto logp = dist.log_prob(chosen);
    auto acc = chosen.accessor<std::int64_t, 1>();
    for (int i = 0; i < episode.agents; ++i) actions[i] = static_cast<int>(acc[i]);

    auto result = env.step(actions);
    obs_steps.push_back(obs);
    action_steps.push_back(chosen);
    logp_steps.push_back(logp);
    episode.rewards.push_back(result.team_reward);
    episode.dones.push_back(result.done);
    if (result.done) break;
    obs = to_tensor(result.observations);
  }
  episode.steps = static_cast<int>(episode.rewards.size());
  episode.obs = torch::stack(obs_steps);
  episode.actions = torch::stack(action_steps);
  episode.log_probs = torch::stack(logp_steps);
  return episode;
}

}  // namespace pc3d::learner
