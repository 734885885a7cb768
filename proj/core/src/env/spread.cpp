#include "pc3d/env/spread.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace pc3d::env {
namespace spread {
namespace {

double distance(const Vec2& a, const Vec2& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

// Indices of the k entities closest to `origin`, nearest first, ties to the lower index.
std::vector<int> nearest(const Vec2& origin, const std::vector<Vec2>& points, int k, int exclude) {
  std::vector<int> order;
  order.reserve(points.size());
  for (int j = 0; j < static_cast<int>(points.size()); ++j) {
    if (j != exclude) order.push_back(j);
  }
  std::vector<double> dist(points.size());
  for (int j : order) dist[j] = distance(origin, points[j]);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return dist[a] < dist[b]; });
  if (static_cast<int>(order.size()) > k) order.resize(k);
  return order;
}

}  // namespace

Params Params::from(const EnvTemplateSpec& spec) {
  Params p;
  p.dt = spec.param("dt", p.dt);
  p.damping = spec.param("damping", p.damping);
  p.force = spec.param("force", p.force);
  p.agent_radius = spec.param("agent_radius", p.agent_radius);
  p.arena_half_width = spec.param("arena_half_width", p.arena_half_width);
  p.horizon = static_cast<int>(spec.param("horizon", p.horizon));
  p.collision_penalty = spec.param("collision_penalty", p.collision_penalty);
  return p;
}

State initial_state(int roster_size, const Params& params, Rng& rng) {
  State s;
  auto draw = [&] {
    double x = (2.0 * uniform01(rng) - 1.0) * params.arena_half_width;
    double y = (2.0 * uniform01(rng) - 1.0) * params.arena_half_width;
    return Vec2{x, y};
  };
  for (int i = 0; i < roster_size; ++i) s.positions.push_back(draw());
  for (int i = 0; i < roster_size; ++i) s.landmarks.push_back(draw());
  s.velocities.assign(roster_size, Vec2{0.0, 0.0});
  return s;
}

int colliding_pairs(const State& state, const Params& params) {
  int pairs = 0;
  const double limit = 2.0 * params.agent_radius;
  for (int i = 0; i < state.agents(); ++i) {
    for (int j = i + 1; j < state.agents(); ++j) {
      if (distance(state.positions[i], state.positions[j]) < limit) ++pairs;
    }
  }
  return pairs;
}

double team_reward(const State& state, const Params& params) {
  double coverage = 0.0;
  for (const auto& landmark : state.landmarks) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : state.positions) best = std::min(best, distance(landmark, p));
    coverage += best;
  }
  return -coverage - params.collision_penalty * colliding_pairs(state, params);
}

StepResult step(State& state, std::span<const int> actions, const Params& params) {
  check_actions(actions, state.agents(), kActionCount);
  for (int i = 0; i < state.agents(); ++i) {
    Vec2 force{0.0, 0.0};
    switch (actions[i]) {
      case 1: force[0] = params.force; break;
      case 2: force[0] = -params.force; break;
      case 3: force[1] = params.force; break;
      case 4: force[1] = -params.force; break;
      default: break;
    }
    auto& v = state.velocities[i];
    auto& p = state.positions[i];
    for (int a = 0; a < 2; ++a) {
      v[a] = v[a] * (1.0 - params.damping) + force[a] * params.dt;
      p[a] += v[a] * params.dt;
    }
  }
  ++state.step_count;

  StepResult result;
  result.team_reward = team_reward(state, params);
  result.done = state.step_count >= params.horizon;
  result.observations = all_obs(state);
  result.info["collisions"] = colliding_pairs(state, params);
  return result;
}

std::vector<double> local_obs(const State& state, int agent) {
  if (agent < 0 || agent >= state.agents()) throw std::out_of_range("spread: agent index out of range");
  std::vector<double> obs(kObsWidth, 0.0);
  const Vec2& own = state.positions[agent];
  obs[0] = state.velocities[agent][0];
  obs[1] = state.velocities[agent][1];
  obs[2] = own[0];
  obs[3] = own[1];

  constexpr int kLandmarkBase = 4;
  constexpr int kTeammateBase = kLandmarkBase + 2 * kNearestLandmarks;
  constexpr int kFlagBase = kTeammateBase + 2 * kNearestTeammates;

  auto landmarks = nearest(own, state.landmarks, kNearestLandmarks, -1);
  for (int slot = 0; slot < static_cast<int>(landmarks.size()); ++slot) {
    const Vec2& l = state.landmarks[landmarks[slot]];
    obs[kLandmarkBase + 2 * slot] = l[0] - own[0];
    obs[kLandmarkBase + 2 * slot + 1] = l[1] - own[1];
    obs[kFlagBase + slot] = 1.0;
  }
  auto mates = nearest(own, state.positions, kNearestTeammates, agent);
  for (int slot = 0; slot < static_cast<int>(mates.size()); ++slot) {
    const Vec2& m = state.positions[mates[slot]];
    obs[kTeammateBase + 2 * slot] = m[0] - own[0];
    obs[kTeammateBase + 2 * slot + 1] = m[1] - own[1];
    obs[kFlagBase + kNearestLandmarks + slot] = 1.0;
  }
  return obs;
}

Observations all_obs(const State& state) {
  Observations out(state.agents(), kObsWidth);
  for (int i = 0; i < state.agents(); ++i) {
    auto obs = local_obs(state, i);
    std::copy(obs.begin(), obs.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace spread

EnvTemplateSpec spread_template(const TaskParams& overrides) {
  EnvTemplateSpec spec;
  spec.name = "spread";
  spec.action_count = spread::kActionCount;
  spec.obs_width = spread::kObsWidth;
  spec.discount = 0.985;
  spec.task_params = {{"dt", 0.1},           {"damping", 0.25}, {"force", 1.0},
                      {"agent_radius", 0.15}, {"arena_half_width", 1.0}, {"horizon", 25},
                      {"collision_penalty", 1.0}, {"max_roster", 10}};
  for (const auto& [k, v] : overrides) spec.task_params[k] = v;
  const int max_roster = static_cast<int>(spec.task_params.at("max_roster"));
  for (int n = 1; n <= max_roster; ++n) spec.admissible_rosters.insert(n);
  return spec;
}

SpreadEnv::SpreadEnv(EnvTemplateSpec spec, int roster_size, std::uint64_t seed)
    : spec_(std::move(spec)), params_(spread::Params::from(spec_)), roster_size_(roster_size), rng_(seed) {}

Observations SpreadEnv::reset() {
  state_ = spread::initial_state(roster_size_, params_, rng_);
  active_ = true;
  return spread::all_obs(state_);
}

StepResult SpreadEnv::step(std::span<const int> actions) {
  if (!active_) throw std::logic_error("spread: step() without an active episode");
  auto result = spread::step(state_, actions, params_);
  if (result.done) active_ = false;
  return result;
}

}  // namespace pc3d::env
