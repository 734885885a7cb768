#pragma once

#include <array>
#include <span>
#include <vector>

#include "pc3d/common.hpp"
#include "pc3d/env/roster_env.hpp"

namespace pc3d::env {

// Coverage task: n agents, n landmarks, discrete forces in a 2-D arena.
// Actions: 0 no-op, 1 +x, 2 -x, 3 +y, 4 -y.
namespace spread {

inline constexpr int kActionCount = 5;
inline constexpr int kNearestLandmarks = 3;
inline constexpr int kNearestTeammates = 3;
// velocity(2) position(2) landmark offsets(6) teammate offsets(6) presence flags(6)
inline constexpr int kObsWidth = 4 + 2 * kNearestLandmarks + 2 * kNearestTeammates + kNearestLandmarks + kNearestTeammates;

struct Params {
  double dt = 0.1;
  double damping = 0.25;
  double force = 1.0;
  double agent_radius = 0.15;
  double arena_half_width = 1.0;
  int horizon = 25;
  double collision_penalty = 1.0;

  static Params from(const EnvTemplateSpec& spec);
};

using Vec2 = std::array<double, 2>;

struct State {
  std::vector<Vec2> positions;
  std::vector<Vec2> velocities;
  std::vector<Vec2> landmarks;
  int step_count = 0;

  int agents() const { return static_cast<int>(positions.size()); }
};

// Uniform agent and landmark placement inside the arena, zero velocities.
State initial_state(int roster_size, const Params& params, Rng& rng);

// -sum over landmarks of the closest agent distance - penalty * colliding pairs.
double team_reward(const State& state, const Params& params);
int colliding_pairs(const State& state, const Params& params);

// Advances physics in place; the returned observations are filled.
StepResult step(State& state, std::span<const int> actions, const Params& params);

std::vector<double> local_obs(const State& state, int agent);
Observations all_obs(const State& state);

}  // namespace spread

EnvTemplateSpec spread_template(const TaskParams& overrides = {});

class SpreadEnv final : public RosterEnv {
 public:
  SpreadEnv(EnvTemplateSpec spec, int roster_size, std::uint64_t seed);

  const EnvTemplateSpec& spec() const override { return spec_; }
  int roster_size() const override { return roster_size_; }
  Observations reset() override;
  StepResult step(std::span<const int> actions) override;

  const spread::State& state() const { return state_; }

 private:
  EnvTemplateSpec spec_;
  spread::Params params_;
  int roster_size_;
  Rng rng_;
  spread::State state_;
  bool active_ = false;
};

}  // namespace pc3d::env
