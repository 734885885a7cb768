#pragma once

#include <array>
#include <span>
#include <vector>

#include "pc3d/common.hpp"
#include "pc3d/env/roster_env.hpp"

namespace pc3d::env {

// Cooperative level-based foraging on a square grid.
// Actions: 0 no-op, 1 up (row-1), 2 down (row+1), 3 left (col-1), 4 right (col+1), 5 load.
namespace lbf {

inline constexpr int kActionCount = 6;
inline constexpr int kLoad = 5;
inline constexpr int kFoodSlots = 3;
inline constexpr int kMateSlots = 3;
// own cell(2) own level(1) foods 3x(offset 2, level 1, flag 1) teammates 3x(offset 2, level 1, flag 1)
inline constexpr int kObsWidth = 3 + 4 * kFoodSlots + 4 * kMateSlots;
inline constexpr int kMaxAgentLevel = 3;

using Cell = std::array<int, 2>;  // (row, col)

struct Params {
  int grid_size = 10;
  int sight = 2;
  int horizon = 50;

  static Params from(const EnvTemplateSpec& spec);
};

struct State {
  int grid_size = 10;
  std::vector<Cell> agent_cells;
  std::vector<int> agent_levels;
  std::vector<Cell> food_cells;
  std::vector<int> food_levels;
  std::vector<bool> collected;
  int total_initial_food_level = 0;
  int step_count = 0;

  int agents() const { return static_cast<int>(agent_cells.size()); }
  int foods() const { return static_cast<int>(food_cells.size()); }
  bool all_collected() const;
};

// Food count tied to roster size: {2,3} -> 2, {4,5,6} -> 3, {7,8} -> 4.
int food_count_for(int roster_size);

// Largest food level that the three strongest agents can still load together.
int food_level_cap(const std::vector<int>& agent_levels);

State initial_state(int roster_size, const Params& params, Rng& rng);

// Movement with collision blocking, then loading. Returns done when every food item is
// collected or the horizon is reached; an already cleared board is terminal with reward 0.
StepResult step(State& state, std::span<const int> actions, const Params& params);

std::vector<double> local_obs(const State& state, int agent, int sight = 2);
Observations all_obs(const State& state, int sight = 2);

// True iff no two entities (agents, uncollected food) share a cell.
bool occupancy_is_exclusive(const State& state);

}  // namespace lbf

EnvTemplateSpec lbf_template(const TaskParams& overrides = {});

class LbfEnv final : public RosterEnv {
 public:
  LbfEnv(EnvTemplateSpec spec, int roster_size, std::uint64_t seed);

  const EnvTemplateSpec& spec() const override { return spec_; }
  int roster_size() const override { return roster_size_; }
  Observations reset() override;
  StepResult step(std::span<const int> actions) override;

  const lbf::State& state() const { return state_; }

 private:
  EnvTemplateSpec spec_;
  lbf::Params params_;
  int roster_size_;
  Rng rng_;
  lbf::State state_;
  bool active_ = false;
};

}  // namespace pc3d::env
