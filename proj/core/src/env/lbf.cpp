#include "pc3d/env/lbf.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>

namespace pc3d::env {
namespace lbf {
namespace {

int chebyshev(const Cell& a, const Cell& b) { return std::max(std::abs(a[0] - b[0]), std::abs(a[1] - b[1])); }

bool adjacent4(const Cell& a, const Cell& b) { return std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]) == 1; }

Cell moved(const Cell& c, int action) {
  switch (action) {
    case 1: return {c[0] - 1, c[1]};
    case 2: return {c[0] + 1, c[1]};
    case 3: return {c[0], c[1] - 1};
    case 4: return {c[0], c[1] + 1};
    default: return c;
  }
}

// Indices of visible entities ordered by Chebyshev distance, ties to the lower index.
std::vector<int> visible(const Cell& origin, const std::vector<Cell>& cells, int sight, int limit,
                         const std::function<bool(int)>& include) {
  std::vector<int> out;
  for (int j = 0; j < static_cast<int>(cells.size()); ++j) {
    if (include(j) && chebyshev(origin, cells[j]) <= sight) out.push_back(j);
  }
  std::stable_sort(out.begin(), out.end(),
                   [&](int a, int b) { return chebyshev(origin, cells[a]) < chebyshev(origin, cells[b]); });
  if (static_cast<int>(out.size()) > limit) out.resize(limit);
  return out;
}

}  // namespace

Params Params::from(const EnvTemplateSpec& spec) {
  Params p;
  p.grid_size = static_cast<int>(spec.param("grid_size", p.grid_size));
  p.sight = static_cast<int>(spec.param("sight", p.sight));
  p.horizon = static_cast<int>(spec.param("horizon", p.horizon));
  return p;
}

bool State::all_collected() const {
  return std::all_of(collected.begin(), collected.end(), [](bool c) { return c; });
}

int food_count_for(int roster_size) {
  if (roster_size <= 3) return 2;
  if (roster_size <= 6) return 3;
  return 4;
}

int food_level_cap(const std::vector<int>& agent_levels) {
  std::vector<int> sorted = agent_levels;
  std::sort(sorted.rbegin(), sorted.rend());
  int cap = 0;
  for (int i = 0; i < std::min<int>(3, static_cast<int>(sorted.size())); ++i) cap += sorted[i];
  return cap;
}

State initial_state(int roster_size, const Params& params, Rng& rng) {
  State s;
  s.grid_size = params.grid_size;
  const int g = params.grid_size;
  for (int i = 0; i < roster_size; ++i) s.agent_levels.push_back(1 + uniform_index(rng, kMaxAgentLevel));
  const int cap = food_level_cap(s.agent_levels);

  // Food sits off the border and never next to another food item, so every item keeps
  // free loading cells around it.
  const int foods = food_count_for(roster_size);
  while (static_cast<int>(s.food_cells.size()) < foods) {
    Cell c{1 + uniform_index(rng, g - 2), 1 + uniform_index(rng, g - 2)};
    bool clear = std::none_of(s.food_cells.begin(), s.food_cells.end(),
                              [&](const Cell& other) { return chebyshev(c, other) <= 1; });
    if (!clear) continue;
    s.food_cells.push_back(c);
    s.food_levels.push_back(1 + uniform_index(rng, cap));
  }
  std::set<Cell> taken(s.food_cells.begin(), s.food_cells.end());
  while (static_cast<int>(s.agent_cells.size()) < roster_size) {
    Cell c{uniform_index(rng, g), uniform_index(rng, g)};
    if (taken.insert(c).second) s.agent_cells.push_back(c);
  }
  s.collected.assign(foods, false);
  for (int level : s.food_levels) s.total_initial_food_level += level;
  return s;
}

bool occupancy_is_exclusive(const State& state) {
  std::set<Cell> seen;
  for (const auto& c : state.agent_cells) {
    if (!seen.insert(c).second) return false;
  }
  for (int f = 0; f < state.foods(); ++f) {
    if (!state.collected[f] && !seen.insert(state.food_cells[f]).second) return false;
  }
  return true;
}

StepResult step(State& state, std::span<const int> actions, const Params& params) {
  check_actions(actions, state.agents(), kActionCount);
  StepResult result;
  if (state.all_collected()) {
    result.done = true;
    result.observations = all_obs(state, params.sight);
    return result;
  }

  const int g = state.grid_size;
  std::set<Cell> occupied(state.agent_cells.begin(), state.agent_cells.end());
  for (int f = 0; f < state.foods(); ++f) {
    if (!state.collected[f]) occupied.insert(state.food_cells[f]);
  }

  // A move is valid into an in-bounds cell that is empty before the step; agents whose
  // valid moves target the same cell all stay.
  std::vector<Cell> targets = state.agent_cells;
  for (int i = 0; i < state.agents(); ++i) {
    Cell t = moved(state.agent_cells[i], actions[i]);
    bool in_bounds = t[0] >= 0 && t[0] < g && t[1] >= 0 && t[1] < g;
    if (t != state.agent_cells[i] && in_bounds && !occupied.contains(t)) targets[i] = t;
  }
  std::map<Cell, int> claims;
  for (const auto& t : targets) ++claims[t];
  int blocked = 0;
  for (int i = 0; i < state.agents(); ++i) {
    if (claims[targets[i]] > 1) {
      ++blocked;
    } else {
      state.agent_cells[i] = targets[i];
    }
  }

  int collected_now = 0;
  for (int f = 0; f < state.foods(); ++f) {
    if (state.collected[f]) continue;
    int loading_level = 0;
    for (int i = 0; i < state.agents(); ++i) {
      if (actions[i] == kLoad && adjacent4(state.agent_cells[i], state.food_cells[f])) {
        loading_level += state.agent_levels[i];
      }
    }
    if (loading_level > 0 && loading_level >= state.food_levels[f]) {
      state.collected[f] = true;
      ++collected_now;
      result.team_reward += static_cast<double>(state.food_levels[f]) / state.total_initial_food_level;
    }
  }
  ++state.step_count;
  result.done = state.all_collected() || state.step_count >= params.horizon;
  result.observations = all_obs(state, params.sight);
  result.info["collected"] = collected_now;
  result.info["blocked_moves"] = blocked;
  return result;
}

std::vector<double> local_obs(const State& state, int agent, int sight) {
  if (agent < 0 || agent >= state.agents()) throw std::out_of_range("lbf: agent index out of range");
  std::vector<double> obs(kObsWidth, 0.0);
  const Cell& own = state.agent_cells[agent];
  const double span = std::max(1, state.grid_size - 1);
  const double max_food_level = 3.0 * kMaxAgentLevel;
  obs[0] = own[0] / span;
  obs[1] = own[1] / span;
  obs[2] = static_cast<double>(state.agent_levels[agent]) / kMaxAgentLevel;

  int base = 3;
  auto foods = visible(own, state.food_cells, sight, kFoodSlots, [&](int f) { return !state.collected[f]; });
  for (int slot = 0; slot < static_cast<int>(foods.size()); ++slot) {
    const Cell& c = state.food_cells[foods[slot]];
    double* o = obs.data() + base + 4 * slot;
    o[0] = static_cast<double>(c[0] - own[0]) / sight;
    o[1] = static_cast<double>(c[1] - own[1]) / sight;
    o[2] = state.food_levels[foods[slot]] / max_food_level;
    o[3] = 1.0;
  }
  base += 4 * kFoodSlots;
  auto mates = visible(own, state.agent_cells, sight, kMateSlots, [&](int j) { return j != agent; });
  for (int slot = 0; slot < static_cast<int>(mates.size()); ++slot) {
    const Cell& c = state.agent_cells[mates[slot]];
    double* o = obs.data() + base + 4 * slot;
    o[0] = static_cast<double>(c[0] - own[0]) / sight;
    o[1] = static_cast<double>(c[1] - own[1]) / sight;
    o[2] = static_cast<double>(state.agent_levels[mates[slot]]) / kMaxAgentLevel;
    o[3] = 1.0;
  }
  return obs;
}

Observations all_obs(const State& state, int sight) {
  Observations out(state.agents(), kObsWidth);
  for (int i = 0; i < state.agents(); ++i) {
    auto obs = local_obs(state, i, sight);
    std::copy(obs.begin(), obs.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace lbf

EnvTemplateSpec lbf_template(const TaskParams& overrides) {
  EnvTemplateSpec spec;
  spec.name = "lbf";
  spec.action_count = lbf::kActionCount;
  spec.obs_width = lbf::kObsWidth;
  spec.discount = 0.985;
  spec.task_params = {{"grid_size", 10}, {"sight", 2}, {"horizon", 50}, {"min_roster", 2}, {"max_roster", 8}};
  for (const auto& [k, v] : overrides) spec.task_params[k] = v;
  const int lo = static_cast<int>(spec.task_params.at("min_roster"));
  const int hi = static_cast<int>(spec.task_params.at("max_roster"));
  for (int n = lo; n <= hi; ++n) spec.admissible_rosters.insert(n);
  return spec;
}

LbfEnv::LbfEnv(EnvTemplateSpec spec, int roster_size, std::uint64_t seed)
    : spec_(std::move(spec)), params_(lbf::Params::from(spec_)), roster_size_(roster_size), rng_(seed) {}

Observations LbfEnv::reset() {
  state_ = lbf::initial_state(roster_size_, params_, rng_);
  active_ = true;
  return lbf::all_obs(state_, params_.sight);
}

StepResult LbfEnv::step(std::span<const int> actions) {
  if (!active_) throw std::logic_error("lbf: step() without an active episode");
  auto result = lbf::step(state_, actions, params_);
  if (result.done) active_ = false;
  return result;
}

}  // namespace pc3d::env
