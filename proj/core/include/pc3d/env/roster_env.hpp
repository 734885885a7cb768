#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace pc3d::env {

using TaskParams = std::map<std::string, double>;

// Shared structure of a family of cooperative tasks. Every roster instantiated from
// one template exposes the same action space and the same per-agent observation width.
struct EnvTemplateSpec {
  std::string name;
  int action_count = 0;
  int obs_width = 0;
  std::set<int> admissible_rosters;
  double discount = 0.99;
  TaskParams task_params;

  double param(const std::string& key, double fallback) const;
  bool admits(int roster_size) const { return admissible_rosters.contains(roster_size); }
  int max_roster() const;
};

// n local observations of equal width, row-major.
struct Observations {
  int agents = 0;
  int width = 0;
  std::vector<double> values;

  Observations() = default;
  Observations(int agents, int width) : agents(agents), width(width), values(static_cast<std::size_t>(agents) * width) {}

  std::span<const double> row(int agent) const {
    return {values.data() + static_cast<std::size_t>(agent) * width, static_cast<std::size_t>(width)};
  }
  std::span<double> row(int agent) {
    return {values.data() + static_cast<std::size_t>(agent) * width, static_cast<std::size_t>(width)};
  }
};

struct StepResult {
  Observations observations;
  double team_reward = 0.0;  // broadcast to every agent
  bool done = false;
  std::map<std::string, double> info;
};

// One roster-indexed episode generator. Instances are single-threaded and own their rng.
class RosterEnv {
 public:
  virtual ~RosterEnv() = default;

  virtual const EnvTemplateSpec& spec() const = 0;
  virtual int roster_size() const = 0;

  // Starts a new episode and returns the initial local observations.
  virtual Observations reset() = 0;

  // Consumes exactly roster_size() actions. Throws std::logic_error when called after the
  // episode ended or before reset(), std::out_of_range for an invalid action.
  virtual StepResult step(std::span<const int> actions) = 0;
};

// Template registry: "spread", "lbf", "rware-adapter". task_params override the defaults.
EnvTemplateSpec make_template(const std::string& name, const TaskParams& task_params = {});
std::vector<std::string> registered_templates();

// Throws ConfigError for an unknown template or a roster outside admissible_rosters.
std::unique_ptr<RosterEnv> make_env(const EnvTemplateSpec& spec, int roster_size, std::uint64_t seed);

// Team return divided by the active roster size (LBF reporting). Throws for roster_size < 1.
double normalized_return(double team_return, int roster_size);

// Validates an action vector against the roster size and action count.
void check_actions(std::span<const int> actions, int roster_size, int action_count);

}  // namespace pc3d::env
