#include <algorithm>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>

#include "pc3d/common.hpp"
#include "pc3d/env/external.hpp"
#include "pc3d/env/lbf.hpp"
#include "pc3d/env/roster_env.hpp"
#include "pc3d/env/spread.hpp"

namespace pc3d::env {
namespace {

std::mutex& backend_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, BackendFactory>& backends() {
  static std::map<std::string, BackendFactory> b;
  return b;
}

}  // namespace

double EnvTemplateSpec::param(const std::string& key, double fallback) const {
  auto it = task_params.find(key);
  return it == task_params.end() ? fallback : it->second;
}

int EnvTemplateSpec::max_roster() const {
  return admissible_rosters.empty() ? 0 : *admissible_rosters.rbegin();
}

void check_actions(std::span<const int> actions, int roster_size, int action_count) {
  if (static_cast<int>(actions.size()) != roster_size) {
    throw std::invalid_argument("expected " + std::to_string(roster_size) + " actions, got " +
                                std::to_string(actions.size()));
  }
  for (int a : actions) {
    if (a < 0 || a >= action_count) throw std::out_of_range("action " + std::to_string(a) + " out of range");
  }
}

double normalized_return(double team_return, int roster_size) {
  if (roster_size < 1) throw std::invalid_argument("normalized_return: roster size must be >= 1");
  return team_return / roster_size;
}

EnvTemplateSpec rware_adapter_template(const TaskParams& overrides) {
  EnvTemplateSpec spec;
  spec.name = "rware-adapter";
  spec.action_count = 5;
  spec.discount = 0.99;
  spec.task_params = {{"obs_width", 71}, {"max_roster", 10}, {"rows", 10}, {"columns", 20}};
  for (const auto& [k, v] : overrides) spec.task_params[k] = v;
  spec.obs_width = static_cast<int>(spec.task_params.at("obs_width"));
  const int max_roster = static_cast<int>(spec.task_params.at("max_roster"));
  for (int n = 1; n <= max_roster; ++n) spec.admissible_rosters.insert(n);
  return spec;
}

EnvTemplateSpec make_template(const std::string& name, const TaskParams& task_params) {
  if (name == "spread") return spread_template(task_params);
  if (name == "lbf") return lbf_template(task_params);
  if (name == "rware-adapter") return rware_adapter_template(task_params);
  throw ConfigError("unknown environment template '" + name + "'");
}

std::vector<std::string> registered_templates() { return {"spread", "lbf", "rware-adapter"}; }

std::unique_ptr<RosterEnv> make_env(const EnvTemplateSpec& spec, int roster_size, std::uint64_t seed) {
  if (!spec.admits(roster_size)) {
    throw ConfigError("roster size " + std::to_string(roster_size) + " is not admissible for '" + spec.name + "'");
  }
  if (spec.name == "spread") return std::make_unique<SpreadEnv>(spec, roster_size, seed);
  if (spec.name == "lbf") return std::make_unique<LbfEnv>(spec, roster_size, seed);

  BackendFactory factory;
  {
    std::lock_guard lock(backend_mutex());
    auto it = backends().find(spec.name);
    if (it != backends().end()) factory = it->second;
  }
  if (factory) return std::make_unique<ExternalRosterEnv>(spec, roster_size, factory(spec, roster_size, seed));
  if (spec.name == "rware-adapter") {
    throw ConfigError("template 'rware-adapter' has no registered simulator backend");
  }
  throw ConfigError("unknown environment template '" + spec.name + "'");
}

void register_external_backend(const std::string& template_name, BackendFactory factory) {
  std::lock_guard lock(backend_mutex());
  backends()[template_name] = std::move(factory);
}

void clear_external_backend(const std::string& template_name) {
  std::lock_guard lock(backend_mutex());
  backends().erase(template_name);
}

bool has_external_backend(const std::string& template_name) {
  std::lock_guard lock(backend_mutex());
  return backends().contains(template_name);
}

ExternalRosterEnv::ExternalRosterEnv(EnvTemplateSpec spec, int roster_size, std::unique_ptr<ExternalBackend> backend)
    : spec_(std::move(spec)), roster_size_(roster_size), backend_(std::move(backend)) {}

void ExternalRosterEnv::check_obs(const Observations& obs) const {
  if (obs.agents != roster_size_ || obs.width != spec_.obs_width) {
    throw std::runtime_error("external backend returned observations of shape " + std::to_string(obs.agents) + "x" +
                             std::to_string(obs.width));
  }
}

Observations ExternalRosterEnv::reset() {
  auto obs = backend_->reset();
  check_obs(obs);
  active_ = true;
  return obs;
}

StepResult ExternalRosterEnv::step(std::span<const int> actions) {
  if (!active_) throw std::logic_error("external env: step() without an active episode");
  check_actions(actions, roster_size_, spec_.action_count);
  StepResult result;
  auto rewards = backend_->step(actions, result.observations, result.done);
  check_obs(result.observations);
  result.team_reward = std::accumulate(rewards.begin(), rewards.end(), 0.0);
  if (result.done) active_ = false;
  return result;
}

}  // namespace pc3d::env
