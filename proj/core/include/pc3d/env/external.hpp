#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pc3d/env/roster_env.hpp"

namespace pc3d::env {

// Contract an out-of-process or third-party simulator (e.g. a warehouse benchmark) must
// satisfy to be driven through RosterEnv. Per-agent rewards are allowed; the adapter
// folds them into the shared team scalar.
class ExternalBackend {
 public:
  virtual ~ExternalBackend() = default;
  virtual Observations reset() = 0;
  // Returns per-agent rewards; fills `observations` and `done`.
  virtual std::vector<double> step(std::span<const int> actions, Observations& observations, bool& done) = 0;
};

using BackendFactory =
    std::function<std::unique_ptr<ExternalBackend>(const EnvTemplateSpec& spec, int roster_size, std::uint64_t seed)>;

// Registers the simulator behind a template name ("rware-adapter" by default).
void register_external_backend(const std::string& template_name, BackendFactory factory);
void clear_external_backend(const std::string& template_name);
bool has_external_backend(const std::string& template_name);

// Global-reward wrapper: the team reward is the sum of the per-agent rewards, and every
// agent receives that same scalar.
class ExternalRosterEnv final : public RosterEnv {
 public:
  ExternalRosterEnv(EnvTemplateSpec spec, int roster_size, std::unique_ptr<ExternalBackend> backend);

  const EnvTemplateSpec& spec() const override { return spec_; }
  int roster_size() const override { return roster_size_; }
  Observations reset() override;
  StepResult step(std::span<const int> actions) override;

 private:
  void check_obs(const Observations& obs) const;

  EnvTemplateSpec spec_;
  int roster_size_;
  std::unique_ptr<ExternalBackend> backend_;
  bool active_ = false;
};

// Warehouse template: 5 actions, obs width set by task_params["obs_width"], rosters 1..10.
EnvTemplateSpec rware_adapter_template(const TaskParams& overrides = {});

}  // namespace pc3d::env
