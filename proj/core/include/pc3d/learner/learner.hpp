#pragma once

#include <torch/torch.h>

#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "pc3d/common.hpp"
#include "pc3d/critic/critics.hpp"
#include "pc3d/env/roster_env.hpp"
#include "pc3d/learner/losses.hpp"
#include "pc3d/learner/rollout.hpp"
#include "pc3d/policy/actor.hpp"

namespace pc3d::learner {

enum class Method { kIppo, kMappo, kPic, kPc3d, kHyperPc3d };
enum class Ablation { kNone, kGateOff, kGateOn, kNoDistill };

std::string to_string(Method method);
std::string to_string(Ablation ablation);
Method method_from_string(const std::string& name);
Ablation ablation_from_string(const std::string& name);

struct LearnerConfig {
  double lr = 1.84e-3;
  int batch_size = 128;  // decision pairs per minibatch, packed by whole episodes
  int buffer_size = 200000;
  int update_every_episodes = 8;
  int ppo_epochs = 8;
  double clip_eps = 0.15;
  double gamma = 0.985;
  double gae_lambda = 0.99;
  double entropy_coef = 1.28e-3;
  double value_coef = 0.25;
  double max_grad_norm = 2.0;
  double distill_weight = 0.257;
  double teacher_tau = 0.02;
  double reliance_min = -3.0;
  double reliance_max = 2.0;
  int tokens = 4;
  policy::ConditioningMode mode = policy::ConditioningMode::kFilm;
  Ablation ablation = Ablation::kNone;

  // Throws ConfigError for non-positive sizes/rates or inconsistent ablation settings.
  void validate() const;
};

struct ModelConfig {
  std::vector<int> actor_widths = {128, 256, 128};
  int rnn_dim = 128;
  std::vector<int> critic_widths = {192, 160};
  int set_embed_dim = 48;
  std::vector<int> set_encoder_widths = {96, 96};
  bool team_size_feature = true;
  int hyper_hidden = 64;
};

// Which components a method switches on.
struct Wiring {
  critic::CriticKind critic = critic::CriticKind::kPadded;
  bool student_context = false;
  policy::ConditioningMode mode = policy::ConditioningMode::kFilm;
  bool distill = false;  // teacher targets available and the distill term is computed
};

// IPPO: local head. MAPPO: padded critic. PIC: mean-pool critic. PC3D: set teacher,
// student context, FiLM (or hypernetwork), distillation. Ablations modify PC3D only.
Wiring wiring_for(Method method, Ablation ablation);

struct Models {
  policy::Actor actor{nullptr};
  std::shared_ptr<critic::CentralCritic> critic;   // null for a local value head
  std::shared_ptr<critic::SetTeacherImpl> shadow;  // EMA teacher, set-teacher critic only

  critic::SetTeacherImpl* teacher() const;
  std::vector<torch::Tensor> trainable_parameters() const;
};

policy::ActorConfig actor_config(const Wiring& wiring, const ModelConfig& model, const LearnerConfig& config,
                                 const env::EnvTemplateSpec& spec);

// Builds freshly initialized networks; draws from torch's global generator.
// max_roster is the largest admissible roster of the task.
Models build_models(const Wiring& wiring, const ModelConfig& model, const LearnerConfig& config,
                    const env::EnvTemplateSpec& spec);

struct UpdateMetrics {
  double loss = 0.0;
  double ppo = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double distill = std::numeric_limits<double>::quiet_NaN();
  double grad_norm = 0.0;          // mean pre-clip global norm
  double grad_norm_clipped = 0.0;  // max post-clip global norm
  double gate_mean = std::numeric_limits<double>::quiet_NaN();
  double gate_std = std::numeric_limits<double>::quiet_NaN();
  double reliance_mean = std::numeric_limits<double>::quiet_NaN();
  int minibatches = 0;
  std::int64_t decision_pairs = 0;
};

// Loss terms evaluated on one minibatch without touching parameters.
struct LossBreakdown {
  double total = 0.0;
  double ppo = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double distill = std::numeric_limits<double>::quiet_NaN();
};

class Learner {
 public:
  Learner(Wiring wiring, LearnerConfig config, Models models, std::uint64_t shuffle_seed);

  // PPO epochs over shuffled whole-episode minibatches, global-norm clipping, one Adam step
  // per minibatch, then one EMA step of the teacher shadow. Throws std::invalid_argument on
  // a stale batch and std::runtime_error on a non-finite loss.
  UpdateMetrics update(const RolloutBatch& batch);

  // Every loss term on the whole batch as a single minibatch (advantages normalized over it).
  LossBreakdown evaluate(const RolloutBatch& batch);

  // Same as evaluate() but returns the differentiable total loss.
  torch::Tensor loss_tensor(const RolloutBatch& batch);

  const Wiring& wiring() const { return wiring_; }
  const LearnerConfig& config() const { return config_; }
  Models& models() { return models_; }
  const Models& models() const { return models_; }
  torch::optim::Adam& optimizer() { return *optimizer_; }
  Rng& shuffle_rng() { return shuffle_rng_; }
  long updates() const { return updates_; }
  void set_updates(long updates) { updates_ = updates; }

 private:
  struct Prepared;
  struct Minibatch;
  struct Terms;

  std::vector<Prepared> prepare(const RolloutBatch& batch);
  Minibatch collate(const RolloutBatch& batch, const std::vector<Prepared>& prepared,
                    const std::vector<std::size_t>& members) const;
  Terms compute_terms(const Minibatch& mb);

  Wiring wiring_;
  LearnerConfig config_;
  Models models_;
  std::unique_ptr<torch::optim::Adam> optimizer_;
  Rng shuffle_rng_;
  long updates_ = 0;
};

}  // namespace pc3d::learner
