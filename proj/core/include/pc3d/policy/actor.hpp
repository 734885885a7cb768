#pragma once

#include <torch/torch.h>

#include <string>
#include <vector>

#include "pc3d/common.hpp"

namespace pc3d::policy {

// How the recovered context acts on the policy. kGateOff / kGateOn are FiLM with the
// reliance gate pinned to 0 / 1.
enum class ConditioningMode { kFilm, kHyper, kGateOff, kGateOn };

std::string to_string(ConditioningMode mode);
ConditioningMode conditioning_from_string(const std::string& name);

struct ActorConfig {
  int obs_width = 0;
  int action_count = 0;
  std::vector<int> widths = {128, 256, 128};
  int rnn_dim = 128;

  // Student-context path (PC3D). Without it the actor is the plain recurrent MAPPO actor.
  bool use_context = false;
  int context_dim = 48;
  double reliance_min = -3.0;
  double reliance_max = 2.0;
  ConditioningMode mode = ConditioningMode::kFilm;
  int hyper_hidden = 64;

  // IPPO: value estimate from the actor's own recurrent features.
  bool local_value_head = false;
};

struct StudentContext {
  torch::Tensor context;   // [..., d]
  torch::Tensor reliance;  // [...]
};

struct Conditioned {
  torch::Tensor features;  // h~, [..., rnn_dim]
  torch::Tensor gate;      // [...]
};

// Heads evaluated on recurrent features. Tensors that do not apply to the configuration
// are left undefined.
struct ActorOutput {
  torch::Tensor logits;           // [..., action_count]
  torch::Tensor student_context;  // [..., d]
  torch::Tensor reliance;         // [...]
  torch::Tensor gate;             // [...]
  torch::Tensor modulated;        // [..., rnn_dim]
  torch::Tensor value;            // [...], local value head only
};

// Shared-parameter recurrent actor: MLP encoder, GRU cell, optional student context with
// reliance-gated FiLM (or hypernetwork) conditioning, linear categorical policy head.
class ActorImpl : public torch::nn::Module {
 public:
  explicit ActorImpl(ActorConfig config);

  const ActorConfig& config() const { return config_; }

  torch::Tensor initial_state(std::int64_t rows) const;

  // [..., obs_width] -> [..., widths.back()]
  torch::Tensor encode(const torch::Tensor& obs);
  // GRU update on pre-encoded features. h: [rows, rnn_dim].
  torch::Tensor recur(const torch::Tensor& features, const torch::Tensor& h);
  // One decision step from raw observations; the returned features are the new state.
  torch::Tensor actor_step(const torch::Tensor& obs, const torch::Tensor& h);

  // c^ = W_c h + b_c, rho = clip(w_u . h + b_u, rho_min, rho_max).
  StudentContext student_context(const torch::Tensor& h);
  // sigma(a_g rho + b_g), or the constant forced by the mode.
  torch::Tensor gate(const torch::Tensor& reliance, ConditioningMode mode);
  // [gamma; beta] = W_f c^ + b_f;  h~ = h * (1 + g gamma) + g beta.
  Conditioned film_condition(const torch::Tensor& h, const torch::Tensor& context, const torch::Tensor& reliance,
                             ConditioningMode mode);
  // logits = h^T (W0 + g dW) + (b0 + g db) with (dW, db) from the context hypernetwork.
  torch::Tensor hyper_condition(const torch::Tensor& h, const torch::Tensor& context, const torch::Tensor& gate);

  // All heads on features h. With bypass_conditioning the policy head reads h directly,
  // as if the modulation path did not exist.
  ActorOutput heads(const torch::Tensor& h, bool bypass_conditioning = false);

  // Whole-episode forward from zero state. obs: [T, rows, obs_width]; outputs are [T, rows, ...].
  ActorOutput forward_sequence(const torch::Tensor& obs, bool bypass_conditioning = false);

  torch::nn::Linear policy_head() const { return policy_head_; }
  torch::nn::Linear context_head() const { return context_head_; }
  torch::nn::Linear film_layer() const { return film_; }
  torch::Tensor gate_scale() const { return gate_scale_; }
  torch::Tensor gate_offset() const { return gate_offset_; }

 private:
  ActorConfig config_;
  torch::nn::Sequential encoder_{nullptr};
  torch::nn::GRUCell gru_{nullptr};
  torch::nn::Linear policy_head_{nullptr};
  torch::nn::Linear context_head_{nullptr};
  torch::nn::Linear reliance_head_{nullptr};
  torch::nn::Linear film_{nullptr};
  torch::nn::Sequential hyper_{nullptr};
  torch::nn::Linear value_head_{nullptr};
  torch::Tensor gate_scale_;
  torch::Tensor gate_offset_;
};
TORCH_MODULE(Actor);

// Categorical distribution over discrete actions built from unnormalized logits [rows, A].
class CategoricalDistribution {
 public:
  // Throws std::domain_error on non-finite logits.
  explicit CategoricalDistribution(const torch::Tensor& logits);

  const torch::Tensor& log_probs() const { return log_probs_; }
  torch::Tensor probs() const { return log_probs_.exp(); }
  torch::Tensor log_prob(const torch::Tensor& actions) const;
  torch::Tensor entropy() const;
  torch::Tensor greedy() const;
  // Inverse-CDF sampling with the caller's rng; one draw per row.
  torch::Tensor sample(Rng& rng) const;

 private:
  torch::Tensor log_probs_;
};

}  // namespace pc3d::policy
