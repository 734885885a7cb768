#pragma once

#include <torch/torch.h>

#include <memory>
#include <string>
#include <vector>

namespace pc3d::critic {

enum class CriticKind { kLocal, kPadded, kMeanPool, kSetTeacher };

std::string to_string(CriticKind kind);

// Per-timestep teacher quantities for a batch of B team snapshots with up to N agents.
struct TeacherOutput {
  torch::Tensor embeddings;       // E   [B, N, d]
  torch::Tensor tokens;           // Z   [B, K, d]
  torch::Tensor attention;        // alpha [B, K, N], zero on inactive slots
  torch::Tensor contexts;         // C   [B, N, d]
  torch::Tensor personalization;  // eta [B, N, K]
  torch::Tensor value;            // V   [B]
};

// Centralized value function over a set of local observations.
// obs: [B, N, obs_width]; mask: [B, N] bool, true for active agents (at least one per row).
class CentralCritic : public torch::nn::Module {
 public:
  virtual torch::Tensor value(const torch::Tensor& obs, const torch::Tensor& mask) = 0;
  virtual CriticKind kind() const = 0;
};

struct SetTeacherConfig {
  int obs_width = 0;
  std::vector<int> encoder_widths = {96, 96};
  int embed_dim = 48;
  int tokens = 4;
  std::vector<int> value_widths = {192, 160};
  bool team_size_feature = true;
  int max_roster = 10;
};

// Permutation-invariant set critic with K learned queries, single-head identity-projection
// cross-attention into coordination tokens, and a personalization read-back per agent.
class SetTeacherImpl : public CentralCritic {
 public:
  explicit SetTeacherImpl(SetTeacherConfig config);

  const SetTeacherConfig& config() const { return config_; }
  torch::Tensor queries() const { return queries_; }

  // Row-wise shared encoder: [..., obs_width] -> [..., d].
  torch::Tensor encode_observations(const torch::Tensor& obs);
  // alpha_kj = softmax_j(q_k . e_j / sqrt d) over active j; z_k = sum_j alpha_kj e_j.
  std::pair<torch::Tensor, torch::Tensor> coordination_tokens(const torch::Tensor& embeddings, const torch::Tensor& mask);
  // eta_ik = softmax_k(e_i . z_k / sqrt d); c_i = sum_k eta_ik z_k.
  std::pair<torch::Tensor, torch::Tensor> personalize(const torch::Tensor& embeddings, const torch::Tensor& tokens);
  // Value head over [flatten(Z); n / max_roster]. roster_size: [B].
  torch::Tensor team_value(const torch::Tensor& tokens, const torch::Tensor& roster_size);

  TeacherOutput forward(const torch::Tensor& obs, const torch::Tensor& mask);
  torch::Tensor value(const torch::Tensor& obs, const torch::Tensor& mask) override;
  CriticKind kind() const override { return CriticKind::kSetTeacher; }

 private:
  SetTeacherConfig config_;
  torch::nn::Sequential encoder_{nullptr};
  torch::Tensor queries_;
  torch::nn::Sequential value_head_{nullptr};
};

struct PaddedCriticConfig {
  int obs_width = 0;
  int max_roster = 10;
  std::vector<int> widths = {128, 96};
};

// MAPPO baseline: concatenated observations in max_roster slots plus a binary activity mask.
class PaddedCriticImpl : public CentralCritic {
 public:
  explicit PaddedCriticImpl(PaddedCriticConfig config);

  // Fixed-width input row [B, max_roster * (obs_width + 1)]; throws if N > max_roster.
  torch::Tensor padded_input(const torch::Tensor& obs, const torch::Tensor& mask) const;
  torch::Tensor value(const torch::Tensor& obs, const torch::Tensor& mask) override;
  CriticKind kind() const override { return CriticKind::kPadded; }

 private:
  PaddedCriticConfig config_;
  torch::nn::Sequential mlp_{nullptr};
};

struct MeanPoolCriticConfig {
  int obs_width = 0;
  std::vector<int> encoder_widths = {160, 96};
  int embed_dim = 48;
  std::vector<int> value_widths = {128, 128};
  bool team_size_feature = false;
  int max_roster = 10;
};

// PIC baseline: V = rho(mean_i phi(o_i)), optionally with the normalized roster size.
class MeanPoolCriticImpl : public CentralCritic {
 public:
  explicit MeanPoolCriticImpl(MeanPoolCriticConfig config);

  torch::Tensor value(const torch::Tensor& obs, const torch::Tensor& mask) override;
  CriticKind kind() const override { return CriticKind::kMeanPool; }

 private:
  MeanPoolCriticConfig config_;
  torch::nn::Sequential encoder_{nullptr};
  torch::nn::Sequential value_head_{nullptr};
};

// shadow <- (1 - tau) * shadow + tau * live over every parameter. Throws on shape mismatch.
void ema_update(const torch::nn::Module& live, torch::nn::Module& shadow, double tau);

// Active-agent count per row of a [B, N] mask, as a float tensor [B].
torch::Tensor roster_sizes(const torch::Tensor& mask);

}  // namespace pc3d::critic
