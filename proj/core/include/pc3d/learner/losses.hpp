#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <span>
#include <vector>

namespace pc3d::learner {

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// Backward recursion over one trajectory; `values` carries one bootstrap entry past the end.
//   delta_t = r_t + gamma (1 - done_t) V_{t+1} - V_t
//   A_t     = delta_t + gamma lambda (1 - done_t) A_{t+1}
// Throws std::invalid_argument unless values.size() == rewards.size() + 1 == dones.size() + 1.
GaeResult gae(std::span<const double> rewards, std::span<const double> values, std::span<const std::uint8_t> dones,
              double gamma, double lambda);

// Mean and population standard deviation over the masked entries.
std::pair<double, double> masked_moments(const torch::Tensor& values, const torch::Tensor& mask);

// (x - mean) / std over the masked entries; masked-out entries become 0.
torch::Tensor normalize_advantages(const torch::Tensor& advantages, const torch::Tensor& mask);

// -mean over valid pairs of min(r A, clip(r, 1-eps, 1+eps) A), r = exp(logp_new - logp_old).
// Throws std::domain_error on non-finite ratios.
torch::Tensor clipped_surrogate(const torch::Tensor& logp_new, const torch::Tensor& logp_old,
                                const torch::Tensor& advantages, const torch::Tensor& mask, double clip_eps);

// Smooth-L1 with transition point 1, elementwise.
torch::Tensor huber(const torch::Tensor& residual);

// Mean over valid (t, i) pairs of the per-pair mean elementwise Huber loss between the
// student context and the detached target. student/target: [..., d]; mask: [...].
// Throws std::invalid_argument for an empty mask.
torch::Tensor distill_loss(const torch::Tensor& student, const torch::Tensor& target, const torch::Tensor& mask);

torch::Tensor masked_mean(const torch::Tensor& values, const torch::Tensor& mask);

struct LossWeights {
  double value = 0.25;
  double entropy = 1.28e-3;
  double distill = 0.0;
};

struct LossTerms {
  torch::Tensor ppo;
  torch::Tensor value;
  torch::Tensor entropy;
  torch::Tensor distill;  // may be undefined when no teacher exists
};

// L = L_ppo + w_V L_V - w_H L_H + w_distill L_distill.
torch::Tensor total_loss(const LossTerms& terms, const LossWeights& weights);

}  // namespace pc3d::learner
