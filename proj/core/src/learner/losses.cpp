#include "pc3d/learner/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace pc3d::learner {

GaeResult gae(std::span<const double> rewards, std::span<const double> values, std::span<const std::uint8_t> dones,
              double gamma, double lambda) {
  if (values.size() != rewards.size() + 1 || dones.size() != rewards.size()) {
    throw std::invalid_argument("gae: expected |values| = |rewards| + 1 and |dones| = |rewards|");
  }
  const std::size_t n = rewards.size();
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double next_advantage = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double live = dones[k] ? 0.0 : 1.0;
    const double delta = rewards[k] + gamma * live * values[k + 1] - values[k];
    next_advantage = delta + gamma * lambda * live * next_advantage;
    out.advantages[k] = next_advantage;
    out.returns[k] = next_advantage + values[k];
  }
  return out;
}

std::pair<double, double> masked_moments(const torch::Tensor& values, const torch::Tensor& mask) {
  auto m = mask.to(torch::kFloat64);
  const double count = m.sum().item<double>();
  if (count <= 0.0) throw std::invalid_argument("masked_moments: empty mask");
  const double mean = (values * m).sum().item<double>() / count;
  const double var = ((values - mean).square() * m).sum().item<double>() / count;
  return {mean, std::sqrt(var)};
}

torch::Tensor normalize_advantages(const torch::Tensor& advantages, const torch::Tensor& mask) {
  auto [mean, std] = masked_moments(advantages, mask);
  auto centered = advantages - mean;
  if (std > 1e-12) centered = centered / std;
  return centered * mask.to(torch::kFloat64);
}

torch::Tensor masked_mean(const torch::Tensor& values, const torch::Tensor& mask) {
  auto m = mask.to(torch::kBool);
  const auto count = m.sum().item<std::int64_t>();
  if (count <= 0) throw std::invalid_argument("masked_mean: empty mask");
  return torch::where(m, values, torch::zeros_like(values)).sum() / static_cast<double>(count);
}

torch::Tensor clipped_surrogate(const torch::Tensor& logp_new, const torch::Tensor& logp_old,
                                const torch::Tensor& advantages, const torch::Tensor& mask, double clip_eps) {
  auto m = mask.to(torch::kBool);
  // Inactive pairs may hold arbitrary log-probs; neutralize them before exponentiating.
  auto log_ratio = torch::where(m, logp_new - logp_old, torch::zeros_like(logp_new));
  auto ratio = log_ratio.exp();
  if (!torch::isfinite(ratio).all().item<bool>()) throw std::domain_error("clipped_surrogate: non-finite ratio");
  auto unclipped = ratio * advantages;
  auto clipped = ratio.clamp(1.0 - clip_eps, 1.0 + clip_eps) * advantages;
  return -masked_mean(torch::min(unclipped, clipped), m);
}

torch::Tensor huber(const torch::Tensor& residual) {
  auto a = residual.abs();
  return torch::where(a <= 1.0, 0.5 * residual.square(), a - 0.5);
}

torch::Tensor distill_loss(const torch::Tensor& student, const torch::Tensor& target, const torch::Tensor& mask) {
  if (!student.sizes().equals(target.sizes())) throw std::invalid_argument("distill_loss: shape mismatch");
  auto per_pair = huber(student - target.detach()).mean(-1);
  return masked_mean(per_pair, mask);
}

torch::Tensor total_loss(const LossTerms& terms, const LossWeights& weights) {
  auto loss = terms.ppo + weights.value * terms.value - weights.entropy * terms.entropy;
  if (weights.distill != 0.0) {
    if (!terms.distill.defined()) throw std::invalid_argument("total_loss: distill weight set without a distill term");
    loss = loss + weights.distill * terms.distill;
  }
  return loss;
}

}  // namespace pc3d::learner
