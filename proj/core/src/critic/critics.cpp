#include "pc3d/critic/critics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "pc3d/common.hpp"
#include "pc3d/nn/common.hpp"

namespace pc3d::critic {

std::string to_string(CriticKind kind) {
  switch (kind) {
    case CriticKind::kLocal: return "local";
    case CriticKind::kPadded: return "padded";
    case CriticKind::kMeanPool: return "mean_pool";
    case CriticKind::kSetTeacher: return "set_teacher";
  }
  return "local";
}

torch::Tensor roster_sizes(const torch::Tensor& mask) { return mask.to(torch::kFloat64).sum(-1); }

SetTeacherImpl::SetTeacherImpl(SetTeacherConfig config) : config_(std::move(config)) {
  if (config_.tokens <= 0) throw ConfigError("set teacher: token count K must be positive");
  if (config_.embed_dim <= 0) throw ConfigError("set teacher: embed_dim must be positive");
  encoder_ = register_module("encoder", nn::make_mlp(config_.obs_width, config_.encoder_widths, config_.embed_dim));
  queries_ = register_parameter("queries", torch::randn({config_.tokens, config_.embed_dim}) /
                                               std::sqrt(static_cast<double>(config_.embed_dim)));
  const int in = config_.tokens * config_.embed_dim + (config_.team_size_feature ? 1 : 0);
  value_head_ = register_module("value_head", nn::make_mlp(in, config_.value_widths, 1));
}

torch::Tensor SetTeacherImpl::encode_observations(const torch::Tensor& obs) {
  if (obs.size(-1) != config_.obs_width) throw std::invalid_argument("set teacher: observation width mismatch");
  return encoder_->forward(obs);
}

std::pair<torch::Tensor, torch::Tensor> SetTeacherImpl::coordination_tokens(const torch::Tensor& embeddings,
                                                                           const torch::Tensor& mask) {
  if (embeddings.size(-2) == 0) throw std::invalid_argument("set teacher: empty agent set");
  if (embeddings.size(-1) != queries_.size(1)) throw std::invalid_argument("set teacher: embedding width mismatch");
  const double scale = 1.0 / std::sqrt(static_cast<double>(embeddings.size(-1)));
  // [B, K, N]
  auto scores = torch::matmul(queries_, embeddings.transpose(-1, -2)) * scale;
  scores = scores.masked_fill(mask.logical_not().unsqueeze(-2), -std::numeric_limits<double>::infinity());
  auto alpha = torch::softmax(scores, -1);
  auto tokens = torch::matmul(alpha, embeddings);
  return {tokens, alpha};
}

std::pair<torch::Tensor, torch::Tensor> SetTeacherImpl::personalize(const torch::Tensor& embeddings,
                                                                   const torch::Tensor& tokens) {
  if (tokens.size(-2) == 0) throw std::invalid_argument("set teacher: no coordination tokens");
  const double scale = 1.0 / std::sqrt(static_cast<double>(embeddings.size(-1)));
  auto eta = torch::softmax(torch::matmul(embeddings, tokens.transpose(-1, -2)) * scale, -1);  // [B, N, K]
  return {torch::matmul(eta, tokens), eta};
}

torch::Tensor SetTeacherImpl::team_value(const torch::Tensor& tokens, const torch::Tensor& roster_size) {
  auto flat = tokens.flatten(-2);
  if (config_.team_size_feature) {
    flat = torch::cat({flat, (roster_size / static_cast<double>(config_.max_roster)).unsqueeze(-1)}, -1);
  }
  return value_head_->forward(flat).squeeze(-1);
}

TeacherOutput SetTeacherImpl::forward(const torch::Tensor& obs, const torch::Tensor& mask) {
  TeacherOutput out;
  out.embeddings = encode_observations(obs);
  std::tie(out.tokens, out.attention) = coordination_tokens(out.embeddings, mask);
  std::tie(out.contexts, out.personalization) = personalize(out.embeddings, out.tokens);
  out.value = team_value(out.tokens, roster_sizes(mask));
  return out;
}

torch::Tensor SetTeacherImpl::value(const torch::Tensor& obs, const torch::Tensor& mask) {
  auto embeddings = encode_observations(obs);
  auto tokens = coordination_tokens(embeddings, mask).first;
  return team_value(tokens, roster_sizes(mask));
}

PaddedCriticImpl::PaddedCriticImpl(PaddedCriticConfig config) : config_(std::move(config)) {
  const int in = config_.max_roster * (config_.obs_width + 1);
  mlp_ = register_module("mlp", nn::make_mlp(in, config_.widths, 1));
}

torch::Tensor PaddedCriticImpl::padded_input(const torch::Tensor& obs, const torch::Tensor& mask) const {
  const auto n = obs.size(-2);
  if (n > config_.max_roster) {
    throw std::invalid_argument("padded critic: roster " + std::to_string(n) + " exceeds max_roster " +
                                std::to_string(config_.max_roster));
  }
  auto m = mask.to(torch::kFloat64);
  auto active = obs * m.unsqueeze(-1);
  auto pad = config_.max_roster - n;
  if (pad > 0) {
    active = torch::constant_pad_nd(active, {0, 0, 0, pad});
    m = torch::constant_pad_nd(m, {0, pad});
  }
  return torch::cat({active.flatten(-2), m}, -1);
}

torch::Tensor PaddedCriticImpl::value(const torch::Tensor& obs, const torch::Tensor& mask) {
  return mlp_->forward(padded_input(obs, mask)).squeeze(-1);
}

MeanPoolCriticImpl::MeanPoolCriticImpl(MeanPoolCriticConfig config) : config_(std::move(config)) {
  encoder_ = register_module("encoder", nn::make_mlp(config_.obs_width, config_.encoder_widths, config_.embed_dim));
  const int in = config_.embed_dim + (config_.team_size_feature ? 1 : 0);
  value_head_ = register_module("value_head", nn::make_mlp(in, config_.value_widths, 1));
}

torch::Tensor MeanPoolCriticImpl::value(const torch::Tensor& obs, const torch::Tensor& mask) {
  if (obs.size(-2) == 0) throw std::invalid_argument("mean-pool critic: empty agent set");
  auto m = mask.to(torch::kFloat64);
  auto sizes = m.sum(-1);
  auto pooled = (encoder_->forward(obs) * m.unsqueeze(-1)).sum(-2) / sizes.unsqueeze(-1);
  if (config_.team_size_feature) {
    pooled = torch::cat({pooled, (sizes / static_cast<double>(config_.max_roster)).unsqueeze(-1)}, -1);
  }
  return value_head_->forward(pooled).squeeze(-1);
}

void ema_update(const torch::nn::Module& live, torch::nn::Module& shadow, double tau) {
  if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("ema_update: tau must lie in [0, 1]");
  torch::NoGradGuard no_grad;
  auto src = live.named_parameters(true);
  auto dst = shadow.named_parameters(true);
  if (src.size() != dst.size()) throw std::invalid_argument("ema_update: parameter sets differ");
  for (const auto& item : src) {
    auto* s = dst.find(item.key());
    if (s == nullptr || !s->sizes().equals(item.value().sizes())) {
      throw std::invalid_argument("ema_update: shape mismatch at " + item.key());
    }
    if (tau == 1.0) {
      s->copy_(item.value());
    } else if (tau > 0.0) {
      s->mul_(1.0 - tau).add_(item.value(), tau);
    }
  }
}

}  // namespace pc3d::critic
