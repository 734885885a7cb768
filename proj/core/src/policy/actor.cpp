#include "pc3d/policy/actor.hpp"

#include <stdexcept>

#include "pc3d/nn/common.hpp"

namespace pc3d::policy {

std::string to_string(ConditioningMode mode) {
  switch (mode) {
    case ConditioningMode::kFilm: return "film";
    case ConditioningMode::kHyper: return "hyper";
    case ConditioningMode::kGateOff: return "gate_off";
    case ConditioningMode::kGateOn: return "gate_on";
  }
  return "film";
}

ConditioningMode conditioning_from_string(const std::string& name) {
  if (name == "film") return ConditioningMode::kFilm;
  if (name == "hyper") return ConditioningMode::kHyper;
  if (name == "gate_off") return ConditioningMode::kGateOff;
  if (name == "gate_on") return ConditioningMode::kGateOn;
  throw ConfigError("unknown conditioning mode '" + name + "'");
}

ActorImpl::ActorImpl(ActorConfig config) : config_(std::move(config)) {
  if (config_.obs_width <= 0 || config_.action_count <= 0 || config_.rnn_dim <= 0) {
    throw ConfigError("actor: obs_width, action_count and rnn_dim must be positive");
  }
  if (config_.reliance_min > config_.reliance_max) throw ConfigError("actor: reliance_min > reliance_max");

  encoder_ = register_module("encoder", nn::make_mlp(config_.obs_width, config_.widths));
  const int in = config_.widths.empty() ? config_.obs_width : config_.widths.back();
  gru_ = register_module("gru", torch::nn::GRUCell(in, config_.rnn_dim));
  {
    torch::NoGradGuard no_grad;
    torch::nn::init::orthogonal_(gru_->weight_ih);
    torch::nn::init::orthogonal_(gru_->weight_hh);
    torch::nn::init::zeros_(gru_->bias_ih);
    torch::nn::init::zeros_(gru_->bias_hh);
  }
  policy_head_ = register_module("policy_head", torch::nn::Linear(config_.rnn_dim, config_.action_count));
  nn::orthogonal_init(policy_head_, 0.01);

  if (config_.use_context) {
    const int d = config_.context_dim;
    context_head_ = register_module("context_head", torch::nn::Linear(config_.rnn_dim, d));
    nn::orthogonal_init(context_head_, 1.0);
    reliance_head_ = register_module("reliance_head", torch::nn::Linear(config_.rnn_dim, 1));
    nn::orthogonal_init(reliance_head_, 1.0);
    gate_scale_ = register_parameter("gate_scale", torch::ones({1}));
    gate_offset_ = register_parameter("gate_offset", torch::zeros({1}));
    if (config_.mode == ConditioningMode::kHyper) {
      hyper_ = register_module("hyper", nn::make_mlp(d, {config_.hyper_hidden},
                                                     config_.rnn_dim * config_.action_count + config_.action_count,
                                                     1.4142135623730951, 0.01));
    } else {
      film_ = register_module("film", torch::nn::Linear(d, 2 * config_.rnn_dim));
      nn::orthogonal_init(film_, 0.1);
    }
  }
  if (config_.local_value_head) {
    value_head_ = register_module("value_head", torch::nn::Linear(config_.rnn_dim, 1));
    nn::orthogonal_init(value_head_, 1.0);
  }
}

torch::Tensor ActorImpl::initial_state(std::int64_t rows) const { return torch::zeros({rows, config_.rnn_dim}); }

torch::Tensor ActorImpl::encode(const torch::Tensor& obs) {
  if (obs.size(-1) != config_.obs_width) {
    throw std::invalid_argument("actor: observation width " + std::to_string(obs.size(-1)) + " != " +
                                std::to_string(config_.obs_width));
  }
  return encoder_->forward(obs);
}

torch::Tensor ActorImpl::recur(const torch::Tensor& features, const torch::Tensor& h) { return gru_->forward(features, h); }

torch::Tensor ActorImpl::actor_step(const torch::Tensor& obs, const torch::Tensor& h) { return recur(encode(obs), h); }

StudentContext ActorImpl::student_context(const torch::Tensor& h) {
  if (!config_.use_context) throw std::logic_error("actor: no student-context path configured");
  StudentContext out;
  out.context = context_head_->forward(h);
  out.reliance = reliance_head_->forward(h).squeeze(-1).clamp(config_.reliance_min, config_.reliance_max);
  return out;
}

torch::Tensor ActorImpl::gate(const torch::Tensor& reliance, ConditioningMode mode) {
  switch (mode) {
    case ConditioningMode::kGateOff: return torch::zeros_like(reliance);
    case ConditioningMode::kGateOn: return torch::ones_like(reliance);
    default: return torch::sigmoid(gate_scale_ * reliance + gate_offset_);
  }
}

Conditioned ActorImpl::film_condition(const torch::Tensor& h, const torch::Tensor& context, const torch::Tensor& reliance,
                                      ConditioningMode mode) {
  if (!film_) throw std::logic_error("actor: FiLM path not configured");
  auto film = film_->forward(context);
  auto gamma = film.narrow(-1, 0, config_.rnn_dim);
  auto beta = film.narrow(-1, config_.rnn_dim, config_.rnn_dim);
  Conditioned out;
  out.gate = gate(reliance, mode);
  auto g = out.gate.unsqueeze(-1);
  out.features = h * (1.0 + g * gamma) + g * beta;
  return out;
}

torch::Tensor ActorImpl::hyper_condition(const torch::Tensor& h, const torch::Tensor& context, const torch::Tensor& gate) {
  if (!hyper_) throw std::logic_error("actor: hypernetwork path not configured");
  const int a = config_.action_count;
  const int r = config_.rnn_dim;
  auto residual = hyper_->forward(context);
  auto delta_w = residual.narrow(-1, 0, a * r);
  auto delta_b = residual.narrow(-1, a * r, a);
  std::vector<std::int64_t> shape(h.sizes().begin(), h.sizes().end() - 1);
  shape.push_back(a);
  shape.push_back(r);
  delta_w = delta_w.reshape(shape);
  auto g = gate.unsqueeze(-1);
  auto base = policy_head_->forward(h);
  auto adapted = torch::matmul(delta_w, h.unsqueeze(-1)).squeeze(-1) + delta_b;
  return base + g * adapted;
}

ActorOutput ActorImpl::heads(const torch::Tensor& h, bool bypass_conditioning) {
  ActorOutput out;
  if (config_.local_value_head) out.value = value_head_->forward(h).squeeze(-1);
  if (!config_.use_context) {
    out.modulated = h;
    out.logits = policy_head_->forward(h);
    return out;
  }
  auto student = student_context(h);
  out.student_context = student.context;
  out.reliance = student.reliance;
  if (bypass_conditioning) {
    out.gate = torch::zeros_like(student.reliance);
    out.modulated = h;
    out.logits = policy_head_->forward(h);
  } else if (config_.mode == ConditioningMode::kHyper) {
    out.gate = gate(student.reliance, ConditioningMode::kHyper);
    out.modulated = h;
    out.logits = hyper_condition(h, student.context, out.gate);
  } else {
    auto cond = film_condition(h, student.context, student.reliance, config_.mode);
    out.gate = cond.gate;
    out.modulated = cond.features;
    out.logits = policy_head_->forward(cond.features);
  }
  return out;
}

ActorOutput ActorImpl::forward_sequence(const torch::Tensor& obs, bool bypass_conditioning) {
  const auto steps = obs.size(0);
  const auto rows = obs.size(1);
  // The encoder has no recurrence, so it runs once over every step.
  auto features = encode(obs);
  auto h = initial_state(rows);
  std::vector<torch::Tensor> states;
  states.reserve(steps);
  for (std::int64_t t = 0; t < steps; ++t) {
    h = recur(features[t], h);
    states.push_back(h);
  }
  return heads(torch::stack(states), bypass_conditioning);
}

CategoricalDistribution::CategoricalDistribution(const torch::Tensor& logits) {
  if (!torch::isfinite(logits).all().item<bool>()) throw std::domain_error("categorical: non-finite logits");
  log_probs_ = torch::log_softmax(logits, -1);
}

torch::Tensor CategoricalDistribution::log_prob(const torch::Tensor& actions) const {
  return log_probs_.gather(-1, actions.unsqueeze(-1)).squeeze(-1);
}

torch::Tensor CategoricalDistribution::entropy() const { return -(log_probs_.exp() * log_probs_).sum(-1); }

torch::Tensor CategoricalDistribution::greedy() const { return log_probs_.argmax(-1); }

torch::Tensor CategoricalDistribution::sample(Rng& rng) const {
  auto probs = log_probs_.exp().contiguous().to(torch::kFloat64);
  const auto rows = probs.size(0);
  const auto n = probs.size(1);
  auto acc = probs.accessor<double, 2>();
  auto out = torch::empty({rows}, torch::kLong);
  auto o = out.accessor<std::int64_t, 1>();
  for (std::int64_t r = 0; r < rows; ++r) {
    const double u = uniform01(rng);
    double cumulative = 0.0;
    std::int64_t pick = n - 1;
    for (std::int64_t a = 0; a < n; ++a) {
      cumulative += acc[r][a];
      if (u < cumulative) {
        pick = a;
        break;
      }
    }
    o[r] = pick;
  }
  return out;
}

}  // namespace pc3d::policy
