#include "pc3d/learner/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace pc3d::learner {

using torch::indexing::Slice;

std::string to_string(Method method) {
  switch (method) {
    case Method::kIppo: return "ippo";
    case Method::kMappo: return "mappo";
    case Method::kPic: return "pic";
    case Method::kPc3d: return "pc3d";
    case Method::kHyperPc3d: return "hyper-pc3d";
  }
  return "mappo";
}

std::string to_string(Ablation ablation) {
  switch (ablation) {
    case Ablation::kNone: return "none";
    case Ablation::kGateOff: return "gate_off";
    case Ablation::kGateOn: return "gate_on";
    case Ablation::kNoDistill: return "no_distill";
  }
  return "none";
}

Method method_from_string(const std::string& name) {
  if (name == "ippo") return Method::kIppo;
  if (name == "mappo") return Method::kMappo;
  if (name == "pic") return Method::kPic;
  if (name == "pc3d") return Method::kPc3d;
  if (name == "hyper-pc3d") return Method::kHyperPc3d;
  throw ConfigError("unknown method '" + name + "'");
}

Ablation ablation_from_string(const std::string& name) {
  if (name == "none") return Ablation::kNone;
  if (name == "gate_off") return Ablation::kGateOff;
  if (name == "gate_on") return Ablation::kGateOn;
  if (name == "no_distill") return Ablation::kNoDistill;
  throw ConfigError("unknown ablation '" + name + "'");
}

void LearnerConfig::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0)) throw ConfigError(std::string("learner: ") + what + " must be positive");
  };
  if (lr < 0.0) throw ConfigError("learner: lr must be non-negative");
  positive(batch_size, "batch_size");
  positive(buffer_size, "buffer_size");
  positive(update_every_episodes, "update_every_episodes");
  positive(ppo_epochs, "ppo_epochs");
  positive(clip_eps, "clip_eps");
  positive(gamma, "gamma");
  positive(max_grad_norm, "max_grad_norm");
  positive(tokens, "tokens");
  if (gamma > 1.0) throw ConfigError("learner: gamma must lie in (0, 1]");
  if (gae_lambda < 0.0 || gae_lambda > 1.0) throw ConfigError("learner: gae_lambda must lie in [0, 1]");
  if (entropy_coef < 0.0 || value_coef < 0.0 || distill_weight < 0.0) {
    throw ConfigError("learner: loss weights must be non-negative");
  }
  if (teacher_tau < 0.0 || teacher_tau > 1.0) throw ConfigError("learner: teacher_tau must lie in [0, 1]");
  if (reliance_min > reliance_max) throw ConfigError("learner: reliance_min > reliance_max");
  if (ablation == Ablation::kNoDistill && distill_weight != 0.0) {
    throw ConfigError("learner: ablation no_distill requires distill_weight = 0");
  }
  if (ablation == Ablation::kGateOff && mode != policy::ConditioningMode::kGateOff) {
    throw ConfigError("learner: gate_off ablation requires conditioning mode gate_off");
  }
  if (ablation == Ablation::kGateOn && mode != policy::ConditioningMode::kGateOn) {
    throw ConfigError("learner: gate_on ablation requires conditioning mode gate_on");
  }
}

Wiring wiring_for(Method method, Ablation ablation) {
  Wiring w;
  switch (method) {
    case Method::kIppo: w.critic = critic::CriticKind::kLocal; break;
    case Method::kMappo: w.critic = critic::CriticKind::kPadded; break;
    case Method::kPic: w.critic = critic::CriticKind::kMeanPool; break;
    case Method::kPc3d:
    case Method::kHyperPc3d:
      w.critic = critic::CriticKind::kSetTeacher;
      w.student_context = true;
      w.distill = true;
      w.mode = method == Method::kHyperPc3d ? policy::ConditioningMode::kHyper : policy::ConditioningMode::kFilm;
      break;
  }
  if (ablation != Ablation::kNone && method != Method::kPc3d) {
    throw ConfigError("ablation '" + to_string(ablation) + "' applies to pc3d only");
  }
  if (ablation == Ablation::kGateOff) w.mode = policy::ConditioningMode::kGateOff;
  if (ablation == Ablation::kGateOn) w.mode = policy::ConditioningMode::kGateOn;
  return w;
}

critic::SetTeacherImpl* Models::teacher() const { return dynamic_cast<critic::SetTeacherImpl*>(critic.get()); }

std::vector<torch::Tensor> Models::trainable_parameters() const {
  auto params = actor->parameters();
  if (critic) {
    auto c = critic->parameters();
    params.insert(params.end(), c.begin(), c.end());
  }
  return params;
}

policy::ActorConfig actor_config(const Wiring& wiring, const ModelConfig& model, const LearnerConfig& config,
                                 const env::EnvTemplateSpec& spec) {
  policy::ActorConfig ac;
  ac.obs_width = spec.obs_width;
  ac.action_count = spec.action_count;
  ac.widths = model.actor_widths;
  ac.rnn_dim = model.rnn_dim;
  ac.use_context = wiring.student_context;
  ac.context_dim = model.set_embed_dim;
  ac.reliance_min = config.reliance_min;
  ac.reliance_max = config.reliance_max;
  ac.mode = wiring.mode;
  ac.hyper_hidden = model.hyper_hidden;
  ac.local_value_head = wiring.critic == critic::CriticKind::kLocal;
  return ac;
}

Models build_models(const Wiring& wiring, const ModelConfig& model, const LearnerConfig& config,
                    const env::EnvTemplateSpec& spec) {
  Models m;
  m.actor = policy::Actor(actor_config(wiring, model, config, spec));

  const int max_roster = spec.max_roster();
  switch (wiring.critic) {
    case critic::CriticKind::kLocal: break;
    case critic::CriticKind::kPadded:
      m.critic = std::make_shared<critic::PaddedCriticImpl>(
          critic::PaddedCriticConfig{spec.obs_width, max_roster, model.critic_widths});
      break;
    case critic::CriticKind::kMeanPool:
      m.critic = std::make_shared<critic::MeanPoolCriticImpl>(critic::MeanPoolCriticConfig{
          spec.obs_width, model.set_encoder_widths, model.set_embed_dim, model.critic_widths, model.team_size_feature,
          max_roster});
      break;
    case critic::CriticKind::kSetTeacher: {
      critic::SetTeacherConfig tc{spec.obs_width,     model.set_encoder_widths,  model.set_embed_dim, config.tokens,
                                  model.critic_widths, model.team_size_feature, max_roster};
      m.critic = std::make_shared<critic::SetTeacherImpl>(tc);
      m.shadow = std::make_shared<critic::SetTeacherImpl>(tc);
      critic::ema_update(*m.critic, *m.shadow, 1.0);
      break;
    }
  }
  return m;
}

// Per-episode targets computed once per update under the pre-update parameters.
struct Learner::Prepared {
  torch::Tensor advantages;  // [T, n], normalized over the batch
  torch::Tensor returns;     // [T] (central value) or [T, n] (local value)
  torch::Tensor targets;     // [T, n, d] EMA-teacher contexts, distill wiring only
};

struct Learner::Minibatch {
  torch::Tensor obs;          // [T, B, N, W]
  torch::Tensor actions;      // [T, B, N]
  torch::Tensor logp_old;     // [T, B, N]
  torch::Tensor pair_mask;    // [T, B, N]
  torch::Tensor roster_mask;  // [B, N]
  torch::Tensor time_mask;    // [T, B]
  torch::Tensor advantages;   // [T, B, N]
  torch::Tensor returns;      // [T, B] or [T, B, N]
  torch::Tensor targets;      // [T, B, N, d]
};

struct Learner::Terms {
  LossTerms losses;
  torch::Tensor total;
  double gate_mean = std::numeric_limits<double>::quiet_NaN();
  double gate_std = std::numeric_limits<double>::quiet_NaN();
  double reliance_mean = std::numeric_limits<double>::quiet_NaN();
};

Learner::Learner(Wiring wiring, LearnerConfig config, Models models, std::uint64_t shuffle_seed)
    : wiring_(wiring), config_(std::move(config)), models_(std::move(models)), shuffle_rng_(shuffle_seed) {
  config_.validate();
  if (wiring_.critic == critic::CriticKind::kLocal) {
    if (models_.critic) throw std::invalid_argument("learner: local value wiring with a central critic");
  } else if (!models_.critic || models_.critic->kind() != wiring_.critic) {
    throw std::invalid_argument("learner: critic does not match wiring");
  }
  if (wiring_.distill && (!models_.teacher() || !models_.shadow)) {
    throw std::invalid_argument("learner: distillation needs a set teacher and its EMA shadow");
  }
  if (!wiring_.distill && config_.distill_weight != 0.0 && wiring_.student_context) {
    // A student head without a teacher would silently ignore the weight.
    throw ConfigError("learner: distill_weight set but no teacher is wired");
  }
  optimizer_ = std::make_unique<torch::optim::Adam>(models_.trainable_parameters(),
                                                    torch::optim::AdamOptions(config_.lr));
}

std::vector<Learner::Prepared> Learner::prepare(const RolloutBatch& batch) {
  torch::NoGradGuard no_grad;
  std::vector<Prepared> prepared(batch.size());
  std::vector<torch::Tensor> flat_advantages;
  for (std::size_t e = 0; e < batch.size(); ++e) {
    const Episode& ep = batch[e];
    if (ep.steps == 0 || !ep.obs.defined()) throw std::invalid_argument("learner: empty episode in batch");
    if (!ep.log_probs.defined() || ep.log_probs.size(0) != ep.steps || ep.log_probs.size(1) != ep.agents ||
        !ep.actions.defined()) {
      throw std::invalid_argument("learner: stale batch (behavior log-probabilities missing)");
    }
    Prepared& p = prepared[e];
    if (wiring_.critic == critic::CriticKind::kLocal) {
      auto values = models_.actor->forward_sequence(ep.obs).value.contiguous();  // [T, n]
      p.advantages = torch::zeros({ep.steps, ep.agents});
      p.returns = torch::zeros({ep.steps, ep.agents});
      auto v = values.accessor<double, 2>();
      auto a = p.advantages.accessor<double, 2>();
      auto r = p.returns.accessor<double, 2>();
      for (int i = 0; i < ep.agents; ++i) {
        std::vector<double> column(ep.steps + 1, 0.0);
        for (int t = 0; t < ep.steps; ++t) column[t] = v[t][i];
        auto g = gae(ep.rewards, column, ep.dones, config_.gamma, config_.gae_lambda);
        for (int t = 0; t < ep.steps; ++t) {
          a[t][i] = g.advantages[t];
          r[t][i] = g.returns[t];
        }
      }
    } else {
      auto mask = torch::ones({ep.steps, ep.agents}, torch::kBool);
      auto values = models_.critic->value(ep.obs, mask).contiguous();  // [T]
      std::vector<double> v(values.data_ptr<double>(), values.data_ptr<double>() + ep.steps);
      v.push_back(0.0);
      auto g = gae(ep.rewards, v, ep.dones, config_.gamma, config_.gae_lambda);
      // One team advantage per step, shared by every agent.
      p.advantages = torch::tensor(g.advantages).unsqueeze(1).expand({ep.steps, ep.agents}).contiguous();
      p.returns = torch::tensor(g.returns);
      if (wiring_.distill) p.targets = models_.shadow->forward(ep.obs, mask).contexts;
    }
    flat_advantages.push_back(p.advantages.flatten());
  }
  auto all = torch::cat(flat_advantages);
  auto [mean, std] = masked_moments(all, torch::ones_like(all, torch::kBool));
  for (auto& p : prepared) {
    p.advantages = p.advantages - mean;
    if (std > 1e-12) p.advantages = p.advantages / std;
  }
  return prepared;
}

Learner::Minibatch Learner::collate(const RolloutBatch& batch, const std::vector<Prepared>& prepared,
                                    const std::vector<std::size_t>& members) const {
  std::int64_t steps = 0;
  std::int64_t agents = 0;
  for (auto e : members) {
    steps = std::max<std::int64_t>(steps, batch[e].steps);
    agents = std::max<std::int64_t>(agents, batch[e].agents);
  }
  const auto rows = static_cast<std::int64_t>(members.size());
  const auto width = batch[members.front()].obs.size(2);
  const bool local = wiring_.critic == critic::CriticKind::kLocal;

  Minibatch mb;
  mb.obs = torch::zeros({steps, rows, agents, width});
  mb.actions = torch::zeros({steps, rows, agents}, torch::kLong);
  mb.logp_old = torch::zeros({steps, rows, agents});
  mb.pair_mask = torch::zeros({steps, rows, agents}, torch::kBool);
  mb.roster_mask = torch::zeros({rows, agents}, torch::kBool);
  mb.time_mask = torch::zeros({steps, rows}, torch::kBool);
  mb.advantages = torch::zeros({steps, rows, agents});
  mb.returns = local ? torch::zeros({steps, rows, agents}) : torch::zeros({steps, rows});
  if (wiring_.distill) mb.targets = torch::zeros({steps, rows, agents, prepared[members.front()].targets.size(2)});

  for (std::int64_t b = 0; b < rows; ++b) {
    const Episode& ep = batch[members[b]];
    const Prepared& p = prepared[members[b]];
    auto t = Slice(0, ep.steps);
    auto n = Slice(0, ep.agents);
    mb.obs.index_put_({t, b, n}, ep.obs);
    mb.actions.index_put_({t, b, n}, ep.actions);
    mb.logp_old.index_put_({t, b, n}, ep.log_probs);
    mb.pair_mask.index_put_({t, b, n}, true);
    mb.roster_mask.index_put_({b, n}, true);
    mb.time_mask.index_put_({t, b}, true);
    mb.advantages.index_put_({t, b, n}, p.advantages);
    if (local) {
      mb.returns.index_put_({t, b, n}, p.returns);
    } else {
      mb.returns.index_put_({t, b}, p.returns);
    }
    if (wiring_.distill) mb.targets.index_put_({t, b, n}, p.targets);
  }
  return mb;
}

Learner::Terms Learner::compute_terms(const Minibatch& mb) {
  const auto steps = mb.obs.size(0);
  const auto rows = mb.obs.size(1);
  const auto agents = mb.obs.size(2);
  const auto width = mb.obs.size(3);

  auto out = models_.actor->forward_sequence(mb.obs.reshape({steps, rows * agents, width}));
  auto logits = out.logits.reshape({steps, rows, agents, -1});
  policy::CategoricalDistribution dist(logits);

  Terms terms;
  auto logp_new = dist.log_prob(mb.actions);
  terms.losses.ppo = clipped_surrogate(logp_new, mb.logp_old, mb.advantages, mb.pair_mask, config_.clip_eps);
  terms.losses.entropy = masked_mean(dist.entropy(), mb.pair_mask);

  if (wiring_.critic == critic::CriticKind::kLocal) {
    auto v = out.value.reshape({steps, rows, agents});
    terms.losses.value = masked_mean((v - mb.returns).square(), mb.pair_mask);
  } else {
    auto mask = mb.roster_mask.unsqueeze(0).expand({steps, rows, agents}).reshape({steps * rows, agents});
    auto v = models_.critic->value(mb.obs.reshape({steps * rows, agents, width}), mask).reshape({steps, rows});
    terms.losses.value = masked_mean((v - mb.returns).square(), mb.time_mask);
  }

  if (wiring_.distill) {
    auto student = out.student_context.reshape({steps, rows, agents, -1});
    terms.losses.distill = distill_loss(student, mb.targets, mb.pair_mask);
  }
  if (out.gate.defined()) {
    torch::NoGradGuard no_grad;
    auto gate = out.gate.reshape({steps, rows, agents});
    auto [gm, gs] = masked_moments(gate, mb.pair_mask);
    terms.gate_mean = gm;
    terms.gate_std = gs;
    terms.reliance_mean = masked_mean(out.reliance.reshape({steps, rows, agents}), mb.pair_mask).item<double>();
  }

  LossWeights weights{config_.value_coef, config_.entropy_coef, wiring_.distill ? config_.distill_weight : 0.0};
  terms.total = total_loss(terms.losses, weights);
  return terms;
}

namespace {

double global_grad_norm(const std::vector<torch::Tensor>& params) {
  double sum = 0.0;
  for (const auto& p : params) {
    if (p.grad().defined()) sum += p.grad().square().sum().item<double>();
  }
  return std::sqrt(sum);
}

std::string describe(const char* name, const torch::Tensor& t) {
  std::ostringstream os;
  os << name << "=" << (t.defined() ? t.item<double>() : std::nan(""));
  return os.str();
}

}  // namespace

UpdateMetrics Learner::update(const RolloutBatch& input) {
  if (input.empty()) throw std::invalid_argument("learner: empty batch");
  // Buffer cap: keep the most recent episodes that fit.
  RolloutBatch capped;
  std::int64_t pairs = 0;
  for (auto it = input.rbegin(); it != input.rend(); ++it) {
    if (!capped.empty() && pairs + it->decision_pairs() > config_.buffer_size) break;
    pairs += it->decision_pairs();
    capped.push_back(*it);
  }
  std::reverse(capped.begin(), capped.end());
  const RolloutBatch& batch = capped;

  auto prepared = prepare(batch);
  auto params = models_.trainable_parameters();

  UpdateMetrics metrics;
  metrics.decision_pairs = pairs;
  double gate_sum = 0.0, gate_sq = 0.0, reliance_sum = 0.0, distill_sum = 0.0;
  int gate_batches = 0;

  std::vector<std::size_t> order(batch.size());
  for (int epoch = 0; epoch < config_.ppo_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[uniform_index(shuffle_rng_, static_cast<int>(i))]);
    }
    std::size_t cursor = 0;
    while (cursor < order.size()) {
      std::vector<std::size_t> members;
      std::int64_t mb_pairs = 0;
      while (cursor < order.size() && (members.empty() || mb_pairs < config_.batch_size)) {
        members.push_back(order[cursor]);
        mb_pairs += batch[order[cursor]].decision_pairs();
        ++cursor;
      }
      auto mb = collate(batch, prepared, members);
      auto terms = compute_terms(mb);
      const double loss = terms.total.item<double>();
      if (!std::isfinite(loss)) {
        throw std::runtime_error("learner: non-finite loss (" + describe("ppo", terms.losses.ppo) + ", " +
                                 describe("value", terms.losses.value) + ", " + describe("entropy", terms.losses.entropy) +
                                 ", " + describe("distill", terms.losses.distill) + ")");
      }
      optimizer_->zero_grad();
      terms.total.backward();
      const double pre = torch::nn::utils::clip_grad_norm_(params, config_.max_grad_norm);
      const double post = global_grad_norm(params);
      optimizer_->step();

      metrics.loss += loss;
      metrics.ppo += terms.losses.ppo.item<double>();
      metrics.value += terms.losses.value.item<double>();
      metrics.entropy += terms.losses.entropy.item<double>();
      if (terms.losses.distill.defined()) distill_sum += terms.losses.distill.item<double>();
      metrics.grad_norm += pre;
      metrics.grad_norm_clipped = std::max(metrics.grad_norm_clipped, post);
      if (!std::isnan(terms.gate_mean)) {
        gate_sum += terms.gate_mean;
        gate_sq += terms.gate_std * terms.gate_std + terms.gate_mean * terms.gate_mean;
        reliance_sum += terms.reliance_mean;
        ++gate_batches;
      }
      ++metrics.minibatches;
    }
  }
  const double k = metrics.minibatches;
  metrics.loss /= k;
  metrics.ppo /= k;
  metrics.value /= k;
  metrics.entropy /= k;
  metrics.grad_norm /= k;
  if (wiring_.distill) metrics.distill = distill_sum / k;
  if (gate_batches > 0) {
    metrics.gate_mean = gate_sum / gate_batches;
    metrics.gate_std = std::sqrt(std::max(0.0, gate_sq / gate_batches - metrics.gate_mean * metrics.gate_mean));
    metrics.reliance_mean = reliance_sum / gate_batches;
  }

  if (models_.shadow) critic::ema_update(*models_.critic, *models_.shadow, config_.teacher_tau);
  ++updates_;
  return metrics;
}

torch::Tensor Learner::loss_tensor(const RolloutBatch& batch) {
  auto prepared = prepare(batch);
  std::vector<std::size_t> members(batch.size());
  std::iota(members.begin(), members.end(), 0);
  return compute_terms(collate(batch, prepared, members)).total;
}

LossBreakdown Learner::evaluate(const RolloutBatch& batch) {
  auto prepared = prepare(batch);
  std::vector<std::size_t> members(batch.size());
  std::iota(members.begin(), members.end(), 0);
  torch::NoGradGuard no_grad;
  auto terms = compute_terms(collate(batch, prepared, members));
  LossBreakdown out;
  out.total = terms.total.item<double>();
  out.ppo = terms.losses.ppo.item<double>();
  out.value = terms.losses.value.item<double>();
  out.entropy = terms.losses.entropy.item<double>();
  if (terms.losses.distill.defined()) out.distill = terms.losses.distill.item<double>();
  return out;
}

}  // namespace pc3d::learner
