#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "pc3d/policy/actor.hpp"
#include "properties.hpp"

namespace pc3d::policy {
namespace {

ActorConfig small(ConditioningMode mode, bool context = true) {
  ActorConfig c;
  c.obs_width = 6;
  c.action_count = 4;
  c.widths = {8, 8};
  c.rnn_dim = 10;
  c.use_context = context;
  c.context_dim = 5;
  c.mode = mode;
  c.hyper_hidden = 7;
  return c;
}

TEST(Actor, GateOffLeavesFeaturesBitExact) {
  auto r = testing::check_gate_off_identity();
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Actor, GateOnAppliesFullFilm) {
  torch::manual_seed(1);
  Actor actor(small(ConditioningMode::kGateOn));
  auto h = torch::randn({3, 10});
  auto ctx = torch::randn({3, 5});
  auto rel = torch::randn({3});
  auto out = actor->film_condition(h, ctx, rel, ConditioningMode::kGateOn);
  auto film = actor->film_layer()->forward(ctx);
  auto gamma = film.narrow(1, 0, 10), beta = film.narrow(1, 10, 10);
  EXPECT_TRUE(torch::allclose(out.features, h * (1 + gamma) + beta, 0, 1e-12));
  EXPECT_TRUE(torch::equal(out.gate, torch::ones({3})));
}

TEST(Actor, LearnedGateIsSigmoidOfAffineReliance) {
  torch::manual_seed(2);
  Actor actor(small(ConditioningMode::kFilm));
  {
    torch::NoGradGuard no_grad;
    actor->gate_scale().fill_(2.0);
    actor->gate_offset().fill_(-0.5);
  }
  auto rel = torch::tensor({-3.0, 0.0, 1.25});
  auto g = actor->gate(rel, ConditioningMode::kFilm);
  for (int i = 0; i < 3; ++i) {
    const double x = rel[i].item<double>();
    EXPECT_NEAR(g[i].item<double>(), 1.0 / (1.0 + std::exp(-(2.0 * x - 0.5))), 1e-15);
  }
  EXPECT_TRUE(torch::equal(actor->gate(rel, ConditioningMode::kGateOff), torch::zeros({3})));
}

TEST(Actor, RelianceIsClippedToBounds) {
  auto cfg = small(ConditioningMode::kFilm);
  cfg.reliance_min = -3.0;
  cfg.reliance_max = 2.0;
  torch::manual_seed(3);
  Actor actor(cfg);
  auto h = torch::randn({200, 10}) * 50.0;
  auto rel = actor->student_context(h).reliance;
  EXPECT_GE(rel.min().item<double>(), -3.0);
  EXPECT_LE(rel.max().item<double>(), 2.0);
  EXPECT_EQ(rel.min().item<double>(), -3.0);  // large inputs saturate at the bounds
  EXPECT_EQ(rel.max().item<double>(), 2.0);
}

TEST(Actor, HypernetworkLogitsAreAffineInGate) {
  torch::manual_seed(4);
  Actor actor(small(ConditioningMode::kHyper));
  auto h = torch::randn({5, 10});
  auto ctx = torch::randn({5, 5});
  auto at = [&](double g) { return actor->hyper_condition(h, ctx, torch::full({5}, g)); };
  EXPECT_TRUE(torch::allclose(at(0.0), actor->policy_head()->forward(h), 0, 1e-14));
  EXPECT_TRUE(torch::allclose(at(0.5), 0.5 * (at(0.0) + at(1.0)), 0, 1e-12));
}

TEST(Actor, SequenceForwardMatchesStepLoop) {
  torch::manual_seed(5);
  Actor actor(small(ConditioningMode::kFilm));
  auto obs = torch::randn({7, 3, 6});
  auto seq = actor->forward_sequence(obs);
  auto h = actor->initial_state(3);
  for (int t = 0; t < 7; ++t) {
    h = actor->actor_step(obs[t], h);
    auto out = actor->heads(h);
    EXPECT_TRUE(torch::allclose(out.logits, seq.logits[t], 0, 1e-12));
    EXPECT_TRUE(torch::allclose(out.student_context, seq.student_context[t], 0, 1e-12));
  }
}

TEST(Actor, RowsAreIndependent) {
  // Decentralized execution: agent i's outputs depend only on its own observation history.
  torch::manual_seed(6);
  Actor actor(small(ConditioningMode::kFilm));
  auto obs = torch::randn({5, 4, 6});
  auto changed = obs.clone();
  changed.select(1, 2).normal_();
  auto a = actor->forward_sequence(obs), b = actor->forward_sequence(changed);
  for (int i : {0, 1, 3}) EXPECT_TRUE(torch::equal(a.logits.select(1, i), b.logits.select(1, i)));
  EXPECT_FALSE(torch::equal(a.logits.select(1, 2), b.logits.select(1, 2)));
}

TEST(Actor, PlainActorHasNoContextOutputs) {
  Actor actor(small(ConditioningMode::kFilm, false));
  auto out = actor->heads(torch::randn({2, 10}));
  EXPECT_TRUE(out.logits.defined());
  EXPECT_FALSE(out.student_context.defined());
  EXPECT_FALSE(out.gate.defined());
  EXPECT_THROW(actor->student_context(torch::randn({2, 10})), std::logic_error);
}

TEST(Actor, BypassEqualsGateOffPath) {
  torch::manual_seed(7);
  Actor actor(small(ConditioningMode::kGateOff));
  auto obs = torch::randn({6, 3, 6});
  EXPECT_TRUE(torch::equal(actor->forward_sequence(obs).logits, actor->forward_sequence(obs, true).logits));
}

TEST(Actor, ModeStrings) {
  for (auto m : {ConditioningMode::kFilm, ConditioningMode::kHyper, ConditioningMode::kGateOff, ConditioningMode::kGateOn}) {
    EXPECT_EQ(conditioning_from_string(to_string(m)), m);
  }
  EXPECT_THROW(conditioning_from_string("sideways"), ConfigError);
}

TEST(Categorical, UniformEntropyAndGreedy) {
  CategoricalDistribution d(torch::zeros({2, 5}));
  EXPECT_NEAR(d.entropy()[0].item<double>(), std::log(5.0), 1e-15);
  CategoricalDistribution peaked(torch::tensor({{0.0, 3.0, 1.0}}));
  EXPECT_EQ(peaked.greedy()[0].item<std::int64_t>(), 1);
  EXPECT_THROW(CategoricalDistribution(torch::tensor({{0.0, std::numeric_limits<double>::quiet_NaN()}})), std::domain_error);
}

TEST(Categorical, SamplingFrequenciesMatchProbabilities) {
  auto logits = torch::log(torch::tensor({{0.1, 0.2, 0.7}}));
  CategoricalDistribution d(logits);
  Rng rng(8);
  std::vector<int> counts(3, 0);
  const int draws = 50000;
  for (int i = 0; i < draws; ++i) ++counts[d.sample(rng)[0].item<std::int64_t>()];
  EXPECT_NEAR(counts[0] / double(draws), 0.1, 0.01);
  EXPECT_NEAR(counts[2] / double(draws), 0.7, 0.01);
  EXPECT_NEAR(d.log_prob(torch::tensor({2}, torch::kLong))[0].item<double>(), std::log(0.7), 1e-12);
}

}  // namespace
}  // namespace pc3d::policy
