#include <gtest/gtest.h>

#include "pc3d/learner/learner.hpp"
#include "pc3d/nn/common.hpp"
#include "properties.hpp"

namespace pc3d::learner {
namespace {

using testing::collect_batch;
using testing::small_model;

struct Fixture {
  env::EnvTemplateSpec spec = env::make_template("spread");
  ModelConfig model = small_model();
  LearnerConfig config;
};

std::vector<torch::Tensor> snapshot(const std::vector<torch::Tensor>& params) {
  std::vector<torch::Tensor> out;
  for (const auto& p : params) out.push_back(p.detach().clone());
  return out;
}

TEST(Wiring, MethodTable) {
  EXPECT_EQ(wiring_for(Method::kIppo, Ablation::kNone).critic, critic::CriticKind::kLocal);
  EXPECT_EQ(wiring_for(Method::kMappo, Ablation::kNone).critic, critic::CriticKind::kPadded);
  EXPECT_EQ(wiring_for(Method::kPic, Ablation::kNone).critic, critic::CriticKind::kMeanPool);
  auto pc3d = wiring_for(Method::kPc3d, Ablation::kNone);
  EXPECT_EQ(pc3d.critic, critic::CriticKind::kSetTeacher);
  EXPECT_TRUE(pc3d.student_context);
  EXPECT_TRUE(pc3d.distill);
  EXPECT_EQ(pc3d.mode, policy::ConditioningMode::kFilm);
  EXPECT_EQ(wiring_for(Method::kHyperPc3d, Ablation::kNone).mode, policy::ConditioningMode::kHyper);
  EXPECT_EQ(wiring_for(Method::kPc3d, Ablation::kGateOff).mode, policy::ConditioningMode::kGateOff);
  EXPECT_EQ(wiring_for(Method::kPc3d, Ablation::kGateOn).mode, policy::ConditioningMode::kGateOn);
  // The term is still computed for logging; the ablation zeroes its weight.
  EXPECT_TRUE(wiring_for(Method::kPc3d, Ablation::kNoDistill).distill);
  EXPECT_THROW(wiring_for(Method::kMappo, Ablation::kGateOff), ConfigError);
  EXPECT_THROW(method_from_string("qmix"), ConfigError);
  EXPECT_THROW(ablation_from_string("half"), ConfigError);
  EXPECT_EQ(method_from_string(to_string(Method::kHyperPc3d)), Method::kHyperPc3d);
}

TEST(Config, ValidationRejectsInconsistentSettings) {
  LearnerConfig c;
  EXPECT_NO_THROW(c.validate());
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.ablation = Ablation::kNoDistill;
  EXPECT_THROW(c.validate(), ConfigError);
  c.distill_weight = 0.0;
  EXPECT_NO_THROW(c.validate());
  c = {};
  c.ablation = Ablation::kGateOff;
  EXPECT_THROW(c.validate(), ConfigError);
  c.mode = policy::ConditioningMode::kGateOff;
  EXPECT_NO_THROW(c.validate());
  c = {};
  c.gae_lambda = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Learner, WiringMustMatchModels) {
  Fixture f;
  auto mappo = build_models(wiring_for(Method::kMappo, Ablation::kNone), f.model, f.config, f.spec);
  EXPECT_THROW(Learner(wiring_for(Method::kPic, Ablation::kNone), f.config, mappo, 1), std::invalid_argument);
  EXPECT_THROW(Learner(wiring_for(Method::kIppo, Ablation::kNone), f.config, mappo, 1), std::invalid_argument);
}

TEST(Learner, StaleOrEmptyBatchThrows) {
  Fixture f;
  auto wiring = wiring_for(Method::kPc3d, Ablation::kNone);
  auto models = build_models(wiring, f.model, f.config, f.spec);
  Learner learner(wiring, f.config, models, 1);
  auto batch = collect_batch(*models.actor, f.spec, {2}, 3);
  batch[0].log_probs = torch::Tensor();
  EXPECT_THROW(learner.update(batch), std::invalid_argument);
  EXPECT_THROW(learner.update({Episode{}}), std::invalid_argument);
}

TEST(Learner, ZeroLearningRateLeavesParametersButAdvancesShadow) {
  Fixture f;
  f.config.lr = 0.0;
  auto wiring = wiring_for(Method::kPc3d, Ablation::kNone);
  torch::manual_seed(4);
  auto models = build_models(wiring, f.model, f.config, f.spec);
  {
    torch::NoGradGuard no_grad;
    for (auto& p : models.shadow->parameters()) p.zero_();
  }
  Learner learner(wiring, f.config, models, 1);
  auto before = snapshot(models.trainable_parameters());
  auto live = snapshot(models.teacher()->parameters());
  auto batch = collect_batch(*models.actor, f.spec, {2, 3, 4}, 5);
  auto m = learner.update(batch);
  auto after = models.trainable_parameters();
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_TRUE(torch::equal(before[i], after[i]));
  auto shadow = models.shadow->parameters();
  for (std::size_t i = 0; i < shadow.size(); ++i) {
    EXPECT_TRUE(torch::allclose(shadow[i], f.config.teacher_tau * live[i], 0.0, 1e-15));
  }
  EXPECT_EQ(learner.updates(), 1);
  EXPECT_GT(m.minibatches, 0);
  EXPECT_EQ(m.decision_pairs, batch[0].decision_pairs() + batch[1].decision_pairs() + batch[2].decision_pairs());
  EXPECT_TRUE(std::isfinite(m.distill));
  EXPECT_TRUE(std::isfinite(m.gate_mean));
}

TEST(Learner, ClippedGradientNormRespectsBound) {
  Fixture f;
  f.config.max_grad_norm = 0.05;
  f.config.ppo_epochs = 2;
  auto wiring = wiring_for(Method::kPc3d, Ablation::kNone);
  auto models = build_models(wiring, f.model, f.config, f.spec);
  Learner learner(wiring, f.config, models, 2);
  auto m = learner.update(collect_batch(*models.actor, f.spec, {3, 4, 2}, 6));
  EXPECT_GT(m.grad_norm, f.config.max_grad_norm);
  EXPECT_LE(m.grad_norm_clipped, f.config.max_grad_norm * (1.0 + 1e-6));
}

TEST(Learner, UpdateChangesParametersAndIsDeterministic) {
  Fixture f;
  f.config.ppo_epochs = 2;
  auto wiring = wiring_for(Method::kPc3d, Ablation::kNone);
  auto run = [&] {
    torch::manual_seed(8);
    auto models = build_models(wiring, f.model, f.config, f.spec);
    Learner learner(wiring, f.config, models, 9);
    auto batch = collect_batch(*models.actor, f.spec, {1, 2, 3, 4}, 10);
    auto before = snapshot(models.trainable_parameters());
    auto m = learner.update(batch);
    bool moved = false;
    auto after = models.trainable_parameters();
    for (std::size_t i = 0; i < before.size(); ++i) moved = moved || !torch::equal(before[i], after[i]);
    EXPECT_TRUE(moved);
    return std::make_pair(m.loss, snapshot(after));
  };
  auto [la, pa] = run();
  auto [lb, pb] = run();
  EXPECT_EQ(la, lb);
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_TRUE(torch::equal(pa[i], pb[i]));
}

TEST(Learner, DistillTargetIsDetachedFromTeacher) {
  // The teacher's gradient must not depend on the distillation weight.
  Fixture f;
  auto wiring = wiring_for(Method::kPc3d, Ablation::kNone);
  torch::manual_seed(11);
  auto models = build_models(wiring, f.model, f.config, f.spec);
  {
    torch::NoGradGuard no_grad;
    for (auto& p : models.shadow->parameters()) p.add_(0.2 * torch::randn_like(p));
  }
  auto batch = collect_batch(*models.actor, f.spec, {2, 3}, 12);
  auto teacher_grads = [&](double weight) {
    auto cfg = f.config;
    cfg.distill_weight = weight;
    Learner learner(wiring, cfg, models, 1);
    for (auto& p : models.trainable_parameters()) p.mutable_grad() = torch::Tensor();
    learner.loss_tensor(batch).backward();
    std::vector<torch::Tensor> g;
    for (auto& p : models.teacher()->parameters()) g.push_back(p.grad().clone());
    return g;
  };
  auto g0 = teacher_grads(1e-9);
  auto g1 = teacher_grads(5.0);
  for (std::size_t i = 0; i < g0.size(); ++i) EXPECT_TRUE(torch::allclose(g0[i], g1[i], 1e-12, 1e-14));
}

TEST(Learner, GateOffStillReportsDistillation) {
  Fixture f;
  f.config.mode = policy::ConditioningMode::kGateOff;
  f.config.ablation = Ablation::kGateOff;
  auto wiring = wiring_for(Method::kPc3d, Ablation::kGateOff);
  auto models = build_models(wiring, f.model, f.config, f.spec);
  Learner learner(wiring, f.config, models, 1);
  auto e = learner.evaluate(collect_batch(*models.actor, f.spec, {2, 2}, 13));
  EXPECT_TRUE(std::isfinite(e.distill));
  EXPECT_GT(e.distill, 0.0);
}

TEST(Learner, BaselinesTrainWithoutTeacher) {
  Fixture f;
  f.config.distill_weight = 0.0;
  for (auto method : {Method::kIppo, Method::kMappo, Method::kPic}) {
    auto wiring = wiring_for(method, Ablation::kNone);
    auto models = build_models(wiring, f.model, f.config, f.spec);
    EXPECT_EQ(models.teacher(), nullptr);
    Learner learner(wiring, f.config, models, 1);
    auto m = learner.update(collect_batch(*models.actor, f.spec, {1, 3}, 14));
    EXPECT_TRUE(std::isfinite(m.loss)) << to_string(method);
    EXPECT_TRUE(std::isnan(m.distill));
  }
}

TEST(Properties, MappoDegeneracy) {
  auto r = testing::check_mappo_degeneracy(1e-6);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Properties, GradientFiniteDifference) {
  auto r = testing::check_gradient_finite_difference(1e-4);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Properties, EmaDegeneracy) {
  auto r = testing::check_ema_degeneracy();
  EXPECT_TRUE(r.pass) << r.detail;
}

}  // namespace
}  // namespace pc3d::learner
