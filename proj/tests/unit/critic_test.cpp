#include <gtest/gtest.h>

#include "pc3d/critic/critics.hpp"
#include "properties.hpp"

namespace pc3d::critic {
namespace {

SetTeacherConfig teacher_cfg(bool size_feature = true) {
  SetTeacherConfig c;
  c.obs_width = 5;
  c.encoder_widths = {12};
  c.embed_dim = 4;
  c.tokens = 3;
  c.value_widths = {10};
  c.team_size_feature = size_feature;
  c.max_roster = 10;
  return c;
}

TEST(SetTeacher, PermutationInvarianceAndEquivariance) {
  auto r = testing::check_permutation_invariance(5, 5, 1e-6);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(SetTeacher, ConvexHullWeights) {
  auto r = testing::check_convex_hull(1e-12);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(SetTeacher, MatchesLoopOracle) {
  auto r = testing::check_attention_oracle(1e-9);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(SetTeacher, SingleAgentTokensEqualItsEmbedding) {
  torch::manual_seed(1);
  SetTeacherImpl t(teacher_cfg());
  auto out = t.forward(torch::randn({1, 1, 5}), torch::ones({1, 1}, torch::kBool));
  for (int k = 0; k < 3; ++k) EXPECT_TRUE(torch::allclose(out.tokens[0][k], out.embeddings[0][0], 0, 1e-15));
  EXPECT_TRUE(torch::allclose(out.contexts[0][0], out.embeddings[0][0], 0, 1e-15));
}

TEST(SetTeacher, VariableRosterWithSameParameters) {
  torch::manual_seed(2);
  SetTeacherImpl t(teacher_cfg());
  for (int n = 1; n <= 10; ++n) {
    auto out = t.forward(torch::randn({2, n, 5}), torch::ones({2, n}, torch::kBool));
    EXPECT_EQ(out.tokens.sizes(), (std::vector<int64_t>{2, 3, 4}));
    EXPECT_EQ(out.contexts.sizes(), (std::vector<int64_t>{2, n, 4}));
    EXPECT_EQ(out.value.sizes(), (std::vector<int64_t>{2}));
  }
}

TEST(SetTeacher, MaskedSlotsAreIgnored) {
  torch::manual_seed(3);
  SetTeacherImpl t(teacher_cfg());
  auto obs = torch::randn({1, 3, 5});
  auto padded = torch::cat({obs, torch::randn({1, 2, 5}) * 100.0}, 1);
  auto mask = torch::tensor({{true, true, true, false, false}});
  auto a = t.forward(obs, torch::ones({1, 3}, torch::kBool));
  auto b = t.forward(padded, mask);
  EXPECT_TRUE(torch::allclose(a.tokens, b.tokens, 0, 1e-12));
  EXPECT_TRUE(torch::allclose(a.value, b.value, 0, 1e-12));
  EXPECT_EQ(b.attention.narrow(2, 3, 2).abs().max().item<double>(), 0.0);
}

TEST(SetTeacher, ZeroValueHeadGivesBias) {
  torch::manual_seed(4);
  SetTeacherImpl t(teacher_cfg());
  {
    torch::NoGradGuard no_grad;
    for (auto& p : t.named_parameters()) {
      if (p.key().rfind("value_head", 0) == 0) p.value().zero_();
    }
    auto last = t.named_parameters().find("value_head.2.bias");
    ASSERT_NE(last, nullptr);
    last->fill_(0.75);
  }
  auto v = t.value(torch::randn({3, 4, 5}), torch::ones({3, 4}, torch::kBool));
  EXPECT_TRUE(torch::equal(v, torch::full({3}, 0.75)));
}

TEST(SetTeacher, SizeFeatureDistinguishesDuplicatedTeams) {
  torch::manual_seed(5);
  SetTeacherImpl with(teacher_cfg(true));
  auto o = torch::randn({1, 1, 5});
  auto one = with.value(o, torch::ones({1, 1}, torch::kBool));
  auto two = with.value(torch::cat({o, o}, 1), torch::ones({1, 2}, torch::kBool));
  EXPECT_GT((one - two).abs().item<double>(), 0.0);
}

TEST(PaddedCritic, LayoutAndLimits) {
  torch::manual_seed(6);
  PaddedCriticImpl c({3, 4, {8}});
  auto obs = torch::randn({1, 2, 3});
  auto row = c.padded_input(obs, torch::ones({1, 2}, torch::kBool));
  ASSERT_EQ(row.size(1), 4 * 4);
  EXPECT_TRUE(torch::equal(row.narrow(1, 0, 6).view({2, 3}), obs[0]));
  EXPECT_EQ(row.narrow(1, 6, 6).abs().sum().item<double>(), 0.0);
  EXPECT_TRUE(torch::equal(row.narrow(1, 12, 4)[0], torch::tensor({1.0, 1.0, 0.0, 0.0})));
  auto full = torch::randn({1, 4, 3});
  auto full_row = c.padded_input(full, torch::ones({1, 4}, torch::kBool));
  EXPECT_TRUE(torch::equal(full_row.narrow(1, 12, 4)[0], torch::ones({4})));
  EXPECT_THROW(c.value(torch::randn({1, 5, 3}), torch::ones({1, 5}, torch::kBool)), std::invalid_argument);
}

TEST(PaddedCritic, NotPermutationInvariant) {
  torch::manual_seed(7);
  PaddedCriticImpl c({3, 4, {8}});
  auto obs = torch::randn({1, 3, 3});
  auto swapped = obs.index_select(1, torch::tensor({1, 0, 2}));
  auto mask = torch::ones({1, 3}, torch::kBool);
  EXPECT_GT((c.value(obs, mask) - c.value(swapped, mask)).abs().item<double>(), 1e-9);
}

TEST(MeanPoolCritic, InvariantAndBlindToDuplicatesWithoutSizeFeature) {
  torch::manual_seed(8);
  MeanPoolCriticImpl c({3, {8}, 4, {8}, false, 10});
  auto obs = torch::randn({1, 4, 3});
  auto mask = torch::ones({1, 4}, torch::kBool);
  auto perm = obs.index_select(1, torch::tensor({3, 1, 0, 2}));
  EXPECT_TRUE(torch::allclose(c.value(obs, mask), c.value(perm, mask), 0, 1e-12));
  auto o = obs.narrow(1, 0, 1);
  auto one = c.value(o, torch::ones({1, 1}, torch::kBool));
  auto two = c.value(torch::cat({o, o}, 1), torch::ones({1, 2}, torch::kBool));
  EXPECT_TRUE(torch::allclose(one, two, 0, 1e-15));
  MeanPoolCriticImpl sized({3, {8}, 4, {8}, true, 10});
  auto s1 = sized.value(o, torch::ones({1, 1}, torch::kBool));
  auto s2 = sized.value(torch::cat({o, o}, 1), torch::ones({1, 2}, torch::kBool));
  EXPECT_GT((s1 - s2).abs().item<double>(), 0.0);
}

TEST(Ema, DegenerateRatesAndPublishedRate) {
  auto r = testing::check_ema_degeneracy();
  EXPECT_TRUE(r.pass) << r.detail;
  SetTeacherImpl live(teacher_cfg()), shadow(teacher_cfg());
  {
    torch::NoGradGuard no_grad;
    for (auto& p : live.parameters()) p.fill_(1.0);
    for (auto& p : shadow.parameters()) p.zero_();
  }
  ema_update(live, shadow, 0.02);
  for (const auto& p : shadow.parameters()) EXPECT_TRUE(torch::allclose(p, torch::full_like(p, 0.02), 0, 1e-15));
  SetTeacherConfig other = teacher_cfg();
  other.embed_dim = 6;
  SetTeacherImpl mismatched(other);
  EXPECT_THROW(ema_update(live, mismatched, 0.5), std::invalid_argument);
}

}  // namespace
}  // namespace pc3d::critic
