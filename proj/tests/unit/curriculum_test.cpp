#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include "pc3d/curriculum.hpp"

namespace pc3d::curriculum {
namespace {

TEST(Presets, SpreadStagesMatchPublishedCurriculum) {
  auto p = preset("spread-paper");
  ASSERT_EQ(p.stages.size(), 4u);
  EXPECT_EQ(p.stages[0].roster_counts, (std::vector<int>{1, 2}));
  EXPECT_EQ(p.stages[0].probabilities, (std::vector<double>{0.40, 0.60}));
  EXPECT_DOUBLE_EQ(p.stages[0].episode_fraction, 0.133);
  EXPECT_EQ(p.stages[1].roster_counts, (std::vector<int>{1, 2, 4}));
  EXPECT_EQ(p.stages[1].probabilities, (std::vector<double>{0.18, 0.27, 0.55}));
  EXPECT_DOUBLE_EQ(p.stages[1].episode_fraction, 0.167);
  EXPECT_EQ(p.stages[2].roster_counts, (std::vector<int>{1, 2, 4, 6}));
  EXPECT_EQ(p.stages[2].probabilities, (std::vector<double>{0.10, 0.15, 0.30, 0.45}));
  EXPECT_DOUBLE_EQ(p.stages[2].episode_fraction, 0.200);
  EXPECT_EQ(p.stages[3].roster_counts, (std::vector<int>{1, 2, 4, 6, 8}));
  EXPECT_EQ(p.stages[3].probabilities, (std::vector<double>{0.06, 0.09, 0.18, 0.27, 0.40}));
  EXPECT_DOUBLE_EQ(p.stages[3].episode_fraction, 0.500);
  EXPECT_EQ(p.split.train, (std::set<int>{1, 2, 4, 6, 8}));
  EXPECT_EQ(p.split.validation, (std::set<int>{3, 5, 7}));
  EXPECT_EQ(p.split.test, (std::set<int>{9, 10}));
}

TEST(Presets, LbfAndWarehouseStages) {
  auto lbf = preset("lbf-paper");
  ASSERT_EQ(lbf.stages.size(), 4u);
  EXPECT_EQ(lbf.stages[0].roster_counts, (std::vector<int>{2}));
  EXPECT_EQ(lbf.stages[3].probabilities, (std::vector<double>{0.10, 0.20, 0.70}));
  EXPECT_DOUBLE_EQ(lbf.stages[3].episode_fraction, 0.30);
  EXPECT_EQ(lbf.split.test, (std::set<int>{7, 8}));
  auto rw = preset("rware-paper");
  EXPECT_EQ(rw.stages[0].probabilities, (std::vector<double>{0.65, 0.35}));
  EXPECT_EQ(rw.stages[3].probabilities, (std::vector<double>{0.05, 0.10, 0.20, 0.65}));
  EXPECT_EQ(rw.split.train, (std::set<int>{2, 4, 6, 8}));
  for (const auto& name : preset_names()) {
    auto p = preset(name);
    double total = 0.0;
    for (const auto& s : p.stages) {
      EXPECT_NO_THROW(s.validate());
      total += s.episode_fraction;
    }
    EXPECT_NEAR(total, 1.0, 1e-9) << name;
    EXPECT_NO_THROW(p.split.validate());
  }
  EXPECT_THROW(preset("nope"), ConfigError);
}

TEST(Stages, SpreadBoundariesOverTwentyThousandEpisodes) {
  const auto stages = preset("spread-paper").stages;
  std::vector<long> per_stage(4, 0);
  for (long e = 0; e < 20000; ++e) ++per_stage[stage_index_for_episode(e, 20000, stages)];
  EXPECT_EQ(per_stage, (std::vector<long>{2660, 3340, 4000, 10000}));
  EXPECT_EQ(stage_index_for_episode(2659, 20000, stages), 0);
  EXPECT_EQ(stage_index_for_episode(2660, 20000, stages), 1);  // boundary goes to the later stage
  EXPECT_EQ(stage_index_for_episode(10000, 20000, stages), 3);
}

TEST(Stages, ValidationRejectsBadInput) {
  CurriculumStage bad{{1, 2}, {0.5, 0.6}, 1.0};
  EXPECT_THROW(bad.validate(), ConfigError);
  CurriculumStage mismatch{{1, 2}, {1.0}, 1.0};
  EXPECT_THROW(mismatch.validate(), ConfigError);
  RosterSplit overlap{{1, 2}, {2}, {3}};
  EXPECT_THROW(overlap.validate(), ConfigError);
  std::vector<CurriculumStage> short_fractions = {{{1}, {1.0}, 0.5}};
  EXPECT_THROW(stage_index_for_episode(0, 10, short_fractions), ConfigError);
}

TEST(Sampling, SingleCountStageAlwaysReturnsIt) {
  CurriculumStage s{{6}, {1.0}, 1.0};
  Rng rng(3);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_roster(s, rng), 6);
}

TEST(Sampling, HistogramPassesChiSquareForEveryFullLengthStage) {
  for (const char* name : {"spread-paper", "lbf-paper", "rware-paper"}) {
    int index = 0;
    for (const auto& stage : preset(name).stages) {
      Rng rng(1000 + index);
      std::vector<long> observed(stage.roster_counts.size(), 0);
      for (int i = 0; i < 100000; ++i) {
        const int n = sample_roster(stage, rng);
        auto it = std::find(stage.roster_counts.begin(), stage.roster_counts.end(), n);
        ASSERT_NE(it, stage.roster_counts.end());
        ++observed[it - stage.roster_counts.begin()];
      }
      if (stage.roster_counts.size() > 1) {
        boost::math::chi_squared dist(static_cast<double>(stage.roster_counts.size() - 1));
        const double critical = boost::math::quantile(boost::math::complement(dist, 0.01));
        EXPECT_LT(chi_square_statistic(observed, stage.probabilities), critical) << name << " stage " << index;
      }
      ++index;
    }
  }
}

TEST(Splits, MembershipAndErrors) {
  auto p = preset("spread-paper");
  EXPECT_EQ(split_membership(9, p.split), Split::kTest);
  EXPECT_EQ(split_membership(5, p.split), Split::kValidation);
  EXPECT_EQ(split_membership(8, p.split), Split::kTrain);
  EXPECT_THROW(split_membership(11, p.split), ConfigError);
  EXPECT_EQ(to_string(Split::kValidation), "validation");
}

TEST(ChiSquare, KnownValue) {
  // (45-50)^2/50 + (55-50)^2/50 = 1
  EXPECT_DOUBLE_EQ(chi_square_statistic({45, 55}, {0.5, 0.5}), 1.0);
}

}  // namespace
}  // namespace pc3d::curriculum
