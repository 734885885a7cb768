#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pc3d/harness/checkpoint.hpp"
#include "pc3d/harness/config.hpp"
#include "pc3d/harness/diagnostics.hpp"
#include "pc3d/harness/evaluation.hpp"
#include "pc3d/harness/report.hpp"
#include "pc3d/harness/sweep.hpp"
#include "pc3d/harness/trainer.hpp"

namespace pc3d::harness {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("pc3d_harness_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 24 episodes of spread with small networks: three learner updates.
json tiny_document(const std::string& method = "pc3d") {
  return {{"inherits", "smoke"},
          {"name", "tiny"},
          {"method", method},
          {"total_episodes", 24},
          {"eval_rollouts_per_count", 2},
          {"checkpoint_every_updates", 1},
          {"learner", {{"update_every_episodes", 8}, {"ppo_epochs", 2}, {"batch_size", 32}}},
          {"model",
           {{"actor_widths", {16, 16}},
            {"rnn_dim", 12},
            {"critic_widths", {16, 12}},
            {"set_embed_dim", 6},
            {"set_encoder_widths", {12}},
            {"hyper_hidden", 8}}}};
}

RunConfig tiny_config(const std::string& method = "pc3d") { return config_from_json(tiny_document(method)); }

// One trained tiny run shared by the tests that only read artifacts.
class TrainedRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new fs::path(scratch("trained"));
    config_ = new RunConfig(tiny_config());
    dir_ = new fs::path(run_directory(*root_, *config_, 0));
    run_training(*config_, 0, *dir_, {});
  }
  static void TearDownTestSuite() {
    delete root_;
    delete config_;
    delete dir_;
  }
  static fs::path* root_;
  static RunConfig* config_;
  static fs::path* dir_;
};
fs::path* TrainedRun::root_ = nullptr;
RunConfig* TrainedRun::config_ = nullptr;
fs::path* TrainedRun::dir_ = nullptr;

TEST(Config, EveryPresetResolvesAndValidates) {
  for (const auto& name : run_preset_names()) {
    auto config = config_from_json(run_preset(name));
    EXPECT_NO_THROW(config.validate()) << name;
    EXPECT_EQ(config.name, name);
  }
  auto desk = config_from_json(run_preset("spread-desk"));
  EXPECT_EQ(desk.total_episodes, 2500);
  EXPECT_EQ(desk.seeds, (std::vector<std::uint64_t>{0, 1, 2}));
  EXPECT_EQ(desk.task, "spread");
  EXPECT_THROW(run_preset("nope"), ConfigError);
}

TEST(Config, FullLengthPresetBudgetsAndStages) {
  auto spread = config_from_json(run_preset("spread-paper"));
  EXPECT_EQ(spread.total_episodes, 20000);
  EXPECT_EQ(spread.seeds.size(), 5u);
  double total = 0.0;
  for (const auto& s : spread.curriculum.stages) total += s.episode_fraction;
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_EQ(config_from_json(run_preset("lbf-paper")).total_episodes, 12000);
  EXPECT_EQ(default_total_episodes("rware-adapter"), 20000);
}

TEST(Config, HyperparameterTableValues) {
  auto [l, m] = final_hyperparameters("spread", learner::Method::kPc3d);
  EXPECT_DOUBLE_EQ(l.lr, 1.84e-3);
  EXPECT_EQ(l.batch_size, 128);
  EXPECT_EQ(l.ppo_epochs, 8);
  EXPECT_DOUBLE_EQ(l.clip_eps, 0.15);
  EXPECT_DOUBLE_EQ(l.distill_weight, 0.257);
  EXPECT_EQ(m.critic_widths, (std::vector<int>{192, 160}));
  EXPECT_EQ(m.actor_widths, (std::vector<int>{128, 256, 128}));
  auto [li, mi] = final_hyperparameters("lbf", learner::Method::kIppo);
  EXPECT_DOUBLE_EQ(li.entropy_coef, 8.24e-3);
  EXPECT_EQ(mi.rnn_dim, 64);
  auto [lr, mr] = final_hyperparameters("rware-adapter", learner::Method::kPc3d);
  EXPECT_EQ(lr.tokens, 5);
  EXPECT_FALSE(mr.team_size_feature);
  EXPECT_EQ(mr.set_embed_dim, 96);
  auto [lp, mp] = final_hyperparameters("lbf", learner::Method::kPic);
  EXPECT_EQ(mp.set_embed_dim, 96);
  EXPECT_DOUBLE_EQ(lp.lr, 4.63e-4);  // chained from MAPPO
  EXPECT_THROW(final_hyperparameters("chess", learner::Method::kMappo), ConfigError);
}

TEST(Config, MethodSelectsItsOwnColumn) {
  auto ippo = config_from_json({{"inherits", "spread-paper"}, {"method", "ippo"}});
  EXPECT_DOUBLE_EQ(ippo.learner.lr, 1.46e-4);
  EXPECT_EQ(ippo.learner.update_every_episodes, 2);
  auto ablated = config_from_json({{"inherits", "spread-paper"}, {"ablation", "no_distill"}});
  EXPECT_EQ(ablated.learner.distill_weight, 0.0);
  auto gate_on = config_from_json({{"inherits", "spread-paper"}, {"ablation", "gate_on"}});
  EXPECT_EQ(gate_on.learner.mode, policy::ConditioningMode::kGateOn);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  auto doc = tiny_document();
  doc["learning_rate"] = 0.1;
  EXPECT_THROW(config_from_json(doc), ConfigError);
  doc = tiny_document();
  doc["learner"]["lr"] = -1.0;
  EXPECT_THROW(config_from_json(doc), ConfigError);
  doc = tiny_document();
  doc["method"] = "vdn";
  EXPECT_THROW(config_from_json(doc), ConfigError);
  doc = tiny_document("mappo");
  doc["ablation"] = "gate_off";
  EXPECT_THROW(config_from_json(doc), ConfigError);
}

TEST(Config, FileInheritanceAndCycles) {
  auto dir = scratch("inherit");
  std::ofstream(dir / "base.json") << tiny_document().dump();
  std::ofstream(dir / "child.json") << json{{"inherits", (dir / "base.json").string()}, {"total_episodes", 40}}.dump();
  auto child = load_config((dir / "child.json").string());
  EXPECT_EQ(child.total_episodes, 40);
  EXPECT_EQ(child.model.rnn_dim, 12);
  std::ofstream(dir / "a.json") << json{{"inherits", (dir / "b.json").string()}}.dump();
  std::ofstream(dir / "b.json") << json{{"inherits", (dir / "a.json").string()}}.dump();
  EXPECT_THROW(load_config((dir / "a.json").string()), ConfigError);
}

TEST(Config, RoundTripAndFingerprint) {
  auto config = tiny_config();
  auto again = config_from_json(to_json(config));
  EXPECT_EQ(to_json(again), to_json(config));
  EXPECT_EQ(fingerprint(again), fingerprint(config));
  auto reseeded = config;
  reseeded.seeds = {4, 5};
  reseeded.eval_rollouts_per_count = 50;
  EXPECT_EQ(fingerprint(reseeded), fingerprint(config));
  auto changed = config;
  changed.learner.lr *= 2.0;
  EXPECT_NE(fingerprint(changed), fingerprint(config));
}

TEST(Checkpoint, BitExactRoundTrip) {
  auto config = tiny_config();
  torch::manual_seed(3);
  auto wiring = learner::wiring_for(config.method, config.ablation);
  auto spec = config.env_spec();
  learner::Learner learner(wiring, config.learner, learner::build_models(wiring, config.model, config.learner, spec), 5);
  learner.shuffle_rng().discard(17);
  auto ckpt = snapshot(learner, config, 7, {{"episode", 3}});
  auto path = scratch("ckpt") / "x.ckpt";
  write_checkpoint(path, ckpt);
  auto back = read_checkpoint(path);
  EXPECT_EQ(back.fingerprint, ckpt.fingerprint);
  EXPECT_EQ(back.meta, ckpt.meta);
  EXPECT_EQ(back.optimizer_state, ckpt.optimizer_state);
  ASSERT_EQ(back.tensors.size(), ckpt.tensors.size());
  for (const auto& [name, t] : ckpt.tensors) {
    ASSERT_TRUE(back.tensors.contains(name)) << name;
    EXPECT_TRUE(torch::equal(back.tensors.at(name), t)) << name;
  }

  torch::manual_seed(99);
  learner::Learner fresh(wiring, config.learner, learner::build_models(wiring, config.model, config.learner, spec), 0);
  restore(fresh, back);
  auto a = learner.models().trainable_parameters();
  auto b = fresh.models().trainable_parameters();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(torch::equal(a[i], b[i]));
  EXPECT_EQ(fresh.shuffle_rng()(), learner.shuffle_rng()());

  auto other = config;
  other.model.rnn_dim = 10;
  learner::Learner mismatched(wiring, other.learner, learner::build_models(wiring, other.model, other.learner, spec), 0);
  EXPECT_THROW(restore(mismatched, back), std::runtime_error);
}

TEST(Checkpoint, CorruptFileRejected) {
  auto path = scratch("corrupt") / "bad.ckpt";
  std::ofstream(path) << "not a checkpoint";
  EXPECT_THROW(read_checkpoint(path), std::runtime_error);
}

TEST(Training, ResumeMatchesUninterruptedRun) {
  auto config = tiny_config();
  auto root = scratch("resume");
  auto straight = root / "straight";
  auto split = root / "split";
  run_training(config, 0, straight, {});
  TrainOptions stop;
  stop.stop_after_updates = 1;
  auto partial = run_training(config, 0, split, stop);
  EXPECT_FALSE(partial.completed);
  auto resumed = run_training(config, 0, split, {});
  EXPECT_TRUE(resumed.resumed);
  EXPECT_TRUE(resumed.completed);
  EXPECT_EQ(slurp(straight / "metrics.jsonl"), slurp(split / "metrics.jsonl"));
  EXPECT_EQ(slurp(straight / "train_returns.jsonl"), slurp(split / "train_returns.jsonl"));
  auto a = read_checkpoint(straight / "checkpoints" / "final.ckpt");
  auto b = read_checkpoint(split / "checkpoints" / "final.ckpt");
  for (const auto& [name, t] : a.tensors) EXPECT_TRUE(torch::equal(t, b.tensors.at(name))) << name;

  auto other = config;
  other.learner.lr = 1e-2;
  EXPECT_THROW(run_training(other, 0, split, {}), ConfigError);
}

TEST_F(TrainedRun, ArtifactsWritten) {
  for (const char* f : {"config.json", "run.json", "metrics.jsonl", "train_returns.jsonl", "checkpoints/initial.ckpt",
                        "checkpoints/final.ckpt", "checkpoints/latest.ckpt"}) {
    EXPECT_TRUE(fs::exists(*dir_ / f)) << f;
  }
  auto run = json::parse(slurp(*dir_ / "run.json"));
  EXPECT_EQ(run["episodes"], 24);
  EXPECT_EQ(run["updates"], 3);
  EXPECT_TRUE(run["complete"].get<bool>());
}

TEST_F(TrainedRun, EvaluationAuditsAndIsolatesCounts) {
  auto ckpt = *dir_ / "checkpoints" / "final.ckpt";
  auto report = evaluate_split(ckpt, config_->curriculum.split, 2);
  EXPECT_LE(audit_report(report), 1e-9);
  EXPECT_EQ(report.policy, "greedy");
  ASSERT_EQ(report.seeds.size(), 1u);
  for (const auto& c : report.seeds[0].counts) EXPECT_EQ(c.returns.size(), 2u);
  EXPECT_FALSE(report.splits.at("test").std.has_value());

  // Returns of one count do not depend on which other counts are evaluated.
  curriculum::RosterSplit only_test;
  only_test.test = {3};
  auto policy = load_policy(read_checkpoint(ckpt));
  auto alone = evaluate_policy(policy, only_test, 2);
  auto full = evaluate_policy(policy, config_->curriculum.split, 2);
  for (const auto& c : full.counts) {
    if (c.count == 3) EXPECT_EQ(c.returns, alone.counts.at(0).returns);
  }

  auto single = evaluate_split(ckpt, config_->curriculum.split, 1);
  EXPECT_LE(audit_report(single), 1e-9);
  EXPECT_THROW(evaluate_split(ckpt, config_->curriculum.split, 0), ConfigError);
  curriculum::RosterSplit bad;
  bad.test = {40};
  EXPECT_THROW(evaluate_split(ckpt, bad, 1), ConfigError);
}

TEST_F(TrainedRun, EvaluationNeedsNoTeacher) {
  auto ckpt = read_checkpoint(*dir_ / "checkpoints" / "final.ckpt");
  auto stripped = ckpt;
  std::erase_if(stripped.tensors, [](const auto& kv) { return !kv.first.starts_with("actor/"); });
  stripped.optimizer_state.clear();
  auto path = scratch("stripped") / "actor_only.ckpt";
  write_checkpoint(path, stripped);
  auto with = evaluate_split(*dir_ / "checkpoints" / "final.ckpt", config_->curriculum.split, 2);
  auto without = evaluate_split(path, config_->curriculum.split, 2);
  ASSERT_EQ(with.seeds[0].counts.size(), without.seeds[0].counts.size());
  for (std::size_t i = 0; i < with.seeds[0].counts.size(); ++i) {
    EXPECT_EQ(with.seeds[0].counts[i].returns, without.seeds[0].counts[i].returns);
  }
}

TEST_F(TrainedRun, AggregationIsOrderFreeAndWarns) {
  auto config = *config_;
  config.seeds = {0, 1, 2};
  auto make = [](std::uint64_t seed, double mean) {
    SeedEvaluation e;
    e.seed = seed;
    e.split_means["test"] = mean;
    return e;
  };
  auto forward = aggregate_seeds({make(0, 1.0), make(1, 2.0), make(2, 6.0)}, config);
  auto backward = aggregate_seeds({make(2, 6.0), make(0, 1.0), make(1, 2.0)}, config);
  EXPECT_DOUBLE_EQ(forward.splits.at("test").mean, 3.0);
  EXPECT_DOUBLE_EQ(*forward.splits.at("test").std, std::sqrt(7.0));
  EXPECT_EQ(to_json(forward), to_json(backward));
  auto missing = aggregate_seeds({make(0, 1.0), make(2, 6.0)}, config);
  EXPECT_FALSE(missing.warnings.empty());
}

TEST(Evaluation, LbfReturnsStayInRange) {
  auto doc = tiny_document();
  doc["task"] = "lbf";
  doc["curriculum"] = "lbf-paper";
  auto config = config_from_json(doc);
  auto wiring = learner::wiring_for(config.method, config.ablation);
  learner::Learner learner(wiring, config.learner,
                           learner::build_models(wiring, config.model, config.learner, config.env_spec()), 1);
  auto path = scratch("lbf") / "init.ckpt";
  write_checkpoint(path, snapshot(learner, config, 0, {{"episode", 0}}));
  auto report = evaluate_split(path, config.curriculum.split, 2);
  EXPECT_DOUBLE_EQ(report.scale, 100.0);
  for (const auto& c : report.seeds[0].counts) {
    for (double r : c.returns) {
      EXPECT_GE(r, 0.0);
      EXPECT_LE(r, 100.0);
    }
  }
  EXPECT_DOUBLE_EQ(reported_return("lbf", 0.5, 3), 100.0 * env::normalized_return(0.5, 3));
  EXPECT_DOUBLE_EQ(reported_return("spread", -4.0, 3), -4.0);
}

TEST(Diagnostics, CosineAlignment) {
  auto x = torch::randn({5, 4});
  EXPECT_TRUE(torch::allclose(cosine_alignment(x, x), torch::ones({5}), 0, 1e-12));
  EXPECT_TRUE(torch::allclose(cosine_alignment(x, -2.0 * x), -torch::ones({5}), 0, 1e-12));
  auto zero = torch::zeros({1, 4});
  EXPECT_EQ(cosine_alignment(zero, x.slice(0, 0, 1)).item<double>(), 0.0);
  EXPECT_LT(std::abs(random_cosine_oracle(48, 20000, 1)), 0.02);
}

TEST_F(TrainedRun, DiagnosticsReportLiveTeacherAlignment) {
  auto report = diagnose_run(*dir_, {1, 3}, 1);
  EXPECT_EQ(report.teacher, "live");
  ASSERT_EQ(report.cells.size(), 2u);
  for (const auto& cell : report.cells) {
    EXPECT_GT(cell.samples, 0);
    EXPECT_GE(cell.cosine_mean, -1.0);
    EXPECT_LE(cell.cosine_mean, 1.0);
    EXPECT_GE(cell.gate_mean, 0.0);
    EXPECT_LE(cell.gate_mean, 1.0);
  }
  EXPECT_TRUE(fs::exists(*dir_ / "diagnostics" / "alignment.json"));
  auto back = alignment_from_json(to_json(report));
  EXPECT_EQ(to_json(back), to_json(report));
}

TEST(Diagnostics, AlignmentIsScaleFreeAndPerCount) {
  auto config = tiny_config();
  auto wiring = learner::wiring_for(config.method, config.ablation);
  auto models = learner::build_models(wiring, config.model, config.learner, config.env_spec());
  auto contexts = torch::randn({7, 6});
  EXPECT_NEAR(cosine_alignment(contexts, 3.0 * contexts).mean().item<double>(), 1.0, 1e-12);
  auto report = context_diagnostics(models, config.env_spec(), 0, {2}, 1);
  EXPECT_EQ(report.cells.at(0).count, 2);
}

TEST(Diagnostics, BaselineHasNoContext) {
  auto config = tiny_config("mappo");
  auto wiring = learner::wiring_for(config.method, config.ablation);
  auto models = learner::build_models(wiring, config.model, config.learner, config.env_spec());
  EXPECT_THROW(context_diagnostics(models, config.env_spec(), 0, {2}, 1), ConfigError);
}

TEST_F(TrainedRun, ReportFlagsSingleAndMissingSeeds) {
  evaluate_run(*dir_);
  auto out = scratch("report");
  auto result = emit_report({*root_}, out);
  EXPECT_EQ(result.runs, 1);
  bool single = false, ablation_gap = false;
  for (const auto& w : result.warnings) {
    single = single || w.find("single seed") != std::string::npos;
    ablation_gap = ablation_gap || w.find("ablation row") != std::string::npos;
  }
  EXPECT_TRUE(single);
  EXPECT_TRUE(ablation_gap);
  for (const char* f : {"results.json", "results.md", "results.csv", "curves.csv", "warnings.txt"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }

  // Declare a second seed that never ran.
  auto cfg = json::parse(slurp(*dir_ / "config.json"));
  cfg["seeds"] = {0, 1};
  std::ofstream(*dir_ / "config.json") << cfg.dump(2);
  auto again = emit_report({*root_}, scratch("report2"));
  bool missing = false;
  for (const auto& w : again.warnings) missing = missing || w.find("missing") != std::string::npos;
  EXPECT_TRUE(missing);
}

TEST(Sweep, PlanCoversMethodsAndPc3dAblations) {
  auto plan = plan_sweep(tiny_document(), {"ippo", "mappo", "pc3d"}, {"gate_off", "no_distill"}, {3, 4});
  ASSERT_EQ(plan.size(), 5u);
  int ablated = 0;
  for (const auto& c : plan) {
    EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{3, 4}));
    if (c.ablation != learner::Ablation::kNone) {
      ++ablated;
      EXPECT_EQ(c.method, learner::Method::kPc3d);
    }
  }
  EXPECT_EQ(ablated, 2);
  EXPECT_TRUE(has_teacher(tiny_config()));
  EXPECT_FALSE(has_teacher(tiny_config("pic")));
}

TEST(Paths, RunDirectoryLayout) {
  auto config = tiny_config();
  config.ablation = learner::Ablation::kGateOn;
  EXPECT_EQ(cell_label(config), "pc3d_gate_on");
  EXPECT_EQ(run_directory("r", config, 2), fs::path("r") / "tiny" / "pc3d_gate_on" / "seed_2");
}

}  // namespace
}  // namespace pc3d::harness
