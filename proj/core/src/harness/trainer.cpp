#include "pc3d/harness/trainer.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "pc3d/harness/checkpoint.hpp"
#include "pc3d/learner/learner.hpp"
#include "pc3d/nn/common.hpp"

namespace pc3d::harness {

namespace fs = std::filesystem;

std::string cell_label(const RunConfig& config) {
  std::string label = learner::to_string(config.method);
  if (config.ablation != learner::Ablation::kNone) label += "_" + learner::to_string(config.ablation);
  return label;
}

fs::path run_directory(const fs::path& root, const RunConfig& config, std::uint64_t seed) {
  return root / config.name / cell_label(config) / ("seed_" + std::to_string(seed));
}

fs::path output_root(const fs::path& fallback) {
  if (const char* env = std::getenv("PC3D_OUTPUT_ROOT"); env != nullptr && *env != '\0') return env;
  return fallback;
}

namespace {

void truncate_lines(const fs::path& path, long keep) {
  std::vector<std::string> lines;
  {
    std::ifstream in(path);
    std::string line;
    while (static_cast<long>(lines.size()) < keep && std::getline(in, line)) lines.push_back(line);
  }
  if (static_cast<long>(lines.size()) < keep) throw std::runtime_error("resume: log shorter than checkpoint in " + path.string());
  std::ofstream out(path, std::ios::trunc);
  for (const auto& line : lines) out << line << '\n';
}

void write_json(const fs::path& path, const json& value) {
  std::ofstream out(path, std::ios::trunc);
  out << value.dump(2) << '\n';
}

json metrics_record(const learner::UpdateMetrics& m, long update, long episode, int stage, double batch_return) {
  return {{"update", update},
          {"episode", episode},
          {"stage", stage},
          {"loss", m.loss},
          {"ppo", m.ppo},
          {"value", m.value},
          {"entropy", m.entropy},
          {"distill", m.distill},
          {"grad_norm", m.grad_norm},
          {"grad_norm_clipped", m.grad_norm_clipped},
          {"gate_mean", m.gate_mean},
          {"gate_std", m.gate_std},
          {"reliance_mean", m.reliance_mean},
          {"batch_return", batch_return},
          {"minibatches", m.minibatches},
          {"decision_pairs", m.decision_pairs}};
}

}  // namespace

TrainResult run_training(const RunConfig& config, std::uint64_t seed, const fs::path& run_dir, const TrainOptions& options) {
  config.validate();
  nn::configure_torch();
  auto log = [&](const std::string& line) {
    if (options.log) options.log(line);
  };

  const auto spec = config.env_spec();
  const auto wiring = learner::wiring_for(config.method, config.ablation);
  torch::manual_seed(derive_seed(seed, SeedStream::kInit));
  auto models = learner::build_models(wiring, config.model, config.learner, spec);
  learner::Learner learner(wiring, config.learner, models, derive_seed(seed, SeedStream::kShuffle));
  Rng curriculum_rng(derive_seed(seed, SeedStream::kCurriculum));
  Rng policy_rng(derive_seed(seed, SeedStream::kPolicy));

  const fs::path ckpt_dir = run_dir / "checkpoints";
  const fs::path latest = ckpt_dir / "latest.ckpt";
  const fs::path metrics_path = run_dir / "metrics.jsonl";
  const fs::path returns_path = run_dir / "train_returns.jsonl";

  TrainResult result;
  result.run_dir = run_dir;
  long episode = 0;

  if (options.resume && fs::exists(latest)) {
    auto ckpt = read_checkpoint(latest);
    if (ckpt.fingerprint != fingerprint(config)) {
      throw ConfigError("resume: " + latest.string() + " was written under a different config");
    }
    restore(learner, ckpt);
    episode = ckpt.meta.at("episode").get<long>();
    set_rng_state(curriculum_rng, ckpt.meta.at("rng").at("curriculum").get<std::string>());
    set_rng_state(policy_rng, ckpt.meta.at("rng").at("policy").get<std::string>());
    truncate_lines(metrics_path, learner.updates());
    truncate_lines(returns_path, episode);
    result.resumed = true;
    log("resumed " + run_dir.string() + " at episode " + std::to_string(episode));
  } else {
    fs::create_directories(ckpt_dir);
    std::ofstream(metrics_path, std::ios::trunc);
    std::ofstream(returns_path, std::ios::trunc);
    write_json(run_dir / "config.json", to_json(config));
  }

  auto save = [&](const fs::path& path) {
    json progress;
    progress["episode"] = episode;
    progress["rng"]["curriculum"] = rng_state(curriculum_rng);
    progress["rng"]["policy"] = rng_state(policy_rng);
    write_checkpoint(path, snapshot(learner, config, seed, progress));
  };
  auto write_status = [&](bool complete) {
    write_json(run_dir / "run.json", {{"seed", seed},
                                      {"fingerprint", fingerprint(config)},
                                      {"episodes", episode},
                                      {"updates", learner.updates()},
                                      {"complete", complete}});
  };
  if (!result.resumed) {
    save(ckpt_dir / "initial.ckpt");
    write_status(false);
  }

  std::ofstream metrics_log(metrics_path, std::ios::app);
  std::ofstream returns_log(returns_path, std::ios::app);
  const auto& stages = config.curriculum.stages;
  learner::RolloutBatch pending;
  double pending_return = 0.0;

  while (episode < config.total_episodes) {
    const int stage = curriculum::stage_index_for_episode(episode, config.total_episodes, stages);
    const int roster = curriculum::sample_roster(stages[stage], curriculum_rng);
    auto env = env::make_env(spec, roster, derive_seed(seed, SeedStream::kEnvironment, static_cast<std::uint64_t>(episode)));
    auto ep = learner::collect_episode(*learner.models().actor, *env, policy_rng);
    const double ret = ep.team_return();
    returns_log << json{{"episode", episode}, {"stage", stage}, {"roster", roster}, {"return", ret}}.dump() << '\n';
    returns_log.flush();
    pending_return += ret;
    pending.push_back(std::move(ep));
    ++episode;

    const bool last = episode == config.total_episodes;
    if (static_cast<int>(pending.size()) < config.learner.update_every_episodes && !last) continue;

    auto metrics = learner.update(pending);
    const double batch_return = pending_return / static_cast<double>(pending.size());
    pending.clear();
    pending_return = 0.0;
    metrics_log << metrics_record(metrics, learner.updates(), episode, stage, batch_return).dump() << '\n';
    metrics_log.flush();

    if (learner.updates() % config.checkpoint_every_updates == 0 || last) {
      char name[32];
      std::snprintf(name, sizeof name, "update_%06ld.ckpt", learner.updates());
      save(ckpt_dir / name);
      save(latest);
      write_status(false);
      log("update " + std::to_string(learner.updates()) + " episode " + std::to_string(episode) + " return " +
          std::to_string(batch_return));
    }
    if (options.stop_after_updates >= 0 && learner.updates() >= options.stop_after_updates && !last) {
      result.episodes = episode;
      result.updates = learner.updates();
      return result;
    }
  }

  save(ckpt_dir / "final.ckpt");
  write_status(true);
  result.episodes = episode;
  result.updates = learner.updates();
  result.completed = true;
  return result;
}

}  // namespace pc3d::harness
