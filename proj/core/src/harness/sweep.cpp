#include "pc3d/harness/sweep.hpp"

#include <fstream>

namespace pc3d::harness {

namespace fs = std::filesystem;

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return json::parse(in);
}

void write_json(const fs::path& path, const json& value) {
  fs::create_directories(path.parent_path());
  std::ofstream(path, std::ios::trunc) << value.dump(2) << '\n';
}

}  // namespace

std::vector<RunConfig> plan_sweep(const json& base, const std::vector<std::string>& methods,
                                  const std::vector<std::string>& ablations, const std::vector<std::uint64_t>& seeds) {
  std::vector<RunConfig> cells;
  auto add = [&](const std::string& method, const std::string& ablation) {
    json doc = base;
    doc["method"] = method;
    doc["ablation"] = ablation;
    if (!seeds.empty()) doc["seeds"] = seeds;
    cells.push_back(config_from_json(doc));
  };
  for (const auto& m : methods) {
    learner::method_from_string(m);
    add(m, "none");
    if (m != "pc3d") continue;
    for (const auto& a : ablations) {
      learner::ablation_from_string(a);
      if (a != "none") add(m, a);
    }
  }
  return cells;
}

bool has_teacher(const RunConfig& config) {
  return config.method == learner::Method::kPc3d || config.method == learner::Method::kHyperPc3d;
}

SeedEvaluation evaluate_run(const fs::path& seed_dir, std::optional<int> rollouts_per_count, const EvalOptions& options) {
  auto policy = load_policy(read_checkpoint(seed_dir / "checkpoints" / "final.ckpt"));
  const int rollouts = rollouts_per_count.value_or(policy.config.eval_rollouts_per_count);
  auto evaluation = evaluate_policy(policy, policy.config.curriculum.split, rollouts, options);
  json out = to_json(evaluation);
  out["policy"] = "greedy";
  out["rollouts_per_count"] = rollouts;
  out["bypass_conditioning"] = options.bypass_conditioning;
  write_json(seed_dir / "eval" / (options.bypass_conditioning ? "eval_bypass.json" : "eval.json"), out);
  return evaluation;
}

AlignmentReport diagnose_run(const fs::path& seed_dir, std::vector<int> counts, std::optional<int> rollouts) {
  auto ckpt = read_checkpoint(seed_dir / "checkpoints" / "final.ckpt");
  auto config = config_from_json(ckpt.meta.at("config"));
  if (counts.empty()) {
    auto all = config.curriculum.split.all();
    counts.assign(all.begin(), all.end());
  }
  auto report = context_diagnostics(ckpt, counts, rollouts.value_or(config.diagnostic_rollouts));
  write_json(seed_dir / "diagnostics" / "alignment.json", to_json(report));
  return report;
}

EvalReport summarize_cell(const fs::path& cell_dir) {
  std::vector<SeedEvaluation> evals;
  std::optional<RunConfig> config;
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(cell_dir)) {
    if (entry.is_directory() && entry.path().filename().string().rfind("seed_", 0) == 0) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& dir : dirs) {
    if (!config) config = config_from_json(read_json(dir / "config.json"));
    if (fs::exists(dir / "eval" / "eval.json")) evals.push_back(seed_evaluation_from_json(read_json(dir / "eval" / "eval.json")));
  }
  if (!config) throw std::runtime_error("no seed directories under " + cell_dir.string());
  auto report = aggregate_seeds(evals, *config);
  write_json(cell_dir / "eval_summary.json", to_json(report));
  return report;
}

std::vector<fs::path> run_cell(const RunConfig& config, const fs::path& root, const PipelineOptions& options) {
  std::vector<fs::path> dirs;
  for (auto seed : config.seeds) {
    const auto dir = run_directory(root, config, seed);
    TrainOptions train;
    train.resume = options.resume;
    train.log = options.log;
    if (options.log) options.log("train " + dir.string());
    run_training(config, seed, dir, train);
    if (options.evaluate) evaluate_run(dir);
    if (options.diagnose && has_teacher(config)) diagnose_run(dir);
    dirs.push_back(dir);
  }
  if (options.evaluate && !dirs.empty()) summarize_cell(dirs.front().parent_path());
  return dirs;
}

}  // namespace pc3d::harness
