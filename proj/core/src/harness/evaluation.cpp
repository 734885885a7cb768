#include "pc3d/harness/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "pc3d/learner/rollout.hpp"

namespace pc3d::harness {

double reported_return(const std::string& task, double team_return, int roster_size) {
  if (task == "lbf") return 100.0 * env::normalized_return(team_return, roster_size);
  return team_return;
}

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::uint64_t rollout_index(int count, int rollout) {
  return static_cast<std::uint64_t>(count) * 1000003ULL + static_cast<std::uint64_t>(rollout);
}

constexpr curriculum::Split kSplits[] = {curriculum::Split::kTrain, curriculum::Split::kValidation,
                                         curriculum::Split::kTest};

}  // namespace

SeedEvaluation evaluate_policy(const LoadedPolicy& policy, const curriculum::RosterSplit& split, int rollouts_per_count,
                               const EvalOptions& options) {
  if (rollouts_per_count <= 0) throw ConfigError("evaluation: rollouts_per_count must be positive");
  const auto spec = policy.config.env_spec();
  for (int n : split.all()) {
    if (!spec.admits(n)) throw ConfigError("evaluation: roster " + std::to_string(n) + " not admissible");
  }
  learner::CollectOptions collect;
  collect.selection = learner::ActionSelection::kGreedy;
  collect.bypass_conditioning = options.bypass_conditioning;

  SeedEvaluation out;
  out.seed = policy.seed;
  for (auto s : kSplits) {
    const auto& counts = split.counts(s);
    if (counts.empty()) continue;
    double split_sum = 0.0;
    for (int n : counts) {
      CountResult cr;
      cr.count = n;
      cr.split = curriculum::to_string(s);
      for (int r = 0; r < rollouts_per_count; ++r) {
        const auto env_seed = derive_seed(policy.seed, SeedStream::kEvaluation, rollout_index(n, r));
        auto env = env::make_env(spec, n, env_seed);
        Rng unused(env_seed);
        auto ep = learner::collect_episode(*policy.actor.ptr(), *env, unused, collect);
        cr.returns.push_back(reported_return(spec.name, ep.team_return(), n));
      }
      cr.mean = mean_of(cr.returns);
      split_sum += cr.mean;
      out.counts.push_back(std::move(cr));
    }
    out.split_means[curriculum::to_string(s)] = split_sum / static_cast<double>(counts.size());
  }
  return out;
}

EvalReport aggregate_seeds(std::vector<SeedEvaluation> seeds, const RunConfig& config) {
  std::sort(seeds.begin(), seeds.end(), [](const auto& a, const auto& b) { return a.seed < b.seed; });
  EvalReport report;
  report.task = config.task;
  report.method = learner::to_string(config.method);
  report.ablation = learner::to_string(config.ablation);
  report.scale = config.task == "lbf" ? 100.0 : 1.0;
  std::map<std::string, std::vector<double>> per_split;
  for (const auto& s : seeds) {
    for (const auto& [name, mean] : s.split_means) per_split[name].push_back(mean);
  }
  for (const auto& [name, values] : per_split) {
    SplitSummary summary;
    summary.seeds = static_cast<int>(values.size());
    summary.mean = mean_of(values);
    if (values.size() > 1) {
      double ss = 0.0;
      for (double v : values) ss += (v - summary.mean) * (v - summary.mean);
      summary.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    report.splits[name] = summary;
  }
  if (seeds.size() == 1) report.warnings.push_back("single seed: standard deviation left empty");
  if (seeds.size() < config.seeds.size()) {
    report.warnings.push_back("evaluated " + std::to_string(seeds.size()) + " of " + std::to_string(config.seeds.size()) +
                              " configured seeds");
  }
  report.seeds = std::move(seeds);
  return report;
}

EvalReport evaluate_split(const std::filesystem::path& checkpoint, const curriculum::RosterSplit& split,
                          int rollouts_per_count, const EvalOptions& options) {
  auto policy = load_policy(read_checkpoint(checkpoint));
  auto config = policy.config;
  config.seeds = {policy.seed};
  return aggregate_seeds({evaluate_policy(policy, split, rollouts_per_count, options)}, config);
}

double audit_report(const EvalReport& report) {
  double worst = 0.0;
  std::map<std::string, std::vector<double>> per_split;
  for (const auto& s : report.seeds) {
    std::map<std::string, std::vector<double>> count_means;
    for (const auto& c : s.counts) {
      const double m = mean_of(c.returns);
      worst = std::max(worst, std::abs(m - c.mean));
      count_means[c.split].push_back(m);
    }
    for (const auto& [name, means] : count_means) {
      const double m = mean_of(means);
      worst = std::max(worst, std::abs(m - s.split_means.at(name)));
      per_split[name].push_back(m);
    }
  }
  for (const auto& [name, values] : per_split) worst = std::max(worst, std::abs(mean_of(values) - report.splits.at(name).mean));
  return worst;
}

json to_json(const SeedEvaluation& e) {
  json counts = json::array();
  for (const auto& c : e.counts) {
    counts.push_back({{"count", c.count}, {"split", c.split}, {"mean", c.mean}, {"returns", c.returns}});
  }
  return {{"seed", e.seed}, {"counts", counts}, {"split_means", e.split_means}};
}

SeedEvaluation seed_evaluation_from_json(const json& node) {
  SeedEvaluation e;
  e.seed = node.at("seed").get<std::uint64_t>();
  for (const auto& c : node.at("counts")) {
    CountResult cr;
    cr.count = c.at("count").get<int>();
    cr.split = c.at("split").get<std::string>();
    cr.mean = c.at("mean").get<double>();
    cr.returns = c.at("returns").get<std::vector<double>>();
    e.counts.push_back(std::move(cr));
  }
  e.split_means = node.at("split_means").get<std::map<std::string, double>>();
  return e;
}

json to_json(const EvalReport& r) {
  json seeds = json::array();
  for (const auto& s : r.seeds) seeds.push_back(to_json(s));
  json splits = json::object();
  for (const auto& [name, s] : r.splits) {
    splits[name] = {{"mean", s.mean}, {"std", s.std ? json(*s.std) : json(nullptr)}, {"seeds", s.seeds}};
  }
  return {{"task", r.task},   {"method", r.method}, {"ablation", r.ablation}, {"policy", r.policy},
          {"scale", r.scale}, {"splits", splits},   {"seeds", seeds},         {"warnings", r.warnings}};
}

}  // namespace pc3d::harness
