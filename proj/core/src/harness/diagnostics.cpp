#include "pc3d/harness/diagnostics.hpp"

#include <cmath>
#include <random>

#include "pc3d/learner/rollout.hpp"

namespace pc3d::harness {

torch::Tensor cosine_alignment(const torch::Tensor& student, const torch::Tensor& teacher) {
  auto dot = (student * teacher).sum(-1);
  auto norms = student.norm(2, -1) * teacher.norm(2, -1);
  return torch::where(norms > 0, dot / norms.clamp_min(1e-300), torch::zeros_like(dot));
}

AlignmentReport context_diagnostics(learner::Models& models, const env::EnvTemplateSpec& spec, std::uint64_t seed,
                                    const std::vector<int>& counts, int rollouts) {
  auto* teacher = models.teacher();
  if (teacher == nullptr || !models.actor->config().use_context) {
    throw ConfigError("diagnostics need a PC3D checkpoint (set teacher and student context)");
  }
  if (rollouts <= 0) throw ConfigError("diagnostics: rollouts must be positive");
  torch::NoGradGuard no_grad;
  AlignmentReport report;
  report.seed = seed;
  for (int n : counts) {
    if (!spec.admits(n)) throw ConfigError("diagnostics: roster " + std::to_string(n) + " not admissible");
    double cos_sum = 0.0, gate_sum = 0.0, gate_sq = 0.0;
    long samples = 0;
    learner::CollectOptions options;
    options.selection = learner::ActionSelection::kGreedy;
    options.observer = [&](const torch::Tensor& obs, const policy::ActorOutput& heads) {
      auto mask = torch::ones({1, obs.size(0)}, torch::kBool);
      auto contexts = teacher->forward(obs.unsqueeze(0), mask).contexts[0];
      cos_sum += cosine_alignment(heads.student_context, contexts).sum().item<double>();
      auto g = heads.gate;
      gate_sum += g.sum().item<double>();
      gate_sq += g.square().sum().item<double>();
      samples += obs.size(0);
    };
    for (int r = 0; r < rollouts; ++r) {
      const auto env_seed = derive_seed(seed, SeedStream::kDiagnostics, static_cast<std::uint64_t>(n) * 1000003ULL + r);
      auto env = env::make_env(spec, n, env_seed);
      Rng unused(env_seed);
      learner::collect_episode(*models.actor, *env, unused, options);
    }
    AlignmentCell cell;
    cell.count = n;
    cell.rollouts = rollouts;
    cell.samples = samples;
    cell.cosine_mean = cos_sum / static_cast<double>(samples);
    cell.gate_mean = gate_sum / static_cast<double>(samples);
    cell.gate_std = std::sqrt(std::max(0.0, gate_sq / static_cast<double>(samples) - cell.gate_mean * cell.gate_mean));
    report.cells.push_back(cell);
  }
  return report;
}

AlignmentReport context_diagnostics(const Checkpoint& checkpoint, const std::vector<int>& counts, int rollouts) {
  auto loaded = load_models(checkpoint);
  return context_diagnostics(loaded.models, loaded.config.env_spec(), loaded.seed, counts, rollouts);
}

double random_cosine_oracle(int dim, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double sum = 0.0;
  for (int s = 0; s < samples; ++s) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (int k = 0; k < dim; ++k) {
      const double a = normal(rng), b = normal(rng);
      dot += a * b;
      na += a * a;
      nb += b * b;
    }
    sum += dot / std::sqrt(na * nb);
  }
  return sum / samples;
}

double mean_cosine(const AlignmentReport& report) {
  double num = 0.0, den = 0.0;
  for (const auto& c : report.cells) {
    num += c.cosine_mean * static_cast<double>(c.samples);
    den += static_cast<double>(c.samples);
  }
  return den > 0.0 ? num / den : 0.0;
}

json to_json(const AlignmentReport& r) {
  json cells = json::array();
  for (const auto& c : r.cells) {
    cells.push_back({{"count", c.count},
                     {"rollouts", c.rollouts},
                     {"samples", c.samples},
                     {"cosine_mean", c.cosine_mean},
                     {"gate_mean", c.gate_mean},
                     {"gate_std", c.gate_std}});
  }
  return {{"teacher", r.teacher}, {"policy", r.policy}, {"seed", r.seed}, {"cells", cells}};
}

AlignmentReport alignment_from_json(const json& node) {
  AlignmentReport r;
  r.teacher = node.at("teacher").get<std::string>();
  r.policy = node.at("policy").get<std::string>();
  r.seed = node.at("seed").get<std::uint64_t>();
  for (const auto& c : node.at("cells")) {
    AlignmentCell cell;
    cell.count = c.at("count").get<int>();
    cell.rollouts = c.at("rollouts").get<int>();
    cell.samples = c.at("samples").get<long>();
    cell.cosine_mean = c.at("cosine_mean").get<double>();
    cell.gate_mean = c.at("gate_mean").get<double>();
    cell.gate_std = c.at("gate_std").get<double>();
    r.cells.push_back(cell);
  }
  return r;
}

}  // namespace pc3d::harness
