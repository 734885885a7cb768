#include "pc3d/harness/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace pc3d::harness {

namespace {

using learner::Method;

struct Column {
  learner::LearnerConfig l;
  learner::ModelConfig m;
};

// Final hyperparameter columns for one task, in IPPO, MAPPO, PIC, PC3D order. MAPPO values are chained
// into PIC and PC3D; the teacher rows are shared by every method but only read by PC3D.
std::vector<Column> task_columns(const std::string& task) {
  Column ippo, mappo;
  double pic_embed = 48, pc3d_embed = 48;
  std::vector<int> pic_phi, pc3d_phi, pic_critic, pc3d_critic;
  bool pic_size = false, pc3d_size = true;
  int tokens = 4;
  double distill = 0.257, tau = 0.02, rho_min = -3.0, rho_max = 2.0;

  auto set = [](Column& c, double lr, int batch, int buffer, int every, int epochs, std::vector<int> widths, int rnn,
                double clip, double gamma, double lambda, double entropy, double value, double grad) {
    c.l.lr = lr;
    c.l.batch_size = batch;
    c.l.buffer_size = buffer;
    c.l.update_every_episodes = every;
    c.l.ppo_epochs = epochs;
    c.m.actor_widths = std::move(widths);
    c.m.rnn_dim = rnn;
    c.l.clip_eps = clip;
    c.l.gamma = gamma;
    c.l.gae_lambda = lambda;
    c.l.entropy_coef = entropy;
    c.l.value_coef = value;
    c.l.max_grad_norm = grad;
  };

  if (task == "spread") {
    set(ippo, 1.46e-4, 128, 8192, 2, 6, {96, 128, 128, 96}, 128, 0.25, 0.99, 0.99, 6.61e-4, 0.5, 0.5);
    set(mappo, 1.84e-3, 128, 200000, 8, 8, {128, 256, 128}, 128, 0.15, 0.985, 0.99, 1.28e-3, 0.25, 2.0);
    mappo.m.critic_widths = {128, 96};
    pic_critic = {128, 128};
    pc3d_critic = {192, 160};
    pic_phi = {160, 96};
    pc3d_phi = {96, 96};
  } else if (task == "lbf") {
    set(ippo, 1.22e-3, 128, 8192, 16, 6, {128, 256, 128}, 64, 0.25, 0.99, 0.95, 8.24e-3, 0.25, 5.0);
    set(mappo, 4.63e-4, 256, 200000, 2, 8, {64, 64}, 128, 0.25, 0.985, 0.93, 1.11e-2, 2.0, 5.0);
    mappo.m.critic_widths = {160, 160};
    pic_critic = {160, 128};
    pc3d_critic = {160, 128};
    pic_embed = 96;
    pc3d_embed = 48;
    pic_phi = {96, 64};
    pc3d_phi = {160, 96};
    pic_size = true;
    pc3d_size = true;
    distill = 0.0193;
    tau = 0.0025;
    rho_min = -2.0;
    rho_max = 1.5;
  } else if (task == "rware-adapter") {
    set(ippo, 2.06e-4, 64, 8192, 8, 8, {96, 128, 128, 96}, 192, 0.10, 0.97, 0.97, 2.49e-3, 0.25, 1.0);
    set(mappo, 1.24e-4, 64, 200000, 1, 6, {128, 256, 128}, 32, 0.25, 0.99, 0.97, 2.34e-4, 0.5, 10.0);
    mappo.m.critic_widths = {128, 96};
    pic_critic = {96, 96};
    pc3d_critic = {96, 96};
    pic_embed = 160;
    pc3d_embed = 96;
    pic_phi = {48, 48};
    pc3d_phi = {96, 96};
    pic_size = true;
    pc3d_size = false;
    tokens = 5;
    distill = 0.0154;
    tau = 0.0025;
  } else {
    throw ConfigError("no hyperparameters for task '" + task + "'");
  }

  Column pic = mappo, pc3d = mappo;
  pic.m.critic_widths = pic_critic;
  pic.m.set_embed_dim = static_cast<int>(pic_embed);
  pic.m.set_encoder_widths = pic_phi;
  pic.m.team_size_feature = pic_size;
  pc3d.m.critic_widths = pc3d_critic;
  pc3d.m.set_embed_dim = static_cast<int>(pc3d_embed);
  pc3d.m.set_encoder_widths = pc3d_phi;
  pc3d.m.team_size_feature = pc3d_size;

  std::vector<Column> columns = {ippo, mappo, pic, pc3d};
  for (auto& c : columns) {
    c.l.tokens = tokens;
    c.l.distill_weight = distill;
    c.l.teacher_tau = tau;
    c.l.reliance_min = rho_min;
    c.l.reliance_max = rho_max;
  }
  return columns;
}

json merge(json base, const json& overlay) {
  if (!base.is_object() || !overlay.is_object()) return overlay;
  for (auto it = overlay.begin(); it != overlay.end(); ++it) {
    base[it.key()] = base.contains(it.key()) ? merge(base[it.key()], it.value()) : it.value();
  }
  return base;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
}

template <typename T>
void take(const json& obj, const char* key, T& out, std::set<std::string>& seen) {
  seen.insert(key);
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

void reject_unknown(const json& obj, const std::set<std::string>& seen, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!seen.contains(it.key())) throw ConfigError("unknown " + where + " key '" + it.key() + "'");
  }
}

json stage_json(const curriculum::CurriculumStage& s) {
  return {{"counts", s.roster_counts}, {"probabilities", s.probabilities}, {"fraction", s.episode_fraction}};
}

curriculum::CurriculumPreset curriculum_from_json(const json& node) {
  if (node.is_string()) return curriculum::preset(node.get<std::string>());
  if (!node.is_object()) throw ConfigError("curriculum must be a preset name or an object");
  curriculum::CurriculumPreset c;
  const std::string name = node.value("name", std::string("custom"));
  const auto names = curriculum::preset_names();
  if (std::find(names.begin(), names.end(), name) != names.end()) c = curriculum::preset(name);
  c.name = name;
  try {
    if (node.contains("stages")) {
      c.stages.clear();
      for (const auto& s : node.at("stages")) {
        curriculum::CurriculumStage stage;
        stage.roster_counts = s.at("counts").get<std::vector<int>>();
        stage.probabilities = s.at("probabilities").get<std::vector<double>>();
        stage.episode_fraction = s.at("fraction").get<double>();
        c.stages.push_back(stage);
      }
    }
    if (node.contains("split")) {
      const auto& sp = node.at("split");
      c.split.train = sp.value("train", std::set<int>{});
      c.split.validation = sp.value("validation", std::set<int>{});
      c.split.test = sp.value("test", std::set<int>{});
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("curriculum: ") + e.what());
  }
  if (c.stages.empty()) throw ConfigError("curriculum '" + name + "' has no stages");
  return c;
}

}  // namespace

long default_total_episodes(const std::string& task) {
  if (task == "spread") return 20000;
  if (task == "lbf") return 12000;
  if (task == "rware-adapter") return 20000;
  throw ConfigError("unknown task '" + task + "'");
}

std::pair<learner::LearnerConfig, learner::ModelConfig> final_hyperparameters(const std::string& task, Method method) {
  auto columns = task_columns(task);
  int index = 3;
  switch (method) {
    case Method::kIppo: index = 0; break;
    case Method::kMappo: index = 1; break;
    case Method::kPic: index = 2; break;
    case Method::kPc3d:
    case Method::kHyperPc3d: index = 3; break;
  }
  return {columns[index].l, columns[index].m};
}

std::vector<std::string> run_preset_names() { return {"spread-paper", "lbf-paper", "rware-paper", "spread-desk", "smoke"}; }

json run_preset(const std::string& name) {
  auto full_length = [](const std::string& preset, const std::string& task, long episodes) {
    return json{{"name", preset},
                {"task", task},
                {"method", "pc3d"},
                {"ablation", "none"},
                {"curriculum", preset},
                {"seeds", {0, 1, 2, 3, 4}},
                {"total_episodes", episodes},
                {"eval_rollouts_per_count", 100},
                {"diagnostic_rollouts", 8},
                {"checkpoint_every_updates", 100}};
  };
  if (name == "spread-paper") return full_length(name, "spread", 20000);
  if (name == "lbf-paper") return full_length(name, "lbf", 12000);
  if (name == "rware-paper") return full_length(name, "rware-adapter", 20000);
  if (name == "spread-desk") {
    return {{"inherits", "spread-paper"},
            {"name", name},
            {"curriculum", "spread-desk"},
            {"seeds", {0, 1, 2}},
            {"total_episodes", 2500},
            {"checkpoint_every_updates", 50}};
  }
  if (name == "smoke") {
    return {{"inherits", "spread-paper"},
            {"name", name},
            {"curriculum", "smoke"},
            {"seeds", {0}},
            {"total_episodes", 200},
            {"eval_rollouts_per_count", 4},
            {"diagnostic_rollouts", 2},
            {"checkpoint_every_updates", 10}};
  }
  throw ConfigError("unknown run preset '" + name + "'");
}

json resolve_inheritance(const json& document) {
  if (!document.is_object()) throw ConfigError("config must be a JSON object");
  json doc = document;
  std::set<std::string> chain;
  while (doc.contains("inherits")) {
    const std::string parent = doc.at("inherits").get<std::string>();
    if (!chain.insert(parent).second) throw ConfigError("inheritance cycle at '" + parent + "'");
    const auto names = run_preset_names();
    json base = std::find(names.begin(), names.end(), parent) != names.end() ? run_preset(parent)
                                                                               : read_json_file(parent);
    doc.erase("inherits");
    doc = merge(base, doc);
  }
  return doc;
}

RunConfig config_from_json(const json& document) {
  const json doc = resolve_inheritance(document);
  RunConfig c;
  std::set<std::string> seen;
  std::string method = "pc3d", ablation = "none";
  take(doc, "name", c.name, seen);
  take(doc, "task", c.task, seen);
  take(doc, "task_params", c.task_params, seen);
  take(doc, "method", method, seen);
  take(doc, "ablation", ablation, seen);
  take(doc, "seeds", c.seeds, seen);
  c.total_episodes = default_total_episodes(c.task);
  take(doc, "total_episodes", c.total_episodes, seen);
  take(doc, "eval_rollouts_per_count", c.eval_rollouts_per_count, seen);
  take(doc, "diagnostic_rollouts", c.diagnostic_rollouts, seen);
  take(doc, "checkpoint_every_updates", c.checkpoint_every_updates, seen);
  seen.insert({"curriculum", "learner", "model"});
  reject_unknown(doc, seen, "config");

  c.method = learner::method_from_string(method);
  c.ablation = learner::ablation_from_string(ablation);
  c.curriculum = curriculum_from_json(doc.value("curriculum", json("smoke")));
  c.curriculum_name = c.curriculum.name;
  if (c.name.empty()) c.name = c.task;

  std::tie(c.learner, c.model) = final_hyperparameters(c.task, c.method);
  if (doc.contains("learner")) {
    const json& l = doc.at("learner");
    std::set<std::string> ls;
    take(l, "lr", c.learner.lr, ls);
    take(l, "batch_size", c.learner.batch_size, ls);
    take(l, "buffer_size", c.learner.buffer_size, ls);
    take(l, "update_every_episodes", c.learner.update_every_episodes, ls);
    take(l, "ppo_epochs", c.learner.ppo_epochs, ls);
    take(l, "clip_eps", c.learner.clip_eps, ls);
    take(l, "gamma", c.learner.gamma, ls);
    take(l, "gae_lambda", c.learner.gae_lambda, ls);
    take(l, "entropy_coef", c.learner.entropy_coef, ls);
    take(l, "value_coef", c.learner.value_coef, ls);
    take(l, "max_grad_norm", c.learner.max_grad_norm, ls);
    take(l, "distill_weight", c.learner.distill_weight, ls);
    take(l, "teacher_tau", c.learner.teacher_tau, ls);
    take(l, "reliance_min", c.learner.reliance_min, ls);
    take(l, "reliance_max", c.learner.reliance_max, ls);
    take(l, "tokens", c.learner.tokens, ls);
    ls.insert({"mode", "ablation"});  // derived; accepted so canonical output round-trips
    reject_unknown(l, ls, "learner");
  }
  if (doc.contains("model")) {
    const json& m = doc.at("model");
    std::set<std::string> ms;
    take(m, "actor_widths", c.model.actor_widths, ms);
    take(m, "rnn_dim", c.model.rnn_dim, ms);
    take(m, "critic_widths", c.model.critic_widths, ms);
    take(m, "set_embed_dim", c.model.set_embed_dim, ms);
    take(m, "set_encoder_widths", c.model.set_encoder_widths, ms);
    take(m, "team_size_feature", c.model.team_size_feature, ms);
    take(m, "hyper_hidden", c.model.hyper_hidden, ms);
    reject_unknown(m, ms, "model");
  }

  const auto wiring = learner::wiring_for(c.method, c.ablation);
  c.learner.mode = wiring.mode;
  c.learner.ablation = c.ablation;
  if (c.ablation == learner::Ablation::kNoDistill) c.learner.distill_weight = 0.0;
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) { return config_from_json(read_json_file(path)); }

env::EnvTemplateSpec RunConfig::env_spec() const { return env::make_template(task, task_params); }

void RunConfig::validate() const {
  learner::wiring_for(method, ablation);
  learner.validate();
  const auto spec = env_spec();
  if (seeds.empty()) throw ConfigError("config: at least one seed required");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ConfigError("config: duplicate seeds");
  }
  if (total_episodes <= 0) throw ConfigError("config: total_episodes must be positive");
  if (eval_rollouts_per_count <= 0 || diagnostic_rollouts <= 0) throw ConfigError("config: rollout counts must be positive");
  if (checkpoint_every_updates <= 0) throw ConfigError("config: checkpoint_every_updates must be positive");
  double fraction = 0.0;
  for (const auto& stage : curriculum.stages) {
    stage.validate();
    fraction += stage.episode_fraction;
    for (int n : stage.roster_counts) {
      if (!spec.admits(n)) throw ConfigError("curriculum roster " + std::to_string(n) + " not admissible for " + task);
    }
  }
  if (std::abs(fraction - 1.0) > 1e-6) throw ConfigError("curriculum fractions must sum to 1");
  curriculum.split.validate();
  for (int n : curriculum.split.all()) {
    if (!spec.admits(n)) throw ConfigError("split roster " + std::to_string(n) + " not admissible for " + task);
  }
}

json to_json(const RunConfig& c) {
  json stages = json::array();
  for (const auto& s : c.curriculum.stages) stages.push_back(stage_json(s));
  const auto& l = c.learner;
  const auto& m = c.model;
  return {{"name", c.name},
          {"task", c.task},
          {"task_params", c.task_params},
          {"method", learner::to_string(c.method)},
          {"ablation", learner::to_string(c.ablation)},
          {"curriculum",
           {{"name", c.curriculum.name},
            {"stages", stages},
            {"split",
             {{"train", c.curriculum.split.train},
              {"validation", c.curriculum.split.validation},
              {"test", c.curriculum.split.test}}}}},
          {"seeds", c.seeds},
          {"total_episodes", c.total_episodes},
          {"eval_rollouts_per_count", c.eval_rollouts_per_count},
          {"diagnostic_rollouts", c.diagnostic_rollouts},
          {"checkpoint_every_updates", c.checkpoint_every_updates},
          {"learner",
           {{"lr", l.lr},
            {"batch_size", l.batch_size},
            {"buffer_size", l.buffer_size},
            {"update_every_episodes", l.update_every_episodes},
            {"ppo_epochs", l.ppo_epochs},
            {"clip_eps", l.clip_eps},
            {"gamma", l.gamma},
            {"gae_lambda", l.gae_lambda},
            {"entropy_coef", l.entropy_coef},
            {"value_coef", l.value_coef},
            {"max_grad_norm", l.max_grad_norm},
            {"distill_weight", l.distill_weight},
            {"teacher_tau", l.teacher_tau},
            {"reliance_min", l.reliance_min},
            {"reliance_max", l.reliance_max},
            {"tokens", l.tokens},
            {"mode", policy::to_string(l.mode)},
            {"ablation", learner::to_string(l.ablation)}}},
          {"model",
           {{"actor_widths", m.actor_widths},
            {"rnn_dim", m.rnn_dim},
            {"critic_widths", m.critic_widths},
            {"set_embed_dim", m.set_embed_dim},
            {"set_encoder_widths", m.set_encoder_widths},
            {"team_size_feature", m.team_size_feature},
            {"hyper_hidden", m.hyper_hidden}}}};
}

std::string fingerprint(const RunConfig& config) {
  json canonical = to_json(config);
  for (const char* key : {"name", "seeds", "eval_rollouts_per_count", "diagnostic_rollouts"}) canonical.erase(key);
  const std::string text = canonical.dump();
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace pc3d::harness
