#include "pc3d/harness/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pc3d::harness {

namespace {

constexpr char kMagic[8] = {'P', 'C', '3', 'D', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw std::runtime_error("checkpoint: truncated");
  return v;
}

void put_string(std::ostream& out, const std::string& s) {
  put_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const auto size = get_u64(in);
  if (size > (std::uint64_t{1} << 34)) throw std::runtime_error("checkpoint: corrupt length");
  std::string s(size, '\0');
  if (size > 0 && !in.read(s.data(), static_cast<std::streamsize>(size))) throw std::runtime_error("checkpoint: truncated");
  return s;
}

enum class Dtype : std::uint64_t { kFloat64 = 1, kInt64 = 2 };

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot write " + tmp.string());
    out.write(kMagic, sizeof kMagic);
    put_u64(out, kVersion);
    put_string(out, ckpt.fingerprint);
    put_string(out, ckpt.meta.dump());
    put_u64(out, ckpt.tensors.size());
    for (const auto& [name, tensor] : ckpt.tensors) {
      auto t = tensor.detach().contiguous().cpu();
      Dtype dtype;
      if (t.scalar_type() == torch::kFloat64) {
        dtype = Dtype::kFloat64;
      } else if (t.scalar_type() == torch::kInt64) {
        dtype = Dtype::kInt64;
      } else {
        throw std::runtime_error("checkpoint: unsupported dtype for " + name);
      }
      put_string(out, name);
      put_u64(out, static_cast<std::uint64_t>(dtype));
      put_u64(out, static_cast<std::uint64_t>(t.dim()));
      for (auto s : t.sizes()) put_u64(out, static_cast<std::uint64_t>(s));
      out.write(static_cast<const char*>(t.data_ptr()), static_cast<std::streamsize>(t.nbytes()));
    }
    put_string(out, ckpt.optimizer_state);
    if (!out) throw std::runtime_error("checkpoint: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  }
  if (get_u64(in) != kVersion) throw std::runtime_error("checkpoint: unsupported version");
  Checkpoint ckpt;
  ckpt.fingerprint = get_string(in);
  ckpt.meta = json::parse(get_string(in));
  const auto count = get_u64(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    auto name = get_string(in);
    const auto dtype = static_cast<Dtype>(get_u64(in));
    const auto dims = get_u64(in);
    std::vector<std::int64_t> shape(dims);
    for (auto& s : shape) s = static_cast<std::int64_t>(get_u64(in));
    torch::ScalarType type;
    if (dtype == Dtype::kFloat64) {
      type = torch::kFloat64;
    } else if (dtype == Dtype::kInt64) {
      type = torch::kInt64;
    } else {
      throw std::runtime_error("checkpoint: unknown dtype for " + name);
    }
    auto t = torch::empty(shape, torch::TensorOptions().dtype(type));
    if (t.nbytes() > 0 && !in.read(static_cast<char*>(t.data_ptr()), static_cast<std::streamsize>(t.nbytes()))) {
      throw std::runtime_error("checkpoint: truncated tensor " + name);
    }
    ckpt.tensors.emplace(std::move(name), t);
  }
  ckpt.optimizer_state = get_string(in);
  return ckpt;
}

void export_module(const torch::nn::Module& module, const std::string& prefix, std::map<std::string, torch::Tensor>& out) {
  for (const auto& p : module.named_parameters()) out[prefix + "/" + p.key()] = p.value().detach().clone();
  for (const auto& b : module.named_buffers()) out[prefix + "/" + b.key()] = b.value().detach().clone();
}

void import_module(torch::nn::Module& module, const std::string& prefix, const std::map<std::string, torch::Tensor>& in) {
  torch::NoGradGuard no_grad;
  auto load = [&](const std::string& key, torch::Tensor& target) {
    auto it = in.find(prefix + "/" + key);
    if (it == in.end()) throw std::runtime_error("checkpoint: missing tensor " + prefix + "/" + key);
    if (it->second.sizes() != target.sizes()) throw std::runtime_error("checkpoint: shape mismatch for " + it->first);
    target.copy_(it->second);
  };
  for (auto& p : module.named_parameters()) load(p.key(), p.value());
  for (auto& b : module.named_buffers()) load(b.key(), b.value());
}

std::string rng_state(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

void set_rng_state(Rng& rng, const std::string& state) {
  std::istringstream is(state);
  is >> rng;
  if (!is) throw std::runtime_error("checkpoint: bad rng state");
}

Checkpoint snapshot(learner::Learner& learner, const RunConfig& config, std::uint64_t seed, json progress) {
  Checkpoint ckpt;
  ckpt.fingerprint = fingerprint(config);
  ckpt.meta = std::move(progress);
  ckpt.meta["config"] = to_json(config);
  ckpt.meta["seed"] = seed;
  ckpt.meta["updates"] = learner.updates();
  ckpt.meta["rng"]["shuffle"] = rng_state(learner.shuffle_rng());
  auto& models = learner.models();
  export_module(*models.actor, "actor", ckpt.tensors);
  if (models.critic) export_module(*models.critic, "critic", ckpt.tensors);
  if (models.shadow) export_module(*models.shadow, "shadow", ckpt.tensors);
  torch::serialize::OutputArchive archive;
  learner.optimizer().save(archive);
  std::ostringstream os;
  archive.save_to(os);
  ckpt.optimizer_state = os.str();
  return ckpt;
}

void restore(learner::Learner& learner, const Checkpoint& ckpt) {
  auto& models = learner.models();
  import_module(*models.actor, "actor", ckpt.tensors);
  if (models.critic) import_module(*models.critic, "critic", ckpt.tensors);
  if (models.shadow) import_module(*models.shadow, "shadow", ckpt.tensors);
  if (!ckpt.optimizer_state.empty()) {
    torch::serialize::InputArchive archive;
    std::istringstream is(ckpt.optimizer_state);
    archive.load_from(is);
    learner.optimizer().load(archive);
  }
  set_rng_state(learner.shuffle_rng(), ckpt.meta.at("rng").at("shuffle").get<std::string>());
  learner.set_updates(ckpt.meta.at("updates").get<long>());
}

namespace {

RunConfig checkpoint_config(const Checkpoint& ckpt) {
  auto config = config_from_json(ckpt.meta.at("config"));
  if (fingerprint(config) != ckpt.fingerprint) throw std::runtime_error("checkpoint: config fingerprint mismatch");
  return config;
}

}  // namespace

LoadedPolicy load_policy(const Checkpoint& ckpt) {
  LoadedPolicy p;
  p.config = checkpoint_config(ckpt);
  p.seed = ckpt.meta.at("seed").get<std::uint64_t>();
  // Only the actor is constructed; a checkpoint stripped of critic tensors still loads.
  const auto wiring = learner::wiring_for(p.config.method, p.config.ablation);
  p.actor = policy::Actor(learner::actor_config(wiring, p.config.model, p.config.learner, p.config.env_spec()));
  import_module(*p.actor, "actor", ckpt.tensors);
  p.actor->eval();
  return p;
}

LoadedModels load_models(const Checkpoint& ckpt) {
  LoadedModels m;
  m.config = checkpoint_config(ckpt);
  m.seed = ckpt.meta.at("seed").get<std::uint64_t>();
  const auto wiring = learner::wiring_for(m.config.method, m.config.ablation);
  m.models = learner::build_models(wiring, m.config.model, m.config.learner, m.config.env_spec());
  import_module(*m.models.actor, "actor", ckpt.tensors);
  if (m.models.critic) import_module(*m.models.critic, "critic", ckpt.tensors);
  if (m.models.shadow) import_module(*m.models.shadow, "shadow", ckpt.tensors);
  return m;
}

}  // namespace pc3d::harness
