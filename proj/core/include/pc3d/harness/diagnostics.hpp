#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <string>
#include <vector>

#include "pc3d/harness/checkpoint.hpp"

namespace pc3d::harness {

struct AlignmentCell {
  int count = 0;
  int rollouts = 0;
  long samples = 0;          // agent-timestep pairs
  double cosine_mean = 0.0;  // mean cos(c^_i, c_i)
  double gate_mean = 0.0;
  double gate_std = 0.0;
};

struct AlignmentReport {
  std::string teacher = "live";  // contexts come from the live teacher, not the EMA shadow
  std::string policy = "greedy";
  std::uint64_t seed = 0;
  std::vector<AlignmentCell> cells;
};

// Row-wise cosine similarity of [n, d] tensors; zero rows give 0.
torch::Tensor cosine_alignment(const torch::Tensor& student, const torch::Tensor& teacher);

// Decentralized greedy rollouts; at every step the live teacher also reads the full
// observation set so that each agent's student context can be compared with its teacher
// context. Throws ConfigError when the models have no set teacher or student context.
AlignmentReport context_diagnostics(learner::Models& models, const env::EnvTemplateSpec& spec, std::uint64_t seed,
                                    const std::vector<int>& counts, int rollouts);
AlignmentReport context_diagnostics(const Checkpoint& checkpoint, const std::vector<int>& counts, int rollouts);

// Monte-Carlo mean cosine between independent standard-normal vectors in `dim` dimensions.
double random_cosine_oracle(int dim, int samples, std::uint64_t seed);

double mean_cosine(const AlignmentReport& report);

json to_json(const AlignmentReport& report);
AlignmentReport alignment_from_json(const json& node);

}  // namespace pc3d::harness
