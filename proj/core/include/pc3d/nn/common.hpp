#pragma once

#include <torch/torch.h>

#include <string>
#include <vector>

namespace pc3d::nn {

// Process-wide torch settings: float64 default dtype and a single intra/inter-op thread,
// which together make every run bit-reproducible on one machine.
void configure_torch();

// Linear+ReLU stack over `widths`, optionally followed by a linear output layer of width
// `out` (no activation on the output). Orthogonal weights with the given gains, zero biases.
torch::nn::Sequential make_mlp(int in, const std::vector<int>& widths, int out = -1, double hidden_gain = 1.4142135623730951,
                               double out_gain = 1.0);

void orthogonal_init(torch::nn::Linear& layer, double gain);

// Number of scalar parameters.
std::int64_t parameter_count(const torch::nn::Module& module);

// Copies every parameter and buffer of `source` into `target` (same architecture required).
void copy_parameters(const torch::nn::Module& source, torch::nn::Module& target);

}  // namespace pc3d::nn
