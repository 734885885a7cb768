#include "pc3d/nn/common.hpp"

#include <stdexcept>

namespace pc3d::nn {

void configure_torch() {
  static bool done = false;
  if (done) return;
  torch::set_default_dtype(caffe2::TypeMeta::Make<double>());
  torch::set_num_threads(1);
  try {
    torch::set_num_interop_threads(1);
  } catch (const c10::Error&) {
    // Inter-op pool already started; it is unused by this code path.
  }
  done = true;
}

void orthogonal_init(torch::nn::Linear& layer, double gain) {
  torch::NoGradGuard no_grad;
  torch::nn::init::orthogonal_(layer->weight, gain);
  if (layer->options.bias()) torch::nn::init::zeros_(layer->bias);
}

torch::nn::Sequential make_mlp(int in, const std::vector<int>& widths, int out, double hidden_gain, double out_gain) {
  torch::nn::Sequential seq;
  int width = in;
  for (int w : widths) {
    torch::nn::Linear layer(width, w);
    orthogonal_init(layer, hidden_gain);
    seq->push_back(layer);
    seq->push_back(torch::nn::ReLU());
    width = w;
  }
  if (out > 0) {
    torch::nn::Linear layer(width, out);
    orthogonal_init(layer, out_gain);
    seq->push_back(layer);
  }
  return seq;
}

std::int64_t parameter_count(const torch::nn::Module& module) {
  std::int64_t n = 0;
  for (const auto& p : module.parameters()) n += p.numel();
  return n;
}

void copy_parameters(const torch::nn::Module& source, torch::nn::Module& target) {
  torch::NoGradGuard no_grad;
  auto src = source.named_parameters(true);
  auto dst = target.named_parameters(true);
  if (src.size() != dst.size()) throw std::invalid_argument("copy_parameters: architectures differ");
  for (const auto& item : src) {
    auto* t = dst.find(item.key());
    if (t == nullptr || !t->sizes().equals(item.value().sizes())) {
      throw std::invalid_argument("copy_parameters: mismatch at " + item.key());
    }
    t->copy_(item.value());
  }
}

}  // namespace pc3d::nn
