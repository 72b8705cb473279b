#include "vtreid/vtgan/discriminator.hpp"

#include <algorithm>

#include "vtreid/core/error.hpp"
#include "vtreid/tensor/ops.hpp"

namespace vtreid::vtgan {

void DiscriminatorConfig::validate() const {
  if (base_width < 1 || layers < 1) throw ConfigError("discriminator widths/layers must be positive");
  if (slope < 0.0 || slope >= 1.0) throw ConfigError("leaky slope must lie in [0, 1)");
}

Discriminator::Discriminator(const DiscriminatorConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  int in = 3;
  for (int l = 0; l < config_.layers; ++l) {
    const bool last = l + 1 == config_.layers;
    const int out = last ? 1 : config_.base_width * (1 << std::min(l, 3));
    convs_.push_back(nn::make_conv(params_, "layer" + std::to_string(l), in, out, 3, 2, 1,
                                   config_.init_std, rng));
    in = out;
  }
}

Var Discriminator::operator()(const Var& images) const {
  Var h = images;
  for (std::size_t l = 0; l < convs_.size(); ++l) {
    h = convs_[l](h);
    if (l + 1 == convs_.size()) break;
    if (config_.instance_norm && l > 0) h = tensor::instance_norm(h);
    h = tensor::leaky_relu(h, config_.slope);
  }
  return h;
}

}  // namespace vtreid::vtgan
