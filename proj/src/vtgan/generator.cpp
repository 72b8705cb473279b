#include "vtreid/vtgan/generator.hpp"

#include <algorithm>

#include "vtreid/core/error.hpp"
#include "vtreid/tensor/ops.hpp"

namespace vtreid::vtgan {

namespace t = vtreid::tensor;

void GeneratorConfig::validate() const {
  if (stem_width < 1 || half_width < 1 || residual_width < 1) throw ConfigError("generator widths must be positive");
  if (residual_blocks < 1) throw ConfigError("generator needs at least one residual block");
  if (stem_kernel < 1 || stem_kernel % 2 == 0) throw ConfigError("stem_kernel must be odd");
  if (!(init_std > 0.0)) throw ConfigError("init_std must be positive");
}

Var fuse_residual_outputs(std::span<const Var> block_outputs) {
  if (block_outputs.empty()) throw ShapeError("fuse_residual_outputs: no block outputs");
  for (const auto& b : block_outputs) {
    if (b.shape() != block_outputs[0].shape()) {
      throw ShapeError("fuse_residual_outputs: block output " + t::shape_string(b.shape()) +
                       " differs from " + t::shape_string(block_outputs[0].shape()));
    }
  }
  return t::concat_channels(block_outputs);
}

Var attention_mask(const Var& fused, const Var& weight, const Var& bias) {
  if (fused.shape().size() != 4 || weight.shape().size() != 4 || weight.dim(0) != 1 ||
      weight.dim(1) != fused.dim(1) || weight.dim(2) != 1 || weight.dim(3) != 1) {
    throw ShapeError("attention_mask: projection " + t::shape_string(weight.shape()) +
                     " does not match fused features " + t::shape_string(fused.shape()));
  }
  return t::sigmoid(t::conv2d(fused, weight, bias, 1, 0));
}

Var apply_mask(const Var& fused, const Var& mask) { return t::mul_channel_broadcast(fused, mask); }

Generator::Encoder Generator::make_encoder(const std::string& prefix, Rng& rng) {
  const double sd = config_.init_std;
  Encoder e;
  e.stem0 = nn::make_conv(params_, prefix + ".stem0", 3, config_.stem_width, config_.stem_kernel, 1,
                          config_.stem_kernel / 2, sd, rng);
  e.stem1 = nn::make_conv(params_, prefix + ".stem1", config_.stem_width, config_.half_width, 3, 2, 1, sd, rng);
  e.stem2 = nn::make_conv(params_, prefix + ".stem2", config_.half_width, config_.residual_width, 3, 2, 1, sd, rng);
  for (int b = 0; b < config_.residual_blocks; ++b) {
    const std::string name = prefix + ".res" + std::to_string(b);
    e.blocks.push_back(ResBlock{
        nn::make_conv(params_, name + ".conv1", config_.residual_width, config_.residual_width, 3, 1, 1, sd, rng),
        nn::make_conv(params_, name + ".conv2", config_.residual_width, config_.residual_width, 3, 1, 1, sd, rng)});
  }
  return e;
}

Generator::Generator(const GeneratorConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  const double sd = config_.init_std;
  const int fused = config_.residual_width * config_.residual_blocks;
  content_ = make_encoder("content", rng);
  if (config_.attention) attention_ = nn::make_conv(params_, "content.attention", fused, 1, 1, 1, 0, sd, rng);
  projection_ = nn::make_conv(params_, "content.projection", fused, config_.residual_width, 1, 1, 0, sd, rng);
  if (config_.style_branch) style_ = make_encoder("style", rng);
  const int dec_in = config_.residual_width * (config_.style_branch ? 2 : 1);
  up1_ = nn::make_deconv(params_, "decoder.up1", dec_in, config_.half_width, 3, sd, rng);
  up2_ = nn::make_deconv(params_, "decoder.up2", config_.half_width, config_.stem_width, 3, sd, rng);
  out_ = nn::make_conv(params_, "decoder.out", config_.stem_width, 3, config_.stem_kernel, 1,
                       config_.stem_kernel / 2, sd, rng);
}

void Generator::run_encoder(const Encoder& enc, const Var& x, Var& skip, std::vector<Var>& outs) const {
  if (x.shape().size() != 4 || x.dim(1) != 3) {
    throw ShapeError("generator input must be [N,3,H,W], got " + t::shape_string(x.shape()));
  }
  if (x.dim(2) % 4 != 0 || x.dim(3) % 4 != 0) {
    throw ShapeError("generator input " + t::shape_string(x.shape()) + " not divisible by 4");
  }
  Var h = t::relu(t::instance_norm(enc.stem0(x)));
  skip = t::relu(t::instance_norm(enc.stem1(h)));
  h = t::relu(t::instance_norm(enc.stem2(skip)));
  outs.clear();
  for (const auto& block : enc.blocks) {
    Var r = t::relu(t::instance_norm(block.conv1(h)));
    r = t::instance_norm(block.conv2(r));
    h = t::add(h, r);
    outs.push_back(h);
  }
}

ContentFeatures Generator::content_encode(const Var& images, const ForwardOptions& opts) const {
  ContentFeatures out;
  std::vector<Var> block_outputs;
  run_encoder(content_, images, out.skip, block_outputs);
  Var fused = fuse_residual_outputs(block_outputs);
  if (config_.attention) {
    out.mask = attention_mask(fused, attention_.weight, attention_.bias);
    Var mask = out.mask;
    if (opts.freeze_mask_one) {
      mask = t::constant(t::Tensor(out.mask.shape(), 1.0));
    }
    fused = apply_mask(fused, mask);
  }
  out.content = projection_(fused);
  return out;
}

Var Generator::style_encode(const Var& images) const {
  if (!config_.style_branch) throw ContractError("generator was built without a style branch");
  Var skip;
  std::vector<Var> block_outputs;
  run_encoder(style_, images, skip, block_outputs);
  return block_outputs.back();
}

Var Generator::decode(const Var& content, const Var& style, const Var& skip) const {
  Var h = content;
  if (config_.style_branch) {
    if (!style.defined()) throw ContractError("decode: style features required");
    if (style.shape() != content.shape()) {
      throw ShapeError("decode: content " + t::shape_string(content.shape()) + " vs style " +
                       t::shape_string(style.shape()));
    }
    std::vector<Var> parts{content, style};
    h = t::concat_channels(parts);
  }
  h = t::relu(t::instance_norm(up1_(h)));
  if (skip.shape() != h.shape()) {
    throw ShapeError("decode: skip " + t::shape_string(skip.shape()) + " vs upsampled " +
                     t::shape_string(h.shape()));
  }
  h = t::add(h, skip);
  h = t::relu(t::instance_norm(up2_(h)));
  return t::tanh(out_(h));
}

Translation Generator::forward(const Var& images, const ForwardOptions& opts) const {
  Translation tr;
  tr.content = content_encode(images, opts);
  if (config_.style_branch) tr.style = style_encode(images);
  tr.image = decode(tr.content.content, tr.style, tr.content.skip);
  return tr;
}

std::vector<data::Image> translate(std::span<const data::Image> images, const Generator& generator,
                                   int chunk) {
  t::NoGradGuard no_grad;
  std::vector<data::Image> out;
  out.reserve(images.size());
  for (std::size_t begin = 0; begin < images.size(); begin += static_cast<std::size_t>(chunk)) {
    const std::size_t end = std::min(images.size(), begin + static_cast<std::size_t>(chunk));
    Var batch = t::constant(data::to_batch(images.subspan(begin, end - begin)));
    Var result = generator.forward(batch).image;
    for (std::size_t i = 0; i < end - begin; ++i) {
      out.push_back(data::from_batch(result.value(), static_cast<int>(i)));
    }
  }
  return out;
}

}  // namespace vtreid::vtgan
