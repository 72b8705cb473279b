#pragma once

#include <span>
#include <string>
#include <vector>

#include "vtreid/core/rng.hpp"
#include "vtreid/datamodel/image.hpp"
#include "vtreid/nn/params.hpp"

namespace vtreid::vtgan {

using tensor::Var;

struct GeneratorConfig {
  int stem_width = 32;       // full-resolution stem block
  int half_width = 32;       // first stride-2 block; also the decoder skip width
  int residual_width = 64;   // quarter resolution
  int residual_blocks = 9;
  int stem_kernel = 7;       // first stem conv and the output conv
  bool attention = true;     // false: fused features are projected unmasked
  bool style_branch = true;  // false: decoder sees content features only
  double init_std = 0.02;

  void validate() const;
  bool operator==(const GeneratorConfig&) const = default;
};

// Concatenates the residual block outputs along channels.
Var fuse_residual_outputs(std::span<const Var> block_outputs);
// sigmoid(w . f + b) at every spatial site; w is [1, C, 1, 1].
Var attention_mask(const Var& fused, const Var& weight, const Var& bias);
// f_c(i,j,:) = a(i,j) * f(i,j,:)
Var apply_mask(const Var& fused, const Var& mask);

struct ForwardOptions {
  // Replaces the learned mask by ones (degenerate cycle-adversarial setup).
  bool freeze_mask_one = false;
};

struct ContentFeatures {
  Var content;  // residual_width channels, quarter resolution
  Var skip;     // half_width channels, half resolution
  Var mask;     // 1 channel, quarter resolution (undefined without attention)
};

struct Translation {
  Var image;
  ContentFeatures content;
  Var style;  // undefined without the style branch
};

// Content encoder with attention, style encoder, and decoder with a global
// skip connection. All parameters live in one ParamStore.
class Generator {
 public:
  Generator(const GeneratorConfig& config, Rng& rng);

  ContentFeatures content_encode(const Var& images, const ForwardOptions& opts = {}) const;
  Var style_encode(const Var& images) const;
  Var decode(const Var& content, const Var& style, const Var& skip) const;
  Translation forward(const Var& images, const ForwardOptions& opts = {}) const;

  const GeneratorConfig& config() const noexcept { return config_; }
  nn::ParamStore& params() noexcept { return params_; }
  const nn::ParamStore& params() const noexcept { return params_; }

 private:
  struct ResBlock {
    nn::Conv2d conv1, conv2;
  };
  struct Encoder {
    nn::Conv2d stem0, stem1, stem2;
    std::vector<ResBlock> blocks;
  };
  Encoder make_encoder(const std::string& prefix, Rng& rng);
  // Returns the half-resolution stem output and every residual block output.
  void run_encoder(const Encoder& enc, const Var& x, Var& skip, std::vector<Var>& outs) const;

  GeneratorConfig config_;
  nn::ParamStore params_;
  Encoder content_;
  Encoder style_;
  nn::Conv2d attention_;
  nn::Conv2d projection_;
  nn::ConvTranspose2d up1_, up2_;
  nn::Conv2d out_;
};

// Inference-mode translation, order preserved. Runs in chunks of
// `chunk` images to bound memory.
std::vector<data::Image> translate(std::span<const data::Image> images, const Generator& generator,
                                   int chunk = 8);

}  // namespace vtreid::vtgan
