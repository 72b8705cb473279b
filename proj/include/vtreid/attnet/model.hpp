#pragma once

#include <array>
#include <span>
#include <vector>

#include "vtreid/core/rng.hpp"
#include "vtreid/datamodel/image.hpp"
#include "vtreid/nn/params.hpp"

namespace vtreid::attnet {

using tensor::Tensor;
using tensor::Var;

struct ReidModelConfig {
  int input_size = 64;
  std::array<int, 5> stage_widths{32, 64, 128, 256, 256};  // each stage halves the resolution
  int fc1_width = 128;
  int fc2_width = 64;  // width of f_d
  bool attention = true;           // false: baseline head on f_g alone
  bool spatial_attention = false;  // attention over the sites of f_r instead of channels of f_g
  int num_classes = 2;

  void validate() const;
  int backbone_width() const { return stage_widths.back(); }
  int feature_size() const { return input_size >> 5; }
  int embedding_dim() const { return attention ? fc2_width + backbone_width() : backbone_width(); }
  bool operator==(const ReidModelConfig&) const = default;
};

// Intermediate features of one forward pass. Undefined members are not
// produced by the configured head.
struct ReidFeatures {
  Var f_r;      // backbone map [N, C_b, S, S]
  Var f_g;      // pooled [N, C_b]
  Var m;        // attention weights: [N, C_b] (channel) or [N, 1, S, S] (spatial)
  Var f_short;  // f_g + f_g * M (channel) or f_g + attention-pooled f_r (spatial)
  Var f_d;      // after the two FC layers
  Var f_a;      // embedding [f_d, f_g], or f_g for the baseline head
};

// M = softmax over channels of a C->C projection of f_g; f_short = f_g + f_g * M.
struct ChannelAttention {
  Var m;
  Var f_short;
};
ChannelAttention channel_attention(const Var& f_g, const Var& weight, const Var& bias);

// Two-stream reID network. Both streams run this one module, so the weights
// are shared by construction.
class ReidNet {
 public:
  ReidNet(const ReidModelConfig& config, Rng& rng);

  Var backbone(const Var& images) const;
  ReidFeatures forward(const Var& images) const;
  Var identity_logits(const Var& f_a) const;
  Var verification_logits(const Var& f_a1, const Var& f_a2) const;

  const ReidModelConfig& config() const noexcept { return config_; }
  nn::ParamStore& params() noexcept { return params_; }
  const nn::ParamStore& params() const noexcept { return params_; }

 private:
  struct Stage {
    nn::Conv2d conv1, conv2, shortcut;
  };
  ReidModelConfig config_;
  nn::ParamStore params_;
  std::vector<Stage> stages_;
  nn::Conv2d attention_;  // 1x1; C_b -> C_b (channel) or C_b -> 1 (spatial)
  nn::Linear fc1_, fc2_;
  nn::Linear id_classifier_;
  nn::Linear verif_classifier_;
};

// Mean softmax cross-entropy; ContractError on a label outside [0, K).
Var identification_loss(const Var& logits, std::span<const int> labels);
// 2-way cross-entropy on linear((f_a1 - f_a2)^2); label 1 means same identity.
Var verification_loss(const ReidNet& net, const Var& f_a1, const Var& f_a2, std::span<const int> same_id);

// Inference-mode embeddings f_a, one row per image, in chunks of `chunk`.
Tensor embed(const ReidNet& net, std::span<const data::Image> images, int chunk = 16);

}  // namespace vtreid::attnet
