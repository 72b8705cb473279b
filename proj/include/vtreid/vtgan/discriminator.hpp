#pragma once

#include <vector>

#include "vtreid/core/rng.hpp"
#include "vtreid/nn/params.hpp"

namespace vtreid::vtgan {

using tensor::Var;

struct DiscriminatorConfig {
  int base_width = 64;
  int layers = 4;             // all stride 2; the last emits one logit per patch
  bool instance_norm = true;  // on the hidden layers after the first
  double slope = 0.2;
  double init_std = 0.02;

  void validate() const;
  bool operator==(const DiscriminatorConfig&) const = default;
};

// Patch discriminator: a map of unbounded per-patch scores.
class Discriminator {
 public:
  Discriminator(const DiscriminatorConfig& config, Rng& rng);

  Var operator()(const Var& images) const;

  const DiscriminatorConfig& config() const noexcept { return config_; }
  nn::ParamStore& params() noexcept { return params_; }
  const nn::ParamStore& params() const noexcept { return params_; }

 private:
  DiscriminatorConfig config_;
  nn::ParamStore params_;
  std::vector<nn::Conv2d> convs_;
};

}  // namespace vtreid::vtgan
