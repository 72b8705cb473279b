#pragma once

#include <string>
#include <utility>
#include <vector>

#include "vtreid/nn/params.hpp"

namespace vtreid::nn {

// Named optimizer state, serializable as tensor blobs.
using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(const ParamStore& params, AdamConfig config);

  void step();
  void set_lr(double lr) { config_.lr = lr; }
  const AdamConfig& config() const { return config_; }
  long steps() const { return t_; }

  NamedTensors state() const;
  void load_state(const NamedTensors& state);

 private:
  const ParamStore* params_;
  AdamConfig config_;
  long t_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

struct SgdConfig {
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
};

// Heavy-ball SGD with L2 weight decay folded into the gradient.
class Sgd {
 public:
  Sgd(const ParamStore& params, SgdConfig config);

  void step();
  void set_lr(double lr) { config_.lr = lr; }
  const SgdConfig& config() const { return config_; }

  NamedTensors state() const;
  void load_state(const NamedTensors& state);

 private:
  const ParamStore* params_;
  SgdConfig config_;
  std::vector<Tensor> velocity_;
};

}  // namespace vtreid::nn
