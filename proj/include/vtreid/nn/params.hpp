#pragma once

#include <string>
#include <utility>
#include <vector>

#include "vtreid/core/rng.hpp"
#include "vtreid/tensor/tensor.hpp"

namespace vtreid::nn {

using tensor::Shape;
using tensor::Tensor;
using tensor::Var;

// Ordered, named set of trainable tensors. Order is insertion order and is
// what checkpoints and optimizers iterate over.
class ParamStore {
 public:
  Var add(std::string name, Tensor init);

  const std::vector<std::pair<std::string, Var>>& entries() const { return entries_; }
  Var get(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::size_t scalar_count() const;

  void zero_grad();
  std::vector<Tensor> snapshot() const;
  // Copies values in; names and shapes must line up with `entries()`.
  void restore(const std::vector<std::pair<std::string, Tensor>>& named);
  void assign_all(double v);

 private:
  std::vector<std::pair<std::string, Var>> entries_;
};

enum class Init { normal, he, zero };

Tensor init_tensor(Shape shape, Init kind, double scale, int fan_in, Rng& rng);

struct Conv2d {
  Var weight;
  Var bias;
  int stride = 1;
  int pad = 0;
  Var operator()(const Var& x) const;
};

struct ConvTranspose2d {
  Var weight;
  Var bias;
  int stride = 2;
  int pad = 1;
  int output_pad = 1;
  Var operator()(const Var& x) const;
};

struct Linear {
  Var weight;
  Var bias;
  Var operator()(const Var& x) const;
};

// Registers "<name>.weight" and "<name>.bias". `std` > 0 draws weights from
// N(0, std); std == 0 uses He scaling from the fan-in.
Conv2d make_conv(ParamStore& store, const std::string& name, int in, int out, int kernel,
                 int stride, int pad, double std, Rng& rng);
ConvTranspose2d make_deconv(ParamStore& store, const std::string& name, int in, int out,
                            int kernel, double std, Rng& rng);
Linear make_linear(ParamStore& store, const std::string& name, int in, int out, double std,
                   Rng& rng);

}  // namespace vtreid::nn
