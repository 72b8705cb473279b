#include "vtreid/nn/params.hpp"

#include <cmath>

#include "vtreid/core/error.hpp"
#include "vtreid/tensor/ops.hpp"

namespace vtreid::nn {

Var ParamStore::add(std::string name, Tensor init) {
  if (contains(name)) throw ContractError("duplicate parameter name " + name);
  Var v = tensor::parameter(std::move(init));
  entries_.emplace_back(std::move(name), v);
  return v;
}

Var ParamStore::get(const std::string& name) const {
  for (const auto& [n, v] : entries_)
    if (n == name) return v;
  throw ContractError("unknown parameter " + name);
}

bool ParamStore::contains(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.first == name) return true;
  return false;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& e : entries_) const_cast<Var&>(e.second).zero_grad();
}

std::vector<Tensor> ParamStore::snapshot() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.second.value());
  return out;
}

void ParamStore::restore(const std::vector<std::pair<std::string, Tensor>>& named) {
  if (named.size() != entries_.size()) {
    throw SchemaError("parameter count mismatch: expected " + std::to_string(entries_.size()) +
                      ", got " + std::to_string(named.size()));
  }
  for (std::size_t i = 0; i < named.size(); ++i) {
    auto& [name, var] = entries_[i];
    if (named[i].first != name) throw SchemaError("parameter name mismatch: " + named[i].first + " vs " + name);
    if (named[i].second.shape() != var.shape()) {
      throw SchemaError("parameter shape mismatch for " + name + ": " +
                        tensor::shape_string(named[i].second.shape()) + " vs " +
                        tensor::shape_string(var.shape()));
    }
    var.mutable_value() = named[i].second;
  }
}

void ParamStore::assign_all(double v) {
  for (auto& e : entries_) const_cast<Var&>(e.second).mutable_value().fill(v);
}

Tensor init_tensor(Shape shape, Init kind, double scale, int fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  if (kind == Init::zero) return t;
  const double sd = kind == Init::he ? scale * std::sqrt(2.0 / std::max(fan_in, 1)) : scale;
  for (auto& v : t.values()) v = rng.normal(0.0, sd);
  return t;
}

Var Conv2d::operator()(const Var& x) const { return tensor::conv2d(x, weight, bias, stride, pad); }

Var ConvTranspose2d::operator()(const Var& x) const {
  return tensor::conv_transpose2d(x, weight, bias, stride, pad, output_pad);
}

Var Linear::operator()(const Var& x) const { return tensor::linear(x, weight, bias); }

Conv2d make_conv(ParamStore& store, const std::string& name, int in, int out, int kernel,
                 int stride, int pad, double std, Rng& rng) {
  const int fan_in = in * kernel * kernel;
  Conv2d c;
  c.weight = store.add(name + ".weight",
                       init_tensor({out, in, kernel, kernel}, std > 0 ? Init::normal : Init::he,
                                   std > 0 ? std : 1.0, fan_in, rng));
  c.bias = store.add(name + ".bias", Tensor({out}));
  c.stride = stride;
  c.pad = pad;
  return c;
}

ConvTranspose2d make_deconv(ParamStore& store, const std::string& name, int in, int out,
                            int kernel, double std, Rng& rng) {
  ConvTranspose2d d;
  // stride 2 and pad = kernel/2 with output_pad 1 doubles the spatial size for odd kernels
  const int fan_in = in * kernel * kernel / 4;
  d.weight = store.add(name + ".weight",
                       init_tensor({in, out, kernel, kernel}, std > 0 ? Init::normal : Init::he,
                                   std > 0 ? std : 1.0, fan_in, rng));
  d.bias = store.add(name + ".bias", Tensor({out}));
  d.stride = 2;
  d.pad = kernel / 2;
  d.output_pad = 1;
  return d;
}

Linear make_linear(ParamStore& store, const std::string& name, int in, int out, double std,
                   Rng& rng) {
  Linear l;
  l.weight = store.add(name + ".weight", init_tensor({out, in}, std > 0 ? Init::normal : Init::he,
                                                     std > 0 ? std : 1.0, in, rng));
  l.bias = store.add(name + ".bias", Tensor({out}));
  return l;
}

}  // namespace vtreid::nn
