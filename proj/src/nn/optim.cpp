#include "vtreid/nn/optim.hpp"

#include <cmath>

#include "vtreid/core/error.hpp"

namespace vtreid::nn {

namespace {

void check_state(const NamedTensors& state, const ParamStore& params, std::size_t per_param,
                 const char* what) {
  if (state.size() != params.entries().size() * per_param + 1) {
    throw SchemaError(std::string(what) + " state does not match parameter set");
  }
}

}  // namespace

Adam::Adam(const ParamStore& params, AdamConfig config) : params_(&params), config_(config) {
  for (const auto& [name, var] : params.entries()) {
    m_.emplace_back(var.shape());
    v_.emplace_back(var.shape());
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  const auto& entries = params_->entries();
  for (std::size_t p = 0; p < entries.size(); ++p) {
    Var var = entries[p].second;
    const Tensor& g = var.grad();
    if (g.empty()) continue;
    Tensor& w = var.mutable_value();
    Tensor& m = m_[p];
    Tensor& v = v_[p];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
  }
}

NamedTensors Adam::state() const {
  NamedTensors out;
  const auto& entries = params_->entries();
  for (std::size_t p = 0; p < entries.size(); ++p) {
    out.emplace_back(entries[p].first + ".m", m_[p]);
    out.emplace_back(entries[p].first + ".v", v_[p]);
  }
  out.emplace_back("t", Tensor(Shape{1}, static_cast<double>(t_)));
  return out;
}

void Adam::load_state(const NamedTensors& state) {
  check_state(state, *params_, 2, "Adam");
  for (std::size_t p = 0; p < m_.size(); ++p) {
    if (state[2 * p].second.shape() != m_[p].shape()) throw SchemaError("Adam state shape mismatch");
    m_[p] = state[2 * p].second;
    v_[p] = state[2 * p + 1].second;
  }
  t_ = static_cast<long>(state.back().second[0]);
}

Sgd::Sgd(const ParamStore& params, SgdConfig config) : params_(&params), config_(config) {
  for (const auto& [name, var] : params.entries()) velocity_.emplace_back(var.shape());
}

void Sgd::step() {
  const auto& entries = params_->entries();
  for (std::size_t p = 0; p < entries.size(); ++p) {
    Var var = entries[p].second;
    const Tensor& g = var.grad();
    if (g.empty()) continue;
    Tensor& w = var.mutable_value();
    Tensor& vel = velocity_[p];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double grad = g[i] + config_.weight_decay * w[i];
      vel[i] = config_.momentum * vel[i] + grad;
      w[i] -= config_.lr * vel[i];
    }
  }
}

NamedTensors Sgd::state() const {
  NamedTensors out;
  const auto& entries = params_->entries();
  for (std::size_t p = 0; p < entries.size(); ++p) {
    out.emplace_back(entries[p].first + ".velocity", velocity_[p]);
  }
  out.emplace_back("lr", Tensor(Shape{1}, config_.lr));
  return out;
}

void Sgd::load_state(const NamedTensors& state) {
  check_state(state, *params_, 1, "SGD");
  for (std::size_t p = 0; p < velocity_.size(); ++p) {
    if (state[p].second.shape() != velocity_[p].shape()) throw SchemaError("SGD state shape mismatch");
    velocity_[p] = state[p].second;
  }
  config_.lr = state.back().second[0];
}

}  // namespace vtreid::nn
