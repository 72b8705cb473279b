#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace vtreid::testing {

void GradCheckResult::merge(const GradCheckResult& other) {
  checked += other.checked;
  within_tight += other.within_tight;
  within_loose += other.within_loose;
  kinks += other.kinks;
  if (other.worst_relative > worst_relative) {
    worst_relative = other.worst_relative;
    worst_where = other.worst_where;
  }
}

double relative_error(double analytic, double numeric, double loss_scale) {
  const double floor = 1e-6 * std::max(1.0, std::fabs(loss_scale));
  const double denom = std::max({std::fabs(analytic), std::fabs(numeric), floor});
  return std::fabs(analytic - numeric) / denom;
}

GradCheckResult check_gradients(const std::vector<tensor::Var>& params,
                                const std::function<tensor::Var()>& loss, Rng& rng,
                                std::size_t max_coords, double h) {
  for (auto p : params) p.zero_grad();
  tensor::Var root = loss();
  const double base = root.item();
  tensor::backward(root);
  std::vector<tensor::Tensor> analytic;
  for (const auto& p : params) {
    analytic.push_back(p.grad().empty() ? tensor::Tensor(p.shape()) : p.grad());
  }

  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t p = 0; p < params.size(); ++p)
    for (std::size_t i = 0; i < params[p].size(); ++i) coords.emplace_back(p, i);
  if (coords.size() > max_coords) {
    rng.shuffle(coords);
    coords.resize(max_coords);
  }

  GradCheckResult result;
  tensor::NoGradGuard no_grad;
  for (auto [p, i] : coords) {
    tensor::Var var = params[p];
    double& slot = var.mutable_value()[i];
    const double saved = slot;
    slot = saved + h;
    const double plus = loss().item();
    slot = saved - h;
    const double minus = loss().item();
    slot = saved;
    const double numeric = (plus - minus) / (2.0 * h);
    const double rel = relative_error(analytic[p][i], numeric, base);
    // On a smooth piece the one-sided slopes differ by O(h f''); a switch
    // inside the interval makes them disagree at first order.
    const double right = (plus - base) / h, left = (base - minus) / h;
    if (rel >= 1e-4 && relative_error(right, left, base) > 1e-2) {
      ++result.kinks;
      continue;
    }
    ++result.checked;
    if (rel < 1e-4) ++result.within_tight;
    if (rel < 1e-3) ++result.within_loose;
    if (rel > result.worst_relative) {
      result.worst_relative = rel;
      result.worst_where = "param " + std::to_string(p) + "[" + std::to_string(i) +
                           "] analytic=" + std::to_string(analytic[p][i]) +
                           " numeric=" + std::to_string(numeric);
    }
  }
  return result;
}

}  // namespace vtreid::testing
