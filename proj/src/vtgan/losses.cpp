#include "vtreid/vtgan/losses.hpp"

#include <array>
#include <cmath>

#include "vtreid/core/error.hpp"
#include "vtreid/tensor/ops.hpp"

namespace vtreid::vtgan {

namespace t = vtreid::tensor;

Var l1_mean(const Var& a, const Var& b) {
  if (a.size() == 0) throw ContractError("l1_mean of empty batch");
  return t::mean(t::abs(t::sub(a, b)));
}

Var gram_distance(const Var& features_a, const Var& features_b) {
  if (features_a.shape() != features_b.shape()) {
    throw ContractError("gram_distance: feature maps " + t::shape_string(features_a.shape()) + " and " +
                        t::shape_string(features_b.shape()) + " differ");
  }
  const Var ga = t::gram(features_a);
  const Var gb = t::gram(features_b);
  const double n = features_a.dim(1);
  const double m = static_cast<double>(features_a.dim(2)) * features_a.dim(3);
  const double batch = features_a.dim(0);
  return t::scale(t::sum(t::square(t::sub(ga, gb))), 1.0 / (n * m * batch));
}

Var style_loss(const Var& x, const Var& y, const ImageMap& style_g, const ImageMap& style_f) {
  const Var tx = style_g(x);
  const Var ay = style_g(y);
  const Var ty = style_f(y);
  const Var ax = style_f(x);
  return t::add(gram_distance(tx, ay), gram_distance(ty, ax));
}

AdversarialTerms adversarial_terms(const Var& d_real, const Var& d_fake, bool paper_literal) {
  if (d_real.size() == 0 || d_fake.size() == 0) throw ContractError("adversarial loss on an empty batch");
  AdversarialTerms out;
  if (paper_literal) {
    out.g_loss = t::mean(t::abs(t::add_scalar(d_fake, -1.0)));
    out.d_loss = t::add(t::mean(t::square(d_real)), out.g_loss);
  } else {
    out.g_loss = t::mean(t::square(t::add_scalar(d_fake, -1.0)));
    out.d_loss = t::add(t::mean(t::square(t::add_scalar(d_real, -1.0))), t::mean(t::square(d_fake)));
  }
  return out;
}

AdversarialTerms adversarial_losses(const Var& real_batch, const Var& fake_batch,
                                    const Discriminator& discriminator, bool paper_literal) {
  if (real_batch.size() == 0 || fake_batch.size() == 0) throw ContractError("adversarial loss on an empty batch");
  return adversarial_terms(discriminator(real_batch), discriminator(fake_batch), paper_literal);
}

Var cycle_loss(const Var& x, const Var& y, const ImageMap& g, const ImageMap& f) {
  return t::add(l1_mean(f(g(x)), x), l1_mean(g(f(y)), y));
}

Var identity_loss(const Var& x, const Var& y, const ImageMap& g, const ImageMap& f) {
  return t::add(l1_mean(f(y), y), l1_mean(g(x), x));
}

void LossWeights::validate() const {
  if (lambda_cyc < 0.0) throw ConfigError("lambda_cyc must be nonnegative");
  if (lambda_id < 0.0) throw ConfigError("lambda_id must be nonnegative");
  if (lambda_style < 0.0) throw ConfigError("lambda_style must be nonnegative");
}

Var total_objective(const ObjectiveTerms& terms, const LossWeights& weights) {
  weights.validate();
  const std::array<Var, 5> parts{terms.gan_g, terms.gan_f, terms.cycle, terms.identity, terms.style};
  const std::array<double, 5> w{1.0, 1.0, weights.lambda_cyc, weights.lambda_id, weights.lambda_style};
  return t::weighted_sum(parts, w);
}

TranslationLossReport report_of(const ObjectiveTerms& terms, const Var& total) {
  TranslationLossReport r;
  r.l_gan_G = terms.gan_g.item();
  r.l_gan_F = terms.gan_f.item();
  r.l_cyc = terms.cycle.item();
  r.l_id = terms.identity.item();
  r.l_style = terms.style.item();
  r.l_total = total.item();
  return r;
}

}  // namespace vtreid::vtgan
