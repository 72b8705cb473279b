#pragma once

#include <functional>

#include "vtreid/tensor/tensor.hpp"
#include "vtreid/vtgan/discriminator.hpp"

namespace vtreid::vtgan {

using tensor::Var;
using ImageMap = std::function<Var(const Var&)>;

// Per-pixel mean of |a - b|.
Var l1_mean(const Var& a, const Var& b);

// sum((g1 - g2)^2) / (N * M) per sample, averaged over the batch; N is the
// channel count and M the number of spatial sites of the encoded features.
Var gram_distance(const Var& features_a, const Var& features_b);

// Two-direction gram loss: gram(Eg(x)) vs gram(Eg(y)) plus gram(Ef(y)) vs
// gram(Ef(x)).
Var style_loss(const Var& x, const Var& y, const ImageMap& style_g, const ImageMap& style_f);

struct AdversarialTerms {
  Var d_loss;
  Var g_loss;
};

// From discriminator outputs on real and generated batches.
//  least squares: d = E[(D(real)-1)^2] + E[D(fake)^2], g = E[(D(fake)-1)^2]
//  paper_literal: d = E[D(real)^2] + E[|D(fake)-1|],    g = E[|D(fake)-1|]
AdversarialTerms adversarial_terms(const Var& d_real, const Var& d_fake, bool paper_literal);
AdversarialTerms adversarial_losses(const Var& real_batch, const Var& fake_batch,
                                    const Discriminator& discriminator, bool paper_literal);

// E|F(G(x)) - x| + E|G(F(y)) - y|
Var cycle_loss(const Var& x, const Var& y, const ImageMap& g, const ImageMap& f);
// E|F(y) - y| + E|G(x) - x|
Var identity_loss(const Var& x, const Var& y, const ImageMap& g, const ImageMap& f);

struct LossWeights {
  double lambda_cyc = 10.0;
  double lambda_id = 5.0;
  double lambda_style = 1.0;

  void validate() const;
  bool operator==(const LossWeights&) const = default;
};

struct ObjectiveTerms {
  Var gan_g;  // generator G against D_T
  Var gan_f;  // generator F against D_S
  Var cycle;
  Var identity;
  Var style;
};

struct TranslationLossReport {
  double l_gan_G = 0, l_gan_F = 0, l_cyc = 0, l_id = 0, l_style = 0, l_total = 0;
  double d_s = 0, d_t = 0;
};

// (gan_g + gan_f + lambda_cyc * cycle) + lambda_id * identity + lambda_style * style
Var total_objective(const ObjectiveTerms& terms, const LossWeights& weights);
TranslationLossReport report_of(const ObjectiveTerms& terms, const Var& total);

}  // namespace vtreid::vtgan
