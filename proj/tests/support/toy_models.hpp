#pragma once

// Small models for gradient checks: at most 4 channels on 8x8 inputs.

#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "vtreid/attnet/model.hpp"
#include "vtreid/nn/params.hpp"
#include "vtreid/vtgan/discriminator.hpp"
#include "vtreid/vtgan/generator.hpp"

namespace vtreid::testing {

tensor::Tensor random_tensor(Rng& rng, tensor::Shape shape, double lo = -1.0, double hi = 1.0);

// tanh(conv3x3(x)) with `out` channels.
struct ToyNet {
  nn::ParamStore params;
  nn::Conv2d conv;

  ToyNet(int out, double std, Rng& rng, const std::string& name = "toy");
  tensor::Var operator()(const tensor::Var& x) const;
  std::vector<tensor::Var> vars() const;
};

vtgan::GeneratorConfig toy_generator_config();
vtgan::DiscriminatorConfig toy_discriminator_config();

// Loss families covered by the translation gradient suite.
inline const std::vector<std::string> kTranslationLossFamilies = {
    "style", "cycle", "identity", "adversarial", "adversarial_literal", "total"};

// One random parameter draw of one family.
GradCheckResult translation_gradcheck(const std::string& family, std::uint64_t draw);

attnet::ReidModelConfig toy_reid_config();

inline const std::vector<std::string> kReidLossFamilies = {"channel_attention", "identification", "verification",
                                                           "total"};

GradCheckResult reid_gradcheck(const std::string& family, std::uint64_t draw);

}  // namespace vtreid::testing
