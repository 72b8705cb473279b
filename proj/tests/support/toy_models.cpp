#include "toy_models.hpp"

#include <stdexcept>

#include "vtreid/attnet/model.hpp"
#include "vtreid/tensor/ops.hpp"
#include "vtreid/vtgan/losses.hpp"
#include "vtreid/vtgan/train.hpp"

namespace vtreid::testing {

using tensor::Var;

tensor::Tensor random_tensor(Rng& rng, tensor::Shape shape, double lo, double hi) {
  tensor::Tensor t(std::move(shape));
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

ToyNet::ToyNet(int out, double std, Rng& rng, const std::string& name) {
  conv = nn::make_conv(params, name, 3, out, 3, 1, 1, std, rng);
  // Nonzero biases so the bias gradients are exercised away from symmetry.
  for (auto& v : conv.bias.mutable_value().values()) v = rng.uniform(-0.2, 0.2);
}

Var ToyNet::operator()(const Var& x) const { return tensor::tanh(conv(x)); }

std::vector<Var> ToyNet::vars() const { return {conv.weight, conv.bias}; }

vtgan::GeneratorConfig toy_generator_config() {
  vtgan::GeneratorConfig c;
  c.stem_width = 4;
  c.half_width = 4;
  c.residual_width = 4;
  c.residual_blocks = 2;
  c.stem_kernel = 3;
  c.init_std = 0.3;
  return c;
}

vtgan::DiscriminatorConfig toy_discriminator_config() {
  vtgan::DiscriminatorConfig c;
  c.base_width = 4;
  c.layers = 2;
  c.instance_norm = false;
  c.init_std = 0.3;
  return c;
}

namespace {

std::vector<Var> all_vars(const nn::ParamStore& store) {
  std::vector<Var> out;
  for (const auto& e : store.entries()) out.push_back(e.second);
  return out;
}

void append(std::vector<Var>& to, const std::vector<Var>& from) { to.insert(to.end(), from.begin(), from.end()); }

}  // namespace

GradCheckResult translation_gradcheck(const std::string& family, std::uint64_t draw) {
  Rng rng(derive_seed(0x67726164, draw, std::hash<std::string>{}(family) & 0xffff));
  const Var x = tensor::constant(random_tensor(rng, {2, 3, 8, 8}));
  const Var y = tensor::constant(random_tensor(rng, {2, 3, 8, 8}));

  if (family == "style") {
    ToyNet eg(4, 0.4, rng, "eg"), ef(4, 0.4, rng, "ef");
    std::vector<Var> params = eg.vars();
    append(params, ef.vars());
    return check_gradients(params, [&] { return vtgan::style_loss(x, y, eg, ef); }, rng);
  }
  if (family == "cycle" || family == "identity") {
    ToyNet g(3, 0.4, rng, "g"), f(3, 0.4, rng, "f");
    std::vector<Var> params = g.vars();
    append(params, f.vars());
    if (family == "cycle") return check_gradients(params, [&] { return vtgan::cycle_loss(x, y, g, f); }, rng);
    return check_gradients(params, [&] { return vtgan::identity_loss(x, y, g, f); }, rng);
  }
  if (family == "adversarial" || family == "adversarial_literal") {
    const bool literal = family == "adversarial_literal";
    vtgan::Discriminator d(toy_discriminator_config(), rng);
    ToyNet g(3, 0.4, rng, "g");
    std::vector<Var> d_params = all_vars(d.params());
    // Discriminator loss w.r.t. D; generator loss w.r.t. the generator.
    GradCheckResult r = check_gradients(
        d_params, [&] { return vtgan::adversarial_losses(y, g(x), d, literal).d_loss; }, rng);
    r.merge(check_gradients(
        g.vars(), [&] { return vtgan::adversarial_losses(y, g(x), d, literal).g_loss; }, rng));
    return r;
  }
  if (family == "total") {
    vtgan::Generator g(toy_generator_config(), rng), f(toy_generator_config(), rng);
    vtgan::Discriminator d_s(toy_discriminator_config(), rng), d_t(toy_discriminator_config(), rng);
    std::vector<Var> params = all_vars(g.params());
    append(params, all_vars(f.params()));
    const vtgan::LossWeights weights;
    return check_gradients(
        params, [&] { return vtgan::generator_objective(g, f, d_s, d_t, x, y, weights, false).total; }, rng, 300);
  }
  throw std::invalid_argument("unknown loss family " + family);
}

attnet::ReidModelConfig toy_reid_config() {
  attnet::ReidModelConfig c;
  c.input_size = 32;
  c.stage_widths = {2, 3, 3, 4, 4};
  c.fc1_width = 4;
  c.fc2_width = 3;
  c.num_classes = 3;
  return c;
}

GradCheckResult reid_gradcheck(const std::string& family, std::uint64_t draw) {
  Rng rng(derive_seed(0x72656964, draw, std::hash<std::string>{}(family) & 0xffff));
  if (family == "channel_attention") {
    const Var f_g = tensor::Var(random_tensor(rng, {3, 4}, 0.0, 2.0), true);
    const Var w = tensor::Var(random_tensor(rng, {4, 4}), true);
    const Var b = tensor::Var(random_tensor(rng, {4}), true);
    const Var probe = tensor::constant(random_tensor(rng, {3, 4}));
    return check_gradients({f_g, w, b}, [&] {
      return tensor::sum(tensor::mul(attnet::channel_attention(f_g, w, b).f_short, probe));
    }, rng);
  }
  attnet::ReidNet net(toy_reid_config(), rng);
  // The zero-initialized residual convs would leave half the weights with
  // vanishing gradients; draw every parameter instead.
  for (const auto& e : net.params().entries()) {
    Var p = e.second;
    for (auto& v : p.mutable_value().values()) v = rng.uniform(-0.5, 0.5);
  }
  const Var a = tensor::constant(random_tensor(rng, {2, 3, 32, 32}, 0.0, 1.0));
  const Var b = tensor::constant(random_tensor(rng, {2, 3, 32, 32}, 0.0, 1.0));
  const std::vector<int> ids_a{0, 2}, ids_b{0, 1}, same{1, 0};
  const std::vector<int> ids{0, 2, 0, 1};
  const auto params = all_vars(net.params());
  auto loss = [&]() -> Var {
    const Var fa = net.forward(a).f_a, fb = net.forward(b).f_a;
    if (family == "identification") return attnet::identification_loss(net.identity_logits(fa), ids_a);
    if (family == "verification") return attnet::verification_loss(net, fa, fb, same);
    std::vector<Var> both{fa, fb};
    const Var id = attnet::identification_loss(net.identity_logits(tensor::concat_batch(both)), ids);
    return tensor::add(id, attnet::verification_loss(net, fa, fb, same));
  };
  if (family != "identification" && family != "verification" && family != "total") {
    throw std::invalid_argument("unknown loss family " + family);
  }
  return check_gradients(params, loss, rng, 300);
}

}  // namespace vtreid::testing
