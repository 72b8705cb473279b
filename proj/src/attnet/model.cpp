#include "vtreid/attnet/model.hpp"

#include "vtreid/core/error.hpp"
#include "vtreid/tensor/ops.hpp"

namespace vtreid::attnet {

namespace t = vtreid::tensor;

void ReidModelConfig::validate() const {
  if (input_size < 32 || input_size % 32 != 0) {
    throw ConfigError("reID input_size must be a positive multiple of 32, got " + std::to_string(input_size));
  }
  for (int w : stage_widths)
    if (w < 1) throw ConfigError("reID stage widths must be positive");
  if (fc1_width < 1 || fc2_width < 1) throw ConfigError("reID FC widths must be positive");
  if (num_classes < 2) throw ConfigError("reID training needs at least 2 identities");
}

ChannelAttention channel_attention(const Var& f_g, const Var& weight, const Var& bias) {
  ChannelAttention out;
  out.m = t::softmax_rows(t::linear(f_g, weight, bias));
  out.f_short = t::add(f_g, t::mul(f_g, out.m));
  return out;
}

ReidNet::ReidNet(const ReidModelConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  int in = 3;
  for (int s = 0; s < 5; ++s) {
    const int w = config_.stage_widths[static_cast<std::size_t>(s)];
    const std::string name = "backbone.stage" + std::to_string(s);
    Stage st;
    st.conv1 = nn::make_conv(params_, name + ".conv1", in, w, 3, 2, 1, 0.0, rng);
    st.conv2 = nn::make_conv(params_, name + ".conv2", w, w, 3, 1, 1, 0.0, rng);
    // Residual branch starts at zero; the stage begins as its projection.
    st.conv2.weight.mutable_value().fill(0.0);
    st.shortcut = nn::make_conv(params_, name + ".shortcut", in, w, 1, 2, 0, 0.0, rng);
    stages_.push_back(st);
    in = w;
  }
  const int cb = config_.backbone_width();
  if (config_.attention) {
    attention_ = nn::make_conv(params_, "head.attention", cb, config_.spatial_attention ? 1 : cb, 1, 1, 0, 0.01, rng);
    fc1_ = nn::make_linear(params_, "head.fc1", cb, config_.fc1_width, 0.0, rng);
    fc2_ = nn::make_linear(params_, "head.fc2", config_.fc1_width, config_.fc2_width, 0.0, rng);
  }
  id_classifier_ = nn::make_linear(params_, "head.identification", config_.embedding_dim(), config_.num_classes, 0.01, rng);
  verif_classifier_ = nn::make_linear(params_, "head.verification", config_.embedding_dim(), 2, 0.01, rng);
}

Var ReidNet::backbone(const Var& images) const {
  if (images.shape().size() != 4 || images.dim(1) != 3 || images.dim(2) != config_.input_size ||
      images.dim(3) != config_.input_size) {
    throw ShapeError("reID input must be [N,3," + std::to_string(config_.input_size) + "," +
                     std::to_string(config_.input_size) + "], got " + t::shape_string(images.shape()));
  }
  Var h = images;
  for (const auto& st : stages_) {
    Var branch = st.conv2(t::relu(st.conv1(h)));
    h = t::relu(t::add(st.shortcut(h), branch));
  }
  return h;
}

ReidFeatures ReidNet::forward(const Var& images) const {
  ReidFeatures f;
  f.f_r = backbone(images);
  f.f_g = t::global_avg_pool(f.f_r);
  if (!config_.attention) {
    f.f_a = f.f_g;
    return f;
  }
  if (config_.spatial_attention) {
    const int n = f.f_r.dim(0), s = f.f_r.dim(2) * f.f_r.dim(3);
    Var logits = t::reshape(attention_(f.f_r), {n, s});
    f.m = t::reshape(t::softmax_rows(logits), {n, 1, f.f_r.dim(2), f.f_r.dim(3)});
    // Attention-weighted sum over sites = site count x mean of the weighted map.
    Var pooled = t::scale(t::global_avg_pool(t::mul_channel_broadcast(f.f_r, f.m)), static_cast<double>(s));
    f.f_short = t::add(f.f_g, pooled);
  } else {
    const int cb = config_.backbone_width();
    ChannelAttention ca = channel_attention(f.f_g, t::reshape(attention_.weight, {cb, cb}), attention_.bias);
    f.m = ca.m;
    f.f_short = ca.f_short;
  }
  f.f_d = fc2_(t::relu(fc1_(f.f_short)));
  std::vector<Var> parts{f.f_d, f.f_g};
  f.f_a = t::concat_cols(parts);
  return f;
}

Var ReidNet::identity_logits(const Var& f_a) const { return id_classifier_(f_a); }

Var ReidNet::verification_logits(const Var& f_a1, const Var& f_a2) const {
  if (f_a1.shape() != f_a2.shape()) {
    throw ContractError("verification pair embeddings " + t::shape_string(f_a1.shape()) + " and " +
                        t::shape_string(f_a2.shape()) + " differ");
  }
  return verif_classifier_(t::square(t::sub(f_a1, f_a2)));
}

Var identification_loss(const Var& logits, std::span<const int> labels) { return t::cross_entropy(logits, labels); }

Var verification_loss(const ReidNet& net, const Var& f_a1, const Var& f_a2, std::span<const int> same_id) {
  if (static_cast<int>(same_id.size()) != f_a1.dim(0)) {
    throw ContractError("verification labels: " + std::to_string(same_id.size()) + " for " +
                        std::to_string(f_a1.dim(0)) + " pairs");
  }
  for (int s : same_id)
    if (s != 0 && s != 1) throw ContractError("verification label must be 0 or 1");
  return t::cross_entropy(net.verification_logits(f_a1, f_a2), same_id);
}

Tensor embed(const ReidNet& net, std::span<const data::Image> images, int chunk) {
  t::NoGradGuard no_grad;
  const int dim = net.config().embedding_dim();
  Tensor out({static_cast<int>(images.size()), dim});
  for (std::size_t begin = 0; begin < images.size(); begin += static_cast<std::size_t>(chunk)) {
    const std::size_t end = std::min(images.size(), begin + static_cast<std::size_t>(chunk));
    Var batch = t::constant(data::to_batch(images.subspan(begin, end - begin)));
    const Tensor f = net.forward(batch).f_a.value();
    std::copy(f.values().begin(), f.values().end(), out.values().begin() + static_cast<std::ptrdiff_t>(begin * dim));
  }
  return out;
}

}  // namespace vtreid::attnet
