#include "vtreid/attnet/train.hpp"

#include <cmath>
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vtreid/core/error.hpp"
#include "vtreid/core/hash.hpp"
#include "vtreid/datamodel/sampling.hpp"
#include "vtreid/io/checkpoint.hpp"
#include "vtreid/tensor/ops.hpp"

namespace vtreid::attnet {

namespace t = vtreid::tensor;
namespace fs = std::filesystem;

void ReidTrainConfig::validate() const {
  ReidModelConfig m = model;
  m.num_classes = std::max(m.num_classes, 2);
  m.validate();
  if (batch_size < 2) throw ConfigError("reID batch_size must be at least 2 (one positive, one negative pair)");
  if (steps < 0 || drop_step < 0) throw ConfigError("steps and drop_step must be nonnegative");
  if (steps == 0 && (epochs < 1 || drop_epoch < 0)) throw ConfigError("need epochs >= 1 or steps >= 1");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(lr_drop_factor > 0.0 && lr_drop_factor <= 1.0)) throw ConfigError("lr_drop_factor must lie in (0,1]");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0,1)");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be nonnegative");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be nonnegative");
  if (shift_augment < 0 || shift_augment >= model.input_size / 2) {
    throw ConfigError("shift_augment must lie in [0, input_size/2)");
  }
}

std::string ReidTrainConfig::canonical() const {
  std::ostringstream s;
  s.precision(17);
  s << "input=" << model.input_size << ";stages=";
  for (int w : model.stage_widths) s << w << ',';
  s << ";fc=" << model.fc1_width << ',' << model.fc2_width << ";attention=" << model.attention
    << ";spatial=" << model.spatial_attention << ";batch=" << batch_size << ";epochs=" << epochs << ','
    << drop_epoch << ";steps=" << steps << ',' << drop_step << ";sgd=" << lr << ',' << lr_drop_factor << ','
    << momentum << ',' << weight_decay << ";seed=" << seed << ";augment=" << shift_augment << ','
    << flip_augment;
  return s.str();
}

std::string ReidTrainConfig::hash() const { return hex64(fnv1a64(canonical())); }

int ReidTrainConfig::steps_per_epoch(std::size_t dataset_size) const {
  return static_cast<int>((dataset_size + static_cast<std::size_t>(batch_size) - 1) /
                          static_cast<std::size_t>(batch_size));
}

int ReidTrainConfig::total_steps(std::size_t dataset_size) const {
  return steps > 0 ? steps : epochs * steps_per_epoch(dataset_size);
}

double ReidTrainConfig::lr_at(long step, std::size_t dataset_size) const {
  const long drop = steps > 0 ? (drop_step > 0 ? drop_step : steps)
                              : static_cast<long>(drop_epoch) * steps_per_epoch(dataset_size);
  return step < drop ? lr : lr * lr_drop_factor;
}

std::string format_log_row(long step, const ReidLossReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g,%.17g,%.17g", step, r.l_id, r.l_verif, r.l_total, r.acc_id,
                r.acc_verif);
  return buf;
}

ReidModelConfig model_config_for(const ReidTrainConfig& config, const data::DomainDataset& dataset) {
  ReidModelConfig m = config.model;
  m.num_classes = static_cast<int>(dataset.identity_set().size());
  return m;
}

namespace {

nn::SgdConfig sgd_of(const ReidTrainConfig& c) { return nn::SgdConfig{c.lr, c.momentum, c.weight_decay}; }

double argmax_accuracy(const Tensor& logits, std::span<const int> labels) {
  const int n = logits.shape()[0], k = logits.shape()[1];
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    const double* row = logits.data() + static_cast<std::ptrdiff_t>(i) * k;
    int best = 0;
    for (int j = 1; j < k; ++j)
      if (row[j] > row[best]) best = j;
    hits += best == labels[static_cast<std::size_t>(i)];
  }
  return n == 0 ? 0.0 : static_cast<double>(hits) / n;
}

data::Image jitter(const data::Image& in, int dx, int dy, bool flip) {
  data::Image out(in.height(), in.width());
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < in.width(); ++x) {
      int sx = std::clamp(x - dx, 0, in.width() - 1);
      const int sy = std::clamp(y - dy, 0, in.height() - 1);
      if (flip) sx = in.width() - 1 - sx;
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = in.at(sy, sx, c);
    }
  return out;
}

}  // namespace

ReidTrainer::ReidTrainer(const ReidTrainConfig& config, const data::DomainDataset& dataset)
    : config_(config), dataset_(&dataset), rng_(derive_seed(config.seed, 12)) {
  config_.validate();
  if (!dataset.labeled()) throw ContractError("reID training needs a labeled dataset");
  if (dataset.empty()) throw ContractError("reID training needs a nonempty dataset");
  config_.model = model_config_for(config_, dataset);
  Rng init(derive_seed(config_.seed, 11));
  net_ = std::make_unique<ReidNet>(config_.model, init);
  opt_ = std::make_unique<nn::Sgd>(net_->params(), sgd_of(config_));
}

ReidLossReport ReidTrainer::step() {
  const data::PairBatch batch = data::sample_pair_batch(*dataset_, config_.batch_size, rng_);
  std::vector<data::Image> images = batch.anchors;
  images.insert(images.end(), batch.partners.begin(), batch.partners.end());
  std::vector<int> labels = batch.identity_labels;
  labels.insert(labels.end(), batch.partner_labels.begin(), batch.partner_labels.end());
  const int b = static_cast<int>(batch.anchors.size());
  if (config_.shift_augment > 0 || config_.flip_augment) {
    const int r = config_.shift_augment;
    for (auto& im : images) {
      const int dx = static_cast<int>(rng_.below(static_cast<std::uint64_t>(2 * r + 1))) - r;
      const int dy = static_cast<int>(rng_.below(static_cast<std::uint64_t>(2 * r + 1))) - r;
      const bool flip = config_.flip_augment && rng_.below(2) == 1;
      im = jitter(im, dx, dy, flip);
    }
  }

  // One pass over anchors and partners together: the streams share weights.
  net_->params().zero_grad();
  const ReidFeatures f = net_->forward(t::constant(data::to_batch(images)));
  const Var logits = net_->identity_logits(f.f_a);
  const Var l_id = identification_loss(logits, labels);
  const Var f_a1 = t::slice_batch(f.f_a, 0, b);
  const Var f_a2 = t::slice_batch(f.f_a, b, 2 * b);
  const Var v_logits = net_->verification_logits(f_a1, f_a2);
  const Var l_verif = t::cross_entropy(v_logits, batch.same_id);
  const Var total = t::add(l_id, l_verif);

  ReidLossReport r;
  r.l_id = l_id.item();
  r.l_verif = l_verif.item();
  r.l_total = total.item();
  r.acc_id = argmax_accuracy(logits.value(), labels);
  r.acc_verif = argmax_accuracy(v_logits.value(), batch.same_id);
  const std::pair<const char*, double> parts[] = {{"l_id", r.l_id}, {"l_verif", r.l_verif}, {"l_total", r.l_total}};
  for (const auto& [name, v] : parts) {
    if (!std::isfinite(v)) throw NonFiniteError("non-finite " + std::string(name) + " at step " + std::to_string(step_ + 1));
  }

  opt_->set_lr(config_.lr_at(step_, dataset_->size()));
  t::backward(total);
  opt_->step();
  ++step_;
  log_.push_back(format_log_row(step_, r));
  return r;
}

std::string ReidTrainer::log_csv() const {
  std::string out = std::string(kReidLogHeader) + "\n";
  for (const auto& row : log_) out += row + "\n";
  return out;
}

void ReidTrainer::save(const fs::path& dir) const {
  io::BundleWriter w(dir);
  w.add_tensors("reid", io::named_values(net_->params()));
  w.add_tensors("sgd", opt_->state());
  w.add_text("rng.txt", rng_.serialize());
  w.add_text("log.csv", log_csv());
  io::Json meta;
  meta["kind"] = "reid";
  meta["step"] = step_;
  meta["config_hash"] = config_.hash();
  meta["config"] = config_.canonical();
  meta["num_classes"] = config_.model.num_classes;
  meta["embedding_dim"] = config_.model.embedding_dim();
  w.commit(std::move(meta));
}

void ReidTrainer::load(const fs::path& dir) {
  io::BundleReader r(dir);
  const auto& meta = r.metadata();
  if (meta.value("kind", "") != "reid") throw SchemaError(dir.string() + " is not a reID bundle");
  if (meta.value("config_hash", "") != config_.hash()) {
    throw ConfigError("checkpoint " + dir.string() + " was written under a different config");
  }
  net_->params().restore(r.tensors("reid"));
  opt_->load_state(r.tensors("sgd"));
  rng_ = Rng::deserialize(r.text("rng.txt"));
  step_ = meta.at("step").get<long>();
  log_.clear();
  std::istringstream in(r.text("log.csv"));
  std::string line;
  std::getline(in, line);
  if (line != kReidLogHeader) throw SchemaError(dir.string() + ": unexpected log header");
  while (std::getline(in, line))
    if (!line.empty()) log_.push_back(line);
  if (static_cast<long>(log_.size()) != step_) throw SchemaError(dir.string() + ": log length disagrees with step");
}

ReidRun train_reid(const data::DomainDataset& dataset, const ReidTrainConfig& config, const fs::path& out_dir,
                   bool resume, long stop_after, const std::function<void(long, const ReidLossReport&)>& progress) {
  fs::create_directories(out_dir);
  ReidRun run;
  run.checkpoint = out_dir / "checkpoint";
  run.log = out_dir / "log.csv";
  ReidTrainer trainer(config, dataset);
  if (resume && fs::exists(run.checkpoint / "metadata.json")) trainer.load(run.checkpoint);
  const long total = config.total_steps(dataset.size());
  const auto finish = [&] {
    trainer.save(run.checkpoint);
    std::ofstream out(run.log, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + run.log.string());
    out << trainer.log_csv();
  };
  while (trainer.steps_done() < total) {
    const ReidLossReport r = trainer.step();
    const long s = trainer.steps_done();
    if (progress) progress(s, r);
    const bool stop = stop_after > 0 && s >= stop_after;
    if ((config.checkpoint_every > 0 && s % config.checkpoint_every == 0) || stop || s == total) finish();
    if (stop) break;
  }
  if (trainer.steps_done() >= total && !fs::exists(run.checkpoint / "metadata.json")) finish();
  run.steps = trainer.steps_done();
  return run;
}

std::unique_ptr<ReidNet> load_reid_net(const fs::path& bundle, const ReidModelConfig& model) {
  io::BundleReader r(bundle);
  Rng rng(0);
  auto net = std::make_unique<ReidNet>(model, rng);
  net->params().restore(r.tensors("reid"));
  return net;
}

double identification_accuracy(const ReidNet& net, const data::DomainDataset& dataset) {
  t::NoGradGuard no_grad;
  const Tensor emb = embed(net, dataset.images());
  const Tensor logits = net.identity_logits(t::constant(emb)).value();
  std::vector<int> labels;
  for (std::size_t i = 0; i < dataset.size(); ++i) labels.push_back(dataset.class_index(dataset.identity(i)));
  return argmax_accuracy(logits, labels);
}

}  // namespace vtreid::attnet
