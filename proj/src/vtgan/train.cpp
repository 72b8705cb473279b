#include "vtreid/vtgan/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vtreid/core/error.hpp"
#include "vtreid/core/hash.hpp"
#include "vtreid/io/checkpoint.hpp"
#include "vtreid/tensor/ops.hpp"

namespace vtreid::vtgan {

namespace t = vtreid::tensor;
namespace fs = std::filesystem;

void TranslationConfig::validate() const {
  generator.validate();
  discriminator.validate();
  weights.validate();
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (epochs < 1 && steps < 1) throw ConfigError("need epochs >= 1 or steps >= 1");
  if (steps < 0) throw ConfigError("steps must be nonnegative");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("betas must lie in [0,1)");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be nonnegative");
}

std::string TranslationConfig::canonical() const {
  std::ostringstream s;
  s.precision(17);
  const auto& gc = generator;
  const auto& dc = discriminator;
  s << "gen=" << gc.stem_width << ',' << gc.half_width << ',' << gc.residual_width << ','
    << gc.residual_blocks << ',' << gc.stem_kernel << ',' << gc.attention << ',' << gc.style_branch << ','
    << gc.init_std << ";disc=" << dc.base_width << ',' << dc.layers << ',' << dc.instance_norm << ','
    << dc.slope << ',' << dc.init_std << ";lambda=" << weights.lambda_cyc << ',' << weights.lambda_id << ','
    << weights.lambda_style << ";literal=" << paper_literal_adv << ";freeze=" << freeze_mask_one
    << ";batch=" << batch_size << ";epochs=" << epochs << ";steps=" << steps << ";adam=" << lr << ','
    << beta1 << ',' << beta2 << ";seed=" << seed;
  return s.str();
}

std::string TranslationConfig::hash() const { return hex64(fnv1a64(canonical())); }

int TranslationConfig::total_steps(std::size_t source_size) const {
  if (steps > 0) return steps;
  const auto per_epoch = (source_size + static_cast<std::size_t>(batch_size) - 1) / static_cast<std::size_t>(batch_size);
  return static_cast<int>(per_epoch) * epochs;
}

GeneratorObjective generator_objective(const Generator& g, const Generator& f, const Discriminator& d_s,
                                       const Discriminator& d_t, const Var& x, const Var& y,
                                       const LossWeights& weights, bool paper_literal,
                                       const ForwardOptions& opts) {
  GeneratorObjective out;
  out.fake_target = g.forward(x, opts).image;
  out.fake_source = f.forward(y, opts).image;
  const Var rec_x = f.forward(out.fake_target, opts).image;
  const Var rec_y = g.forward(out.fake_source, opts).image;

  // Only the generator halves are used here; the discriminator halves are
  // rebuilt on detached fakes in the discriminator update.
  out.terms.gan_g = adversarial_terms(d_t(y), d_t(out.fake_target), paper_literal).g_loss;
  out.terms.gan_f = adversarial_terms(d_s(x), d_s(out.fake_source), paper_literal).g_loss;
  out.terms.cycle = t::add(l1_mean(rec_x, x), l1_mean(rec_y, y));
  // Roles as printed: F on target inputs, G on source inputs.
  out.terms.identity = t::add(l1_mean(out.fake_source, y), l1_mean(out.fake_target, x));
  if (g.config().style_branch && f.config().style_branch) {
    out.terms.style = style_loss(
        x, y, [&](const Var& v) { return g.style_encode(v); }, [&](const Var& v) { return f.style_encode(v); });
  } else {
    out.terms.style = t::constant(t::Tensor({1}, 0.0));
  }
  out.total = total_objective(out.terms, weights);
  return out;
}

std::string format_log_row(long step, const TranslationLossReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", step, r.l_gan_G, r.l_gan_F,
                r.l_cyc, r.l_id, r.l_style, r.l_total, r.d_s, r.d_t);
  return buf;
}

namespace {

void check_finite(const TranslationLossReport& r, long step) {
  const std::pair<const char*, double> parts[] = {{"l_gan_G", r.l_gan_G}, {"l_gan_F", r.l_gan_F}, {"l_cyc", r.l_cyc},
                                                  {"l_id", r.l_id},       {"l_style", r.l_style}, {"l_total", r.l_total},
                                                  {"d_s", r.d_s},         {"d_t", r.d_t}};
  for (const auto& [name, v] : parts) {
    if (!std::isfinite(v)) {
      throw NonFiniteError("non-finite " + std::string(name) + " at step " + std::to_string(step));
    }
  }
}

nn::AdamConfig adam_of(const TranslationConfig& c) { return nn::AdamConfig{c.lr, c.beta1, c.beta2, 1e-8}; }

}  // namespace

TranslationTrainer::TranslationTrainer(const TranslationConfig& config, const data::DomainDataset& source,
                                       const data::DomainDataset& target)
    : config_(config), source_(&source), target_(&target), sampler_(derive_seed(config.seed, 5)) {
  config_.validate();
  if (source.empty() || target.empty()) throw ContractError("translation training needs nonempty datasets");
  if (static_cast<std::size_t>(config_.batch_size) > std::min(source.size(), target.size())) {
    throw ConfigError("batch_size " + std::to_string(config_.batch_size) + " exceeds the smaller domain (" +
                      std::to_string(std::min(source.size(), target.size())) + " images)");
  }
  Rng rg(derive_seed(config_.seed, 1)), rf(derive_seed(config_.seed, 2));
  Rng rs(derive_seed(config_.seed, 3)), rt(derive_seed(config_.seed, 4));
  g_ = std::make_unique<Generator>(config_.generator, rg);
  f_ = std::make_unique<Generator>(config_.generator, rf);
  d_s_ = std::make_unique<Discriminator>(config_.discriminator, rs);
  d_t_ = std::make_unique<Discriminator>(config_.discriminator, rt);
  opt_g_ = std::make_unique<nn::Adam>(g_->params(), adam_of(config_));
  opt_f_ = std::make_unique<nn::Adam>(f_->params(), adam_of(config_));
  opt_ds_ = std::make_unique<nn::Adam>(d_s_->params(), adam_of(config_));
  opt_dt_ = std::make_unique<nn::Adam>(d_t_->params(), adam_of(config_));
}

TranslationLossReport TranslationTrainer::step() {
  const data::UnpairedBatch batch = data::sample_unpaired_batch(*source_, *target_, config_.batch_size, sampler_);
  const Var x = t::constant(data::to_batch(batch.source_images));
  const Var y = t::constant(data::to_batch(batch.target_images));

  g_->params().zero_grad();
  f_->params().zero_grad();
  ForwardOptions opts;
  opts.freeze_mask_one = config_.freeze_mask_one;
  GeneratorObjective obj =
      generator_objective(*g_, *f_, *d_s_, *d_t_, x, y, config_.weights, config_.paper_literal_adv, opts);
  TranslationLossReport report = report_of(obj.terms, obj.total);

  const Var fake_target = obj.fake_target.detach();
  const Var fake_source = obj.fake_source.detach();
  const AdversarialTerms adv_t = adversarial_losses(y, fake_target, *d_t_, config_.paper_literal_adv);
  const AdversarialTerms adv_s = adversarial_losses(x, fake_source, *d_s_, config_.paper_literal_adv);
  report.d_t = adv_t.d_loss.item();
  report.d_s = adv_s.d_loss.item();
  check_finite(report, step_ + 1);

  t::backward(obj.total);
  opt_g_->step();
  opt_f_->step();
  obj = GeneratorObjective{};

  d_s_->params().zero_grad();
  d_t_->params().zero_grad();
  t::backward(adv_t.d_loss);
  t::backward(adv_s.d_loss);
  opt_dt_->step();
  opt_ds_->step();

  ++step_;
  log_.push_back(format_log_row(step_, report));
  return report;
}

std::string TranslationTrainer::log_csv() const {
  std::string out = std::string(kTranslationLogHeader) + "\n";
  for (const auto& row : log_) out += row + "\n";
  return out;
}

void TranslationTrainer::save(const fs::path& dir) const {
  io::BundleWriter w(dir);
  w.add_tensors("G", io::named_values(g_->params()));
  w.add_tensors("F", io::named_values(f_->params()));
  w.add_tensors("D_S", io::named_values(d_s_->params()));
  w.add_tensors("D_T", io::named_values(d_t_->params()));
  w.add_tensors("adam_G", opt_g_->state());
  w.add_tensors("adam_F", opt_f_->state());
  w.add_tensors("adam_D_S", opt_ds_->state());
  w.add_tensors("adam_D_T", opt_dt_->state());
  w.add_text("sampler.txt", sampler_.serialize());
  w.add_text("log.csv", log_csv());
  io::Json meta;
  meta["kind"] = "translation";
  meta["step"] = step_;
  meta["config_hash"] = config_.hash();
  meta["config"] = config_.canonical();
  w.commit(std::move(meta));
}

void TranslationTrainer::load(const fs::path& dir) {
  io::BundleReader r(dir);
  const auto& meta = r.metadata();
  if (meta.value("kind", "") != "translation") throw SchemaError(dir.string() + " is not a translation bundle");
  if (meta.value("config_hash", "") != config_.hash()) {
    throw ConfigError("checkpoint " + dir.string() + " was written under a different config");
  }
  g_->params().restore(r.tensors("G"));
  f_->params().restore(r.tensors("F"));
  d_s_->params().restore(r.tensors("D_S"));
  d_t_->params().restore(r.tensors("D_T"));
  opt_g_->load_state(r.tensors("adam_G"));
  opt_f_->load_state(r.tensors("adam_F"));
  opt_ds_->load_state(r.tensors("adam_D_S"));
  opt_dt_->load_state(r.tensors("adam_D_T"));
  sampler_ = data::SamplerState::deserialize(r.text("sampler.txt"));
  step_ = meta.at("step").get<long>();
  log_.clear();
  std::istringstream in(r.text("log.csv"));
  std::string line;
  std::getline(in, line);
  if (line != kTranslationLogHeader) throw SchemaError(dir.string() + ": unexpected log header");
  while (std::getline(in, line))
    if (!line.empty()) log_.push_back(line);
  if (static_cast<long>(log_.size()) != step_) throw SchemaError(dir.string() + ": log length disagrees with step");
}

TranslationRun train_translation(const data::DomainDataset& source, const data::DomainDataset& target,
                                 const TranslationConfig& config, const fs::path& out_dir, bool resume,
                                 long stop_after,
                                 const std::function<void(long, const TranslationLossReport&)>& progress) {
  fs::create_directories(out_dir);
  TranslationRun run;
  run.checkpoint = out_dir / "checkpoint";
  run.log = out_dir / "log.csv";
  TranslationTrainer trainer(config, source, target);
  if (resume && fs::exists(run.checkpoint / "metadata.json")) trainer.load(run.checkpoint);

  const long total = config.total_steps(source.size());
  const auto write_log = [&] {
    std::ofstream out(run.log, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + run.log.string());
    out << trainer.log_csv();
  };
  while (trainer.steps_done() < total) {
    const TranslationLossReport r = trainer.step();
    const long s = trainer.steps_done();
    if (progress) progress(s, r);
    const bool stop = stop_after > 0 && s >= stop_after;
    if ((config.checkpoint_every > 0 && s % config.checkpoint_every == 0) || stop || s == total) {
      trainer.save(run.checkpoint);
      write_log();
    }
    if (stop) break;
  }
  if (trainer.steps_done() >= total && !fs::exists(run.checkpoint / "metadata.json")) {
    trainer.save(run.checkpoint);
    write_log();
  }
  run.steps = trainer.steps_done();
  return run;
}

std::unique_ptr<Generator> load_generator(const fs::path& bundle, const GeneratorConfig& config,
                                          const std::string& role) {
  io::BundleReader r(bundle);
  Rng rng(0);
  auto g = std::make_unique<Generator>(config, rng);
  g->params().restore(r.tensors(role));
  return g;
}

}  // namespace vtreid::vtgan
