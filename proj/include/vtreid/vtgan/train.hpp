#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vtreid/datamodel/sampling.hpp"
#include "vtreid/nn/optim.hpp"
#include "vtreid/vtgan/discriminator.hpp"
#include "vtreid/vtgan/generator.hpp"
#include "vtreid/vtgan/losses.hpp"

namespace vtreid::vtgan {

struct TranslationConfig {
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  LossWeights weights;
  bool paper_literal_adv = false;
  bool freeze_mask_one = false;
  int batch_size = 16;
  int epochs = 6;
  int steps = 0;  // > 0 overrides epochs
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  std::uint64_t seed = 1;
  int checkpoint_every = 0;  // 0: only at the end

  void validate() const;
  // Stable text form; its hash tags checkpoints and reports.
  std::string canonical() const;
  std::string hash() const;
  int total_steps(std::size_t source_size) const;
};

struct GeneratorObjective {
  ObjectiveTerms terms;
  Var total;
  Var fake_target;  // G(x)
  Var fake_source;  // F(y)
};

// Generator-side objective for one batch; x from the source domain, y from
// the target domain. G maps source to target, F target to source.
GeneratorObjective generator_objective(const Generator& g, const Generator& f, const Discriminator& d_s,
                                       const Discriminator& d_t, const Var& x, const Var& y,
                                       const LossWeights& weights, bool paper_literal,
                                       const ForwardOptions& opts = {});

inline const char* kTranslationLogHeader = "step,l_gan_G,l_gan_F,l_cyc,l_id,l_style,l_total,d_s,d_t";
std::string format_log_row(long step, const TranslationLossReport& r);

class TranslationTrainer {
 public:
  TranslationTrainer(const TranslationConfig& config, const data::DomainDataset& source,
                     const data::DomainDataset& target);

  // One generator update followed by one update of each discriminator on
  // detached fakes. Throws NonFiniteError naming the first bad component.
  TranslationLossReport step();

  long steps_done() const noexcept { return step_; }
  const std::vector<std::string>& log_rows() const noexcept { return log_; }
  std::string log_csv() const;

  void save(const std::filesystem::path& dir) const;
  // Restores a bundle written by save() under the same config.
  void load(const std::filesystem::path& dir);

  const TranslationConfig& config() const noexcept { return config_; }
  Generator& g() { return *g_; }
  Generator& f() { return *f_; }
  Discriminator& d_s() { return *d_s_; }
  Discriminator& d_t() { return *d_t_; }
  const Generator& g() const { return *g_; }
  const Generator& f() const { return *f_; }

 private:
  TranslationConfig config_;
  const data::DomainDataset* source_;
  const data::DomainDataset* target_;
  std::unique_ptr<Generator> g_, f_;
  std::unique_ptr<Discriminator> d_s_, d_t_;
  std::unique_ptr<nn::Adam> opt_g_, opt_f_, opt_ds_, opt_dt_;
  data::SamplerState sampler_;
  long step_ = 0;
  std::vector<std::string> log_;
};

struct TranslationRun {
  long steps = 0;
  std::filesystem::path checkpoint;
  std::filesystem::path log;
};

// Trains to config.total_steps(), writing `log.csv` and checkpoint bundles
// under out_dir. Resumes from out_dir/checkpoint when `resume` is set and a
// bundle exists. `stop_after` > 0 halts early (used to stage interruptions).
TranslationRun train_translation(const data::DomainDataset& source, const data::DomainDataset& target,
                                 const TranslationConfig& config, const std::filesystem::path& out_dir,
                                 bool resume = false, long stop_after = 0,
                                 const std::function<void(long, const TranslationLossReport&)>& progress = {});

// Loads the G generator from a bundle written by train_translation.
std::unique_ptr<Generator> load_generator(const std::filesystem::path& bundle, const GeneratorConfig& config,
                                          const std::string& role = "G");

}  // namespace vtreid::vtgan
