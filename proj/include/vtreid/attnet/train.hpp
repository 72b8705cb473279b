#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vtreid/attnet/model.hpp"
#include "vtreid/datamodel/dataset.hpp"
#include "vtreid/nn/optim.hpp"

namespace vtreid::attnet {

struct ReidLossReport {
  double l_id = 0, l_verif = 0, l_total = 0;
  double acc_id = 0, acc_verif = 0;
};

struct ReidTrainConfig {
  ReidModelConfig model;  // num_classes is taken from the dataset
  int batch_size = 16;    // pairs per step
  int epochs = 55;
  int drop_epoch = 50;    // lr x lr_drop_factor from this epoch on
  int steps = 0;          // > 0 overrides epochs; then drop_step applies
  int drop_step = 0;
  double lr = 0.1;
  double lr_drop_factor = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::uint64_t seed = 1;
  int checkpoint_every = 0;
  // Training-time jitter: random shift of up to this many pixels (edge
  // replicated) and a random horizontal flip when flip_augment is set.
  int shift_augment = 0;
  bool flip_augment = false;

  void validate() const;
  std::string canonical() const;
  std::string hash() const;
  int steps_per_epoch(std::size_t dataset_size) const;
  int total_steps(std::size_t dataset_size) const;
  // Learning rate for 0-based step index `step`.
  double lr_at(long step, std::size_t dataset_size) const;
};

inline const char* kReidLogHeader = "step,l_id,l_verif,l_total,acc_id,acc_verif";
std::string format_log_row(long step, const ReidLossReport& r);

class ReidTrainer {
 public:
  ReidTrainer(const ReidTrainConfig& config, const data::DomainDataset& dataset);

  ReidLossReport step();

  long steps_done() const noexcept { return step_; }
  std::string log_csv() const;
  void save(const std::filesystem::path& dir) const;
  void load(const std::filesystem::path& dir);

  const ReidTrainConfig& config() const noexcept { return config_; }
  ReidNet& net() { return *net_; }
  const ReidNet& net() const { return *net_; }

 private:
  ReidTrainConfig config_;
  const data::DomainDataset* dataset_;
  std::unique_ptr<ReidNet> net_;
  std::unique_ptr<nn::Sgd> opt_;
  Rng rng_;
  long step_ = 0;
  std::vector<std::string> log_;
};

struct ReidRun {
  long steps = 0;
  std::filesystem::path checkpoint;
  std::filesystem::path log;
};

ReidRun train_reid(const data::DomainDataset& dataset, const ReidTrainConfig& config,
                   const std::filesystem::path& out_dir, bool resume = false, long stop_after = 0,
                   const std::function<void(long, const ReidLossReport&)>& progress = {});

// Model config as trained on `dataset` (num_classes filled in).
ReidModelConfig model_config_for(const ReidTrainConfig& config, const data::DomainDataset& dataset);
std::unique_ptr<ReidNet> load_reid_net(const std::filesystem::path& bundle, const ReidModelConfig& model);

// Fraction of images whose identification argmax is their own class.
double identification_accuracy(const ReidNet& net, const data::DomainDataset& dataset);

}  // namespace vtreid::attnet
