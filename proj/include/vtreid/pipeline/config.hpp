#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vtreid/attnet/train.hpp"
#include "vtreid/datamodel/synthetic.hpp"
#include "vtreid/evalkit/metrics.hpp"
#include "vtreid/vtgan/train.hpp"

namespace vtreid::pipeline {

// Synthetic benchmark layout. Views [0, train_views) of every identity form
// the labeled source training set and the unlabeled target set the
// translator sees; the next test_views target-domain views are the labeled
// evaluation set.
struct DataConfig {
  data::SyntheticSpec spec;  // images_per_identity_per_domain is derived
  int train_views = 8;
  int test_views = 4;

  data::SyntheticSpec render_spec() const;
};

struct EvalConfig {
  std::vector<int> sizes{8, 16};
  eval::Metric metric = eval::Metric::euclidean;
  int max_rank = 10;
};

struct RunConfig {
  std::string preset = "desk-scale";
  std::uint64_t seed = 1;
  DataConfig data;
  vtgan::TranslationConfig translate;
  attnet::ReidTrainConfig reid;
  EvalConfig eval;

  // ConfigError naming the offending dotted key.
  void validate() const;
  std::string canonical() const;
  std::string hash() const;

  // Per-stage configs with seeds derived from `seed`.
  vtgan::TranslationConfig translation_config() const;
  attnet::ReidTrainConfig reid_config(bool attention) const;
  std::uint64_t split_seed() const;
};

// "desk-scale" or "paper-scale"; ConfigError otherwise.
RunConfig preset(const std::string& name);

// Preset named by the `preset` key (desk-scale if absent) overlaid with every
// other key. Unknown keys and malformed values are ConfigErrors. Validates.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

// Every key of `config` in the file format; parse_run_config round-trips it.
std::string format_run_config(const RunConfig& config);

}  // namespace vtreid::pipeline
