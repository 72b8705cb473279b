#pragma once

#include <array>
#include <string>
#include <vector>

#include "vtreid/attnet/model.hpp"
#include "vtreid/datamodel/dataset.hpp"
#include "vtreid/evalkit/report.hpp"
#include "vtreid/pipeline/config.hpp"

namespace vtreid::pipeline {

struct BenchmarkData {
  data::DomainDataset source;  // labeled, source style, training views
  data::DomainDataset target;  // unlabeled, target style, training views
  data::DomainDataset test;    // labeled, target style, held-out views
};

BenchmarkData render_benchmark(const DataConfig& config);

// The four reID rows of the ablation grid, in report order.
struct Variant {
  const char* id;     // directory name
  const char* label;  // report row
  bool translated;
  bool attention;
};
inline constexpr std::array<Variant, 4> kVariants{{
    {"direct-baseline", "Direct Transfer + Baseline", false, false},
    {"translated-baseline", "VTGAN + Baseline", true, false},
    {"direct-attnet", "Direct Transfer + ATTNet", false, true},
    {"translated-attnet", "VTGAN + ATTNet", true, true},
}};
const Variant& find_variant(const std::string& id);

// Same records under the same tag with every image replaced.
data::DomainDataset with_images(const data::DomainDataset& dataset, std::vector<data::Image> images);

struct MethodEvaluation {
  eval::MethodResult result;
  std::vector<std::vector<double>> cmc;  // one curve per size, ranks 1..min(max_rank, size)
};

// Embeds `test` once and scores every single-gallery-shot split.
MethodEvaluation evaluate_method(const attnet::ReidNet& net, const std::string& label, const data::DomainDataset& test,
                                 const EvalConfig& config, std::uint64_t split_seed);

}  // namespace vtreid::pipeline
