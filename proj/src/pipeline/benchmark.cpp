#include "vtreid/pipeline/benchmark.hpp"

#include <algorithm>

#include "vtreid/core/error.hpp"
#include "vtreid/datamodel/synthetic.hpp"
#include "vtreid/evalkit/metrics.hpp"

namespace vtreid::pipeline {

namespace {

data::DomainDataset views(const data::DomainDataset& all, int lo, int hi, data::DomainTag tag) {
  std::vector<data::Record> records;
  std::vector<data::Image> images;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const int view = all.camera(i).value();
    if (view < lo || view >= hi) continue;
    records.push_back(all.records()[i]);
    images.push_back(all.image(i));
  }
  return data::DomainDataset(tag, std::move(records), std::move(images));
}

}  // namespace

BenchmarkData render_benchmark(const DataConfig& config) {
  const data::SyntheticSpec spec = config.render_spec();
  const auto source = data::render_labeled_domain(spec, data::DomainTag::source);
  const auto target = data::render_labeled_domain(spec, data::DomainTag::target);
  const int end = config.train_views + config.test_views;
  return {views(source, 0, config.train_views, data::DomainTag::source),
          views(target, 0, config.train_views, data::DomainTag::target),
          views(target, config.train_views, end, data::DomainTag::source)};
}

const Variant& find_variant(const std::string& id) {
  for (const auto& v : kVariants)
    if (id == v.id) return v;
  throw ConfigError("unknown reID variant '" + id + "'");
}

data::DomainDataset with_images(const data::DomainDataset& dataset, std::vector<data::Image> images) {
  if (images.size() != dataset.size()) throw ContractError("image count does not match the dataset");
  return data::DomainDataset(dataset.tag(), dataset.records(), std::move(images), dataset.root());
}

MethodEvaluation evaluate_method(const attnet::ReidNet& net, const std::string& label, const data::DomainDataset& test,
                                 const EvalConfig& config, std::uint64_t split_seed) {
  const eval::EmbeddingSet all = eval::extract_embeddings(net, test);
  const auto splits = eval::build_test_splits(test, config.sizes, split_seed);
  MethodEvaluation out;
  out.result.method = label;
  for (const auto& split : splits) {
    const eval::EmbeddingSet q = all.subset(split.query);
    const eval::EmbeddingSet g = all.subset(split.gallery);
    const auto d = eval::distance_matrix(q.embeddings, g.embeddings, config.metric);
    const int ranks = std::max(5, std::min(config.max_rank, split.size));
    auto curve = eval::cmc(d, q.identities, g.identities, ranks);
    eval::SplitMetrics m;
    m.rank1 = curve[0];
    m.rank5 = curve[4];
    m.map = eval::mean_average_precision(d, q.identities, g.identities);
    out.result.splits.push_back(m);
    curve.resize(static_cast<std::size_t>(std::min(config.max_rank, split.size)));
    out.cmc.push_back(std::move(curve));
  }
  return out;
}

}  // namespace vtreid::pipeline
