#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vtreid/datamodel/dataset.hpp"
#include "vtreid/tensor/tensor.hpp"

namespace vtreid::attnet {
class ReidNet;
}

namespace vtreid::eval {

using tensor::Tensor;

struct EmbeddingSet {
  Tensor embeddings;  // [N, D]
  std::vector<int> identities;
  std::vector<std::optional<int>> cameras;

  std::size_t size() const { return identities.size(); }
  int dim() const { return embeddings.rank() == 2 ? embeddings.shape()[1] : 0; }
  // Row counts agree and every value is finite; throws otherwise.
  void validate() const;
  EmbeddingSet subset(std::span<const std::size_t> rows) const;
};

// Row indices into the evaluated dataset.
struct TestSplit {
  int size = 0;
  std::vector<std::size_t> gallery;
  std::vector<std::size_t> query;
};

// Single-gallery-shot: per size, `size` identities drawn without
// replacement, one random image of each into the gallery, the rest queries.
std::vector<TestSplit> build_test_splits(const data::DomainDataset& dataset, std::span<const int> sizes,
                                         std::uint64_t seed);

EmbeddingSet extract_embeddings(const attnet::ReidNet& net, const data::DomainDataset& dataset);

enum class Metric { euclidean, cosine };
std::string_view to_string(Metric m);
Metric parse_metric(std::string_view name);

struct DistanceMatrix {
  int queries = 0;
  int gallery = 0;
  std::vector<double> values;  // row-major [queries, gallery]
  Metric metric = Metric::euclidean;

  double at(int q, int g) const { return values[static_cast<std::size_t>(q) * gallery + g]; }
};

// Rows may be split across `threads` workers; each entry is computed the
// same way regardless of the partition. threads <= 0 reads VTREID_THREADS.
DistanceMatrix distance_matrix(const Tensor& queries, const Tensor& gallery, Metric metric, int threads = 1);

// Gallery indices of query q by ascending distance; ties by gallery index.
std::vector<int> ranked_gallery(const DistanceMatrix& dist, int q);

// CMC at ranks 1..max_rank.
std::vector<double> cmc(const DistanceMatrix& dist, std::span<const int> query_ids, std::span<const int> gallery_ids,
                        int max_rank);
double mean_average_precision(const DistanceMatrix& dist, std::span<const int> query_ids,
                              std::span<const int> gallery_ids);

// Threads from VTREID_THREADS (default 1, clamped to >= 1).
int configured_threads();

}  // namespace vtreid::eval
