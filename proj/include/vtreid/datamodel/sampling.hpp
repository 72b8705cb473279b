#pragma once

#include <string>
#include <vector>

#include "vtreid/core/rng.hpp"
#include "vtreid/datamodel/dataset.hpp"

namespace vtreid::data {

struct UnpairedBatch {
  std::vector<Image> source_images;
  std::vector<Image> target_images;
  std::vector<std::size_t> source_indices;
  std::vector<std::size_t> target_indices;
  int size = 0;
};

struct PairBatch {
  std::vector<Image> anchors;
  std::vector<Image> partners;
  std::vector<int> same_id;
  std::vector<int> identity_labels;  // dense class index of each anchor
  std::vector<int> partner_labels;   // dense class index of each partner
  std::vector<std::size_t> anchor_indices;
  std::vector<std::size_t> partner_indices;
};

// Without-replacement pass over one dataset; reshuffles when a batch would
// run past the end of the current pass.
struct EpochCursor {
  std::vector<std::size_t> order;
  std::size_t next = 0;

  std::vector<std::size_t> take(std::size_t dataset_size, std::size_t count, Rng& rng);
  bool operator==(const EpochCursor&) const = default;
};

// Single-owner sampler state: one rng plus a cursor per domain.
struct SamplerState {
  Rng rng;
  EpochCursor source;
  EpochCursor target;

  explicit SamplerState(std::uint64_t seed = 0) : rng(seed) {}
  std::string serialize() const;
  static SamplerState deserialize(const std::string& text);
  bool operator==(const SamplerState&) const = default;
};

UnpairedBatch sample_unpaired_batch(const DomainDataset& source, const DomainDataset& target,
                                    int batch_size, SamplerState& state);

// ceil(B/2) positive pairs followed by floor(B/2) negative pairs.
PairBatch sample_pair_batch(const DomainDataset& dataset, int batch_size, Rng& rng);

}  // namespace vtreid::data
