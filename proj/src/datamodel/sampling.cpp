#include "vtreid/datamodel/sampling.hpp"

#include <map>
#include <numeric>
#include <sstream>

#include "vtreid/core/error.hpp"

namespace vtreid::data {

std::vector<std::size_t> EpochCursor::take(std::size_t dataset_size, std::size_t count, Rng& rng) {
  if (count > dataset_size) {
    throw SamplingError("batch of " + std::to_string(count) + " exceeds dataset of " +
                        std::to_string(dataset_size) + " without replacement");
  }
  if (order.size() != dataset_size || next + count > order.size()) {
    order.resize(dataset_size);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    next = 0;
  }
  std::vector<std::size_t> out(order.begin() + static_cast<std::ptrdiff_t>(next),
                               order.begin() + static_cast<std::ptrdiff_t>(next + count));
  next += count;
  return out;
}

namespace {

void write_cursor(std::ostream& os, const EpochCursor& c) {
  os << c.next << ' ' << c.order.size();
  for (auto i : c.order) os << ' ' << i;
  os << '\n';
}

EpochCursor read_cursor(std::istream& is) {
  EpochCursor c;
  std::size_t n = 0;
  is >> c.next >> n;
  c.order.resize(n);
  for (auto& i : c.order) is >> i;
  if (is.fail()) throw ParseError("malformed sampler cursor", 1);
  return c;
}

}  // namespace

std::string SamplerState::serialize() const {
  std::ostringstream os;
  os << rng.serialize() << '\n';
  write_cursor(os, source);
  write_cursor(os, target);
  return os.str();
}

SamplerState SamplerState::deserialize(const std::string& text) {
  std::istringstream is(text);
  std::string rng_line;
  std::getline(is, rng_line);
  SamplerState s;
  s.rng = Rng::deserialize(rng_line);
  s.source = read_cursor(is);
  s.target = read_cursor(is);
  return s;
}

UnpairedBatch sample_unpaired_batch(const DomainDataset& source, const DomainDataset& target,
                                    int batch_size, SamplerState& state) {
  if (source.empty() || target.empty()) throw SamplingError("unpaired sampling needs two nonempty datasets");
  if (batch_size < 1) throw SamplingError("batch_size must be >= 1");
  UnpairedBatch batch;
  batch.size = batch_size;
  batch.source_indices = state.source.take(source.size(), static_cast<std::size_t>(batch_size), state.rng);
  batch.target_indices = state.target.take(target.size(), static_cast<std::size_t>(batch_size), state.rng);
  for (auto i : batch.source_indices) batch.source_images.push_back(source.image(i));
  for (auto i : batch.target_indices) batch.target_images.push_back(target.image(i));
  return batch;
}

PairBatch sample_pair_batch(const DomainDataset& dataset, int batch_size, Rng& rng) {
  if (!dataset.labeled()) throw ContractError("pair sampling requires a labeled dataset");
  if (batch_size < 1) throw SamplingError("batch_size must be >= 1");
  std::map<int, std::vector<std::size_t>> by_id;
  for (std::size_t i = 0; i < dataset.size(); ++i) by_id[dataset.identity(i)].push_back(i);
  if (by_id.size() < 2) throw SamplingError("pair sampling needs at least 2 identities");
  std::vector<const std::vector<std::size_t>*> groups;
  std::vector<const std::vector<std::size_t>*> multi;
  for (const auto& [id, idx] : by_id) {
    groups.push_back(&idx);
    if (idx.size() >= 2) multi.push_back(&idx);
  }
  if (multi.empty()) throw SamplingError("no identity has two or more images; no positive pair exists");

  PairBatch out;
  auto push = [&](std::size_t a, std::size_t p) {
    out.anchor_indices.push_back(a);
    out.partner_indices.push_back(p);
    out.anchors.push_back(dataset.image(a));
    out.partners.push_back(dataset.image(p));
    const int ia = dataset.identity(a), ip = dataset.identity(p);
    out.same_id.push_back(ia == ip ? 1 : 0);
    out.identity_labels.push_back(dataset.class_index(ia));
    out.partner_labels.push_back(dataset.class_index(ip));
  };
  const int positives = (batch_size + 1) / 2;
  const int negatives = batch_size / 2;
  for (int i = 0; i < positives; ++i) {
    const auto& g = *multi[rng.below(multi.size())];
    const std::size_t a = rng.below(g.size());
    std::size_t b = rng.below(g.size() - 1);
    if (b >= a) ++b;
    push(g[a], g[b]);
  }
  for (int i = 0; i < negatives; ++i) {
    const std::size_t ga = rng.below(groups.size());
    std::size_t gb = rng.below(groups.size() - 1);
    if (gb >= ga) ++gb;
    const auto& a = *groups[ga];
    const auto& b = *groups[gb];
    push(a[rng.below(a.size())], b[rng.below(b.size())]);
  }
  return out;
}

}  // namespace vtreid::data
