#include "vtreid/evalkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <thread>

#include "vtreid/attnet/model.hpp"
#include "vtreid/core/error.hpp"
#include "vtreid/core/rng.hpp"

namespace vtreid::eval {

void EmbeddingSet::validate() const {
  if (embeddings.rank() != 2) throw ShapeError("embeddings must be [N, D]");
  const auto n = static_cast<std::size_t>(embeddings.shape()[0]);
  if (n != identities.size() || (!cameras.empty() && cameras.size() != n)) {
    throw ContractError("embedding set rows disagree: " + std::to_string(n) + " embeddings, " +
                        std::to_string(identities.size()) + " identities, " + std::to_string(cameras.size()) +
                        " cameras");
  }
  for (double v : embeddings.values())
    if (!std::isfinite(v)) throw NonFiniteError("non-finite embedding value");
}

EmbeddingSet EmbeddingSet::subset(std::span<const std::size_t> rows) const {
  const int d = dim();
  EmbeddingSet out;
  out.embeddings = Tensor({static_cast<int>(rows.size()), d});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= size()) throw ContractError("embedding row out of range");
    std::copy_n(embeddings.data() + rows[r] * d, d, out.embeddings.data() + r * d);
    out.identities.push_back(identities[rows[r]]);
    if (!cameras.empty()) out.cameras.push_back(cameras[rows[r]]);
  }
  return out;
}

std::vector<TestSplit> build_test_splits(const data::DomainDataset& dataset, std::span<const int> sizes,
                                         std::uint64_t seed) {
  const std::vector<int> ids = dataset.identity_set();
  std::vector<std::vector<std::size_t>> rows_of(ids.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    rows_of[static_cast<std::size_t>(dataset.class_index(dataset.identity(i)))].push_back(i);
  }
  std::vector<TestSplit> out;
  for (int size : sizes) {
    if (size < 1 || static_cast<std::size_t>(size) > ids.size()) {
      throw ContractError("test size " + std::to_string(size) + " exceeds the " + std::to_string(ids.size()) +
                          " identities available");
    }
    Rng rng(derive_seed(seed, 0x73706c, static_cast<std::uint64_t>(size)));
    std::vector<std::size_t> classes(ids.size());
    std::iota(classes.begin(), classes.end(), std::size_t{0});
    rng.shuffle(classes);
    classes.resize(static_cast<std::size_t>(size));
    std::sort(classes.begin(), classes.end());
    TestSplit split;
    split.size = size;
    for (std::size_t c : classes) {
      const auto& rows = rows_of[c];
      const std::size_t pick = static_cast<std::size_t>(rng.below(rows.size()));
      for (std::size_t k = 0; k < rows.size(); ++k) (k == pick ? split.gallery : split.query).push_back(rows[k]);
    }
    std::sort(split.query.begin(), split.query.end());
    out.push_back(std::move(split));
  }
  return out;
}

EmbeddingSet extract_embeddings(const attnet::ReidNet& net, const data::DomainDataset& dataset) {
  EmbeddingSet set;
  set.embeddings = attnet::embed(net, dataset.images());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    set.identities.push_back(dataset.identity(i));
    set.cameras.push_back(dataset.camera(i));
  }
  set.validate();
  return set;
}

std::string_view to_string(Metric m) { return m == Metric::euclidean ? "euclidean" : "cosine"; }

Metric parse_metric(std::string_view name) {
  if (name == "euclidean") return Metric::euclidean;
  if (name == "cosine") return Metric::cosine;
  throw ConfigError("unknown metric '" + std::string(name) + "' (euclidean|cosine)");
}

int configured_threads() {
  const char* env = std::getenv("VTREID_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) return 1;
  return static_cast<int>(std::min(n, 256L));
}

namespace {

double entry(const double* q, const double* g, int d, Metric metric) {
  if (metric == Metric::euclidean) {
    double acc = 0.0;
    for (int k = 0; k < d; ++k) {
      const double t = q[k] - g[k];
      acc += t * t;
    }
    return std::sqrt(acc);
  }
  double dot = 0.0, nq = 0.0, ng = 0.0;
  for (int k = 0; k < d; ++k) {
    dot += q[k] * g[k];
    nq += q[k] * q[k];
    ng += g[k] * g[k];
  }
  if (nq == 0.0 || ng == 0.0) return 1.0;
  // Clamp so rounding never yields a negative distance.
  return std::max(0.0, 1.0 - dot / (std::sqrt(nq) * std::sqrt(ng)));
}

void check_ids(const DistanceMatrix& dist, std::span<const int> query_ids, std::span<const int> gallery_ids) {
  if (static_cast<int>(query_ids.size()) != dist.queries || static_cast<int>(gallery_ids.size()) != dist.gallery) {
    throw ContractError("identity lists do not match the distance matrix");
  }
  for (std::size_t q = 0; q < query_ids.size(); ++q) {
    if (std::find(gallery_ids.begin(), gallery_ids.end(), query_ids[q]) == gallery_ids.end()) {
      throw ProtocolError("query " + std::to_string(q) + " (identity " + std::to_string(query_ids[q]) +
                          ") has no match in the gallery");
    }
  }
}

}  // namespace

DistanceMatrix distance_matrix(const Tensor& queries, const Tensor& gallery, Metric metric, int threads) {
  if (queries.rank() != 2 || gallery.rank() != 2) throw ShapeError("distance_matrix expects [N, D] inputs");
  const int d = queries.shape()[1];
  if (gallery.shape()[1] != d) {
    throw ShapeError("embedding dims differ: " + std::to_string(d) + " vs " + std::to_string(gallery.shape()[1]));
  }
  DistanceMatrix out;
  out.queries = queries.shape()[0];
  out.gallery = gallery.shape()[0];
  out.metric = metric;
  out.values.resize(static_cast<std::size_t>(out.queries) * out.gallery);
  const auto rows = [&](int begin, int end) {
    for (int q = begin; q < end; ++q)
      for (int g = 0; g < out.gallery; ++g) {
        out.values[static_cast<std::size_t>(q) * out.gallery + g] =
            entry(queries.data() + static_cast<std::ptrdiff_t>(q) * d,
                  gallery.data() + static_cast<std::ptrdiff_t>(g) * d, d, metric);
      }
  };
  if (threads <= 0) threads = configured_threads();
  threads = std::max(1, std::min(threads, out.queries));
  if (threads == 1) {
    rows(0, out.queries);
    return out;
  }
  std::vector<std::thread> pool;
  const int chunk = (out.queries + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int begin = t * chunk, end = std::min(out.queries, begin + chunk);
    if (begin < end) pool.emplace_back(rows, begin, end);
  }
  for (auto& th : pool) th.join();
  return out;
}

std::vector<int> ranked_gallery(const DistanceMatrix& dist, int q) {
  std::vector<int> order(static_cast<std::size_t>(dist.gallery));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return dist.at(q, a) < dist.at(q, b); });
  return order;
}

std::vector<double> cmc(const DistanceMatrix& dist, std::span<const int> query_ids, std::span<const int> gallery_ids,
                        int max_rank) {
  check_ids(dist, query_ids, gallery_ids);
  if (max_rank < 1) throw ContractError("max_rank must be positive");
  std::vector<long> first_hit_counts(static_cast<std::size_t>(max_rank), 0);
  for (int q = 0; q < dist.queries; ++q) {
    const std::vector<int> order = ranked_gallery(dist, q);
    for (int r = 0; r < dist.gallery; ++r) {
      if (gallery_ids[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] == query_ids[static_cast<std::size_t>(q)]) {
        if (r < max_rank) ++first_hit_counts[static_cast<std::size_t>(r)];
        break;
      }
    }
  }
  std::vector<double> curve(static_cast<std::size_t>(max_rank));
  long cumulative = 0;
  for (int r = 0; r < max_rank; ++r) {
    cumulative += first_hit_counts[static_cast<std::size_t>(r)];
    curve[static_cast<std::size_t>(r)] = dist.queries == 0 ? 0.0 : static_cast<double>(cumulative) / dist.queries;
  }
  return curve;
}

double mean_average_precision(const DistanceMatrix& dist, std::span<const int> query_ids,
                              std::span<const int> gallery_ids) {
  check_ids(dist, query_ids, gallery_ids);
  if (dist.queries == 0) return 0.0;
  double total = 0.0;
  for (int q = 0; q < dist.queries; ++q) {
    const std::vector<int> order = ranked_gallery(dist, q);
    int hits = 0;
    double precision_sum = 0.0;
    for (int r = 0; r < dist.gallery; ++r) {
      if (gallery_ids[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] == query_ids[static_cast<std::size_t>(q)]) {
        ++hits;
        precision_sum += static_cast<double>(hits) / (r + 1);
      }
    }
    total += precision_sum / hits;
  }
  return total / dist.queries;
}

}  // namespace vtreid::eval
