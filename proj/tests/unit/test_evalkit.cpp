#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "metric_oracles.hpp"
#include "toy_models.hpp"
#include "vtreid/core/error.hpp"
#include "vtreid/datamodel/synthetic.hpp"
#include "vtreid/evalkit/metrics.hpp"
#include "vtreid/evalkit/report.hpp"

using namespace vtreid;
using namespace vtreid::eval;
using vtreid::testing::RankingInstance;

namespace {

DistanceMatrix as_matrix(const RankingInstance& in) {
  DistanceMatrix d;
  d.queries = in.queries;
  d.gallery = in.gallery;
  d.values = in.dist;
  return d;
}

// Random instance with coarse distances so ties are common.
RankingInstance random_instance(Rng& rng) {
  RankingInstance in;
  in.queries = 1 + static_cast<int>(rng.below(20));
  in.gallery = 1 + static_cast<int>(rng.below(50));
  const int ids = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(in.gallery)));
  for (int g = 0; g < in.gallery; ++g) in.gallery_ids.push_back(g < ids ? g : static_cast<int>(rng.below(ids)));
  for (int q = 0; q < in.queries; ++q) in.query_ids.push_back(static_cast<int>(rng.below(ids)));
  for (int i = 0; i < in.queries * in.gallery; ++i) in.dist.push_back(static_cast<double>(rng.below(8)) * 0.25);
  return in;
}

Tensor rows(std::vector<std::vector<double>> r) {
  Tensor t({static_cast<int>(r.size()), static_cast<int>(r[0].size())});
  for (std::size_t i = 0; i < r.size(); ++i) std::copy(r[i].begin(), r[i].end(), t.values().begin() + i * r[0].size());
  return t;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("distance matrix examples") {
  DistanceMatrix d = distance_matrix(rows({{0, 0}}), rows({{3, 4}}), Metric::euclidean);
  CHECK(d.at(0, 0) == 5.0);
  Rng rng(1);
  Tensor x = vtreid::testing::random_tensor(rng, {6, 5});
  DistanceMatrix self = distance_matrix(x, x, Metric::euclidean);
  for (int i = 0; i < 6; ++i) CHECK(self.at(i, i) == 0.0);
  for (double v : self.values) CHECK(v >= 0.0);
  DistanceMatrix cos = distance_matrix(rows({{1, 2, 3}}), rows({{2, 4, 6}, {-1, 0, 0}}), Metric::cosine);
  CHECK(cos.at(0, 0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  CHECK(cos.at(0, 0) >= 0.0);
  CHECK_THROWS_AS(distance_matrix(rows({{1, 2}}), rows({{1, 2, 3}}), Metric::euclidean), ShapeError);

  // Threaded rows equal the serial result bit for bit.
  Tensor q = vtreid::testing::random_tensor(rng, {37, 9}), g = vtreid::testing::random_tensor(rng, {11, 9});
  for (Metric m : {Metric::euclidean, Metric::cosine}) {
    CHECK(distance_matrix(q, g, m, 1).values == distance_matrix(q, g, m, 4).values);
  }
}

TEST_CASE("cmc and mAP hand examples") {
  // Query 0 (id 7) finds its match second; query 1 (id 8) first.
  RankingInstance in;
  in.queries = 2;
  in.gallery = 3;
  in.query_ids = {7, 8};
  in.gallery_ids = {9, 7, 8};
  in.dist = {0.1, 0.2, 0.3, 0.5, 0.9, 0.2};
  CHECK(cmc(as_matrix(in), in.query_ids, in.gallery_ids, 3) == std::vector<double>{0.5, 1.0, 1.0});

  RankingInstance ap;
  ap.queries = 1;
  ap.gallery = 3;
  ap.query_ids = {1};
  ap.gallery_ids = {1, 2, 1};
  ap.dist = {0.1, 0.2, 0.3};
  CHECK(mean_average_precision(as_matrix(ap), ap.query_ids, ap.gallery_ids) == doctest::Approx(0.8333).epsilon(1e-4));
  CHECK(mean_average_precision(as_matrix(ap), ap.query_ids, ap.gallery_ids) == (1.0 + 2.0 / 3.0) / 2.0);

  RankingInstance perfect;
  perfect.queries = 3;
  perfect.gallery = 3;
  perfect.query_ids = {0, 1, 2};
  perfect.gallery_ids = {0, 1, 2};
  perfect.dist = {0, 1, 1, 1, 0, 1, 1, 1, 0};
  CHECK(cmc(as_matrix(perfect), perfect.query_ids, perfect.gallery_ids, 3) == std::vector<double>{1, 1, 1});
  CHECK(mean_average_precision(as_matrix(perfect), perfect.query_ids, perfect.gallery_ids) == 1.0);

  // Equal distances resolve by gallery index.
  RankingInstance tie;
  tie.queries = 1;
  tie.gallery = 2;
  tie.query_ids = {5};
  tie.gallery_ids = {4, 5};
  tie.dist = {0.5, 0.5};
  CHECK(cmc(as_matrix(tie), tie.query_ids, tie.gallery_ids, 2) == std::vector<double>{0.0, 1.0});

  in.query_ids = {7, 3};
  CHECK_THROWS_AS(cmc(as_matrix(in), in.query_ids, in.gallery_ids, 3), ProtocolError);
  CHECK_THROWS_AS(mean_average_precision(as_matrix(in), in.query_ids, in.gallery_ids), ProtocolError);
}

TEST_CASE("metrics agree with the brute-force oracles") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const RankingInstance in = random_instance(rng);
    const DistanceMatrix d = as_matrix(in);
    const auto curve = cmc(d, in.query_ids, in.gallery_ids, in.gallery);
    CHECK(curve == vtreid::testing::oracle_cmc(in, in.gallery));
    CHECK(std::fabs(mean_average_precision(d, in.query_ids, in.gallery_ids) - vtreid::testing::oracle_map(in)) < 1e-12);
    for (std::size_t r = 1; r < curve.size(); ++r) CHECK(curve[r] >= curve[r - 1]);
    CHECK(curve.back() == 1.0);
  }
}

TEST_CASE("permuting the gallery leaves distinct-distance metrics unchanged") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    RankingInstance in = random_instance(rng);
    for (auto& v : in.dist) v = rng.uniform();
    std::vector<int> perm(static_cast<std::size_t>(in.gallery));
    for (int i = 0; i < in.gallery; ++i) perm[i] = i;
    rng.shuffle(perm);
    RankingInstance p = in;
    for (int g = 0; g < in.gallery; ++g) {
      p.gallery_ids[g] = in.gallery_ids[perm[g]];
      for (int q = 0; q < in.queries; ++q) p.dist[q * in.gallery + g] = in.dist[q * in.gallery + perm[g]];
    }
    CHECK(cmc(as_matrix(in), in.query_ids, in.gallery_ids, 5) == cmc(as_matrix(p), p.query_ids, p.gallery_ids, 5));
    CHECK(mean_average_precision(as_matrix(in), in.query_ids, in.gallery_ids) ==
          doctest::Approx(mean_average_precision(as_matrix(p), p.query_ids, p.gallery_ids)).epsilon(1e-12));
  }
}

TEST_CASE("single-gallery-shot splits") {
  data::SyntheticSpec spec;
  spec.n_identities = 16;
  spec.images_per_identity_per_domain = 3;
  spec.image_size = 16;
  const auto ds = data::render_labeled_domain(spec, data::DomainTag::target);
  const std::vector<int> sizes{4, 8};
  auto splits = build_test_splits(ds, sizes, 5);
  REQUIRE(splits.size() == 2);
  CHECK(splits[0].gallery.size() == 4);
  CHECK(splits[1].gallery.size() == 8);
  for (const auto& s : splits) {
    std::vector<int> gids;
    for (auto i : s.gallery) gids.push_back(ds.identity(i));
    std::sort(gids.begin(), gids.end());
    CHECK(std::adjacent_find(gids.begin(), gids.end()) == gids.end());
    CHECK(s.query.size() == 2 * gids.size());
    for (auto i : s.query) CHECK(std::binary_search(gids.begin(), gids.end(), ds.identity(i)));
  }
  const std::vector<int> all{16};
  auto full = build_test_splits(ds, all, 5);
  CHECK(full[0].gallery.size() == 16);
  auto again = build_test_splits(ds, sizes, 5);
  CHECK(again[1].gallery == splits[1].gallery);
  CHECK(again[1].query == splits[1].query);
  const std::vector<int> too_big{17};
  CHECK_THROWS_AS(build_test_splits(ds, too_big, 5), ContractError);
}

TEST_CASE("report layout and reference fixture") {
  const std::vector<int> sizes{800, 1600, 2400, 3200};
  // Reference results (percent), mAP/Rank1/Rank5 per size.
  const std::vector<std::pair<std::string, std::vector<double>>> printed = {
      {"Direct Transfer + Baseline", {40.05, 35.00, 56.68, 34.90, 30.42, 48.85, 31.65, 27.28, 44.49, 29.57, 25.41, 42.11}},
      {"CycleGAN + Baseline", {44.24, 39.39, 60.10, 37.68, 32.97, 53.16, 33.17, 28.44, 47.92, 30.73, 26.38, 43.84}},
      {"SPGAN + Baseline", {48.27, 42.87, 66.55, 42.51, 37.46, 58.97, 38.41, 33.54, 53.68, 35.04, 30.45, 49.13}},
      {"VTGAN + Baseline", {49.53, 44.44, 66.74, 43.90, 38.97, 59.93, 40.07, 35.10, 56.29, 36.86, 32.17, 51.63}},
      {"Direct Transfer + ATTNet", {47.97, 43.26, 62.93, 43.94, 39.47, 58.51, 40.42, 35.95, 54.34, 37.60, 33.40, 50.55}},
      {"CycleGAN + ATTNet", {46.96, 42.68, 60.72, 43.27, 38.88, 57.44, 39.39, 35.09, 53.05, 37.05, 33.07, 49.38}},
      {"SPGAN + ATTNet", {52.72, 48.25, 67.20, 48.01, 43.44, 63.04, 44.17, 39.51, 59.05, 41.05, 36.75, 54.63}},
      {"VTGAN + ATTNet", {54.01, 49.48, 68.66, 49.72, 45.18, 63.99, 45.18, 40.71, 59.02, 42.94, 38.72, 55.87}}};
  std::vector<MethodResult> rows;
  for (const auto& [name, v] : printed) {
    MethodResult r{name, {}};
    for (int s = 0; s < 4; ++s) r.splits.push_back({v[s * 3] / 100.0, v[s * 3 + 1] / 100.0, v[s * 3 + 2] / 100.0});
    rows.push_back(r);
  }
  const EvalReport report = compose_report(sizes, rows);
  CHECK(report.to_csv() == slurp(VTREID_FIXTURE_DIR "/reference_report.csv"));
  CHECK(report.to_json()["rows"].size() == 8);

  // 4 methods x 2 splits -> 4 rows, 6 metric columns.
  std::vector<MethodResult> four;
  for (int i = 0; i < 4; ++i) four.push_back({"m" + std::to_string(i), {{0.5, 0.25, 0.75}, {0.123456, 0.1, 0.2}}});
  const std::string csv = compose_report({4, 8}, four).to_csv();
  std::istringstream lines(csv);
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    ++n;
    CHECK(std::count(line.begin(), line.end(), ',') == 6);
  }
  CHECK(n == 5);
  CHECK(csv.find("m1,50.00,25.00,75.00,12.35,10.00,20.00\n") != std::string::npos);

  CHECK_THROWS_AS(compose_report({4, 8}, {{"ragged", {{0.5, 0.2, 0.3}}}}), ContractError);
  CHECK_THROWS_AS(compose_report({4}, {{"inverted", {{0.5, 0.4, 0.3}}}}), ContractError);
  CHECK_THROWS_AS(compose_report({4}, {{"range", {{1.5, 0.4, 0.5}}}}), ContractError);
}

TEST_CASE("cmc csv layout") {
  const std::string csv = cmc_csv({"a", "b"}, {{0.5, 1.0}, {0.25, 0.75}});
  CHECK(csv == "rank,a,b\n1,0.500000,0.250000\n2,1.000000,0.750000\n");
  CHECK_THROWS_AS(cmc_csv({"a"}, {{}}), ContractError);
}
