#include "geometry_oracle.hpp"

#include <stdexcept>

namespace vtreid::testing {

GeometryOracle::GeometryOracle(const data::SyntheticSpec& spec, int views) : size_(spec.image_size) {
  for (int id = spec.first_identity; id < spec.first_identity + spec.n_identities; ++id)
    for (int v = 0; v < views; ++v) {
      Template t{id, data::render_shape_mask(spec, id, v).part, {}};
      for (unsigned char p : t.part) t.count[p] += 1.0;
      templates_.push_back(std::move(t));
    }
}

int GeometryOracle::classify(const data::Image& image) const {
  if (image.height() != size_ || image.width() != size_) throw std::invalid_argument("oracle: image size mismatch");
  const std::size_t n = static_cast<std::size_t>(size_) * size_;
  const auto px = image.pixels();
  double total[3] = {0, 0, 0}, total_sq = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) {
      total[c] += px[i * 3 + c];
      total_sq += px[i * 3 + c] * px[i * 3 + c];
    }
  const double mean_sq = (total[0] * total[0] + total[1] * total[1] + total[2] * total[2]) / n;
  const double total_var = total_sq - mean_sq;

  int best_identity = -1;
  double best_score = -1.0;
  for (const auto& t : templates_) {
    double sums[kParts][3] = {};
    for (std::size_t i = 0; i < n; ++i)
      for (int c = 0; c < 3; ++c) sums[t.part[i]][c] += px[i * 3 + c];
    // Between-group sum of squares of the partition.
    double between = -mean_sq;
    for (int p = 0; p < kParts; ++p) {
      if (t.count[p] == 0) continue;
      for (int c = 0; c < 3; ++c) between += sums[p][c] * sums[p][c] / t.count[p];
    }
    const double score = total_var > 0 ? between / total_var : 0.0;
    if (score > best_score) {
      best_score = score;
      best_identity = t.identity;
    }
  }
  return best_identity;
}

double GeometryOracle::accuracy(const std::vector<data::Image>& images, const std::vector<int>& identities) const {
  if (images.size() != identities.size() || images.empty()) throw std::invalid_argument("oracle: bad inputs");
  int hits = 0;
  for (std::size_t i = 0; i < images.size(); ++i) hits += classify(images[i]) == identities[i];
  return static_cast<double>(hits) / images.size();
}

}  // namespace vtreid::testing
