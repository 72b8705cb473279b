#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "vtreid/datamodel/dataset.hpp"

namespace vtreid::data {

// Photometric look of one domain. Hue rotation is in degrees around the
// gray axis; contrast scales around mid-gray; brightness is an additive
// shift on the [0, 1] scale.
struct DomainStyle {
  double brightness_shift = 0.0;
  double contrast_gain = 1.0;
  double hue_rotation = 0.0;
  std::uint64_t background_texture_seed = 0;

  bool operator==(const DomainStyle&) const = default;
};

struct SyntheticSpec {
  int n_identities = 8;
  int images_per_identity_per_domain = 4;
  int image_size = 64;
  DomainStyle source_style{0.12, 1.0, 0.0, 11};
  DomainStyle target_style{-0.18, 0.75, 120.0, 29};
  std::uint64_t rng_seed = 7;
  // Index of the first identity; lets disjoint corpora share one id space.
  int first_identity = 0;

  // Throws ValidationError describing the first violated invariant.
  void validate() const;
};

// Foreground geometry of one rendered sample: 1 inside the vehicle.
struct ShapeMask {
  int size = 0;
  std::vector<unsigned char> inside;
  // 0 background; 1 body, 2 cabin, 3 window, 4 decal, 5 tire, 6 hub.
  std::vector<unsigned char> part;
  bool operator==(const ShapeMask&) const = default;
};

// Geometry of identity `identity`, view `view`; independent of the domain.
ShapeMask render_shape_mask(const SyntheticSpec& spec, int identity, int view);

// One rendered sample in the given domain's style.
Image render_sample(const SyntheticSpec& spec, int identity, int view, DomainTag domain);

// All samples of one domain with identities attached (tagged source so the
// labels stay readable; evaluation code uses this for target ground truth).
DomainDataset render_labeled_domain(const SyntheticSpec& spec, DomainTag domain);

// (labeled source, unlabeled target).
std::pair<DomainDataset, DomainDataset> generate_synthetic_corpus(const SyntheticSpec& spec);

}  // namespace vtreid::data
