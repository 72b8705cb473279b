#pragma once

// Identity oracle that looks only at foreground geometry. Templates are the
// clean part maps (body, cabin, window, decals, tires, hubs) of every
// (identity, view); an image is assigned the template whose partition
// explains the largest share of its color variance. That share is unchanged
// by global similarity transforms of RGB space, so hue rotation, contrast and
// brightness shifts do not move it.

#include <array>
#include <vector>

#include "vtreid/datamodel/synthetic.hpp"

namespace vtreid::testing {

class GeometryOracle {
 public:
  GeometryOracle(const data::SyntheticSpec& spec, int views);

  int classify(const data::Image& image) const;
  // Fraction of images whose predicted identity matches `identities`.
  double accuracy(const std::vector<data::Image>& images, const std::vector<int>& identities) const;

 private:
  static constexpr int kParts = 7;
  struct Template {
    int identity;
    std::vector<unsigned char> part;
    std::array<double, kParts> count{};
  };
  int size_;
  std::vector<Template> templates_;
};

}  // namespace vtreid::testing
