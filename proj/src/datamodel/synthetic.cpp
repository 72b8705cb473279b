#include "vtreid/datamodel/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "vtreid/core/error.hpp"
#include "vtreid/core/rng.hpp"

namespace vtreid::data {

namespace {

using Rgb = std::array<double, 3>;

struct Geometry {
  double body_w, body_h, body_bottom;
  double cabin_x0, cabin_x1, cabin_h, cabin_slant;
  int wheel_count;
  double wheel_r;
  std::array<double, 3> wheel_x;
  unsigned glyph;  // 6 bits, 2 rows x 3 columns of decals on the body side
  Rgb body;
};

struct View {
  double dx, dy;
  bool flip;
};

Rgb hsv(double h, double s, double v) {
  h = std::fmod(h, 360.0) / 60.0;
  const double c = v * s;
  const double x = c * (1.0 - std::fabs(std::fmod(h, 2.0) - 1.0));
  const double m = v - c;
  Rgb rgb{};
  switch (static_cast<int>(h) % 6) {
    case 0: rgb = {c, x, 0}; break;
    case 1: rgb = {x, c, 0}; break;
    case 2: rgb = {0, c, x}; break;
    case 3: rgb = {0, x, c}; break;
    case 4: rgb = {x, 0, c}; break;
    default: rgb = {c, 0, x}; break;
  }
  return {rgb[0] + m, rgb[1] + m, rgb[2] + m};
}

Geometry identity_geometry(const SyntheticSpec& spec, int identity) {
  Rng rng(derive_seed(spec.rng_seed, 1, static_cast<std::uint64_t>(identity)));
  Geometry g{};
  g.body_w = rng.uniform(0.50, 0.78);
  g.body_h = rng.uniform(0.14, 0.24);
  g.body_bottom = 0.74;
  const double body_x0 = 0.5 - g.body_w / 2;
  const double frac = rng.uniform(0.40, 0.75);
  const double offset = rng.uniform(0.0, 1.0 - frac);
  g.cabin_x0 = body_x0 + offset * g.body_w;
  g.cabin_x1 = g.cabin_x0 + frac * g.body_w;
  g.cabin_h = rng.uniform(0.10, 0.20);
  g.cabin_slant = rng.uniform(0.0, 0.08);
  g.wheel_count = rng.below(2) == 0 ? 2 : 3;
  g.wheel_r = rng.uniform(0.06, 0.09);
  for (int w = 0; w < g.wheel_count; ++w) {
    const double t = (w + 0.5) / g.wheel_count;
    g.wheel_x[w] = body_x0 + g.body_w * (0.12 + 0.76 * t);
  }
  g.glyph = static_cast<unsigned>(rng.below(63)) + 1;
  // Golden-ratio hue spacing keeps neighbouring identities apart in color.
  const double hue = std::fmod(identity * 137.50776 + 360.0 * rng.uniform(), 360.0);
  g.body = hsv(hue, 0.75, 0.85);
  return g;
}

View sample_view(const SyntheticSpec& spec, int identity, int view) {
  Rng rng(derive_seed(spec.rng_seed, 2, static_cast<std::uint64_t>(identity),
                      static_cast<std::uint64_t>(view)));
  View v{};
  v.dx = rng.uniform(-0.06, 0.06);
  v.dy = rng.uniform(-0.05, 0.05);
  v.flip = (view % 2) == 1;
  return v;
}

enum class Part : unsigned char { background, body, cabin, window, decal, tire, hub };

Part classify(const Geometry& g, const View& view, double u, double v) {
  if (view.flip) u = 1.0 - u;
  u -= view.dx;
  v -= view.dy;
  for (int w = 0; w < g.wheel_count; ++w) {
    const double du = u - g.wheel_x[w], dv = v - g.body_bottom;
    const double d2 = du * du + dv * dv;
    if (d2 <= g.wheel_r * g.wheel_r) return d2 <= 0.25 * g.wheel_r * g.wheel_r ? Part::hub : Part::tire;
  }
  const double body_x0 = 0.5 - g.body_w / 2, body_top = g.body_bottom - g.body_h;
  if (u >= body_x0 && u <= body_x0 + g.body_w && v >= body_top && v <= g.body_bottom) {
    const double cu = (u - body_x0) / g.body_w, cv = (v - body_top) / g.body_h;
    const int col = static_cast<int>(cu * 3.0), row = static_cast<int>(cv * 2.0);
    const double fu = cu * 3.0 - col, fv = cv * 2.0 - row;
    const unsigned bit = 1u << (std::min(row, 1) * 3 + std::min(col, 2));
    if ((g.glyph & bit) && fu > 0.3 && fu < 0.7 && fv > 0.3 && fv < 0.7) return Part::decal;
    return Part::body;
  }
  const double cabin_top = body_top - g.cabin_h;
  if (v >= cabin_top && v < body_top) {
    const double t = (body_top - v) / g.cabin_h;  // 0 at the roof base, 1 at the roof
    const double x0 = g.cabin_x0 + g.cabin_slant * t, x1 = g.cabin_x1 - g.cabin_slant * t;
    if (u >= x0 && u <= x1) {
      const double inset = 0.02;
      if (u > x0 + inset && u < x1 - inset && v > cabin_top + inset && v < body_top - inset * 0.5) {
        return Part::window;
      }
      return Part::cabin;
    }
  }
  return Part::background;
}

double texture(const DomainStyle& style, const SyntheticSpec& spec, int identity, int view,
               double u, double v) {
  Rng shape_rng(derive_seed(style.background_texture_seed, 4));
  Rng phase_rng(derive_seed(spec.rng_seed, 3, style.background_texture_seed,
                            static_cast<std::uint64_t>(identity) * 1000 + view));
  const double amplitude = 0.04 + 0.12 * shape_rng.uniform();
  double acc = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double theta = std::numbers::pi * shape_rng.uniform();
    const double freq = shape_rng.uniform(2.0, 9.0);
    const double phase = 2.0 * std::numbers::pi * phase_rng.uniform();
    acc += std::sin(2.0 * std::numbers::pi * freq * (u * std::cos(theta) + v * std::sin(theta)) + phase);
  }
  return amplitude * acc / 3.0;
}

Rgb apply_style(const DomainStyle& style, Rgb in) {
  const double a = style.hue_rotation * std::numbers::pi / 180.0;
  const double c = std::cos(a), s = std::sin(a) / std::sqrt(3.0), k = (1.0 - c) / 3.0;
  const Rgb rot{
      (c + k) * in[0] + (k - s) * in[1] + (k + s) * in[2],
      (k + s) * in[0] + (c + k) * in[1] + (k - s) * in[2],
      (k - s) * in[0] + (k + s) * in[1] + (c + k) * in[2],
  };
  Rgb out{};
  for (int ch = 0; ch < 3; ++ch) {
    double v = (rot[ch] - 0.5) * style.contrast_gain + 0.5 + style.brightness_shift;
    v = std::clamp(v, 0.0, 1.0);
    out[ch] = std::round(v * 255.0) / 255.0;
  }
  return out;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (n_identities < 2) throw ValidationError("n_identities must be >= 2");
  if (images_per_identity_per_domain < 1) throw ValidationError("images_per_identity_per_domain must be >= 1");
  if (image_size < 4 || image_size % 4 != 0) throw ValidationError("image_size must be a positive multiple of 4");
  if (first_identity < 0) throw ValidationError("first_identity must be nonnegative");
  if (source_style == target_style) throw ValidationError("source and target style parameters are identical");
  for (const auto* st : {&source_style, &target_style}) {
    if (!(st->contrast_gain > 0.0)) throw ValidationError("contrast_gain must be positive");
  }
}

ShapeMask render_shape_mask(const SyntheticSpec& spec, int identity, int view) {
  const Geometry g = identity_geometry(spec, identity);
  const View vw = sample_view(spec, identity, view);
  const std::size_t n = static_cast<std::size_t>(spec.image_size) * spec.image_size;
  ShapeMask mask{spec.image_size, std::vector<unsigned char>(n), std::vector<unsigned char>(n)};
  for (int y = 0; y < spec.image_size; ++y)
    for (int x = 0; x < spec.image_size; ++x) {
      const double u = (x + 0.5) / spec.image_size, v = (y + 0.5) / spec.image_size;
      const Part p = classify(g, vw, u, v);
      const std::size_t i = static_cast<std::size_t>(y) * spec.image_size + x;
      mask.inside[i] = p != Part::background;
      mask.part[i] = static_cast<unsigned char>(p);
    }
  return mask;
}

Image render_sample(const SyntheticSpec& spec, int identity, int view, DomainTag domain) {
  const Geometry g = identity_geometry(spec, identity);
  const View vw = sample_view(spec, identity, view);
  const DomainStyle& style = domain == DomainTag::source ? spec.source_style : spec.target_style;
  const int n = spec.image_size;
  Image img(n, n);
  const Rgb cabin{g.body[0] * 0.8, g.body[1] * 0.8, g.body[2] * 0.8};
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double u = (x + 0.5) / n, v = (y + 0.5) / n;
      Rgb px{};
      switch (classify(g, vw, u, v)) {
        case Part::body: px = g.body; break;
        case Part::cabin: px = cabin; break;
        case Part::window: px = {0.78, 0.86, 0.95}; break;
        case Part::decal: px = {0.12, 0.12, 0.14}; break;
        case Part::tire: px = {0.08, 0.08, 0.08}; break;
        case Part::hub: px = {0.62, 0.62, 0.62}; break;
        case Part::background: {
          const double t = texture(style, spec, identity, view, u, v);
          const double ground = v > 0.78 ? -0.12 : 0.0;
          px = {0.52 + t + ground, 0.57 + t + ground, 0.52 + t + ground};
          break;
        }
      }
      const Rgb out = apply_style(style, px);
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = 2.0 * out[c] - 1.0;
    }
  }
  return img;
}

DomainDataset render_labeled_domain(const SyntheticSpec& spec, DomainTag domain) {
  spec.validate();
  std::vector<Record> records;
  std::vector<Image> images;
  for (int i = 0; i < spec.n_identities; ++i) {
    const int identity = spec.first_identity + i;
    for (int view = 0; view < spec.images_per_identity_per_domain; ++view) {
      char name[64];
      std::snprintf(name, sizeof name, "img/id%04d_v%02d.png", identity, view);
      records.push_back(Record{name, identity, view});
      images.push_back(render_sample(spec, identity, view, domain));
    }
  }
  return DomainDataset(DomainTag::source, std::move(records), std::move(images));
}

std::pair<DomainDataset, DomainDataset> generate_synthetic_corpus(const SyntheticSpec& spec) {
  spec.validate();
  DomainDataset source = render_labeled_domain(spec, DomainTag::source);
  DomainDataset target = render_labeled_domain(spec, DomainTag::target).retagged(DomainTag::target);
  return {std::move(source), std::move(target)};
}

}  // namespace vtreid::data
