#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "vtreid/tensor/tensor.hpp"

namespace vtreid::data {

// H x W x 3 raster with values in [-1, 1], row-major HWC.
class Image {
 public:
  Image() = default;
  Image(int height, int width, double fill = 0.0);
  Image(int height, int width, std::vector<double> pixels);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::span<const double> pixels() const noexcept { return pixels_; }
  std::span<double> pixels() noexcept { return pixels_; }

  double& at(int y, int x, int c) { return pixels_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c]; }
  double at(int y, int x, int c) const {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
  }

  // Range and divisibility invariants; throws ValidationError/ShapeError.
  void validate() const;

  bool operator==(const Image& other) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> pixels_;
};

// Mean over all pixels and channels, mapped to [0, 1].
double mean_brightness(const Image& image);

// NCHW batch from equally sized images.
tensor::Tensor to_batch(std::span<const Image> images);
// Extracts sample n of an NCHW tensor with 3 channels.
Image from_batch(const tensor::Tensor& batch, int n);

// 8-bit RGB PNG, mapped linearly: byte b <-> b / 127.5 - 1.
Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& image);

}  // namespace vtreid::data
