#include "vtreid/datamodel/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "vtreid/core/error.hpp"

namespace vtreid::data {

Image::Image(int height, int width, double fill)
    : height_(height), width_(width), pixels_(static_cast<std::size_t>(height) * width * 3, fill) {
  if (height <= 0 || width <= 0) throw ShapeError("image dimensions must be positive");
}

Image::Image(int height, int width, std::vector<double> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
  if (height <= 0 || width <= 0) throw ShapeError("image dimensions must be positive");
  if (pixels_.size() != static_cast<std::size_t>(height) * width * 3) {
    throw ShapeError("pixel buffer does not match " + std::to_string(height) + "x" +
                     std::to_string(width) + "x3");
  }
}

void Image::validate() const {
  if (height_ % 4 != 0 || width_ % 4 != 0) {
    throw ShapeError("image " + std::to_string(height_) + "x" + std::to_string(width_) +
                     " not divisible by 4");
  }
  for (double v : pixels_) {
    if (!(v >= -1.0 && v <= 1.0)) throw ValidationError("pixel value outside [-1, 1]");
  }
}

double mean_brightness(const Image& image) {
  double acc = 0.0;
  for (double v : image.pixels()) acc += v;
  return 0.5 * (acc / static_cast<double>(image.pixels().size()) + 1.0);
}

tensor::Tensor to_batch(std::span<const Image> images) {
  if (images.empty()) throw ContractError("to_batch: no images");
  const int h = images[0].height(), w = images[0].width();
  tensor::Tensor out({static_cast<int>(images.size()), 3, h, w});
  for (std::size_t n = 0; n < images.size(); ++n) {
    const Image& im = images[n];
    if (im.height() != h || im.width() != w) throw ShapeError("to_batch: mixed image sizes");
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at(static_cast<int>(n), c, y, x) = im.at(y, x, c);
  }
  return out;
}

Image from_batch(const tensor::Tensor& batch, int n) {
  if (batch.rank() != 4 || batch.dim(1) != 3) throw ShapeError("from_batch: expected [N,3,H,W]");
  const int h = batch.dim(2), w = batch.dim(3);
  Image im(h, w);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) im.at(y, x, c) = batch.at(n, c, y, x);
  return im;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Image read_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open image " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("failed to decode PNG " + path.string());
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  std::vector<unsigned char> buffer(static_cast<std::size_t>(height) * width * 3);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) rows[y] = buffer.data() + static_cast<std::size_t>(y) * width * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  std::vector<double> pixels(buffer.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) pixels[i] = buffer[i] / 127.5 - 1.0;
  return Image(height, width, std::move(pixels));
}

void write_png(const std::filesystem::path& path, const Image& image) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot write image " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed to encode PNG " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, image.width(), image.height(), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  std::vector<unsigned char> row(static_cast<std::size_t>(image.width()) * 3);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x)
      for (int c = 0; c < 3; ++c) {
        const double v = std::lround((image.at(y, x, c) + 1.0) * 127.5);
        row[static_cast<std::size_t>(x) * 3 + c] = static_cast<unsigned char>(std::clamp(v, 0.0, 255.0));
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace vtreid::data
