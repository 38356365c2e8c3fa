#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace exemplar {

/// RGB raster with values in [0,1].
///
/// Storage is row-major and channel-interleaved: the value of channel `c` at
/// row `y`, column `x` lives at `data[(y * width + x) * 3 + c]`.
struct Image {
  int height = 0;
  int width = 0;
  Eigen::ArrayXd data;

  static constexpr int channels = 3;

  Image() = default;
  Image(int h, int w, double fill = 0.0);

  double& operator()(int y, int x, int c) { return data[(static_cast<Eigen::Index>(y) * width + x) * 3 + c]; }
  double operator()(int y, int x, int c) const { return data[(static_cast<Eigen::Index>(y) * width + x) * 3 + c]; }

  Eigen::Vector3d pixel(int y, int x) const { return {(*this)(y, x, 0), (*this)(y, x, 1), (*this)(y, x, 2)}; }
  void set_pixel(int y, int x, const Eigen::Vector3d& p) {
    for (int c = 0; c < 3; ++c) (*this)(y, x, c) = p[c];
  }

  bool empty() const { return height == 0 || width == 0; }
};

/// Single-channel real map, row-major.
struct GrayMap {
  int height = 0;
  int width = 0;
  Eigen::ArrayXd data;

  GrayMap() = default;
  GrayMap(int h, int w, double fill = 0.0) : height(h), width(w), data(Eigen::ArrayXd::Constant(Eigen::Index(h) * w, fill)) {}

  double& operator()(int y, int x) { return data[static_cast<Eigen::Index>(y) * width + x]; }
  double operator()(int y, int x) const { return data[static_cast<Eigen::Index>(y) * width + x]; }
};

/// Axis-aligned pixel rectangle: columns [x, x+width), rows [y, y+height).
struct Rect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  bool operator==(const Rect&) const = default;
  bool inside(const Image& img) const {
    return x >= 0 && y >= 0 && width >= 0 && height >= 0 && x + width <= img.width && y + height <= img.height;
  }
};

// ITU-R BT.601 luma weights.
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

enum class DatasetFormat { cifar10_binary, stl10_binary, image_dir };

struct LabeledImage {
  Image image;
  std::optional<int> label;
};

Image rgb_to_hsv(const Image& img);
Image hsv_to_rgb(const Image& img);

// Scalar conversions used by the image-level routines; H is a fraction of a turn.
Eigen::Vector3d rgb_to_hsv(const Eigen::Vector3d& rgb);
Eigen::Vector3d hsv_to_rgb(const Eigen::Vector3d& hsv);

/// Bilinear resampling with half-pixel-centered coordinates and edge clamping.
Image resize_bilinear(const Image& img, int new_height, int new_width);

Image crop(const Image& img, const Rect& region);
Image clamp01(Image img);

GrayMap luminance(const Image& img);

/// Mean of |dL/dx| + |dL/dy| over the region, where L is BT.601 luminance.
/// Differences are taken within the region: central inside, one-sided at the
/// region border, zero along an axis of extent 1.
double gradient_energy(const Image& img, const Rect& region);

std::vector<LabeledImage> load_dataset_images(const std::filesystem::path& path, DatasetFormat format);

// Writers for the two binary layouts. Pixels are quantized with round(v * 255).
void save_cifar10(const std::filesystem::path& path, std::span<const LabeledImage> images);
void save_stl10(const std::filesystem::path& path, std::span<const LabeledImage> images);

DatasetFormat parse_dataset_format(const std::string& name);

}  // namespace exemplar
