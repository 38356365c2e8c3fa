#include "exemplar/imaging.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "exemplar/error.hpp"

namespace exemplar {

namespace fs = std::filesystem;

Image::Image(int h, int w, double fill) : height(h), width(w) {
  require(h >= 1 && w >= 1, "image dimensions must be positive");
  data = Eigen::ArrayXd::Constant(Eigen::Index(h) * w * 3, fill);
}

Eigen::Vector3d rgb_to_hsv(const Eigen::Vector3d& rgb) {
  const double r = rgb[0], g = rgb[1], b = rgb[2];
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  double h = 0.0;
  if (delta > 0.0) {
    if (mx == r) {
      h = (g - b) / delta;
      if (h < 0.0) h += 6.0;
    } else if (mx == g) {
      h = (b - r) / delta + 2.0;
    } else {
      h = (r - g) / delta + 4.0;
    }
    h /= 6.0;
    if (h >= 1.0) h -= 1.0;
  }
  const double s = mx > 0.0 ? delta / mx : 0.0;
  return {h, s, mx};
}

Eigen::Vector3d hsv_to_rgb(const Eigen::Vector3d& hsv) {
  const double s = hsv[1], v = hsv[2];
  if (s <= 0.0) return {v, v, v};
  double h6 = (hsv[0] - std::floor(hsv[0])) * 6.0;
  const int sector = std::min(static_cast<int>(h6), 5);
  const double f = h6 - sector;
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (sector) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

namespace {

template <typename F>
Image map_pixels(const Image& img, F&& f) {
  Image out = img;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) out.set_pixel(y, x, f(img.pixel(y, x)));
  return out;
}

}  // namespace

Image rgb_to_hsv(const Image& img) {
  return map_pixels(img, [](const Eigen::Vector3d& p) { return rgb_to_hsv(p); });
}

Image hsv_to_rgb(const Image& img) {
  return map_pixels(img, [](const Eigen::Vector3d& p) { return hsv_to_rgb(p); });
}

Image clamp01(Image img) {
  img.data = img.data.max(0.0).min(1.0);
  return img;
}

Image resize_bilinear(const Image& img, int new_height, int new_width) {
  require(new_height >= 1 && new_width >= 1, "resize target must be at least 1x1");
  if (new_height == img.height && new_width == img.width) return img;
  Image out(new_height, new_width);
  const double sy = static_cast<double>(img.height) / new_height;
  const double sx = static_cast<double>(img.width) / new_width;
  for (int y = 0; y < new_height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < new_width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = (1 - wx) * img(y0, x0, c) + wx * img(y0, x1, c);
        const double bottom = (1 - wx) * img(y1, x0, c) + wx * img(y1, x1, c);
        out(y, x, c) = std::clamp((1 - wy) * top + wy * bottom, 0.0, 1.0);
      }
    }
  }
  return out;
}

Image crop(const Image& img, const Rect& region) {
  require(region.width >= 1 && region.height >= 1 && region.inside(img), "crop region outside image");
  Image out(region.height, region.width);
  for (int y = 0; y < region.height; ++y)
    for (int x = 0; x < region.width; ++x)
      for (int c = 0; c < 3; ++c) out(y, x, c) = img(region.y + y, region.x + x, c);
  return out;
}

GrayMap luminance(const Image& img) {
  GrayMap out(img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      out(y, x) = kLumaR * img(y, x, 0) + kLumaG * img(y, x, 1) + kLumaB * img(y, x, 2);
  return out;
}

double gradient_energy(const Image& img, const Rect& region) {
  require(region.width >= 1 && region.height >= 1, "gradient_energy: empty region");
  require(region.inside(img), "gradient_energy: region outside image");
  const int h = region.height, w = region.width;
  auto lum = [&](int y, int x) {
    const int yy = region.y + y, xx = region.x + x;
    return kLumaR * img(yy, xx, 0) + kLumaG * img(yy, xx, 1) + kLumaB * img(yy, xx, 2);
  };
  auto derivative = [](double prev, double cur, double next, int i, int n) {
    if (n == 1) return 0.0;
    if (i == 0) return next - cur;
    if (i == n - 1) return cur - prev;
    return 0.5 * (next - prev);
  };
  double total = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double c = lum(y, x);
      const double dx = derivative(x > 0 ? lum(y, x - 1) : c, c, x + 1 < w ? lum(y, x + 1) : c, x, w);
      const double dy = derivative(y > 0 ? lum(y - 1, x) : c, c, y + 1 < h ? lum(y + 1, x) : c, y, h);
      total += std::abs(dx) + std::abs(dy);
    }
  }
  return total / (static_cast<double>(h) * w);
}

DatasetFormat parse_dataset_format(const std::string& name) {
  if (name == "cifar10-binary") return DatasetFormat::cifar10_binary;
  if (name == "stl10-binary") return DatasetFormat::stl10_binary;
  if (name == "image-dir") return DatasetFormat::image_dir;
  throw ContractError("unknown dataset format '" + name + "'");
}

namespace {

constexpr int kCifarSide = 32;
constexpr std::size_t kCifarPixels = 3 * kCifarSide * kCifarSide;
constexpr std::size_t kCifarRecord = 1 + kCifarPixels;
constexpr int kStlSide = 96;
constexpr std::size_t kStlRecord = 3 * kStlSide * kStlSide;

std::vector<unsigned char> read_bytes(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

unsigned char quantize(double v) { return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

std::vector<LabeledImage> load_cifar10(const fs::path& path) {
  const auto bytes = read_bytes(path);
  if (bytes.size() % kCifarRecord != 0)
    throw FormatError(path.string() + ": size is not a multiple of the CIFAR-10 record length");
  const std::size_t n = bytes.size() / kCifarRecord;
  std::vector<LabeledImage> out;
  out.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    const unsigned char* rec = bytes.data() + r * kCifarRecord;
    Image img(kCifarSide, kCifarSide);
    // Planar R, G, B; each plane row-major.
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < kCifarSide; ++y)
        for (int x = 0; x < kCifarSide; ++x) img(y, x, c) = rec[1 + (c * kCifarSide + y) * kCifarSide + x] / 255.0;
    out.push_back({std::move(img), static_cast<int>(rec[0])});
  }
  return out;
}

// STL-10 ships images in X files and 1-based labels in a sibling y file.
std::optional<fs::path> stl_label_file(const fs::path& path) {
  std::string name = path.filename().string();
  const auto pos = name.rfind("_X");
  if (pos == std::string::npos) return std::nullopt;
  name.replace(pos, 2, "_y");
  fs::path candidate = path.parent_path() / name;
  if (fs::exists(candidate)) return candidate;
  return std::nullopt;
}

std::vector<LabeledImage> load_stl10(const fs::path& path) {
  const auto bytes = read_bytes(path);
  if (bytes.size() % kStlRecord != 0) throw FormatError(path.string() + ": size is not a multiple of the STL-10 record length");
  const std::size_t n = bytes.size() / kStlRecord;
  std::vector<unsigned char> labels;
  if (auto lp = stl_label_file(path)) {
    labels = read_bytes(*lp);
    if (labels.size() != n) throw FormatError(lp->string() + ": label count does not match image count");
  }
  std::vector<LabeledImage> out;
  out.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    const unsigned char* rec = bytes.data() + r * kStlRecord;
    Image img(kStlSide, kStlSide);
    // Planar, each plane column-major.
    for (int c = 0; c < 3; ++c)
      for (int x = 0; x < kStlSide; ++x)
        for (int y = 0; y < kStlSide; ++y) img(y, x, c) = rec[(c * kStlSide + x) * kStlSide + y] / 255.0;
    std::optional<int> label;
    if (!labels.empty()) label = static_cast<int>(labels[r]) - 1;
    out.push_back({std::move(img), label});
  }
  return out;
}

std::vector<LabeledImage> load_image_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw FormatError(dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<LabeledImage> out;
  for (const auto& file : files) {
    cv::Mat bgr = cv::imread(file.string(), cv::IMREAD_COLOR);
    if (bgr.empty() || bgr.depth() != CV_8U) {
      spdlog::warn("skipping undecodable image {}", file.string());
      continue;
    }
    Image img(bgr.rows, bgr.cols);
    for (int y = 0; y < bgr.rows; ++y) {
      const auto* row = bgr.ptr<cv::Vec3b>(y);
      for (int x = 0; x < bgr.cols; ++x)
        for (int c = 0; c < 3; ++c) img(y, x, c) = row[x][2 - c] / 255.0;
    }
    out.push_back({std::move(img), std::nullopt});
  }
  if (out.empty()) throw FormatError("no decodable images in " + dir.string());
  return out;
}

}  // namespace

std::vector<LabeledImage> load_dataset_images(const fs::path& path, DatasetFormat format) {
  if (!fs::exists(path)) throw FormatError(path.string() + " does not exist");
  switch (format) {
    case DatasetFormat::cifar10_binary: return load_cifar10(path);
    case DatasetFormat::stl10_binary: return load_stl10(path);
    case DatasetFormat::image_dir: return load_image_dir(path);
  }
  throw ContractError("unhandled dataset format");
}

void save_cifar10(const fs::path& path, std::span<const LabeledImage> images) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write " + path.string());
  std::vector<unsigned char> rec(kCifarRecord);
  for (const auto& li : images) {
    require(li.image.height == kCifarSide && li.image.width == kCifarSide, "CIFAR-10 records are 32x32");
    require(li.label.has_value() && *li.label >= 0 && *li.label < 256, "CIFAR-10 records need a byte label");
    rec[0] = static_cast<unsigned char>(*li.label);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < kCifarSide; ++y)
        for (int x = 0; x < kCifarSide; ++x) rec[1 + (c * kCifarSide + y) * kCifarSide + x] = quantize(li.image(y, x, c));
    os.write(reinterpret_cast<const char*>(rec.data()), static_cast<std::streamsize>(rec.size()));
  }
}

void save_stl10(const fs::path& path, std::span<const LabeledImage> images) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write " + path.string());
  std::vector<unsigned char> rec(kStlRecord);
  for (const auto& li : images) {
    require(li.image.height == kStlSide && li.image.width == kStlSide, "STL-10 records are 96x96");
    for (int c = 0; c < 3; ++c)
      for (int x = 0; x < kStlSide; ++x)
        for (int y = 0; y < kStlSide; ++y) rec[(c * kStlSide + x) * kStlSide + y] = quantize(li.image(y, x, c));
    os.write(reinterpret_cast<const char*>(rec.data()), static_cast<std::streamsize>(rec.size()));
  }
}

}  // namespace exemplar
