#include "exemplar/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "exemplar/rng.hpp"

namespace exemplar::synth {

namespace {

Eigen::Vector3d random_color(Rng& rng) { return {uniform(rng, 0, 1), uniform(rng, 0, 1), uniform(rng, 0, 1)}; }

void fill_ramp(Image& img, Rng& rng) {
  const Eigen::Vector3d a = random_color(rng), b = random_color(rng);
  const double angle = uniform(rng, 0, 2 * std::numbers::pi);
  const double ca = std::cos(angle), sa = std::sin(angle);
  const double norm = std::abs(ca) * img.width + std::abs(sa) * img.height;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double t = std::clamp(0.5 + ((x - img.width / 2.0) * ca + (y - img.height / 2.0) * sa) / norm, 0.0, 1.0);
      img.set_pixel(y, x, (1 - t) * a + t * b);
    }
}

// Signed-distance-free inside tests in the shape's local frame (unit radius).
bool inside_shape(int kind, double u, double v) {
  switch (kind) {
    case 0: return u * u + v * v <= 1.0;
    case 1: return std::abs(u) <= 0.8 && std::abs(v) <= 0.8;
    case 2: return v <= 0.7 && v >= -1.0 + 0.0 && std::abs(u) <= (0.7 - v) * 0.6;
    default: return (std::abs(u) <= 0.3 && std::abs(v) <= 1.0) || (std::abs(v) <= 0.3 && std::abs(u) <= 1.0);
  }
}

void draw_shape(Image& img, int kind, double cy, double cx, double radius, double angle, const Eigen::Vector3d& color) {
  const double ca = std::cos(angle), sa = std::sin(angle);
  const int y0 = std::max(0, static_cast<int>(cy - 1.5 * radius)), y1 = std::min(img.height - 1, static_cast<int>(cy + 1.5 * radius));
  const int x0 = std::max(0, static_cast<int>(cx - 1.5 * radius)), x1 = std::min(img.width - 1, static_cast<int>(cx + 1.5 * radius));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double px = (x + 0.5 - cx) / radius, py = (y + 0.5 - cy) / radius;
      const double u = ca * px + sa * py, v = -sa * px + ca * py;
      if (inside_shape(kind, u, v)) img.set_pixel(y, x, color);
    }
}

void draw_grating(Image& img, Rng& rng, double opacity) {
  const int h = uniform_int(rng, img.height / 4, img.height);
  const int w = uniform_int(rng, img.width / 4, img.width);
  const int y0 = uniform_int(rng, 0, img.height - h), x0 = uniform_int(rng, 0, img.width - w);
  const double angle = uniform(rng, 0, std::numbers::pi);
  const double period = uniform(rng, 3.0, 12.0);
  const Eigen::Vector3d a = random_color(rng), b = random_color(rng);
  const double ca = std::cos(angle), sa = std::sin(angle);
  for (int y = y0; y < y0 + h; ++y)
    for (int x = x0; x < x0 + w; ++x) {
      const double t = 0.5 + 0.5 * std::sin(2 * std::numbers::pi * (x * ca + y * sa) / period);
      const Eigen::Vector3d c = (1 - t) * a + t * b;
      img.set_pixel(y, x, (1 - opacity) * img.pixel(y, x) + opacity * c);
    }
}

void add_noise(Image& img, Rng& rng, double sigma) {
  std::normal_distribution<double> n(0.0, sigma);
  for (Eigen::Index i = 0; i < img.data.size(); ++i) img.data[i] += n(rng);
  img = clamp01(std::move(img));
}

}  // namespace

std::vector<Image> textured_corpus(int count, int height, int width, std::uint64_t seed) {
  std::vector<Image> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Rng rng = substream(seed, Stream::synth, static_cast<std::uint64_t>(i));
    Image img(height, width);
    fill_ramp(img, rng);
    const int gratings = uniform_int(rng, 0, 2);
    for (int g = 0; g < gratings; ++g) draw_grating(img, rng, uniform(rng, 0.5, 1.0));
    const int shapes = uniform_int(rng, 2, 8);
    const double base = std::min(height, width);
    for (int s = 0; s < shapes; ++s)
      draw_shape(img, uniform_int(rng, 0, 3), uniform(rng, 0, height), uniform(rng, 0, width),
                 uniform(rng, 0.05, 0.3) * base, uniform(rng, 0, 2 * std::numbers::pi), random_color(rng));
    add_noise(img, rng, 0.01);
    out.push_back(std::move(img));
  }
  return out;
}

std::vector<LabeledImage> shapes_dataset(int per_class, int side, std::uint64_t seed) {
  std::vector<LabeledImage> out;
  out.reserve(static_cast<std::size_t>(per_class) * kShapeClasses);
  for (int i = 0; i < per_class * kShapeClasses; ++i) {
    Rng rng = substream(seed ^ 0x5A5A5A5AULL, Stream::synth, static_cast<std::uint64_t>(i));
    const int label = i % kShapeClasses;
    Image img(side, side);
    fill_ramp(img, rng);
    draw_grating(img, rng, uniform(rng, 0.2, 0.6));
    const double radius = uniform(rng, 0.2, 0.4) * side;
    const double cy = uniform(rng, 0.35, 0.65) * side, cx = uniform(rng, 0.35, 0.65) * side;
    draw_shape(img, label, cy, cx, radius, uniform(rng, 0, 2 * std::numbers::pi), random_color(rng));
    add_noise(img, rng, 0.05);
    out.push_back({std::move(img), label});
  }
  return out;
}

}  // namespace exemplar::synth
