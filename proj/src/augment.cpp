#include "exemplar/augment.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>

#include "exemplar/binary_io.hpp"
#include "exemplar/error.hpp"

namespace exemplar {

bool TransformSpec::valid() const {
  auto within = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
  return within(dx, -kMaxShift, kMaxShift) && within(dy, -kMaxShift, kMaxShift) && within(scale, kScaleMin, kScaleMax) &&
         (color_factors.array() >= kColorMin).all() && (color_factors.array() <= kColorMax).all() &&
         within(contrast_power, kPowerMin, kPowerMax);
}

namespace {

ColorPCABasis pca_from_moments(const Eigen::Vector3d& sum, const Eigen::Matrix3d& outer, double count) {
  ColorPCABasis basis;
  basis.mean_rgb = sum / count;
  Eigen::Matrix3d cov = outer / count - basis.mean_rgb * basis.mean_rgb.transpose();
  cov = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  // Solver returns ascending order.
  for (int k = 0; k < 3; ++k) {
    basis.eigenvalues[k] = std::max(solver.eigenvalues()[2 - k], 0.0);
    Eigen::Vector3d v = solver.eigenvectors().col(2 - k).normalized();
    Eigen::Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;
    basis.components.col(k) = v;
  }
  return basis;
}

template <typename Range, typename Get>
ColorPCABasis fit_pooled(const Range& range, Get&& get) {
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  Eigen::Matrix3d outer = Eigen::Matrix3d::Zero();
  double count = 0;
  for (const auto& item : range) {
    const Image& img = get(item);
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        const Eigen::Vector3d p = img.pixel(y, x);
        sum += p;
        outer += p * p.transpose();
        count += 1;
      }
  }
  require(count > 0, "fit_color_pca: no pixels");
  return pca_from_moments(sum, outer, count);
}

double log_uniform(Rng& rng, double lo, double hi) { return std::exp(uniform(rng, std::log(lo), std::log(hi))); }

double sample_clamped(const Image& img, double fy, double fx, int c) {
  fy = std::clamp(fy, 0.0, img.height - 1.0);
  fx = std::clamp(fx, 0.0, img.width - 1.0);
  const int y0 = static_cast<int>(fy), x0 = static_cast<int>(fx);
  const int y1 = std::min(y0 + 1, img.height - 1), x1 = std::min(x0 + 1, img.width - 1);
  const double wy = fy - y0, wx = fx - x0;
  const double top = (1 - wx) * img(y0, x0, c) + wx * img(y0, x1, c);
  const double bottom = (1 - wx) * img(y1, x0, c) + wx * img(y1, x1, c);
  return (1 - wy) * top + wy * bottom;
}

}  // namespace

ColorPCABasis fit_color_pca(std::span<const SeedPatch> patches) {
  require(patches.size() >= 2, "fit_color_pca needs at least two patches");
  return fit_pooled(patches, [](const SeedPatch& p) -> const Image& { return p.pixels; });
}

ColorPCABasis fit_color_pca(std::span<const Image> images) {
  return fit_pooled(images, [](const Image& img) -> const Image& { return img; });
}

TransformSpec sample_transform_spec(Rng& rng) {
  TransformSpec s;
  s.dx = uniform(rng, -kMaxShift, kMaxShift);
  s.dy = uniform(rng, -kMaxShift, kMaxShift);
  s.scale = log_uniform(rng, kScaleMin, kScaleMax);
  for (int k = 0; k < 3; ++k) s.color_factors[k] = log_uniform(rng, kColorMin, kColorMax);
  s.contrast_power = log_uniform(rng, kPowerMin, kPowerMax);
  return s;
}

Image warp_geometric(const Image& patch, double dx, double dy, double scale) {
  require(scale > 0, "warp scale must be positive");
  // Output pixel center u maps back to source c + (u - t - c) / s, continuous coordinates.
  const double cy = patch.height / 2.0, cx = patch.width / 2.0;
  const double ty = dy * patch.height, tx = dx * patch.width;
  Image out(patch.height, patch.width);
  for (int y = 0; y < patch.height; ++y) {
    const double sy = cy + (y + 0.5 - ty - cy) / scale - 0.5;
    for (int x = 0; x < patch.width; ++x) {
      const double sx = cx + (x + 0.5 - tx - cx) / scale - 0.5;
      for (int c = 0; c < 3; ++c) out(y, x, c) = sample_clamped(patch, sy, sx, c);
    }
  }
  return out;
}

Image scale_color(const Image& img, const Eigen::Vector3d& factors, const ColorPCABasis& basis) {
  const Eigen::Matrix3d& u = basis.components;
  const Eigen::Matrix3d m = u * factors.asDiagonal() * u.transpose();
  Image out = img;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) out.set_pixel(y, x, basis.mean_rgb + m * (img.pixel(y, x) - basis.mean_rgb));
  return out;
}

Image adjust_contrast(const Image& img, double power) {
  Image out = img;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      Eigen::Vector3d hsv = rgb_to_hsv(img.pixel(y, x));
      hsv[1] = std::pow(hsv[1], power);
      hsv[2] = std::pow(hsv[2], power);
      out.set_pixel(y, x, hsv_to_rgb(hsv));
    }
  return out;
}

Image apply_transform(const Image& patch, const TransformSpec& spec, const ColorPCABasis& basis) {
  Image img = warp_geometric(patch, spec.dx, spec.dy, spec.scale);
  img = clamp01(scale_color(img, spec.color_factors, basis));
  img = adjust_contrast(img, spec.contrast_power);
  return clamp01(std::move(img));
}

Eigen::VectorXf to_planar(const Image& img) {
  const Eigen::Index plane = Eigen::Index(img.height) * img.width;
  Eigen::VectorXf out(3 * plane);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) out[c * plane + Eigen::Index(y) * img.width + x] = static_cast<float>(img(y, x, c));
  return out;
}

Image from_planar(const Eigen::Ref<const Eigen::VectorXf>& planar, int height, int width) {
  const Eigen::Index plane = Eigen::Index(height) * width;
  require(planar.size() == 3 * plane, "from_planar: size mismatch");
  Image out(height, width);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) out(y, x, c) = planar[c * plane + Eigen::Index(y) * width + x];
  return out;
}

SurrogateDataset build_surrogate_dataset(std::span<const SeedPatch> patches, int k_per_class,
                                         const ColorPCABasis& basis, std::uint64_t rng_seed) {
  require(!patches.empty(), "build_surrogate_dataset: no patches");
  require(k_per_class >= 1, "build_surrogate_dataset: k must be at least 1");
  const int side = patches.front().pixels.height;
  SurrogateDataset ds;
  ds.n_classes = static_cast<int>(patches.size());
  ds.per_class_count = k_per_class;
  ds.patch_size = side;
  const Eigen::Index n = Eigen::Index(ds.n_classes) * k_per_class;
  ds.samples.resize(ds.sample_dim(), n);
  ds.labels.resize(static_cast<std::size_t>(n));
  ds.specs.resize(static_cast<std::size_t>(n));

  Eigen::Index j = 0;
  for (int i = 0; i < ds.n_classes; ++i) {
    const Image& seed = patches[i].pixels;
    require(seed.height == side && seed.width == side, "seed patches must share one square size");
    Rng rng = substream(rng_seed, Stream::augment, static_cast<std::uint64_t>(i));
    for (int k = 0; k < k_per_class; ++k, ++j) {
      const TransformSpec spec = k == 0 ? TransformSpec::identity() : sample_transform_spec(rng);
      ds.samples.col(j) = to_planar(apply_transform(seed, spec, basis));
      ds.labels[j] = i;
      ds.specs[j] = spec;
    }
  }

  // Fixed column order, double accumulation.
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(ds.sample_dim());
  for (Eigen::Index c = 0; c < n; ++c) mean += ds.samples.col(c).cast<double>();
  mean /= static_cast<double>(n);
  for (Eigen::Index c = 0; c < n; ++c) ds.samples.col(c) = (ds.samples.col(c).cast<double>() - mean).cast<float>();
  ds.pixel_mean = mean.cast<float>();
  return ds;
}

namespace {
constexpr std::uint32_t kDatasetVersion = 1;
}

std::filesystem::path specs_sidecar(const std::filesystem::path& path) {
  auto p = path;
  p += ".specs";
  return p;
}

void save_dataset(const std::filesystem::path& path, const SurrogateDataset& ds) {
  require(static_cast<Eigen::Index>(ds.labels.size()) == ds.size(), "dataset labels/sample count mismatch");
  {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot write " + path.string());
    io::write_magic(os, "EXDS");
    io::write_pod(os, kDatasetVersion);
    io::write_pod(os, static_cast<std::uint32_t>(ds.n_classes));
    io::write_pod(os, static_cast<std::uint32_t>(ds.per_class_count));
    io::write_pod(os, static_cast<std::uint32_t>(ds.patch_size));
    io::write_array(os, ds.pixel_mean.data(), static_cast<std::size_t>(ds.pixel_mean.size()));
    for (Eigen::Index j = 0; j < ds.size(); ++j) {
      io::write_pod(os, static_cast<std::uint32_t>(ds.labels[j]));
      io::write_array(os, ds.samples.col(j).data(), static_cast<std::size_t>(ds.sample_dim()));
    }
  }
  std::ofstream ss(specs_sidecar(path), std::ios::binary);
  if (!ss) throw FormatError("cannot write spec sidecar");
  for (const auto& s : ds.specs) {
    const float row[7] = {float(s.dx), float(s.dy), float(s.scale), float(s.color_factors[0]),
                          float(s.color_factors[1]), float(s.color_factors[2]), float(s.contrast_power)};
    io::write_array(ss, row, 7);
  }
}

SurrogateDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  io::expect_magic(is, "EXDS");
  if (io::read_pod<std::uint32_t>(is) != kDatasetVersion) throw FormatError("unsupported dataset version");
  SurrogateDataset ds;
  ds.n_classes = static_cast<int>(io::read_pod<std::uint32_t>(is));
  ds.per_class_count = static_cast<int>(io::read_pod<std::uint32_t>(is));
  ds.patch_size = static_cast<int>(io::read_pod<std::uint32_t>(is));
  const Eigen::Index n = Eigen::Index(ds.n_classes) * ds.per_class_count;
  ds.pixel_mean.resize(ds.sample_dim());
  io::read_array(is, ds.pixel_mean.data(), static_cast<std::size_t>(ds.sample_dim()));
  ds.samples.resize(ds.sample_dim(), n);
  ds.labels.resize(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto label = io::read_pod<std::uint32_t>(is);
    if (label >= static_cast<std::uint32_t>(ds.n_classes)) throw FormatError("label out of range");
    ds.labels[j] = static_cast<int>(label);
    io::read_array(is, ds.samples.col(j).data(), static_cast<std::size_t>(ds.sample_dim()));
  }
  io::expect_eof(is);

  ds.specs.assign(static_cast<std::size_t>(n), TransformSpec{});
  std::ifstream ss(specs_sidecar(path), std::ios::binary);
  if (ss) {
    for (auto& s : ds.specs) {
      float row[7];
      io::read_array(ss, row, 7);
      s.dx = row[0];
      s.dy = row[1];
      s.scale = row[2];
      s.color_factors = Eigen::Vector3d(row[3], row[4], row[5]);
      s.contrast_power = row[6];
    }
  }
  return ds;
}

}  // namespace exemplar
