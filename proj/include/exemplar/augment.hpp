#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "exemplar/imaging.hpp"
#include "exemplar/rng.hpp"
#include "exemplar/sampler.hpp"

namespace exemplar {

/// Principal directions of pooled pixel RGB values.
/// Column k of `components` is the k-th direction; eigenvalues descend.
struct ColorPCABasis {
  Eigen::Matrix3d components = Eigen::Matrix3d::Identity();
  Eigen::Vector3d eigenvalues = Eigen::Vector3d::Zero();
  Eigen::Vector3d mean_rgb = Eigen::Vector3d::Zero();
};

// Parameter intervals of the four elementary transformations.
inline constexpr double kMaxShift = 0.25;  // fraction of patch size
inline constexpr double kScaleMin = 0.7, kScaleMax = 1.4;
inline constexpr double kColorMin = 0.5, kColorMax = 2.0;
inline constexpr double kPowerMin = 0.25, kPowerMax = 4.0;

struct TransformSpec {
  double dx = 0.0;  // fraction of patch size
  double dy = 0.0;
  double scale = 1.0;
  Eigen::Vector3d color_factors = Eigen::Vector3d::Ones();
  double contrast_power = 1.0;

  static TransformSpec identity() { return {}; }
  bool valid() const;
};

/// Surrogate training set. Sample j is column j of `samples`, stored planar
/// (all R, then G, then B; each plane row-major) and already mean-subtracted.
struct SurrogateDataset {
  int n_classes = 0;
  int per_class_count = 0;
  int patch_size = 32;
  Eigen::MatrixXf samples;
  std::vector<int> labels;
  Eigen::VectorXf pixel_mean;  // same planar layout
  std::vector<TransformSpec> specs;

  Eigen::Index size() const { return samples.cols(); }
  Eigen::Index sample_dim() const { return Eigen::Index(3) * patch_size * patch_size; }
};

ColorPCABasis fit_color_pca(std::span<const SeedPatch> patches);
ColorPCABasis fit_color_pca(std::span<const Image> images);

/// Shifts uniform; scale, color factors, and contrast power log-uniform.
TransformSpec sample_transform_spec(Rng& rng);

/// Geometric warp, then PCA color scaling, then HSV saturation/value power.
Image apply_transform(const Image& patch, const TransformSpec& spec, const ColorPCABasis& basis);

// Individual stages, exposed for testing.
Image warp_geometric(const Image& patch, double dx, double dy, double scale);
Image scale_color(const Image& img, const Eigen::Vector3d& factors, const ColorPCABasis& basis);
Image adjust_contrast(const Image& img, double power);

/// Class i holds the seed (identity spec) plus k-1 random transforms drawn
/// from substream(rng_seed, augment, i).
SurrogateDataset build_surrogate_dataset(std::span<const SeedPatch> patches, int k_per_class,
                                         const ColorPCABasis& basis, std::uint64_t rng_seed);

Eigen::VectorXf to_planar(const Image& img);
Image from_planar(const Eigen::Ref<const Eigen::VectorXf>& planar, int height, int width);

// Dataset file "EXDS" with a ".specs" sidecar of 7 f32 per sample.
void save_dataset(const std::filesystem::path& path, const SurrogateDataset& ds);
SurrogateDataset load_dataset(const std::filesystem::path& path);
std::filesystem::path specs_sidecar(const std::filesystem::path& path);

}  // namespace exemplar
