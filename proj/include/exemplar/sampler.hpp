#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "exemplar/imaging.hpp"
#include "exemplar/rng.hpp"

namespace exemplar {

struct SeedPatch {
  Image pixels;  // patch_size x patch_size
  int source_image_index = 0;
  Rect source_rect;
  double source_scale = 1.0;  // sampled square side / patch_size
};

struct SamplerConfig {
  int n_patches = 1000;
  int patch_size = 32;
  double scale_min = 1.0;  // multiples of patch_size for the sampled square side
  double scale_max = 2.0;
  double energy_percentile = 0.7;
  int max_rejections_per_patch = 100;
  int threshold_candidates = 1000;
  std::uint64_t rng_seed = 0;
};

struct SamplingResult {
  std::vector<SeedPatch> patches;
  double threshold = 0.0;
  int fallback_count = 0;  // slots that exhausted the rejection budget
};

/// A random candidate square, drawn from the same distribution as sampling.
struct Candidate {
  int image_index = 0;
  Rect rect;
};

/// Indices of images large enough to host a patch_size square.
std::vector<int> eligible_images(std::span<const Image> images, int patch_size);

Candidate draw_candidate(std::span<const Image> images, std::span<const int> eligible, const SamplerConfig& cfg,
                         Rng& rng);

/// Type-7 (linear interpolation) quantile of `values`, p in [0,1].
double quantile(std::vector<double> values, double p);

double estimate_energy_threshold(std::span<const Image> images, const SamplerConfig& cfg);

/// Slot s draws candidates from substream(rng_seed, sampling, s).
SamplingResult sample_patches(std::span<const Image> images, const SamplerConfig& cfg, double threshold);

// Patch file "EXPT": magic, u32 version, u32 count, u32 patch_size, then per
// patch: u32 image index, i32 x, y, side, f32 scale, patch_size^2*3 f32
// (interleaved RGB, row-major).
void save_patches(const std::filesystem::path& path, std::span<const SeedPatch> patches);
std::vector<SeedPatch> load_patches(const std::filesystem::path& path);

}  // namespace exemplar
