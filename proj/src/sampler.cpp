#include "exemplar/sampler.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "exemplar/binary_io.hpp"
#include "exemplar/error.hpp"
#include "exemplar/rng.hpp"

namespace exemplar {

std::vector<int> eligible_images(std::span<const Image> images, int patch_size) {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(images.size()); ++i)
    if (images[i].height >= patch_size && images[i].width >= patch_size) out.push_back(i);
  return out;
}

Candidate draw_candidate(std::span<const Image> images, std::span<const int> eligible, const SamplerConfig& cfg,
                         Rng& rng) {
  const int pick = eligible[uniform_int(rng, 0, static_cast<int>(eligible.size()) - 1)];
  const Image& img = images[pick];
  const double side_real = uniform(rng, cfg.scale_min, cfg.scale_max) * cfg.patch_size;
  const int side = std::clamp(static_cast<int>(std::lround(side_real)), cfg.patch_size, std::min(img.height, img.width));
  Candidate c;
  c.image_index = pick;
  c.rect.width = c.rect.height = side;
  c.rect.x = uniform_int(rng, 0, img.width - side);
  c.rect.y = uniform_int(rng, 0, img.height - side);
  return c;
}

double quantile(std::vector<double> values, double p) {
  require(!values.empty(), "quantile of empty set");
  require(p >= 0.0 && p <= 1.0, "quantile level outside [0,1]");
  std::sort(values.begin(), values.end());
  const double pos = p * (values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - lo;
  return values[lo] + frac * (values[hi] - values[lo]);
}

namespace {

void check_config(const SamplerConfig& cfg) {
  require(cfg.patch_size >= 1, "patch_size must be positive");
  require(cfg.scale_min >= 1.0 && cfg.scale_max >= cfg.scale_min, "scale range must satisfy 1 <= min <= max");
  require(cfg.energy_percentile >= 0.0 && cfg.energy_percentile <= 1.0, "energy_percentile outside [0,1]");
}

}  // namespace

double estimate_energy_threshold(std::span<const Image> images, const SamplerConfig& cfg) {
  check_config(cfg);
  require(!images.empty(), "estimate_energy_threshold: no images");
  const auto eligible = eligible_images(images, cfg.patch_size);
  if (eligible.empty()) throw ContractError("no image is at least patch_size on both sides");
  Rng rng = substream(cfg.rng_seed, Stream::threshold);
  std::vector<double> energies;
  energies.reserve(cfg.threshold_candidates);
  for (int i = 0; i < cfg.threshold_candidates; ++i) {
    const Candidate c = draw_candidate(images, eligible, cfg, rng);
    energies.push_back(gradient_energy(images[c.image_index], c.rect));
  }
  return quantile(std::move(energies), cfg.energy_percentile);
}

SamplingResult sample_patches(std::span<const Image> images, const SamplerConfig& cfg, double threshold) {
  check_config(cfg);
  require(cfg.n_patches >= 0, "n_patches must be non-negative");
  const auto eligible = eligible_images(images, cfg.patch_size);
  if (eligible.empty()) throw ContractError("no image is at least patch_size on both sides");

  SamplingResult result;
  result.threshold = threshold;
  result.patches.reserve(cfg.n_patches);
  for (int slot = 0; slot < cfg.n_patches; ++slot) {
    Rng rng = substream(cfg.rng_seed, Stream::sampling, static_cast<std::uint64_t>(slot));
    Candidate best;
    double best_energy = -1.0;
    bool accepted = false;
    for (int attempt = 0; attempt <= cfg.max_rejections_per_patch; ++attempt) {
      const Candidate c = draw_candidate(images, eligible, cfg, rng);
      const double e = gradient_energy(images[c.image_index], c.rect);
      if (e > best_energy) {
        best_energy = e;
        best = c;
      }
      if (e >= threshold) {
        accepted = true;
        break;
      }
    }
    if (!accepted) ++result.fallback_count;
    SeedPatch p;
    p.source_image_index = best.image_index;
    p.source_rect = best.rect;
    p.source_scale = static_cast<double>(best.rect.width) / cfg.patch_size;
    p.pixels = resize_bilinear(crop(images[best.image_index], best.rect), cfg.patch_size, cfg.patch_size);
    result.patches.push_back(std::move(p));
  }
  if (result.fallback_count > 0)
    spdlog::warn("{} of {} patch slots exhausted the rejection budget; kept best candidate", result.fallback_count,
                 cfg.n_patches);
  return result;
}

namespace {
constexpr std::uint32_t kPatchVersion = 1;
}

void save_patches(const std::filesystem::path& path, std::span<const SeedPatch> patches) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write " + path.string());
  const std::uint32_t side = patches.empty() ? 0 : static_cast<std::uint32_t>(patches.front().pixels.height);
  io::write_magic(os, "EXPT");
  io::write_pod(os, kPatchVersion);
  io::write_pod(os, static_cast<std::uint32_t>(patches.size()));
  io::write_pod(os, side);
  std::vector<float> buf;
  for (const auto& p : patches) {
    require(p.pixels.height == static_cast<int>(side) && p.pixels.width == static_cast<int>(side),
            "all patches must share one size");
    io::write_pod(os, static_cast<std::uint32_t>(p.source_image_index));
    io::write_pod(os, static_cast<std::int32_t>(p.source_rect.x));
    io::write_pod(os, static_cast<std::int32_t>(p.source_rect.y));
    io::write_pod(os, static_cast<std::int32_t>(p.source_rect.width));
    io::write_pod(os, static_cast<float>(p.source_scale));
    buf.assign(p.pixels.data.begin(), p.pixels.data.end());
    io::write_array(os, buf.data(), buf.size());
  }
}

std::vector<SeedPatch> load_patches(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  io::expect_magic(is, "EXPT");
  if (io::read_pod<std::uint32_t>(is) != kPatchVersion) throw FormatError("unsupported patch file version");
  const auto count = io::read_pod<std::uint32_t>(is);
  const auto side = static_cast<int>(io::read_pod<std::uint32_t>(is));
  std::vector<SeedPatch> out(count);
  std::vector<float> buf(static_cast<std::size_t>(side) * side * 3);
  for (auto& p : out) {
    p.source_image_index = static_cast<int>(io::read_pod<std::uint32_t>(is));
    p.source_rect.x = io::read_pod<std::int32_t>(is);
    p.source_rect.y = io::read_pod<std::int32_t>(is);
    p.source_rect.width = p.source_rect.height = io::read_pod<std::int32_t>(is);
    p.source_scale = io::read_pod<float>(is);
    io::read_array(is, buf.data(), buf.size());
    p.pixels = Image(side, side);
    for (std::size_t i = 0; i < buf.size(); ++i) p.pixels.data[static_cast<Eigen::Index>(i)] = buf[i];
  }
  io::expect_eof(is);
  return out;
}

}  // namespace exemplar
