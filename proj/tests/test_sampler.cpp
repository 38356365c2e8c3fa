#include <doctest.h>

#include <algorithm>
#include <fstream>

#include "exemplar/error.hpp"
#include "exemplar/sampler.hpp"
#include "exemplar/synth.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace exemplar;

namespace {

std::vector<Image> mixed_corpus() {
  auto corpus = synth::textured_corpus(6, 64, 80, 5);
  corpus.emplace_back(64, 64, 0.25);
  corpus.emplace_back(48, 70, 0.8);
  corpus.emplace_back(20, 20, 0.5);  // too small, never sampled
  return corpus;
}

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("quantile endpoints and interpolation") {
  CHECK(quantile({3, 1, 2}, 0.0) == 1);
  CHECK(quantile({3, 1, 2}, 1.0) == 3);
  CHECK(quantile({4, 1, 2, 3}, 0.5) == doctest::Approx(2.5));
  CHECK_THROWS_AS(quantile({}, 0.5), ContractError);
}

TEST_CASE("energy threshold on constant corpus is zero") {
  std::vector<Image> flat{Image(40, 40, 0.3), Image(50, 35, 0.9)};
  SamplerConfig cfg;
  CHECK(estimate_energy_threshold(flat, cfg) == 0.0);
}

TEST_CASE("energy threshold matches a sort-based quantile over the same candidate stream") {
  const auto corpus = mixed_corpus();
  for (double p : {0.0, 0.5, 0.7}) {
    SamplerConfig cfg;
    cfg.energy_percentile = p;
    cfg.rng_seed = 42;
    const auto eligible = eligible_images(corpus, cfg.patch_size);
    CHECK(std::find(eligible.begin(), eligible.end(), 8) == eligible.end());
    Rng rng = substream(cfg.rng_seed, Stream::threshold);
    std::vector<double> e;
    for (int i = 0; i < cfg.threshold_candidates; ++i) {
      const auto c = draw_candidate(corpus, eligible, cfg, rng);
      e.push_back(oracle::gradient_energy(corpus[c.image_index], c.rect.x, c.rect.y, c.rect.width, c.rect.height));
    }
    std::sort(e.begin(), e.end());
    const double pos = p * (e.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double expected = e[lo] + (pos - lo) * (e[std::min(lo + 1, e.size() - 1)] - e[lo]);
    CHECK(estimate_energy_threshold(corpus, cfg) == doctest::Approx(expected).epsilon(1e-12));
    if (p == 0.0) CHECK(estimate_energy_threshold(corpus, cfg) == doctest::Approx(e.front()));
  }
}

TEST_CASE("threshold estimation rejects corpora without large enough images") {
  std::vector<Image> tiny{Image(10, 10, 0.1)};
  CHECK_THROWS_AS(estimate_energy_threshold(tiny, SamplerConfig{}), ContractError);
}

TEST_CASE("sample_patches produces exactly n in-bounds patches above threshold") {
  const auto corpus = synth::textured_corpus(20, 96, 96, 9);
  SamplerConfig cfg;
  cfg.n_patches = 50;
  cfg.rng_seed = 3;
  const double th = estimate_energy_threshold(corpus, cfg);
  const auto res = sample_patches(corpus, cfg, th);
  REQUIRE(res.patches.size() == 50);
  CHECK(res.fallback_count == 0);
  for (const auto& p : res.patches) {
    CHECK(p.pixels.height == 32);
    CHECK(p.pixels.width == 32);
    CHECK(p.source_rect.inside(corpus[p.source_image_index]));
    CHECK(p.source_rect.width >= 32);
    CHECK(p.source_rect.width <= 64);
    CHECK(p.source_scale == doctest::Approx(p.source_rect.width / 32.0));
    CHECK(gradient_energy(corpus[p.source_image_index], p.source_rect) >= th);
  }
}

TEST_CASE("sample_patches is deterministic under a fixed seed") {
  const auto corpus = synth::textured_corpus(8, 64, 64, 2);
  SamplerConfig cfg;
  cfg.n_patches = 30;
  cfg.rng_seed = 77;
  test::TempDir dir;
  for (int run = 0; run < 2; ++run) {
    const auto res = sample_patches(corpus, cfg, estimate_energy_threshold(corpus, cfg));
    save_patches(dir.path / ("run" + std::to_string(run)), res.patches);
  }
  CHECK(file_bytes(dir.path / "run0") == file_bytes(dir.path / "run1"));
  cfg.rng_seed = 78;
  save_patches(dir.path / "other", sample_patches(corpus, cfg, 0.0).patches);
  CHECK(file_bytes(dir.path / "run0") != file_bytes(dir.path / "other"));
}

TEST_CASE("constant corpus with zero threshold accepts everything") {
  std::vector<Image> flat{Image(40, 40, 0.3)};
  SamplerConfig cfg;
  cfg.n_patches = 5;
  const auto res = sample_patches(flat, cfg, 0.0);
  CHECK(res.patches.size() == 5);
  CHECK(res.fallback_count == 0);
}

TEST_CASE("rejection budget falls back to the best candidate") {
  const auto corpus = synth::textured_corpus(3, 64, 64, 4);
  SamplerConfig cfg;
  cfg.n_patches = 4;
  cfg.max_rejections_per_patch = 10;
  const auto res = sample_patches(corpus, cfg, 1e9);
  CHECK(res.patches.size() == 4);
  CHECK(res.fallback_count == 4);
}

TEST_CASE("patch file round trip and corruption") {
  const auto corpus = synth::textured_corpus(3, 64, 64, 4);
  SamplerConfig cfg;
  cfg.n_patches = 6;
  const auto patches = sample_patches(corpus, cfg, 0.0).patches;
  test::TempDir dir;
  save_patches(dir.path / "p.bin", patches);
  const auto back = load_patches(dir.path / "p.bin");
  REQUIRE(back.size() == patches.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].source_rect == patches[i].source_rect);
    CHECK(back[i].source_image_index == patches[i].source_image_index);
    CHECK((back[i].pixels.data - patches[i].pixels.data).abs().maxCoeff() < 1e-7);
  }
  auto bytes = file_bytes(dir.path / "p.bin");
  bytes[0] = 'X';
  std::ofstream(dir.path / "bad.bin", std::ios::binary) << bytes;
  CHECK_THROWS_AS(load_patches(dir.path / "bad.bin"), FormatError);
}
