#include "exemplar/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <map>

#include "exemplar/error.hpp"

namespace exemplar {

LabeledSet select_classes(std::span<const LabeledImage> images, std::span<const int> classes, int per_class_cap) {
  LabeledSet out;
  std::map<int, int> taken;
  for (const auto& li : images) {
    if (!li.label) continue;
    const int l = *li.label;
    if (!classes.empty() && std::find(classes.begin(), classes.end(), l) == classes.end()) continue;
    if (per_class_cap > 0 && taken[l] >= per_class_cap) continue;
    ++taken[l];
    out.images.push_back(li.image);
    out.labels.push_back(l);
  }
  return out;
}

DownstreamResult evaluate_features(const Model& model, const EvalSplit& eval, const SvmProtocol& protocol) {
  require(!eval.train.images.empty() && !eval.test.images.empty(), "evaluation needs train and test images");
  const Eigen::MatrixXd xtr = extract_batch(model, eval.train.images).cast<double>();
  const Eigen::MatrixXd xte = extract_batch(model, eval.test.images).cast<double>();
  DownstreamResult r;
  r.best_C = cross_validate_C(xtr, eval.train.labels, protocol.C_grid, protocol.folds, protocol.svm).best_C;
  SvmConfig cfg = protocol.svm;
  cfg.C = r.best_C;
  const LinearModel svm = train_svm(xtr, eval.train.labels, cfg);
  r.accuracy = evaluate(svm, xte, eval.test.labels);
  return r;
}

SurrogateDataset make_surrogate(std::span<const Image> corpus, int n_classes, int k, SamplerConfig sampler,
                                std::uint64_t seed, SamplingResult* sampling) {
  sampler.n_patches = n_classes;
  sampler.rng_seed = seed;
  SamplingResult res = sample_patches(corpus, sampler, estimate_energy_threshold(corpus, sampler));
  const ColorPCABasis basis =
      res.patches.size() >= 2 ? fit_color_pca(std::span<const SeedPatch>(res.patches)) : ColorPCABasis{};
  SurrogateDataset ds = build_surrogate_dataset(res.patches, k, basis, seed);
  if (sampling) *sampling = std::move(res);
  return ds;
}

Model random_filter_model(const NetworkSpec& spec, Eigen::VectorXf input_mean, std::uint64_t seed, double std) {
  Model m;
  m.spec = spec;
  m.params = init_parameters(spec, std, seed);
  m.input_mean = std::move(input_mean);
  return m;
}

Eigen::VectorXf seed_patch_mean(std::span<const SeedPatch> patches) {
  require(!patches.empty(), "seed_patch_mean: no patches");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(to_planar(patches.front().pixels).size());
  for (const auto& p : patches) sum += to_planar(p.pixels).cast<double>();
  return (sum / static_cast<double>(patches.size())).cast<float>();
}

GridPointResult run_grid_point(std::span<const Image> corpus, const EvalSplit& eval, int n_classes, int k,
                               std::uint64_t seed, const SamplerConfig& sampler, TrainConfig train_cfg,
                               SvmProtocol protocol, bool keep_model) {
  GridPointResult r;
  try {
    const SurrogateDataset ds = make_surrogate(corpus, n_classes, k, sampler, seed);
    train_cfg.rng_seed = seed;
    protocol.svm.rng_seed = seed;
    const NetworkSpec spec = NetworkSpec::exemplar_default(n_classes, sampler.patch_size);
    TrainResult trained = fit(spec, ds, train_cfg);
    r.log = std::move(trained.log);
    if (r.log.diverged) throw NumericalError("training diverged");
    r.val_error = r.log.best_val_error;
    Model model{spec, std::move(trained.params), ds.pixel_mean};
    const auto down = evaluate_features(model, eval, protocol);
    r.accuracy = down.accuracy;
    r.best_C = down.best_C;
    if (keep_model) r.model = std::move(model);
    r.ok = true;
  } catch (const std::exception& e) {
    spdlog::error("grid point ({} classes, {} samples, seed {}) failed: {}", n_classes, k, seed, e.what());
    r.error = e.what();
  }
  return r;
}

GridPointResult run_random_baseline(std::span<const Image> corpus, const EvalSplit& eval, int n_classes,
                                    std::uint64_t seed, const SamplerConfig& sampler, SvmProtocol protocol,
                                    double std) {
  GridPointResult r;
  try {
    SamplerConfig cfg = sampler;
    cfg.n_patches = n_classes;
    cfg.rng_seed = seed;
    const auto patches = sample_patches(corpus, cfg, estimate_energy_threshold(corpus, cfg)).patches;
    protocol.svm.rng_seed = seed;
    const Model model = random_filter_model(NetworkSpec::exemplar_default(n_classes, sampler.patch_size),
                                            seed_patch_mean(patches), seed, std);
    const auto down = evaluate_features(model, eval, protocol);
    r.accuracy = down.accuracy;
    r.best_C = down.best_C;
    r.ok = true;
  } catch (const std::exception& e) {
    spdlog::error("random-filter baseline (seed {}) failed: {}", seed, e.what());
    r.error = e.what();
  }
  return r;
}

}  // namespace exemplar
