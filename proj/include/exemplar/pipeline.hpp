#pragma once

// End-to-end helpers shared by the command-line tool and the acceptance
// suite: surrogate construction, training, frozen-feature SVM evaluation.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "exemplar/augment.hpp"
#include "exemplar/features.hpp"
#include "exemplar/sampler.hpp"
#include "exemplar/svm.hpp"
#include "exemplar/trainer.hpp"

namespace exemplar {

struct LabeledSet {
  std::vector<Image> images;
  std::vector<int> labels;
};

struct EvalSplit {
  LabeledSet train;
  LabeledSet test;
};

/// Keeps images whose label is in `classes` (all labeled ones when empty),
/// at most `per_class_cap` per class (no cap when <= 0), in input order.
LabeledSet select_classes(std::span<const LabeledImage> images, std::span<const int> classes, int per_class_cap);

struct SvmProtocol {
  SvmConfig svm;
  std::vector<double> C_grid = default_C_grid();
  int folds = 5;
};

struct DownstreamResult {
  double accuracy = 0.0;
  double best_C = 0.0;
};

/// Features of both splits, C by cross-validation on train, accuracy on test.
DownstreamResult evaluate_features(const Model& model, const EvalSplit& eval, const SvmProtocol& protocol);

/// n_classes seed patches (seeded by `seed`) and k samples per class.
SurrogateDataset make_surrogate(std::span<const Image> corpus, int n_classes, int k, SamplerConfig sampler,
                                std::uint64_t seed, SamplingResult* sampling = nullptr);

/// Untrained network with N(0, std^2) weights and zero biases.
Model random_filter_model(const NetworkSpec& spec, Eigen::VectorXf input_mean, std::uint64_t seed, double std = 0.001);

/// Per-pixel planar mean of the seed patches.
Eigen::VectorXf seed_patch_mean(std::span<const SeedPatch> patches);

struct GridPointResult {
  bool ok = false;
  std::string error;
  double val_error = std::numeric_limits<double>::quiet_NaN();
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  double best_C = std::numeric_limits<double>::quiet_NaN();
  TrainLog log;
  std::optional<Model> model;
};

/// Surrogate data, fit (pretraining when applicable), downstream evaluation.
/// Failures are reported in the result instead of thrown.
GridPointResult run_grid_point(std::span<const Image> corpus, const EvalSplit& eval, int n_classes, int k,
                               std::uint64_t seed, const SamplerConfig& sampler, TrainConfig train_cfg,
                               SvmProtocol protocol, bool keep_model = false);

/// Zero samples per class: random filters, mean taken from n_classes seed patches.
GridPointResult run_random_baseline(std::span<const Image> corpus, const EvalSplit& eval, int n_classes,
                                    std::uint64_t seed, const SamplerConfig& sampler, SvmProtocol protocol,
                                    double std = 0.001);

}  // namespace exemplar
