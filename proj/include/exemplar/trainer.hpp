#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "exemplar/augment.hpp"
#include "exemplar/net.hpp"

namespace exemplar {

enum class InitScheme { fixed_std, fan_in };

struct TrainConfig {
  double initial_lr = 0.01;
  double lr_decay_factor = 3.0;
  double momentum = 0.9;
  int plateau_patience = 3;
  int max_lr_drops = 4;
  int batch_size = 128;
  int max_epochs = 100;
  double validation_fraction = 0.1;

  bool pretrain = true;
  int pretrain_classes = 100;
  double pretrain_margin = 0.05;  // trigger once train error < chance - margin
  int pretrain_max_epochs = 50;

  InitScheme init = InitScheme::fan_in;
  double init_std = 0.001;  // fixed_std
  double init_gain = 1.0;   // fan_in

  std::uint64_t rng_seed = 0;
};

void validate(const TrainConfig& cfg);

struct EpochRecord {
  std::string phase;  // "pretrain" or "train"
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double train_error = 0.0;
  double val_error = 0.0;  // NaN when not measured
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  std::vector<int> lr_drop_epochs;  // "train" epochs after which the rate dropped
  bool diverged = false;
  bool pretrain_ran = false;
  bool pretrain_triggered = false;
  double best_val_error = 1.0;
  int best_epoch = -1;

  std::vector<EpochRecord> phase(const std::string& name) const;
};

struct TrainResult {
  Parameters<float> params;
  TrainLog log;
};

struct ValidationSplit {
  std::vector<Eigen::Index> train;
  std::vector<Eigen::Index> validation;
  bool validation_is_train = false;
};

/// Stratified: ceil(fraction * count) samples of every class go to validation.
ValidationSplit split_validation(const SurrogateDataset& ds, double fraction, std::uint64_t rng_seed);

Parameters<float> initial_parameters(const NetworkSpec& spec, const TrainConfig& cfg);

/// Called with a tag ("drop1", ..., "final") whenever a checkpoint is due.
using CheckpointHook = std::function<void(const Parameters<float>&, const std::string&)>;

/// Mini-batch SGD with plateau-triggered learning-rate decay. On each drop
/// the best parameters so far are restored; returns the best parameters.
TrainResult train(const NetworkSpec& spec, const SurrogateDataset& ds, const TrainConfig& cfg,
                  const Parameters<float>* init = nullptr, const CheckpointHook& hook = {});

struct PretrainResult {
  Parameters<float> params;  // full-width network; final classifier re-initialized
  std::vector<EpochRecord> log;
  bool ran = false;
  bool triggered = false;
};

/// Warm-up on pretrain_classes random classes at fixed lr until the training
/// error falls below chance - margin. Skipped when the dataset is not larger.
PretrainResult pretrain(const NetworkSpec& spec, const SurrogateDataset& ds, const TrainConfig& cfg);

/// pretrain (when enabled and applicable) followed by train.
TrainResult fit(const NetworkSpec& spec, const SurrogateDataset& ds, const TrainConfig& cfg,
                const CheckpointHook& hook = {});

/// Fraction of misclassified samples among `indices` (eval mode).
double classification_error(const NetworkSpec& spec, const Parameters<float>& params, const SurrogateDataset& ds,
                            std::span<const Eigen::Index> indices, int batch_size = 256);

/// First "train" epoch (1-based) whose training error is below `threshold`.
std::optional<int> epochs_to_error_below(const TrainLog& log, const std::string& phase, double threshold);

/// epoch,phase,lr,train_loss,train_err,val_err
void write_train_log_csv(const std::filesystem::path& path, const TrainLog& log);

}  // namespace exemplar
