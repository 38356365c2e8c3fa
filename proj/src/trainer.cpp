#include "exemplar/trainer.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "exemplar/error.hpp"

namespace exemplar {

void validate(const TrainConfig& cfg) {
  require(cfg.initial_lr > 0.0, "initial_lr must be positive");
  require(cfg.lr_decay_factor > 1.0, "lr_decay_factor must exceed 1");
  require(cfg.momentum >= 0.0 && cfg.momentum < 1.0, "momentum outside [0,1)");
  require(cfg.plateau_patience >= 1, "plateau_patience must be at least 1");
  require(cfg.max_lr_drops >= 0, "max_lr_drops must be non-negative");
  require(cfg.batch_size >= 1, "batch_size must be positive");
  require(cfg.max_epochs >= 1, "max_epochs must be positive");
  require(cfg.validation_fraction > 0.0 && cfg.validation_fraction < 0.5, "validation_fraction outside (0, 0.5)");
  require(cfg.pretrain_classes >= 2, "pretrain_classes must be at least 2");
}

std::vector<EpochRecord> TrainLog::phase(const std::string& name) const {
  std::vector<EpochRecord> out;
  std::copy_if(epochs.begin(), epochs.end(), std::back_inserter(out), [&](const auto& r) { return r.phase == name; });
  return out;
}

namespace {

std::vector<std::vector<Eigen::Index>> indices_by_class(const SurrogateDataset& ds) {
  std::vector<std::vector<Eigen::Index>> by_class(static_cast<std::size_t>(ds.n_classes));
  for (Eigen::Index j = 0; j < ds.size(); ++j) by_class[static_cast<std::size_t>(ds.labels[j])].push_back(j);
  return by_class;
}

// Batch of dataset columns with an optional label remapping.
struct BatchSource {
  const SurrogateDataset& ds;
  const std::vector<int>* relabel = nullptr;  // original label -> new label

  int label(Eigen::Index j) const {
    const int l = ds.labels[j];
    return relabel ? (*relabel)[static_cast<std::size_t>(l)] : l;
  }

  void gather(std::span<const Eigen::Index> idx, Tensor4<float>& x, std::vector<int>& y) const {
    x = Tensor4<float>(static_cast<int>(idx.size()), 3, ds.patch_size, ds.patch_size);
    y.resize(idx.size());
    auto m = x.matrix();
    for (std::size_t k = 0; k < idx.size(); ++k) {
      m.col(static_cast<Eigen::Index>(k)) = ds.samples.col(idx[k]);
      y[k] = label(idx[k]);
    }
  }
};

double error_on(const NetworkSpec& spec, const Parameters<float>& params, const BatchSource& src,
                std::span<const Eigen::Index> indices, int batch_size) {
  if (indices.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t wrong = 0;
  Tensor4<float> x;
  std::vector<int> y;
  for (std::size_t start = 0; start < indices.size(); start += static_cast<std::size_t>(batch_size)) {
    const auto chunk = indices.subspan(start, std::min<std::size_t>(static_cast<std::size_t>(batch_size), indices.size() - start));
    src.gather(chunk, x, y);
    const auto pass = forward(spec, params, std::move(x), Mode::eval);
    const auto pred = predict(pass.output());
    for (std::size_t k = 0; k < pred.size(); ++k) wrong += pred[k] != y[k];
  }
  return static_cast<double>(wrong) / static_cast<double>(indices.size());
}

struct EpochStats {
  double loss = 0.0;
  double error = 0.0;
  bool finite = true;
};

EpochStats run_epoch(const NetworkSpec& spec, Parameters<float>& params, Parameters<float>& velocity,
                     const BatchSource& src, std::vector<Eigen::Index> order, double lr, const TrainConfig& cfg,
                     std::uint64_t epoch_key) {
  Rng shuffle_rng = substream(cfg.rng_seed, Stream::shuffle, epoch_key);
  std::shuffle(order.begin(), order.end(), shuffle_rng);
  Rng dropout_rng = substream(cfg.rng_seed, Stream::dropout, epoch_key);
  EpochStats stats;
  std::size_t wrong = 0;
  double loss_sum = 0.0;
  Tensor4<float> x;
  std::vector<int> y;
  const std::span<const Eigen::Index> all(order);
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
    const auto chunk = all.subspan(start, std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), order.size() - start));
    src.gather(chunk, x, y);
    const auto pass = forward(spec, params, std::move(x), Mode::train, &dropout_rng);
    const double loss = cross_entropy_loss(pass.output(), std::span<const int>(y));
    if (!std::isfinite(loss)) {
      stats.finite = false;
      return stats;
    }
    loss_sum += loss * static_cast<double>(chunk.size());
    const auto pred = predict(pass.output());
    for (std::size_t k = 0; k < pred.size(); ++k) wrong += pred[k] != y[k];
    const auto grads = backward(spec, params, pass, std::span<const int>(y));
    try {
      sgd_step(params, grads, velocity, static_cast<float>(lr), static_cast<float>(cfg.momentum));
    } catch (const NumericalError&) {
      stats.finite = false;
      return stats;
    }
  }
  stats.loss = loss_sum / static_cast<double>(order.size());
  stats.error = static_cast<double>(wrong) / static_cast<double>(order.size());
  return stats;
}

NetworkSpec with_classes(NetworkSpec spec, int n_classes) {
  spec.layers[spec.layers.size() - 2].units = n_classes;
  return spec;
}

}  // namespace

ValidationSplit split_validation(const SurrogateDataset& ds, double fraction, std::uint64_t rng_seed) {
  require(fraction >= 0.0 && fraction < 1.0, "validation fraction outside [0,1)");
  ValidationSplit split;
  Rng rng = substream(rng_seed, Stream::split);
  for (auto& members : indices_by_class(ds)) {
    if (members.empty()) continue;
    std::shuffle(members.begin(), members.end(), rng);
    const auto n_val = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(members.size()) - 1e-9));
    if (n_val >= members.size()) {
      split.validation_is_train = true;
      split.train.insert(split.train.end(), members.begin(), members.end());
      continue;
    }
    split.validation.insert(split.validation.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_val));
    split.train.insert(split.train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_val), members.end());
  }
  if (split.validation_is_train) {
    spdlog::warn("some classes are too small to hold out validation samples; validating on training data");
    split.validation = split.train;
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  return split;
}

Parameters<float> initial_parameters(const NetworkSpec& spec, const TrainConfig& cfg) {
  return cfg.init == InitScheme::fixed_std ? init_parameters(spec, cfg.init_std, cfg.rng_seed)
                                           : init_parameters_fan_in(spec, cfg.init_gain, cfg.rng_seed);
}

double classification_error(const NetworkSpec& spec, const Parameters<float>& params, const SurrogateDataset& ds,
                            std::span<const Eigen::Index> indices, int batch_size) {
  return error_on(spec, params, BatchSource{ds}, indices, batch_size);
}

TrainResult train(const NetworkSpec& spec, const SurrogateDataset& ds, const TrainConfig& cfg,
                  const Parameters<float>* init, const CheckpointHook& hook) {
  validate(spec);
  validate(cfg);
  require(ds.size() > 0, "train: empty dataset");
  require(spec.n_classes() == ds.n_classes, "train: network output width differs from class count");
  require(spec.input == Shape{3, ds.patch_size, ds.patch_size}, "train: network input differs from patch shape");

  const ValidationSplit split = split_validation(ds, cfg.validation_fraction, cfg.rng_seed);
  const BatchSource src{ds};

  TrainResult result;
  result.params = init ? *init : initial_parameters(spec, cfg);
  result.params.version = 0;
  Parameters<float> velocity = result.params.zeros_like();
  Parameters<float> best = result.params;
  TrainLog& log = result.log;

  int drops = 0;
  int since_best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const double lr = cfg.initial_lr * std::pow(cfg.lr_decay_factor, -drops);
    const auto stats = run_epoch(spec, result.params, velocity, src, split.train, lr, cfg, static_cast<std::uint64_t>(epoch));
    if (!stats.finite) {
      spdlog::error("training diverged at epoch {} (non-finite loss or gradient)", epoch);
      log.diverged = true;
      break;
    }
    const double val = error_on(spec, result.params, src, split.validation, 256);
    log.epochs.push_back({"train", epoch, lr, stats.loss, stats.error, val});
    spdlog::debug("epoch {} lr {:.6g} loss {:.4f} train_err {:.4f} val_err {:.4f}", epoch, lr, stats.loss, stats.error, val);
    if (val < best_val) {
      best_val = val;
      best = result.params;
      log.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.plateau_patience) {
      if (drops == cfg.max_lr_drops) break;
      ++drops;
      log.lr_drop_epochs.push_back(epoch);
      result.params = best;
      velocity = result.params.zeros_like();
      since_best = 0;
      if (hook) hook(best, "drop" + std::to_string(drops));
    }
  }
  result.params = std::move(best);
  log.best_val_error = std::isfinite(best_val) ? best_val : 1.0;
  if (hook) hook(result.params, "final");
  return result;
}

PretrainResult pretrain(const NetworkSpec& spec, const SurrogateDataset& ds, const TrainConfig& cfg) {
  validate(spec);
  validate(cfg);
  PretrainResult result;
  if (ds.n_classes <= cfg.pretrain_classes) {
    result.params = initial_parameters(spec, cfg);
    return result;
  }
  result.ran = true;

  std::vector<int> classes(static_cast<std::size_t>(ds.n_classes));
  std::iota(classes.begin(), classes.end(), 0);
  Rng rng = substream(cfg.rng_seed, Stream::pretrain);
  std::shuffle(classes.begin(), classes.end(), rng);
  classes.resize(static_cast<std::size_t>(cfg.pretrain_classes));
  std::sort(classes.begin(), classes.end());

  std::vector<int> relabel(static_cast<std::size_t>(ds.n_classes), -1);
  for (std::size_t k = 0; k < classes.size(); ++k) relabel[static_cast<std::size_t>(classes[k])] = static_cast<int>(k);
  std::vector<Eigen::Index> subset;
  for (Eigen::Index j = 0; j < ds.size(); ++j)
    if (relabel[static_cast<std::size_t>(ds.labels[j])] >= 0) subset.push_back(j);

  const NetworkSpec small = with_classes(spec, cfg.pretrain_classes);
  Parameters<float> params = initial_parameters(small, cfg);
  Parameters<float> velocity = params.zeros_like();
  const BatchSource src{ds, &relabel};
  const double trigger = (1.0 - 1.0 / cfg.pretrain_classes) - cfg.pretrain_margin;
  for (int epoch = 1; epoch <= cfg.pretrain_max_epochs; ++epoch) {
    const auto stats = run_epoch(small, params, velocity, src, subset, cfg.initial_lr, cfg,
                                 (std::uint64_t{1} << 32) + static_cast<std::uint64_t>(epoch));
    if (!stats.finite) {
      spdlog::error("pretraining diverged at epoch {}", epoch);
      break;
    }
    result.log.push_back({"pretrain", epoch, cfg.initial_lr, stats.loss, stats.error, std::numeric_limits<double>::quiet_NaN()});
    if (stats.error < trigger) {
      result.triggered = true;
      break;
    }
  }
  if (!result.triggered) spdlog::warn("pretraining did not reach its trigger; transferring weights anyway");

  // Body transfers, classifier is re-drawn at full width.
  Parameters<float> full = initial_parameters(spec, cfg);
  const std::size_t classifier = spec.layers.size() - 2;
  for (std::size_t i = 0; i < classifier; ++i) full.layers[i] = params.layers[i];
  result.params = std::move(full);
  return result;
}

TrainResult fit(const NetworkSpec& spec, const SurrogateDataset& ds, const TrainConfig& cfg, const CheckpointHook& hook) {
  if (!cfg.pretrain || ds.n_classes <= cfg.pretrain_classes) return train(spec, ds, cfg, nullptr, hook);
  PretrainResult pre = pretrain(spec, ds, cfg);
  TrainResult result = train(spec, ds, cfg, &pre.params, hook);
  result.log.pretrain_ran = pre.ran;
  result.log.pretrain_triggered = pre.triggered;
  result.log.epochs.insert(result.log.epochs.begin(), pre.log.begin(), pre.log.end());
  return result;
}

std::optional<int> epochs_to_error_below(const TrainLog& log, const std::string& phase, double threshold) {
  for (const auto& r : log.epochs)
    if (r.phase == phase && r.train_error < threshold) return r.epoch;
  return std::nullopt;
}

void write_train_log_csv(const std::filesystem::path& path, const TrainLog& log) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot write " + path.string());
  os << "epoch,phase,lr,train_loss,train_err,val_err\n";
  os.precision(10);
  for (const auto& r : log.epochs)
    os << r.epoch << ',' << r.phase << ',' << r.lr << ',' << r.train_loss << ',' << r.train_error << ','
       << (std::isnan(r.val_error) ? std::string() : std::to_string(r.val_error)) << '\n';
}

}  // namespace exemplar
