#include "cli.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>

#include "exemplar/augment.hpp"
#include "exemplar/error.hpp"
#include "exemplar/features.hpp"
#include "exemplar/pipeline.hpp"
#include "exemplar/sampler.hpp"
#include "exemplar/svm.hpp"
#include "exemplar/synth.hpp"
#include "exemplar/trainer.hpp"
#include "manifest.hpp"

#ifndef EXEMPLAR_VERSION
#define EXEMPLAR_VERSION "0.0.0"
#endif

namespace exemplar::cli {

namespace fs = std::filesystem;

namespace {

const char* const kSubcommands[] = {"sample", "augment", "train", "extract", "svm", "eval", "experiment", "baseline"};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const std::string& what) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) {
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !is.eof()) throw ContractError("bad value '" + item + "' in " + what);
    out.push_back(v);
  }
  return out;
}

// Config items become "--key=value" arguments placed right after the
// subcommand, ahead of the user's flags; options take the last value given,
// so flags override the file.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::optional<std::string> path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (!path) return args;
  std::ifstream is(*path);
  if (!is) throw FormatError("cannot read config file " + *path);
  const auto items = CLI::ConfigINI().from_config(is);

  std::size_t sub = 0;
  for (std::size_t i = 1; i < args.size() && sub == 0; ++i)
    for (const char* name : kSubcommands)
      if (args[i] == name) sub = i;
  if (sub == 0) return args;

  std::vector<std::string> injected;
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--" || item.name == "config") continue;
    if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == args[sub])) continue;
    std::string key = item.name;
    std::replace(key.begin(), key.end(), '_', '-');
    std::string value;
    for (std::size_t k = 0; k < item.inputs.size(); ++k) value += (k ? "," : "") + item.inputs[k];
    injected.push_back("--" + key + "=" + value);
  }
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub) + 1, injected.begin(), injected.end());
  return args;
}

void require_input(const fs::path& p) {
  if (!fs::exists(p)) throw FormatError("missing input: " + p.string());
}

fs::path with_suffix(fs::path p, const std::string& suffix) {
  p += suffix;
  return p;
}

// Canonical "key=value" dump of every option of a subcommand, defaults included.
std::string config_text(const CLI::App* sub) {
  std::vector<std::string> lines;
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config") continue;
    std::string value = opt->count() > 0 ? opt->as<std::string>() : opt->get_default_str();
    lines.push_back(name + "=" + value);
  }
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Shared option groups

struct CorpusOptions {
  std::string path;
  std::string format = "image-dir";
  int synthetic = 0;
  int synthetic_size = 96;
  std::uint64_t synthetic_seed = 1;

  void add(CLI::App* app) {
    app->add_option("--corpus", path, "Unlabeled image source (file or directory)");
    app->add_option("--corpus-format", format, "cifar10-binary | stl10-binary | image-dir")->capture_default_str();
    app->add_option("--synthetic-corpus", synthetic, "Use N procedural textured images instead of --corpus")
        ->capture_default_str();
    app->add_option("--synthetic-size", synthetic_size, "Side of procedural corpus images")->capture_default_str();
    app->add_option("--synthetic-seed", synthetic_seed, "Seed of the procedural corpus")->capture_default_str();
  }

  std::vector<Image> load() const {
    if (synthetic > 0) return synth::textured_corpus(synthetic, synthetic_size, synthetic_size, synthetic_seed);
    if (path.empty()) throw ContractError("either --corpus or --synthetic-corpus is required");
    require_input(path);
    std::vector<Image> out;
    for (auto& li : load_dataset_images(path, parse_dataset_format(format))) out.push_back(std::move(li.image));
    return out;
  }

  std::vector<fs::path> inputs() const { return synthetic > 0 || path.empty() ? std::vector<fs::path>{} : std::vector<fs::path>{path}; }
};

struct LabeledOptions {
  std::string prefix;
  std::string path;
  std::string format = "cifar10-binary";
  std::string classes;  // comma list, empty = all
  int per_class = 0;    // 0 = all
  int synthetic_per_class = 0;
  int synthetic_side = 32;
  std::uint64_t synthetic_seed = 7;

  void add(CLI::App* app, const std::string& pre, const std::string& what, std::uint64_t default_seed = 7) {
    prefix = pre;
    synthetic_seed = default_seed;
    app->add_option("--" + pre, path, what + " labeled images (file or directory)");
    app->add_option("--" + pre + "-format", format, "cifar10-binary | stl10-binary | image-dir")->capture_default_str();
    app->add_option("--" + pre + "-classes", classes, "Comma-separated labels to keep (default all)");
    app->add_option("--" + pre + "-per-class", per_class, "Keep at most N images per class (0 = all)")->capture_default_str();
    app->add_option("--" + pre + "-synthetic", synthetic_per_class, "Use N procedural shape images per class")
        ->capture_default_str();
    app->add_option("--" + pre + "-synthetic-side", synthetic_side, "Side of procedural shape images")->capture_default_str();
    app->add_option("--" + pre + "-synthetic-seed", synthetic_seed, "Seed of the procedural shape images")
        ->capture_default_str();
  }

  bool given() const { return synthetic_per_class > 0 || !path.empty(); }

  LabeledSet load() const {
    std::vector<LabeledImage> raw;
    if (synthetic_per_class > 0) {
      raw = synth::shapes_dataset(synthetic_per_class, synthetic_side, synthetic_seed);
    } else {
      if (path.empty()) throw ContractError("--" + prefix + " or --" + prefix + "-synthetic is required");
      require_input(path);
      raw = load_dataset_images(path, parse_dataset_format(format));
    }
    const auto keep = parse_list<int>(classes, "--" + prefix + "-classes");
    LabeledSet set = select_classes(raw, keep, per_class);
    if (set.images.empty()) throw FormatError("no labeled images selected from --" + prefix);
    return set;
  }

  std::vector<fs::path> inputs() const {
    return synthetic_per_class > 0 || path.empty() ? std::vector<fs::path>{} : std::vector<fs::path>{path};
  }
};

struct SamplerOptions {
  SamplerConfig cfg;
  void add(CLI::App* app) {
    app->add_option("--patch-size", cfg.patch_size, "Seed patch side")->capture_default_str();
    app->add_option("--scale-min", cfg.scale_min, "Smallest sampled square, in patch sides")->capture_default_str();
    app->add_option("--scale-max", cfg.scale_max, "Largest sampled square, in patch sides")->capture_default_str();
    app->add_option("--energy-percentile", cfg.energy_percentile, "Gradient-energy rejection percentile")
        ->capture_default_str();
    app->add_option("--max-rejections", cfg.max_rejections_per_patch, "Rejection budget per patch")->capture_default_str();
    app->add_option("--threshold-candidates", cfg.threshold_candidates, "Candidates used to estimate the threshold")
        ->capture_default_str();
  }
};

struct TrainOptions {
  TrainConfig cfg;
  std::string init = "fan-in";
  void add(CLI::App* app) {
    app->add_option("--lr", cfg.initial_lr, "Initial learning rate")->capture_default_str();
    app->add_option("--lr-decay", cfg.lr_decay_factor, "Learning-rate divisor on plateau")->capture_default_str();
    app->add_option("--momentum", cfg.momentum, "SGD momentum")->capture_default_str();
    app->add_option("--patience", cfg.plateau_patience, "Epochs without a new best validation error")->capture_default_str();
    app->add_option("--max-lr-drops", cfg.max_lr_drops, "Stop after this many rate drops")->capture_default_str();
    app->add_option("--batch-size", cfg.batch_size, "Mini-batch size")->capture_default_str();
    app->add_option("--max-epochs", cfg.max_epochs, "Epoch cap of the main phase")->capture_default_str();
    app->add_option("--val-fraction", cfg.validation_fraction, "Per-class validation fraction")->capture_default_str();
    app->add_option("--pretrain", cfg.pretrain, "Subset pre-training when classes exceed --pretrain-classes")
        ->capture_default_str();
    app->add_option("--pretrain-classes", cfg.pretrain_classes, "Classes used for pre-training")->capture_default_str();
    app->add_option("--pretrain-margin", cfg.pretrain_margin, "Pre-training stops below chance error minus this")
        ->capture_default_str();
    app->add_option("--pretrain-max-epochs", cfg.pretrain_max_epochs, "Epoch cap of pre-training")->capture_default_str();
    app->add_option("--init", init, "fan-in | fixed")->capture_default_str()->check(CLI::IsMember({"fan-in", "fixed"}));
    app->add_option("--init-std", cfg.init_std, "Weight std for --init fixed")->capture_default_str();
    app->add_option("--init-gain", cfg.init_gain, "Gain for --init fan-in")->capture_default_str();
  }
  TrainConfig resolved(std::uint64_t seed) const {
    TrainConfig c = cfg;
    c.init = init == "fixed" ? InitScheme::fixed_std : InitScheme::fan_in;
    c.rng_seed = seed;
    return c;
  }
};

struct SvmOptions {
  SvmConfig cfg;
  std::string grid = "0.001,0.01,0.1,1,10,100,1000";
  int folds = 5;
  void add(CLI::App* app) {
    app->add_option("--c-grid", grid, "Comma-separated C values for cross-validation")->capture_default_str();
    app->add_option("--folds", folds, "Cross-validation folds")->capture_default_str();
    app->add_option("--svm-max-epochs", cfg.max_epochs, "Dual coordinate-descent epoch cap")->capture_default_str();
    app->add_option("--svm-tolerance", cfg.tolerance, "Dual solver stopping tolerance")->capture_default_str();
  }
  SvmProtocol protocol(std::uint64_t seed) const {
    SvmProtocol p;
    p.svm = cfg;
    p.svm.rng_seed = seed;
    p.C_grid = parse_list<double>(grid, "--c-grid");
    p.folds = folds;
    require(!p.C_grid.empty(), "--c-grid is empty");
    return p;
  }
};

// ---------------------------------------------------------------------------
// Experiment CSV

constexpr const char* kGridHeader =
    "run_id,n_classes,k_samples,repeat,seed,status,val_error_surrogate,downstream_accuracy,accuracy_mean,accuracy_std,"
    "best_C";

std::string make_run_id(const std::string& config) {
  const auto now = std::chrono::system_clock::now().time_since_epoch().count();
  return sha256_hex(config + std::to_string(now) + std::to_string(::getpid())).substr(0, 12);
}

std::string fmt_num(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

struct GridRow {
  int n_classes = 0;
  int k = 0;
  int repeat = 0;
  std::uint64_t seed = 0;
  GridPointResult result;
};

void append_rows(const fs::path& csv, const std::string& run_id, const std::vector<GridRow>& rows) {
  const bool fresh = !fs::exists(csv) || fs::file_size(csv) == 0;
  std::ofstream os(csv, std::ios::app);
  if (!os) throw FormatError("cannot write " + csv.string());
  if (fresh) os << kGridHeader << '\n';
  std::vector<double> acc;
  for (const auto& r : rows)
    if (r.result.ok) acc.push_back(r.result.accuracy);
  double mean = NAN, sd = NAN;
  if (!acc.empty()) {
    mean = std::accumulate(acc.begin(), acc.end(), 0.0) / acc.size();
    double ss = 0;
    for (double a : acc) ss += (a - mean) * (a - mean);
    sd = acc.size() > 1 ? std::sqrt(ss / (acc.size() - 1)) : 0.0;
  }
  for (const auto& r : rows)
    os << run_id << ',' << r.n_classes << ',' << r.k << ',' << r.repeat << ',' << r.seed << ','
       << (r.result.ok ? "ok" : "failed") << ',' << fmt_num(r.result.val_error) << ',' << fmt_num(r.result.accuracy) << ','
       << fmt_num(mean) << ',' << fmt_num(sd) << ',' << fmt_num(r.result.best_C) << '\n';
}

EvalSplit load_eval(const LabeledOptions& train, const LabeledOptions& test) {
  EvalSplit e{train.load(), test.load()};
  spdlog::info("evaluation set: {} train / {} test images", e.train.images.size(), e.test.images.size());
  return e;
}

// ---------------------------------------------------------------------------

struct Common {
  std::uint64_t seed = 0;
  std::string config;
  void add(CLI::App* app) {
    app->add_option("--seed", seed, "Master random seed")->capture_default_str();
    app->add_option("--config", config, "key=value file; command-line flags take precedence");
  }
};

int finish(const Manifest& m, const fs::path& out, OutputGuard& guard) {
  guard.add(Manifest::path_for(out));
  m.write(out);
  guard.commit();
  spdlog::info("{}: wrote {}", m.stage, out.string());
  return ExitCode::ok;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Exemplar surrogate-class feature learning pipeline", "exemplar"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("exemplar ") + EXEMPLAR_VERSION);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace | debug | info | warn | error")->capture_default_str();

  // sample
  auto* sample = app.add_subcommand("sample", "Sample seed patches from an unlabeled corpus");
  Common sample_common;
  CorpusOptions sample_corpus;
  SamplerOptions sample_opts;
  std::string sample_out;
  sample_common.add(sample);
  sample_corpus.add(sample);
  sample_opts.add(sample);
  sample->add_option("--n-patches", sample_opts.cfg.n_patches, "Number of seed patches (surrogate classes)")
      ->capture_default_str();
  sample->add_option("--out", sample_out, "Patch file")->required();

  // augment
  auto* augment = app.add_subcommand("augment", "Build the surrogate dataset from seed patches");
  Common augment_common;
  std::string augment_in, augment_out;
  int augment_k = 32;
  augment_common.add(augment);
  augment->add_option("--patches", augment_in, "Patch file")->required();
  augment->add_option("--k", augment_k, "Samples per surrogate class")->capture_default_str();
  augment->add_option("--out", augment_out, "Dataset file")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the network on a surrogate dataset");
  Common train_common;
  TrainOptions train_opts;
  std::string train_in, train_out, train_log;
  bool train_checkpoints = true;
  train_common.add(train_cmd);
  train_opts.add(train_cmd);
  train_cmd->add_option("--dataset", train_in, "Dataset file")->required();
  train_cmd->add_option("--out", train_out, "Model checkpoint")->required();
  train_cmd->add_option("--log", train_log, "Training log CSV (default <out>.log.csv)");
  train_cmd->add_option("--checkpoints", train_checkpoints, "Also write <out>.dropN at every rate drop")
      ->capture_default_str();

  // extract
  auto* extract = app.add_subcommand("extract", "Compute pyramid descriptors of labeled images");
  Common extract_common;
  LabeledOptions extract_images;
  std::string extract_model, extract_out, extract_csv;
  extract_common.add(extract);
  extract_images.add(extract, "images", "Input");
  extract->add_option("--model", extract_model, "Model checkpoint")->required();
  extract->add_option("--out", extract_out, "Feature dump")->required();
  extract->add_option("--csv", extract_csv, "Also write features as CSV");

  // svm
  auto* svm_cmd = app.add_subcommand("svm", "Train a one-vs-rest linear SVM on a feature dump");
  Common svm_common;
  SvmOptions svm_opts;
  std::string svm_in, svm_out;
  double svm_C = 0.0;
  svm_common.add(svm_cmd);
  svm_opts.add(svm_cmd);
  svm_cmd->add_option("--features", svm_in, "Feature dump with labels")->required();
  svm_cmd->add_option("--C", svm_C, "Fixed C; skips cross-validation when > 0")->capture_default_str();
  svm_cmd->add_option("--out", svm_out, "SVM model file")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Score an SVM model on a feature dump");
  Common eval_common;
  std::string eval_model, eval_in, eval_out;
  eval_common.add(eval_cmd);
  eval_cmd->add_option("--model", eval_model, "SVM model file")->required();
  eval_cmd->add_option("--features", eval_in, "Feature dump with labels")->required();
  eval_cmd->add_option("--out", eval_out, "Metrics CSV")->required();

  // experiment
  auto* experiment = app.add_subcommand("experiment", "Grid over class counts and samples per class");
  Common exp_common;
  CorpusOptions exp_corpus;
  SamplerOptions exp_sampler;
  TrainOptions exp_train;
  SvmOptions exp_svm;
  LabeledOptions exp_eval_train, exp_eval_test;
  std::string exp_classes = "50,100,250,500,1000", exp_samples = "1,4,8,16,32,64", exp_out;
  int exp_repeats = 3;
  bool exp_baseline = false;
  exp_common.add(experiment);
  exp_corpus.add(experiment);
  exp_sampler.add(experiment);
  exp_train.add(experiment);
  exp_svm.add(experiment);
  exp_eval_train.add(experiment, "eval-train", "Downstream training");
  exp_eval_test.add(experiment, "eval-test", "Downstream test", 8);
  experiment->add_option("--classes", exp_classes, "Comma-separated surrogate class counts")->capture_default_str();
  experiment->add_option("--samples", exp_samples, "Comma-separated samples per class")->capture_default_str();
  experiment->add_option("--repeats", exp_repeats, "Seeds per grid point (seed, seed+1, ...)")->capture_default_str();
  experiment->add_option("--baseline", exp_baseline, "Add random-filter rows (0 samples per class)")->capture_default_str();
  experiment->add_option("--out", exp_out, "Results CSV (appended)")->required();

  // baseline
  auto* baseline = app.add_subcommand("baseline", "Random-filter network evaluated like a trained one");
  Common base_common;
  CorpusOptions base_corpus;
  SamplerOptions base_sampler;
  SvmOptions base_svm;
  LabeledOptions base_eval_train, base_eval_test;
  int base_classes = 100, base_repeats = 1;
  double base_std = 0.001;
  std::string base_out, base_model_out;
  base_common.add(baseline);
  base_corpus.add(baseline);
  base_sampler.add(baseline);
  base_svm.add(baseline);
  base_eval_train.add(baseline, "eval-train", "Downstream training");
  base_eval_test.add(baseline, "eval-test", "Downstream test", 8);
  baseline->add_option("--classes", base_classes, "Seed patches used for the input mean")->capture_default_str();
  baseline->add_option("--repeats", base_repeats, "Seeds (seed, seed+1, ...)")->capture_default_str();
  baseline->add_option("--std", base_std, "Weight standard deviation")->capture_default_str();
  baseline->add_option("--out", base_out, "Results CSV (appended)")->required();
  baseline->add_option("--model-out", base_model_out, "Also save the first random-filter network");

  try {
    auto args = expand_config(argc, argv);
    std::vector<char*> cargs;
    for (auto& a : args) cargs.push_back(a.data());
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ExitCode::ok : ExitCode::usage;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ExitCode::data_error;
  }

  spdlog::set_default_logger(spdlog::stderr_color_mt("exemplar"));
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    OutputGuard guard;

    if (*sample) {
      const auto corpus = sample_corpus.load();
      SamplerConfig cfg = sample_opts.cfg;
      cfg.rng_seed = sample_common.seed;
      const double threshold = estimate_energy_threshold(corpus, cfg);
      const auto res = sample_patches(corpus, cfg, threshold);
      save_patches(guard.add(sample_out), res.patches);
      Manifest m{"sample", cfg.rng_seed, config_text(sample), sample_corpus.inputs(), {sample_out}};
      m.metrics = {{"threshold", res.threshold}, {"fallback_count", res.fallback_count}, {"patches", res.patches.size()}};
      return finish(m, sample_out, guard);
    }

    if (*augment) {
      require_input(augment_in);
      const auto patches = load_patches(augment_in);
      require(patches.size() >= 1, "patch file is empty");
      const ColorPCABasis basis =
          patches.size() >= 2 ? fit_color_pca(std::span<const SeedPatch>(patches)) : ColorPCABasis{};
      const auto ds = build_surrogate_dataset(patches, augment_k, basis, augment_common.seed);
      save_dataset(guard.add(augment_out), ds);
      guard.add(specs_sidecar(augment_out));
      Manifest m{"augment", augment_common.seed, config_text(augment), {augment_in}, {augment_out, specs_sidecar(augment_out)}};
      m.metrics = {{"n_classes", ds.n_classes}, {"samples", ds.size()}};
      return finish(m, augment_out, guard);
    }

    if (*train_cmd) {
      require_input(train_in);
      const auto ds = load_dataset(train_in);
      const TrainConfig cfg = train_opts.resolved(train_common.seed);
      const NetworkSpec spec = NetworkSpec::exemplar_default(ds.n_classes, ds.patch_size);
      std::vector<fs::path> artifacts{train_out};
      CheckpointHook hook;
      if (train_checkpoints)
        hook = [&](const Parameters<float>& p, const std::string& tag) {
          if (tag == "final") return;
          const fs::path cp = guard.add(with_suffix(train_out, "." + tag));
          save_model(cp, Model{spec, p, ds.pixel_mean});
          artifacts.push_back(cp);
        };
      const TrainResult r = fit(spec, ds, cfg, hook);
      const fs::path log_path = train_log.empty() ? with_suffix(train_out, ".log.csv") : fs::path(train_log);
      write_train_log_csv(log_path, r.log);
      if (r.log.diverged) {
        std::cerr << "error: training diverged; log written to " << log_path << '\n';
        return ExitCode::numerical_failure;
      }
      save_model(guard.add(train_out), Model{spec, r.params, ds.pixel_mean});
      artifacts.push_back(log_path);
      Manifest m{"train", cfg.rng_seed, config_text(train_cmd), {train_in}, artifacts};
      m.metrics = {{"best_val_error", r.log.best_val_error},
                   {"best_epoch", r.log.best_epoch},
                   {"lr_drops", r.log.lr_drop_epochs.size()},
                   {"pretrain_ran", r.log.pretrain_ran},
                   {"pretrain_triggered", r.log.pretrain_triggered}};
      return finish(m, train_out, guard);
    }

    if (*extract) {
      require_input(extract_model);
      const Model model = load_model(extract_model);
      const LabeledSet set = extract_images.load();
      const FeatureMatrix f = extract_batch(model, set.images);
      save_features(guard.add(extract_out), f, set.labels);
      guard.add(with_suffix(extract_out, ".labels"));
      std::vector<fs::path> artifacts{extract_out, with_suffix(extract_out, ".labels")};
      if (!extract_csv.empty()) {
        write_features_csv(guard.add(extract_csv), f, set.labels);
        artifacts.push_back(extract_csv);
      }
      auto inputs = extract_images.inputs();
      inputs.push_back(extract_model);
      Manifest m{"extract", extract_common.seed, config_text(extract), inputs, artifacts};
      m.metrics = {{"count", f.rows()}, {"dim", f.cols()}};
      return finish(m, extract_out, guard);
    }

    if (*svm_cmd) {
      require_input(svm_in);
      std::vector<int> labels;
      const Eigen::MatrixXd x = load_features(svm_in, &labels).cast<double>();
      if (std::find(labels.begin(), labels.end(), -1) != labels.end()) throw FormatError("feature dump has unlabeled rows");
      const SvmProtocol p = svm_opts.protocol(svm_common.seed);
      SvmConfig cfg = p.svm;
      nlohmann::json metrics;
      if (svm_C > 0) {
        cfg.C = svm_C;
      } else {
        const auto cv = cross_validate_C(x, labels, p.C_grid, p.folds, p.svm);
        cfg.C = cv.best_C;
        metrics["cv_folds"] = cv.folds_used;
        metrics["cv_accuracy"] = cv.mean_accuracy;
      }
      const LinearModel model = train_svm(x, labels, cfg);
      save_svm(guard.add(svm_out), model);
      metrics["C"] = cfg.C;
      metrics["train_accuracy"] = evaluate(model, x, labels);
      Manifest m{"svm", svm_common.seed, config_text(svm_cmd), {svm_in, with_suffix(svm_in, ".labels")}, {svm_out}};
      m.metrics = metrics;
      return finish(m, svm_out, guard);
    }

    if (*eval_cmd) {
      require_input(eval_model);
      require_input(eval_in);
      const LinearModel model = load_svm(eval_model);
      std::vector<int> labels;
      const Eigen::MatrixXd x = load_features(eval_in, &labels).cast<double>();
      if (x.cols() != model.weights.rows()) throw FormatError("feature dimension differs from the SVM model");
      const double acc = evaluate(model, x, labels);
      {
        std::ofstream os(guard.add(eval_out));
        if (!os) throw FormatError("cannot write " + eval_out);
        os.precision(10);
        os << "accuracy,n,correct\n" << acc << ',' << labels.size() << ',' << std::lround(acc * labels.size()) << '\n';
      }
      std::cout << "accuracy " << acc << '\n';
      Manifest m{"eval", eval_common.seed, config_text(eval_cmd), {eval_model, eval_in}, {eval_out}};
      m.metrics = {{"accuracy", acc}, {"n", labels.size()}};
      return finish(m, eval_out, guard);
    }

    if (*experiment) {
      const auto classes = parse_list<int>(exp_classes, "--classes");
      const auto samples = parse_list<int>(exp_samples, "--samples");
      require(!classes.empty() && !samples.empty(), "experiment grid is empty");
      for (int v : classes) require(v > 0, "class counts must be positive");
      for (int v : samples) require(v > 0, "samples per class must be positive");
      require(exp_repeats >= 1, "--repeats must be positive");
      for (int n : classes)
        for (int k : samples)
          if (static_cast<long long>(n) * k > 200000)
            spdlog::warn("grid point {} x {} is far beyond desk scale and will run for a long time", n, k);
      const auto corpus = exp_corpus.load();
      const EvalSplit eval = load_eval(exp_eval_train, exp_eval_test);
      const std::string cfg_text = config_text(experiment);
      const std::string run_id = make_run_id(cfg_text);
      std::vector<fs::path> inputs = exp_corpus.inputs();
      for (const auto& p : exp_eval_train.inputs()) inputs.push_back(p);
      for (const auto& p : exp_eval_test.inputs()) inputs.push_back(p);
      int failed = 0;
      if (exp_baseline) {
        std::vector<GridRow> rows;
        for (int r = 0; r < exp_repeats; ++r) {
          const std::uint64_t seed = exp_common.seed + static_cast<std::uint64_t>(r);
          rows.push_back({classes.front(), 0, r, seed,
                          run_random_baseline(corpus, eval, classes.front(), seed, exp_sampler.cfg, exp_svm.protocol(seed))});
          failed += !rows.back().result.ok;
        }
        append_rows(exp_out, run_id, rows);
      }
      for (int n : classes)
        for (int k : samples) {
          std::vector<GridRow> rows;
          for (int r = 0; r < exp_repeats; ++r) {
            const std::uint64_t seed = exp_common.seed + static_cast<std::uint64_t>(r);
            spdlog::info("grid point {} classes x {} samples, seed {}", n, k, seed);
            rows.push_back({n, k, r, seed,
                            run_grid_point(corpus, eval, n, k, seed, exp_sampler.cfg, exp_train.resolved(seed),
                                           exp_svm.protocol(seed))});
            failed += !rows.back().result.ok;
          }
          append_rows(exp_out, run_id, rows);
        }
      Manifest m{"experiment", exp_common.seed, cfg_text, inputs, {exp_out}};
      m.metrics = {{"run_id", run_id}, {"failed_points", failed}};
      m.write(exp_out);
      std::cout << "run " << run_id << " -> " << exp_out << '\n';
      return ExitCode::ok;
    }

    if (*baseline) {
      const auto corpus = base_corpus.load();
      const EvalSplit eval = load_eval(base_eval_train, base_eval_test);
      const std::string cfg_text = config_text(baseline);
      const std::string run_id = make_run_id(cfg_text);
      std::vector<GridRow> rows;
      for (int r = 0; r < base_repeats; ++r) {
        const std::uint64_t seed = base_common.seed + static_cast<std::uint64_t>(r);
        rows.push_back({base_classes, 0, r, seed,
                        run_random_baseline(corpus, eval, base_classes, seed, base_sampler.cfg, base_svm.protocol(seed),
                                            base_std)});
      }
      append_rows(base_out, run_id, rows);
      std::vector<fs::path> artifacts{base_out};
      if (!base_model_out.empty()) {
        SamplerConfig cfg = base_sampler.cfg;
        cfg.n_patches = base_classes;
        cfg.rng_seed = base_common.seed;
        const auto patches = sample_patches(corpus, cfg, estimate_energy_threshold(corpus, cfg)).patches;
        save_model(base_model_out, random_filter_model(NetworkSpec::exemplar_default(base_classes, cfg.patch_size),
                                                       seed_patch_mean(patches), base_common.seed, base_std));
        artifacts.push_back(base_model_out);
      }
      Manifest m{"baseline", base_common.seed, cfg_text, base_corpus.inputs(), artifacts};
      m.metrics = {{"run_id", run_id}};
      m.write(base_out);
      std::cout << "run " << run_id << " -> " << base_out << '\n';
      return std::all_of(rows.begin(), rows.end(), [](const GridRow& r) { return r.result.ok; }) ? ExitCode::ok
                                                                                                  : ExitCode::data_error;
    }
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return ExitCode::numerical_failure;
  } catch (const FormatError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return ExitCode::data_error;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return ExitCode::data_error;
  } catch (const ContractError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return ExitCode::usage;
  }
  return ExitCode::usage;
}

}  // namespace exemplar::cli
