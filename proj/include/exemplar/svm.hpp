#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace exemplar {

/// Per-dimension standardization; zero-variance dimensions keep scale 1.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardizer fit(const Eigen::Ref<const Eigen::MatrixXd>& x);  // samples as rows
  Eigen::MatrixXd apply(const Eigen::Ref<const Eigen::MatrixXd>& x) const;
};

/// One-vs-rest linear classifier. Column k of `weights` scores classes[k].
struct LinearModel {
  std::vector<int> classes;  // ascending
  Eigen::MatrixXd weights;   // dim x n_classes, in standardized space
  Eigen::VectorXd bias;
  Standardizer standardizer;

  Eigen::MatrixXd scores(const Eigen::Ref<const Eigen::MatrixXd>& x) const;  // n x n_classes
  /// argmax score, ties to the lowest class index.
  std::vector<int> predict(const Eigen::Ref<const Eigen::MatrixXd>& x) const;
};

struct SvmConfig {
  double C = 1.0;
  int max_epochs = 2000;
  double tolerance = 1e-4;  // projected-gradient spread at which the dual solver stops
  std::uint64_t rng_seed = 0;
};

struct BinarySvm {
  Eigen::VectorXd w;
  double b = 0.0;
  int epochs = 0;
  std::vector<double> dual_objective;  // after each epoch, non-decreasing
};

/// 0.5 (|w|^2 + b^2) + (C/n) sum_i max(0, 1 - y_i (w.x_i + b)); y in {-1,+1}.
double hinge_objective(const Eigen::Ref<const Eigen::MatrixXd>& x, std::span<const double> y, const Eigen::VectorXd& w,
                       double b, double C);

/// Dual coordinate descent on hinge_objective (samples as rows).
BinarySvm train_binary_svm(const Eigen::Ref<const Eigen::MatrixXd>& x, std::span<const double> y, const SvmConfig& cfg);

LinearModel train_svm(const Eigen::Ref<const Eigen::MatrixXd>& features, std::span<const int> labels, const SvmConfig& cfg);

double evaluate(const LinearModel& model, const Eigen::Ref<const Eigen::MatrixXd>& features, std::span<const int> labels);

/// Fold index per sample; every class spread round-robin over the folds.
std::vector<int> stratified_folds(std::span<const int> labels, int folds, std::uint64_t rng_seed);

struct CrossValidation {
  double best_C = 0.0;
  int folds_used = 0;
  std::vector<double> grid;
  std::vector<double> mean_accuracy;
};

std::vector<double> default_C_grid();  // 1e-3 ... 1e3

/// Stratified k-fold mean accuracy per C; argmax with ties to the smaller C.
CrossValidation cross_validate_C(const Eigen::Ref<const Eigen::MatrixXd>& features, std::span<const int> labels,
                                 std::span<const double> grid, int folds, const SvmConfig& base);

// Model file "EXSV": u32 version, u32 n_classes, u32 dim, i32 class labels,
// per class dim f32 weights then f32 bias, then f32 mean and f32 scale rows.
void save_svm(const std::filesystem::path& path, const LinearModel& model);
LinearModel load_svm(const std::filesystem::path& path);

}  // namespace exemplar
