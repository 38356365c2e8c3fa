#include "exemplar/svm.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "exemplar/binary_io.hpp"
#include "exemplar/error.hpp"
#include "exemplar/rng.hpp"

namespace exemplar {

Standardizer Standardizer::fit(const Eigen::Ref<const Eigen::MatrixXd>& x) {
  require(x.rows() >= 1, "standardizer needs samples");
  Standardizer s;
  s.mean = x.colwise().mean().transpose();
  s.scale = ((x.rowwise() - s.mean.transpose()).array().square().colwise().mean()).sqrt().transpose();
  for (Eigen::Index j = 0; j < s.scale.size(); ++j)
    if (!(s.scale[j] > 1e-12)) s.scale[j] = 1.0;
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  require(x.cols() == mean.size(), "standardizer dimension mismatch");
  return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

Eigen::MatrixXd LinearModel::scores(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  Eigen::MatrixXd s = standardizer.apply(x) * weights;
  s.rowwise() += bias.transpose();
  return s;
}

std::vector<int> LinearModel::predict(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  const Eigen::MatrixXd s = scores(x);
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < s.cols(); ++k)
      if (s(i, k) > s(i, best)) best = k;
    out[static_cast<std::size_t>(i)] = classes[static_cast<std::size_t>(best)];
  }
  return out;
}

double hinge_objective(const Eigen::Ref<const Eigen::MatrixXd>& x, std::span<const double> y, const Eigen::VectorXd& w,
                       double b, double C) {
  const Eigen::VectorXd margins = x * w;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) loss += std::max(0.0, 1.0 - y[i] * (margins[i] + b));
  return 0.5 * (w.squaredNorm() + b * b) + C * loss / static_cast<double>(x.rows());
}

BinarySvm train_binary_svm(const Eigen::Ref<const Eigen::MatrixXd>& x, std::span<const double> y, const SvmConfig& cfg) {
  require(cfg.C > 0.0, "SVM C must be positive");
  const Eigen::Index n = x.rows(), d = x.cols();
  require(n >= 1 && static_cast<Eigen::Index>(y.size()) == n, "SVM label count mismatch");
  // Samples as columns, with a trailing constant 1 for the (regularized) bias.
  Eigen::MatrixXd xt(d + 1, n);
  xt.topRows(d) = x.transpose();
  xt.row(d).setOnes();
  const Eigen::VectorXd qdiag = xt.colwise().squaredNorm().transpose();
  const double upper = cfg.C / static_cast<double>(n);

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd wb = Eigen::VectorXd::Zero(d + 1);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng = substream(cfg.rng_seed, Stream::svm);

  BinarySvm out;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double pg_max = -std::numeric_limits<double>::infinity();
    double pg_min = std::numeric_limits<double>::infinity();
    for (Eigen::Index i : order) {
      const double g = y[i] * xt.col(i).dot(wb) - 1.0;
      double pg = g;
      if (alpha[i] <= 0.0) pg = std::min(g, 0.0);
      else if (alpha[i] >= upper) pg = std::max(g, 0.0);
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      if (pg != 0.0 && qdiag[i] > 0.0) {
        const double old = alpha[i];
        alpha[i] = std::clamp(old - g / qdiag[i], 0.0, upper);
        wb += (alpha[i] - old) * y[i] * xt.col(i);
      }
    }
    out.epochs = epoch;
    out.dual_objective.push_back(alpha.sum() - 0.5 * wb.squaredNorm());
    if (pg_max - pg_min < cfg.tolerance) break;
  }
  out.w = wb.head(d);
  out.b = wb[d];
  return out;
}

LinearModel train_svm(const Eigen::Ref<const Eigen::MatrixXd>& features, std::span<const int> labels, const SvmConfig& cfg) {
  require(static_cast<Eigen::Index>(labels.size()) == features.rows(), "SVM: feature/label count mismatch");
  LinearModel model;
  model.classes.assign(labels.begin(), labels.end());
  std::sort(model.classes.begin(), model.classes.end());
  model.classes.erase(std::unique(model.classes.begin(), model.classes.end()), model.classes.end());
  if (model.classes.size() < 2) throw ContractError("SVM needs at least two classes");

  model.standardizer = Standardizer::fit(features);
  const Eigen::MatrixXd x = model.standardizer.apply(features);
  const auto k = static_cast<Eigen::Index>(model.classes.size());
  model.weights.resize(x.cols(), k);
  model.bias.resize(k);
  std::vector<double> y(labels.size());
  for (Eigen::Index c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == model.classes[static_cast<std::size_t>(c)] ? 1.0 : -1.0;
    SvmConfig per_class = cfg;
    per_class.rng_seed = mix64(cfg.rng_seed + static_cast<std::uint64_t>(c));
    const BinarySvm b = train_binary_svm(x, y, per_class);
    model.weights.col(c) = b.w;
    model.bias[c] = b.b;
  }
  return model;
}

double evaluate(const LinearModel& model, const Eigen::Ref<const Eigen::MatrixXd>& features, std::span<const int> labels) {
  require(static_cast<Eigen::Index>(labels.size()) == features.rows(), "evaluate: feature/label count mismatch");
  if (labels.empty()) return 0.0;
  const auto pred = model.predict(features);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += pred[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

std::vector<int> stratified_folds(std::span<const int> labels, int folds, std::uint64_t rng_seed) {
  require(folds >= 2, "need at least two folds");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  Rng rng = substream(rng_seed, Stream::svm, 1);
  std::vector<int> fold(labels.size(), 0);
  for (auto& [label, members] : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t r = 0; r < members.size(); ++r) fold[members[r]] = static_cast<int>(r % static_cast<std::size_t>(folds));
  }
  return fold;
}

std::vector<double> default_C_grid() { return {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3}; }

CrossValidation cross_validate_C(const Eigen::Ref<const Eigen::MatrixXd>& features, std::span<const int> labels,
                                 std::span<const double> grid, int folds, const SvmConfig& base) {
  require(!grid.empty(), "cross-validation grid is empty");
  require(folds >= 2, "cross-validation needs at least two folds");
  require(static_cast<Eigen::Index>(labels.size()) == features.rows(), "cross-validation: feature/label count mismatch");
  CrossValidation cv;
  cv.grid.assign(grid.begin(), grid.end());
  if (grid.size() == 1) {
    cv.best_C = grid.front();
    cv.folds_used = 0;
    cv.mean_accuracy.assign(1, std::numeric_limits<double>::quiet_NaN());
    return cv;
  }

  std::map<int, int> counts;
  for (int l : labels) ++counts[l];
  int smallest = std::numeric_limits<int>::max();
  for (const auto& [l, c] : counts) smallest = std::min(smallest, c);
  int used = folds;
  if (smallest < folds) {
    used = std::max(2, smallest);
    spdlog::warn("a class has only {} samples; using {} folds instead of {}", smallest, used, folds);
  }
  cv.folds_used = used;
  const auto fold = stratified_folds(labels, used, base.rng_seed);

  cv.mean_accuracy.assign(grid.size(), 0.0);
  for (int f = 0; f < used; ++f) {
    std::vector<Eigen::Index> tr, te;
    for (std::size_t i = 0; i < labels.size(); ++i) (fold[i] == f ? te : tr).push_back(static_cast<Eigen::Index>(i));
    Eigen::MatrixXd xtr(static_cast<Eigen::Index>(tr.size()), features.cols());
    Eigen::MatrixXd xte(static_cast<Eigen::Index>(te.size()), features.cols());
    std::vector<int> ytr, yte;
    for (std::size_t r = 0; r < tr.size(); ++r) {
      xtr.row(static_cast<Eigen::Index>(r)) = features.row(tr[r]);
      ytr.push_back(labels[static_cast<std::size_t>(tr[r])]);
    }
    for (std::size_t r = 0; r < te.size(); ++r) {
      xte.row(static_cast<Eigen::Index>(r)) = features.row(te[r]);
      yte.push_back(labels[static_cast<std::size_t>(te[r])]);
    }
    for (std::size_t g = 0; g < grid.size(); ++g) {
      SvmConfig cfg = base;
      cfg.C = grid[g];
      const LinearModel m = train_svm(xtr, ytr, cfg);
      cv.mean_accuracy[g] += evaluate(m, xte, yte) / used;
    }
  }

  // Ties go to the smaller C regardless of grid order.
  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    const double a = cv.mean_accuracy[g], ab = cv.mean_accuracy[best];
    if (a > ab + 1e-12 || (std::abs(a - ab) <= 1e-12 && grid[g] < grid[best])) best = g;
  }
  cv.best_C = grid[best];
  return cv;
}

namespace {
constexpr std::uint32_t kSvmVersion = 1;
}

void save_svm(const std::filesystem::path& path, const LinearModel& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write " + path.string());
  const auto dim = model.weights.rows();
  io::write_magic(os, "EXSV");
  io::write_pod(os, kSvmVersion);
  io::write_pod(os, static_cast<std::uint32_t>(model.classes.size()));
  io::write_pod(os, static_cast<std::uint32_t>(dim));
  for (int c : model.classes) io::write_pod(os, static_cast<std::int32_t>(c));
  for (Eigen::Index k = 0; k < model.weights.cols(); ++k) {
    const Eigen::VectorXf w = model.weights.col(k).cast<float>();
    io::write_array(os, w.data(), static_cast<std::size_t>(dim));
    io::write_pod(os, static_cast<float>(model.bias[k]));
  }
  const Eigen::VectorXf mean = model.standardizer.mean.cast<float>();
  const Eigen::VectorXf scale = model.standardizer.scale.cast<float>();
  io::write_array(os, mean.data(), static_cast<std::size_t>(dim));
  io::write_array(os, scale.data(), static_cast<std::size_t>(dim));
}

LinearModel load_svm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  io::expect_magic(is, "EXSV");
  if (io::read_pod<std::uint32_t>(is) != kSvmVersion) throw FormatError("unsupported SVM model version");
  const auto k = io::read_pod<std::uint32_t>(is);
  const auto dim = io::read_pod<std::uint32_t>(is);
  LinearModel m;
  for (std::uint32_t c = 0; c < k; ++c) m.classes.push_back(io::read_pod<std::int32_t>(is));
  m.weights.resize(dim, k);
  m.bias.resize(k);
  Eigen::VectorXf buf(dim);
  for (std::uint32_t c = 0; c < k; ++c) {
    io::read_array(is, buf.data(), dim);
    m.weights.col(c) = buf.cast<double>();
    m.bias[c] = io::read_pod<float>(is);
  }
  io::read_array(is, buf.data(), dim);
  m.standardizer.mean = buf.cast<double>();
  io::read_array(is, buf.data(), dim);
  m.standardizer.scale = buf.cast<double>();
  io::expect_eof(is);
  return m;
}

}  // namespace exemplar
