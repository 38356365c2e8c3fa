#include <doctest.h>

#include <cmath>
#include <random>

#include "exemplar/error.hpp"
#include "exemplar/svm.hpp"
#include "test_util.hpp"

using namespace exemplar;

namespace {

struct Blobs {
  Eigen::MatrixXd x;
  std::vector<int> labels;
};

Blobs blobs(int per_class, int classes, double separation, double spread, unsigned seed, int dim = 2) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, spread);
  Blobs b;
  b.x.resize(per_class * classes, dim);
  for (int c = 0; c < classes; ++c)
    for (int i = 0; i < per_class; ++i) {
      const int r = c * per_class + i;
      for (int d = 0; d < dim; ++d) b.x(r, d) = g(rng) + (d == c % dim ? separation * (1 + c / dim) : 0.0);
      b.labels.push_back(c);
    }
  return b;
}

std::vector<double> signs(const std::vector<int>& labels, int positive) {
  std::vector<double> y;
  for (int l : labels) y.push_back(l == positive ? 1.0 : -1.0);
  return y;
}

// Full-batch subgradient descent with step 1/t (the objective is 1-strongly
// convex); returns the best objective seen.
double subgradient_oracle(const Eigen::MatrixXd& x, const std::vector<double>& y, double C, int iters) {
  const int n = int(x.rows()), d = int(x.cols());
  std::vector<double> w(d, 0.0);
  double b = 0.0, best = 1e300;
  for (int t = 1; t <= iters; t++) {
    std::vector<double> gw(w);
    double gb = b, obj = 0;
    for (int i = 0; i < n; i++) {
      double m = b;
      for (int k = 0; k < d; k++) m += w[k] * x(i, k);
      if (y[i] * m < 1) {
        obj += 1 - y[i] * m;
        for (int k = 0; k < d; k++) gw[k] -= C / n * y[i] * x(i, k);
        gb -= C / n * y[i];
      }
    }
    double reg = b * b;
    for (double v : w) reg += v * v;
    best = std::min(best, 0.5 * reg + C * obj / n);
    const double eta = 1.0 / t;
    for (int k = 0; k < d; k++) w[k] -= eta * gw[k];
    b -= eta * gb;
  }
  return best;
}

}  // namespace

TEST_CASE("standardization statistics") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(50, 4) * 3.0;
  x.col(1).array() += 10.0;
  x.col(3).setConstant(2.5);
  const auto s = Standardizer::fit(x);
  const Eigen::MatrixXd z = s.apply(x);
  for (int j = 0; j < 3; ++j) {
    CHECK(std::abs(z.col(j).mean()) < 1e-6);
    CHECK(std::abs(std::sqrt(z.col(j).array().square().mean()) - 1.0) < 1e-6);
  }
  CHECK(s.scale[3] == 1.0);
  CHECK(z.col(3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("separable blobs are classified perfectly") {
  const auto b = blobs(30, 2, 10.0, 0.5, 1);
  const auto m = train_svm(b.x, b.labels, SvmConfig{});
  CHECK(evaluate(m, b.x, b.labels) == 1.0);
  const auto four = blobs(25, 4, 12.0, 0.5, 2, 4);
  CHECK(evaluate(train_svm(four.x, four.labels, SvmConfig{}), four.x, four.labels) == 1.0);
}

TEST_CASE("duplicating every point leaves the decision function unchanged") {
  const auto b = blobs(15, 2, 1.5, 1.0, 3);
  Eigen::MatrixXd x2(60, 2);
  x2 << b.x, b.x;
  std::vector<int> l2 = b.labels;
  l2.insert(l2.end(), b.labels.begin(), b.labels.end());
  SvmConfig cfg;
  cfg.tolerance = 1e-12;
  cfg.max_epochs = 200000;
  const auto m1 = train_svm(b.x, b.labels, cfg), m2 = train_svm(x2, l2, cfg);
  CHECK((m1.weights - m2.weights).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((m1.bias - m2.bias).cwiseAbs().maxCoeff() < 1e-6);
  const Eigen::MatrixXd probe = Eigen::MatrixXd::Random(40, 2) * 4;
  CHECK((m1.scores(probe) - m2.scores(probe)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("binary objective within 1% of a subgradient oracle") {
  for (unsigned seed : {4u, 5u, 6u}) {
    const auto b = blobs(10, 2, 1.0, 1.0, seed);
    const auto y = signs(b.labels, 1);
    SvmConfig cfg;
    cfg.tolerance = 1e-10;
    cfg.max_epochs = 100000;
    const auto svm = train_binary_svm(b.x, y, cfg);
    const double ours = hinge_objective(b.x, y, svm.w, svm.b, 1.0);
    const double oracle = subgradient_oracle(b.x, y, 1.0, 200000);
    INFO("ours " << ours << " oracle " << oracle);
    CHECK(std::abs(ours - oracle) <= 0.01 * oracle);
    CHECK(ours <= oracle + 1e-9);
    // Weak duality, and a small gap at convergence.
    CHECK(svm.dual_objective.back() <= ours + 1e-12);
    CHECK(ours - svm.dual_objective.back() < 1e-6);
  }
}

TEST_CASE("dual objective never decreases across epochs") {
  const auto b = blobs(40, 2, 0.8, 1.0, 7, 5);
  SvmConfig cfg;
  cfg.C = 10.0;
  cfg.tolerance = 1e-9;
  const auto svm = train_binary_svm(b.x, signs(b.labels, 0), cfg);
  REQUIRE(svm.dual_objective.size() >= 2);
  for (std::size_t e = 1; e < svm.dual_objective.size(); ++e) CHECK(svm.dual_objective[e] >= svm.dual_objective[e - 1] - 1e-12);
}

TEST_CASE("predictions: tie-breaking, scale invariance, fixtures") {
  LinearModel m;
  m.classes = {2, 5, 7};
  m.weights = Eigen::Matrix3d::Identity();
  m.bias = Eigen::Vector3d::Zero();
  m.standardizer.mean = Eigen::Vector3d::Zero();
  m.standardizer.scale = Eigen::Vector3d::Ones();
  Eigen::MatrixXd x(6, 3);
  x << 1, 0, 0,  //
      0, 1, 0,   //
      0, 0, 1,   //
      1, 1, 0,   // tie between 2 and 5
      0, 3, 3,   // tie between 5 and 7
      2, 2, 2;   // three-way tie
  CHECK(m.predict(x) == std::vector<int>{2, 5, 7, 2, 5, 2});
  const std::vector<int> labels{2, 5, 2, 2, 7, 5};
  CHECK(evaluate(m, x, labels) == doctest::Approx(3.0 / 6.0));
  CHECK(evaluate(m, x, m.predict(x)) == 1.0);

  LinearModel scaled = m;
  scaled.weights *= 4.5;
  scaled.bias = Eigen::Vector3d(0.1, -0.2, 0.3);
  LinearModel scaled2 = scaled;
  scaled2.weights *= 0.01;
  scaled2.bias *= 0.01;
  const Eigen::MatrixXd r = Eigen::MatrixXd::Random(100, 3);
  CHECK(scaled.predict(r) == scaled2.predict(r));
}

TEST_CASE("random binary predictor on balanced labels scores about one half") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0, 1);
  LinearModel m;
  m.classes = {0, 1};
  m.weights = Eigen::MatrixXd(4, 2);
  for (Eigen::Index i = 0; i < m.weights.size(); ++i) m.weights.data()[i] = g(rng);
  m.bias = Eigen::Vector2d::Zero();
  m.standardizer.mean = Eigen::VectorXd::Zero(4);
  m.standardizer.scale = Eigen::VectorXd::Ones(4);
  Eigen::MatrixXd x(1000, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  std::vector<int> labels(1000);
  for (int i = 0; i < 1000; ++i) labels[i] = i % 2;
  CHECK(std::abs(evaluate(m, x, labels) - 0.5) <= 0.05);
}

TEST_CASE("training contracts and determinism") {
  const auto b = blobs(10, 2, 2.0, 1.0, 10);
  CHECK_THROWS_AS(train_svm(b.x, std::vector<int>(20, 1), SvmConfig{}), ContractError);
  SvmConfig bad;
  bad.C = 0.0;
  CHECK_THROWS_AS(train_svm(b.x, b.labels, bad), ContractError);
  SvmConfig cfg;
  cfg.rng_seed = 3;
  const auto m1 = train_svm(b.x, b.labels, cfg), m2 = train_svm(b.x, b.labels, cfg);
  CHECK((m1.weights.array() == m2.weights.array()).all());
}

TEST_CASE("stratified folds spread every class") {
  std::vector<int> labels;
  for (int i = 0; i < 53; ++i) labels.push_back(i % 3 == 0 ? 0 : (i % 3 == 1 ? 1 : 4));
  const auto folds = stratified_folds(labels, 5, 1);
  for (int c : {0, 1, 4}) {
    std::vector<int> per_fold(5, 0);
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == c) ++per_fold[folds[i]];
    CHECK(*std::max_element(per_fold.begin(), per_fold.end()) - *std::min_element(per_fold.begin(), per_fold.end()) <= 1);
  }
}

TEST_CASE("cross-validation: single value, tie-break, exhaustive agreement, fold reduction") {
  const auto sep = blobs(20, 2, 20.0, 0.3, 11);
  const std::vector<double> one{0.7};
  CHECK(cross_validate_C(sep.x, sep.labels, one, 5, SvmConfig{}).best_C == 0.7);

  const std::vector<double> grid{100.0, 1.0, 10.0, 1000.0};
  const auto cv = cross_validate_C(sep.x, sep.labels, grid, 5, SvmConfig{});
  for (double a : cv.mean_accuracy) CHECK(a == 1.0);
  CHECK(cv.best_C == 1.0);

  const auto noisy = blobs(25, 3, 1.0, 1.5, 12, 3);
  const auto grid2 = default_C_grid();
  CHECK(grid2.size() == 7);
  SvmConfig base;
  base.rng_seed = 4;
  const auto cv2 = cross_validate_C(noisy.x, noisy.labels, grid2, 5, base);
  const auto folds = stratified_folds(noisy.labels, 5, base.rng_seed);
  std::vector<double> acc(grid2.size(), 0.0);
  for (std::size_t g = 0; g < grid2.size(); ++g)
    for (int f = 0; f < 5; ++f) {
      std::vector<int> tr_rows, te_rows, ytr, yte;
      for (std::size_t i = 0; i < folds.size(); ++i) (folds[i] == f ? te_rows : tr_rows).push_back(int(i));
      Eigen::MatrixXd xtr(tr_rows.size(), 3), xte(te_rows.size(), 3);
      for (std::size_t r = 0; r < tr_rows.size(); ++r) xtr.row(r) = noisy.x.row(tr_rows[r]), ytr.push_back(noisy.labels[tr_rows[r]]);
      for (std::size_t r = 0; r < te_rows.size(); ++r) xte.row(r) = noisy.x.row(te_rows[r]), yte.push_back(noisy.labels[te_rows[r]]);
      SvmConfig c = base;
      c.C = grid2[g];
      acc[g] += evaluate(train_svm(xtr, ytr, c), xte, yte) / 5;
    }
  std::size_t best = 0;
  for (std::size_t g = 0; g < acc.size(); ++g) {
    CHECK(cv2.mean_accuracy[g] == doctest::Approx(acc[g]).epsilon(1e-12));
    if (acc[g] > acc[best] + 1e-12) best = g;
  }
  CHECK(cv2.best_C == grid2[best]);

  const auto tiny = blobs(3, 2, 5.0, 0.5, 13);
  CHECK(cross_validate_C(tiny.x, tiny.labels, grid, 5, SvmConfig{}).folds_used == 3);
}

TEST_CASE("model file round trip") {
  const auto b = blobs(20, 3, 4.0, 1.0, 14, 3);
  const auto m = train_svm(b.x, b.labels, SvmConfig{});
  test::TempDir dir;
  save_svm(dir.path / "m.exsv", m);
  const auto back = load_svm(dir.path / "m.exsv");
  CHECK(back.classes == m.classes);
  CHECK((back.weights - m.weights).cwiseAbs().maxCoeff() < 1e-5);
  CHECK(back.predict(b.x) == m.predict(b.x));
  std::filesystem::resize_file(dir.path / "m.exsv", 30);
  CHECK_THROWS_AS(load_svm(dir.path / "m.exsv"), FormatError);
}
