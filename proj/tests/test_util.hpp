#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "exemplar/imaging.hpp"
#include "exemplar/net.hpp"

namespace test {

inline exemplar::Image random_image(int h, int w, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  exemplar::Image img(h, w);
  for (Eigen::Index i = 0; i < img.data.size(); ++i) img.data[i] = u(rng);
  return img;
}

template <typename S>
exemplar::Tensor4<S> random_tensor(int n, int c, int h, int w, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, 1);
  exemplar::Tensor4<S> t(n, c, h, w);
  for (Eigen::Index i = 0; i < t.data.size(); ++i) t.data[i] = static_cast<S>(g(rng));
  return t;
}

template <typename S>
exemplar::LayerParams<S> random_layer(Eigen::Index fan_in, Eigen::Index fan_out, unsigned seed, double std = 0.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, std);
  exemplar::LayerParams<S> p;
  p.weights.resize(fan_in, fan_out);
  p.bias.resize(fan_out);
  for (Eigen::Index i = 0; i < p.weights.size(); ++i) p.weights.data()[i] = static_cast<S>(g(rng));
  for (Eigen::Index i = 0; i < p.bias.size(); ++i) p.bias[i] = static_cast<S>(g(rng));
  return p;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("exemplar_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

}  // namespace test
