#pragma once

// Dense CNN engine: convolution, ReLU, max-pooling, fully-connected, dropout,
// softmax, cross-entropy, backpropagation and momentum SGD. Everything is
// templated on the scalar so the same code runs in float (training) and
// double (gradient verification); both are explicitly instantiated.

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "exemplar/rng.hpp"

namespace exemplar {

enum class LayerKind : std::uint32_t { conv = 0, relu = 1, max_pool = 2, fully_connected = 3, dropout = 4, softmax = 5 };

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  int out_channels = 0;  // conv
  int kernel = 0;        // conv kernel side, or pool window side
  int stride = 1;
  int pad = 0;
  int units = 0;      // fully_connected
  double rate = 0.0;  // dropout probability

  static LayerSpec Conv(int out_channels, int kernel, int stride = 1, int pad = 0) {
    return {LayerKind::conv, out_channels, kernel, stride, pad, 0, 0.0};
  }
  static LayerSpec MaxPool(int size = 2) { return {LayerKind::max_pool, 0, size, size, 0, 0, 0.0}; }
  static LayerSpec FullyConnected(int units) { return {LayerKind::fully_connected, 0, 0, 1, 0, units, 0.0}; }
  static LayerSpec Relu() { return {LayerKind::relu, 0, 0, 1, 0, 0, 0.0}; }
  static LayerSpec Dropout(double rate) { return {LayerKind::dropout, 0, 0, 1, 0, 0, rate}; }
  static LayerSpec Softmax() { return {LayerKind::softmax, 0, 0, 1, 0, 0, 0.0}; }

  bool has_parameters() const { return kind == LayerKind::conv || kind == LayerKind::fully_connected; }
  bool operator==(const LayerSpec&) const = default;
};

struct Shape {
  int channels = 0;
  int height = 0;
  int width = 0;

  Eigen::Index size() const { return Eigen::Index(channels) * height * width; }
  bool operator==(const Shape&) const = default;
};

struct NetworkSpec {
  Shape input{3, 32, 32};
  std::vector<LayerSpec> layers;

  /// conv5x5(64) relu pool2 conv5x5(64) relu pool2 fc(128) relu dropout(0.5) fc(n) softmax
  static NetworkSpec exemplar_default(int n_classes, int patch_size = 32);

  /// shapes()[i] is the input shape of layer i; shapes().back() the output.
  std::vector<Shape> shapes() const;
  int n_classes() const;
  bool operator==(const NetworkSpec&) const = default;
};

/// Throws ContractError unless shapes chain and the net ends in FC -> softmax.
void validate(const NetworkSpec& spec);

std::string describe(const NetworkSpec& spec);

/// Batch of feature maps, NCHW, each sample contiguous.
template <typename Scalar>
struct Tensor4 {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  int n = 0, c = 0, h = 0, w = 0;
  Vector data;

  Tensor4() = default;
  Tensor4(int n_, int c_, int h_, int w_) : n(n_), c(c_), h(h_), w(w_), data(Vector::Zero(Eigen::Index(n_) * c_ * h_ * w_)) {}

  Eigen::Index sample_size() const { return Eigen::Index(c) * h * w; }
  Shape shape() const { return {c, h, w}; }
  Scalar* sample(int i) { return data.data() + i * sample_size(); }
  const Scalar* sample(int i) const { return data.data() + i * sample_size(); }
  Scalar& at(int i, int ch, int y, int x) { return data[((Eigen::Index(i) * c + ch) * h + y) * w + x]; }
  Scalar at(int i, int ch, int y, int x) const { return data[((Eigen::Index(i) * c + ch) * h + y) * w + x]; }

  /// Samples as columns.
  Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> matrix() { return {data.data(), sample_size(), n}; }
  Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> matrix() const {
    return {data.data(), sample_size(), n};
  }
};

/// Weights are (fan_in x fan_out), column-major, so column o is output
/// unit/filter o. For conv layers rows run over (in_channel, ky, kx); a fully
/// connected layer over a CxHxW input uses the same row order and is
/// therefore also an HxW convolution.
template <typename Scalar>
struct LayerParams {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> weights;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> bias;
};

template <typename Scalar>
struct Parameters {
  std::vector<LayerParams<Scalar>> layers;  // one entry per layer, empty for parameterless ones
  std::uint64_t version = 0;                // bumped on every update

  Parameters zeros_like() const;
  template <typename Other>
  Parameters<Other> cast() const {
    Parameters<Other> out;
    out.layers.resize(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) {
      out.layers[i].weights = layers[i].weights.template cast<Other>();
      out.layers[i].bias = layers[i].bias.template cast<Other>();
    }
    return out;
  }
  Eigen::Index count() const;
  bool all_finite() const;
};

enum class Mode { train, eval };

template <typename Scalar>
struct ForwardPass {
  Mode mode = Mode::eval;
  std::vector<Tensor4<Scalar>> activations;  // activations[i] feeds layer i
  std::vector<std::vector<Eigen::Index>> pool_argmax;
  std::vector<Eigen::Array<Scalar, Eigen::Dynamic, 1>> dropout_mask;
  const Parameters<Scalar>* params = nullptr;
  std::uint64_t params_version = 0;

  const Tensor4<Scalar>& output() const { return activations.back(); }
};

Parameters<float> init_parameters(const NetworkSpec& spec, double std, std::uint64_t rng_seed);

/// Per-layer std = gain * sqrt(2 / fan_in), zero biases.
Parameters<float> init_parameters_fan_in(const NetworkSpec& spec, double gain, std::uint64_t rng_seed);

template <typename Scalar>
ForwardPass<Scalar> forward(const NetworkSpec& spec, const Parameters<Scalar>& params, Tensor4<Scalar> input, Mode mode,
                            Rng* rng = nullptr);

/// Mean over the batch of -log(max(p[label], 1e-12)).
template <typename Scalar>
Scalar cross_entropy_loss(const Tensor4<Scalar>& probs, std::span<const int> labels);

/// Gradient of the mean cross-entropy with respect to every parameter.
template <typename Scalar>
Parameters<Scalar> backward(const NetworkSpec& spec, const Parameters<Scalar>& params, const ForwardPass<Scalar>& pass,
                            std::span<const int> labels);

/// velocity <- momentum * velocity - lr * grad; param += velocity.
template <typename Scalar>
void sgd_step(Parameters<Scalar>& params, const Parameters<Scalar>& grads, Parameters<Scalar>& velocity, Scalar lr,
              Scalar momentum);

template <typename Scalar>
std::vector<int> predict(const Tensor4<Scalar>& probs);

// Single-layer building blocks, usable on inputs of any spatial size.

template <typename Scalar>
Tensor4<Scalar> conv_forward(const Tensor4<Scalar>& in, const LayerParams<Scalar>& p, int kernel, int stride = 1,
                             int pad = 0);
template <typename Scalar>
Tensor4<Scalar> max_pool_forward(const Tensor4<Scalar>& in, int size, std::vector<Eigen::Index>* argmax = nullptr);
template <typename Scalar>
Tensor4<Scalar> relu_forward(Tensor4<Scalar> in);
template <typename Scalar>
Tensor4<Scalar> softmax_forward(Tensor4<Scalar> in);

/// Trained network plus the input mean it expects subtracted.
struct Model {
  NetworkSpec spec;
  Parameters<float> params;
  Eigen::VectorXf input_mean;  // planar CxHxW of spec.input, may be empty
};

// Checkpoint "EXNW": magic, u32 version, spec, per-parameterized-layer f32
// weights then bias, then u32 mean length and the f32 mean.
void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

}  // namespace exemplar
