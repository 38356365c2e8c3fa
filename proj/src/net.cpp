#include "exemplar/net.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "exemplar/binary_io.hpp"
#include "exemplar/error.hpp"

namespace exemplar {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

NetworkSpec NetworkSpec::exemplar_default(int n_classes, int patch_size) {
  NetworkSpec spec;
  spec.input = {3, patch_size, patch_size};
  spec.layers = {LayerSpec::Conv(64, 5),         LayerSpec::Relu(),    LayerSpec::MaxPool(2),
                 LayerSpec::Conv(64, 5),         LayerSpec::Relu(),    LayerSpec::MaxPool(2),
                 LayerSpec::FullyConnected(128), LayerSpec::Relu(),    LayerSpec::Dropout(0.5),
                 LayerSpec::FullyConnected(n_classes), LayerSpec::Softmax()};
  return spec;
}

std::vector<Shape> NetworkSpec::shapes() const {
  std::vector<Shape> out{input};
  Shape s = input;
  for (const auto& l : layers) {
    switch (l.kind) {
      case LayerKind::conv: {
        require(l.out_channels >= 1 && l.kernel >= 1 && l.stride >= 1 && l.pad >= 0, "invalid conv layer");
        const int h = (s.height + 2 * l.pad - l.kernel) / l.stride + 1;
        const int w = (s.width + 2 * l.pad - l.kernel) / l.stride + 1;
        require(s.height + 2 * l.pad >= l.kernel && s.width + 2 * l.pad >= l.kernel, "conv kernel larger than input");
        s = {l.out_channels, h, w};
        break;
      }
      case LayerKind::max_pool:
        require(l.kernel >= 1 && s.height >= l.kernel && s.width >= l.kernel, "pool window larger than input");
        s = {s.channels, s.height / l.kernel, s.width / l.kernel};
        break;
      case LayerKind::fully_connected:
        require(l.units >= 1, "fully connected layer needs units");
        s = {l.units, 1, 1};
        break;
      case LayerKind::dropout: require(l.rate >= 0.0 && l.rate < 1.0, "dropout rate outside [0,1)"); break;
      case LayerKind::relu:
      case LayerKind::softmax: break;
    }
    out.push_back(s);
  }
  return out;
}

int NetworkSpec::n_classes() const { return shapes().back().channels; }

void validate(const NetworkSpec& spec) {
  require(spec.input.channels >= 1 && spec.input.height >= 1 && spec.input.width >= 1, "invalid input shape");
  const auto shapes = spec.shapes();
  require(spec.layers.size() >= 2, "network needs at least a classifier and a softmax");
  require(spec.layers.back().kind == LayerKind::softmax, "network must end in softmax");
  require(spec.layers[spec.layers.size() - 2].kind == LayerKind::fully_connected, "softmax must follow a fully connected layer");
  for (std::size_t i = 0; i + 1 < spec.layers.size(); ++i)
    require(spec.layers[i].kind != LayerKind::softmax, "softmax only allowed as the last layer");
}

std::string describe(const NetworkSpec& spec) {
  std::ostringstream os;
  os << spec.input.channels << "x" << spec.input.height << "x" << spec.input.width;
  for (const auto& l : spec.layers) {
    switch (l.kind) {
      case LayerKind::conv: os << " conv(" << l.out_channels << "," << l.kernel << ")"; break;
      case LayerKind::relu: os << " relu"; break;
      case LayerKind::max_pool: os << " pool(" << l.kernel << ")"; break;
      case LayerKind::fully_connected: os << " fc(" << l.units << ")"; break;
      case LayerKind::dropout: os << " dropout(" << l.rate << ")"; break;
      case LayerKind::softmax: os << " softmax"; break;
    }
  }
  return os.str();
}

template <typename Scalar>
Parameters<Scalar> Parameters<Scalar>::zeros_like() const {
  Parameters out;
  out.layers.resize(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    out.layers[i].weights = Mat<Scalar>::Zero(layers[i].weights.rows(), layers[i].weights.cols());
    out.layers[i].bias = Vec<Scalar>::Zero(layers[i].bias.size());
  }
  return out;
}

template <typename Scalar>
Eigen::Index Parameters<Scalar>::count() const {
  Eigen::Index n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

template <typename Scalar>
bool Parameters<Scalar>::all_finite() const {
  for (const auto& l : layers)
    if (!l.weights.allFinite() || !l.bias.allFinite()) return false;
  return true;
}

namespace {

Parameters<float> init_with(const NetworkSpec& spec, std::uint64_t rng_seed, const auto& std_for_layer) {
  const auto shapes = spec.shapes();
  Rng rng = substream(rng_seed, Stream::init);
  Parameters<float> params;
  params.layers.resize(spec.layers.size());
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    if (!l.has_parameters()) continue;
    const Eigen::Index fan_in =
        l.kind == LayerKind::conv ? Eigen::Index(shapes[i].channels) * l.kernel * l.kernel : shapes[i].size();
    const Eigen::Index fan_out = l.kind == LayerKind::conv ? l.out_channels : l.units;
    std::normal_distribution<double> normal(0.0, std_for_layer(fan_in));
    auto& p = params.layers[i];
    p.weights.resize(fan_in, fan_out);
    for (Eigen::Index k = 0; k < p.weights.size(); ++k) p.weights.data()[k] = static_cast<float>(normal(rng));
    p.bias = Eigen::VectorXf::Zero(fan_out);
  }
  return params;
}

}  // namespace

Parameters<float> init_parameters(const NetworkSpec& spec, double std, std::uint64_t rng_seed) {
  require(std > 0.0, "init std must be positive");
  return init_with(spec, rng_seed, [std](Eigen::Index) { return std; });
}

Parameters<float> init_parameters_fan_in(const NetworkSpec& spec, double gain, std::uint64_t rng_seed) {
  require(gain > 0.0, "init gain must be positive");
  return init_with(spec, rng_seed, [gain](Eigen::Index fan_in) { return gain * std::sqrt(2.0 / double(fan_in)); });
}

namespace {

// col is (out_h*out_w) x (C*k*k); column (c, ky, kx) holds the input plane c
// shifted by (ky, kx), zero outside the padded border.
template <typename S>
void im2col(const S* in, int channels, int height, int width, int kernel, int stride, int pad, int out_h, int out_w,
            Mat<S>& col) {
  col.resize(Eigen::Index(out_h) * out_w, Eigen::Index(channels) * kernel * kernel);
  for (int c = 0; c < channels; ++c) {
    const S* plane = in + Eigen::Index(c) * height * width;
    for (int ky = 0; ky < kernel; ++ky)
      for (int kx = 0; kx < kernel; ++kx) {
        S* dst = col.col((Eigen::Index(c) * kernel + ky) * kernel + kx).data();
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride - pad + ky;
          S* row = dst + Eigen::Index(oy) * out_w;
          if (iy < 0 || iy >= height) {
            std::fill(row, row + out_w, S(0));
            continue;
          }
          const S* src = plane + Eigen::Index(iy) * width;
          if (stride == 1 && pad == 0) {
            std::copy(src + kx, src + kx + out_w, row);
            continue;
          }
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride - pad + kx;
            row[ox] = (ix >= 0 && ix < width) ? src[ix] : S(0);
          }
        }
      }
  }
}

template <typename S>
void col2im_add(const Mat<S>& col, int channels, int height, int width, int kernel, int stride, int pad, int out_h,
                int out_w, S* out) {
  for (int c = 0; c < channels; ++c) {
    S* plane = out + Eigen::Index(c) * height * width;
    for (int ky = 0; ky < kernel; ++ky)
      for (int kx = 0; kx < kernel; ++kx) {
        const S* src = col.col((Eigen::Index(c) * kernel + ky) * kernel + kx).data();
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= height) continue;
          S* row = plane + Eigen::Index(iy) * width;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < width) row[ix] += src[Eigen::Index(oy) * out_w + ox];
          }
        }
      }
  }
}

}  // namespace

template <typename Scalar>
Tensor4<Scalar> conv_forward(const Tensor4<Scalar>& in, const LayerParams<Scalar>& p, int kernel, int stride, int pad) {
  require(p.weights.rows() == Eigen::Index(in.c) * kernel * kernel, "conv weights do not match input channels");
  const int out_h = (in.h + 2 * pad - kernel) / stride + 1;
  const int out_w = (in.w + 2 * pad - kernel) / stride + 1;
  require(out_h >= 1 && out_w >= 1, "conv kernel larger than input");
  const int out_c = static_cast<int>(p.weights.cols());
  Tensor4<Scalar> out(in.n, out_c, out_h, out_w);
  Mat<Scalar> col;
  for (int i = 0; i < in.n; ++i) {
    im2col(in.sample(i), in.c, in.h, in.w, kernel, stride, pad, out_h, out_w, col);
    Eigen::Map<Mat<Scalar>> o(out.sample(i), Eigen::Index(out_h) * out_w, out_c);
    o.noalias() = col * p.weights;
    o.rowwise() += p.bias.transpose();
  }
  return out;
}

template <typename Scalar>
Tensor4<Scalar> max_pool_forward(const Tensor4<Scalar>& in, int size, std::vector<Eigen::Index>* argmax) {
  require(size >= 1 && in.h >= size && in.w >= size, "pool window larger than input");
  const int out_h = in.h / size, out_w = in.w / size;
  Tensor4<Scalar> out(in.n, in.c, out_h, out_w);
  if (argmax) argmax->resize(static_cast<std::size_t>(out.data.size()));
  Eigen::Index o = 0;
  for (int i = 0; i < in.n; ++i)
    for (int c = 0; c < in.c; ++c) {
      const Eigen::Index plane = (Eigen::Index(i) * in.c + c) * in.h * in.w;
      for (int oy = 0; oy < out_h; ++oy)
        for (int ox = 0; ox < out_w; ++ox, ++o) {
          Eigen::Index best = plane + Eigen::Index(oy * size) * in.w + ox * size;
          for (int dy = 0; dy < size; ++dy)
            for (int dx = 0; dx < size; ++dx) {
              const Eigen::Index idx = plane + Eigen::Index(oy * size + dy) * in.w + ox * size + dx;
              if (in.data[idx] > in.data[best]) best = idx;
            }
          out.data[o] = in.data[best];
          if (argmax) (*argmax)[static_cast<std::size_t>(o)] = best;
        }
    }
  return out;
}

template <typename Scalar>
Tensor4<Scalar> relu_forward(Tensor4<Scalar> in) {
  in.data = in.data.cwiseMax(Scalar(0));
  return in;
}

template <typename Scalar>
Tensor4<Scalar> softmax_forward(Tensor4<Scalar> in) {
  auto m = in.matrix();
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    auto col = m.col(j);
    const Scalar mx = col.maxCoeff();
    col = (col.array() - mx).exp();
    col /= col.sum();
  }
  return in;
}

namespace {

template <typename Scalar>
Tensor4<Scalar> fc_forward(const Tensor4<Scalar>& in, const LayerParams<Scalar>& p) {
  require(p.weights.rows() == in.sample_size(), "fully connected weights do not match input size");
  Tensor4<Scalar> out(in.n, static_cast<int>(p.weights.cols()), 1, 1);
  auto o = out.matrix();
  o.noalias() = p.weights.transpose() * in.matrix();
  o.colwise() += p.bias;
  return out;
}

}  // namespace

template <typename Scalar>
ForwardPass<Scalar> forward(const NetworkSpec& spec, const Parameters<Scalar>& params, Tensor4<Scalar> input, Mode mode,
                            Rng* rng) {
  require(input.shape() == spec.input, "forward: input shape does not match the network");
  require(params.layers.size() == spec.layers.size(), "forward: parameters do not match the network");
  ForwardPass<Scalar> pass;
  pass.mode = mode;
  pass.params = &params;
  pass.params_version = params.version;
  pass.pool_argmax.resize(spec.layers.size());
  pass.dropout_mask.resize(spec.layers.size());
  pass.activations.reserve(spec.layers.size() + 1);
  pass.activations.push_back(std::move(input));
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    const Tensor4<Scalar>& x = pass.activations.back();
    Tensor4<Scalar> y;
    switch (l.kind) {
      case LayerKind::conv: y = conv_forward(x, params.layers[i], l.kernel, l.stride, l.pad); break;
      case LayerKind::relu: y = relu_forward(x); break;
      case LayerKind::max_pool: y = max_pool_forward(x, l.kernel, &pass.pool_argmax[i]); break;
      case LayerKind::fully_connected: y = fc_forward(x, params.layers[i]); break;
      case LayerKind::dropout:
        y = x;
        if (mode == Mode::train && l.rate > 0.0) {
          require(rng != nullptr, "train-mode dropout needs an rng");
          const double keep = 1.0 - l.rate;
          std::bernoulli_distribution coin(keep);
          auto& mask = pass.dropout_mask[i];
          mask.resize(x.data.size());
          for (Eigen::Index k = 0; k < mask.size(); ++k) mask[k] = coin(*rng) ? Scalar(1.0 / keep) : Scalar(0);
          y.data.array() *= mask;
        }
        break;
      case LayerKind::softmax: y = softmax_forward(x); break;
    }
    pass.activations.push_back(std::move(y));
  }
  return pass;
}

template <typename Scalar>
Scalar cross_entropy_loss(const Tensor4<Scalar>& probs, std::span<const int> labels) {
  require(static_cast<int>(labels.size()) == probs.n, "loss: label count does not match batch");
  const auto m = probs.matrix();
  double total = 0.0;
  for (int j = 0; j < probs.n; ++j) {
    require(labels[j] >= 0 && labels[j] < m.rows(), "loss: label out of range");
    total -= std::log(std::max(static_cast<double>(m(labels[j], j)), 1e-12));
  }
  return static_cast<Scalar>(total / probs.n);
}

template <typename Scalar>
Parameters<Scalar> backward(const NetworkSpec& spec, const Parameters<Scalar>& params, const ForwardPass<Scalar>& pass,
                            std::span<const int> labels) {
  require(pass.activations.size() == spec.layers.size() + 1, "backward: missing forward cache");
  require(pass.params == &params && pass.params_version == params.version, "backward: stale forward cache");
  require(!spec.layers.empty() && spec.layers.back().kind == LayerKind::softmax, "backward: network must end in softmax");
  const auto& probs = pass.output();
  require(static_cast<int>(labels.size()) == probs.n, "backward: label count does not match batch");

  Parameters<Scalar> grads = params.zeros_like();
  const Scalar inv_n = Scalar(1) / Scalar(probs.n);

  // d(mean CE)/d(logits) = (softmax - onehot) / batch.
  Tensor4<Scalar> g = probs;
  {
    auto gm = g.matrix();
    for (int j = 0; j < probs.n; ++j) gm(labels[j], j) -= Scalar(1);
    g.data *= inv_n;
  }

  for (int i = static_cast<int>(spec.layers.size()) - 2; i >= 0; --i) {
    const auto& l = spec.layers[i];
    const Tensor4<Scalar>& x = pass.activations[i];
    const bool need_input_grad = i > 0;
    switch (l.kind) {
      case LayerKind::fully_connected: {
        const auto& p = params.layers[i];
        auto& gp = grads.layers[i];
        gp.weights.noalias() = x.matrix() * g.matrix().transpose();
        gp.bias = g.matrix().rowwise().sum();
        if (need_input_grad) {
          Tensor4<Scalar> gx(x.n, x.c, x.h, x.w);
          gx.matrix().noalias() = p.weights * g.matrix();
          g = std::move(gx);
        }
        break;
      }
      case LayerKind::conv: {
        const auto& p = params.layers[i];
        auto& gp = grads.layers[i];
        const int out_h = g.h, out_w = g.w;
        Tensor4<Scalar> gx;
        if (need_input_grad) gx = Tensor4<Scalar>(x.n, x.c, x.h, x.w);
        Mat<Scalar> col, dcol;
        for (int s = 0; s < x.n; ++s) {
          im2col(x.sample(s), x.c, x.h, x.w, l.kernel, l.stride, l.pad, out_h, out_w, col);
          Eigen::Map<const Mat<Scalar>> go(g.sample(s), Eigen::Index(out_h) * out_w, g.c);
          gp.weights.noalias() += col.transpose() * go;
          gp.bias += go.colwise().sum().transpose();
          if (need_input_grad) {
            dcol.noalias() = go * p.weights.transpose();
            col2im_add(dcol, x.c, x.h, x.w, l.kernel, l.stride, l.pad, out_h, out_w, gx.sample(s));
          }
        }
        if (need_input_grad) g = std::move(gx);
        break;
      }
      case LayerKind::relu: {
        g.data.array() *= (x.data.array() > Scalar(0)).template cast<Scalar>();
        break;
      }
      case LayerKind::max_pool: {
        Tensor4<Scalar> gx(x.n, x.c, x.h, x.w);
        const auto& argmax = pass.pool_argmax[i];
        for (Eigen::Index o = 0; o < g.data.size(); ++o) gx.data[argmax[static_cast<std::size_t>(o)]] += g.data[o];
        g = std::move(gx);
        break;
      }
      case LayerKind::dropout: {
        const auto& mask = pass.dropout_mask[i];
        if (mask.size() > 0) g.data.array() *= mask;
        break;
      }
      case LayerKind::softmax: throw ContractError("softmax only allowed as the last layer");
    }
  }
  return grads;
}

template <typename Scalar>
void sgd_step(Parameters<Scalar>& params, const Parameters<Scalar>& grads, Parameters<Scalar>& velocity, Scalar lr,
              Scalar momentum) {
  require(lr > Scalar(0), "sgd: learning rate must be positive");
  require(momentum >= Scalar(0) && momentum < Scalar(1), "sgd: momentum outside [0,1)");
  require(grads.layers.size() == params.layers.size(), "sgd: gradient structure mismatch");
  if (!grads.all_finite()) throw NumericalError("sgd: non-finite gradient");
  if (velocity.layers.size() != params.layers.size()) velocity = params.zeros_like();
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    auto& p = params.layers[i];
    auto& v = velocity.layers[i];
    const auto& g = grads.layers[i];
    v.weights = momentum * v.weights - lr * g.weights;
    v.bias = momentum * v.bias - lr * g.bias;
    p.weights += v.weights;
    p.bias += v.bias;
  }
  ++params.version;
}

template <typename Scalar>
std::vector<int> predict(const Tensor4<Scalar>& probs) {
  const auto m = probs.matrix();
  std::vector<int> out(static_cast<std::size_t>(probs.n));
  for (int j = 0; j < probs.n; ++j) {
    Eigen::Index arg;
    m.col(j).maxCoeff(&arg);
    out[j] = static_cast<int>(arg);
  }
  return out;
}

namespace {
constexpr std::uint32_t kModelVersion = 1;
}

void save_model(const std::filesystem::path& path, const Model& model) {
  validate(model.spec);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write " + path.string());
  io::write_magic(os, "EXNW");
  io::write_pod(os, kModelVersion);
  io::write_pod(os, static_cast<std::uint32_t>(model.spec.input.channels));
  io::write_pod(os, static_cast<std::uint32_t>(model.spec.input.height));
  io::write_pod(os, static_cast<std::uint32_t>(model.spec.input.width));
  io::write_pod(os, static_cast<std::uint32_t>(model.spec.layers.size()));
  for (const auto& l : model.spec.layers) {
    io::write_pod(os, static_cast<std::uint32_t>(l.kind));
    for (int v : {l.out_channels, l.kernel, l.stride, l.pad, l.units}) io::write_pod(os, static_cast<std::int32_t>(v));
    io::write_pod(os, static_cast<float>(l.rate));
  }
  for (std::size_t i = 0; i < model.spec.layers.size(); ++i) {
    if (!model.spec.layers[i].has_parameters()) continue;
    const auto& p = model.params.layers[i];
    io::write_array(os, p.weights.data(), static_cast<std::size_t>(p.weights.size()));
    io::write_array(os, p.bias.data(), static_cast<std::size_t>(p.bias.size()));
  }
  io::write_pod(os, static_cast<std::uint32_t>(model.input_mean.size()));
  io::write_array(os, model.input_mean.data(), static_cast<std::size_t>(model.input_mean.size()));
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  io::expect_magic(is, "EXNW");
  if (io::read_pod<std::uint32_t>(is) != kModelVersion) throw FormatError("unsupported checkpoint version");
  Model model;
  model.spec.input.channels = static_cast<int>(io::read_pod<std::uint32_t>(is));
  model.spec.input.height = static_cast<int>(io::read_pod<std::uint32_t>(is));
  model.spec.input.width = static_cast<int>(io::read_pod<std::uint32_t>(is));
  const auto n_layers = io::read_pod<std::uint32_t>(is);
  if (n_layers > 1024) throw FormatError("implausible layer count");
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    LayerSpec l;
    const auto kind = io::read_pod<std::uint32_t>(is);
    if (kind > static_cast<std::uint32_t>(LayerKind::softmax)) throw FormatError("unknown layer kind");
    l.kind = static_cast<LayerKind>(kind);
    l.out_channels = io::read_pod<std::int32_t>(is);
    l.kernel = io::read_pod<std::int32_t>(is);
    l.stride = io::read_pod<std::int32_t>(is);
    l.pad = io::read_pod<std::int32_t>(is);
    l.units = io::read_pod<std::int32_t>(is);
    l.rate = io::read_pod<float>(is);
    model.spec.layers.push_back(l);
  }
  try {
    validate(model.spec);
  } catch (const ContractError& e) {
    throw FormatError(std::string("checkpoint holds an invalid network: ") + e.what());
  }
  const auto shapes = model.spec.shapes();
  model.params.layers.resize(n_layers);
  for (std::size_t i = 0; i < n_layers; ++i) {
    const auto& l = model.spec.layers[i];
    if (!l.has_parameters()) continue;
    const Eigen::Index fan_in =
        l.kind == LayerKind::conv ? Eigen::Index(shapes[i].channels) * l.kernel * l.kernel : shapes[i].size();
    const Eigen::Index fan_out = l.kind == LayerKind::conv ? l.out_channels : l.units;
    auto& p = model.params.layers[i];
    p.weights.resize(fan_in, fan_out);
    p.bias.resize(fan_out);
    io::read_array(is, p.weights.data(), static_cast<std::size_t>(p.weights.size()));
    io::read_array(is, p.bias.data(), static_cast<std::size_t>(p.bias.size()));
  }
  const auto mean_len = io::read_pod<std::uint32_t>(is);
  if (mean_len != 0 && mean_len != model.spec.input.size()) throw FormatError("input mean has the wrong length");
  model.input_mean.resize(mean_len);
  io::read_array(is, model.input_mean.data(), mean_len);
  io::expect_eof(is);
  return model;
}

#define EXEMPLAR_INSTANTIATE(S)                                                                                     \
  template struct Parameters<S>;                                                                                   \
  template ForwardPass<S> forward(const NetworkSpec&, const Parameters<S>&, Tensor4<S>, Mode, Rng*);               \
  template S cross_entropy_loss(const Tensor4<S>&, std::span<const int>);                                          \
  template Parameters<S> backward(const NetworkSpec&, const Parameters<S>&, const ForwardPass<S>&,                 \
                                  std::span<const int>);                                                            \
  template void sgd_step(Parameters<S>&, const Parameters<S>&, Parameters<S>&, S, S);                              \
  template std::vector<int> predict(const Tensor4<S>&);                                                            \
  template Tensor4<S> conv_forward(const Tensor4<S>&, const LayerParams<S>&, int, int, int);                       \
  template Tensor4<S> max_pool_forward(const Tensor4<S>&, int, std::vector<Eigen::Index>*);                        \
  template Tensor4<S> relu_forward(Tensor4<S>);                                                                    \
  template Tensor4<S> softmax_forward(Tensor4<S>);

EXEMPLAR_INSTANTIATE(float)
EXEMPLAR_INSTANTIATE(double)

#undef EXEMPLAR_INSTANTIATE

}  // namespace exemplar
