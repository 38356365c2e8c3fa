#include "exemplar/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "exemplar/augment.hpp"
#include "exemplar/binary_io.hpp"
#include "exemplar/error.hpp"

namespace exemplar {

std::vector<CellRange> pyramid_cells(int extent, int grid) {
  require(extent >= 1 && grid >= 1, "pyramid_cells: extent and grid must be positive");
  auto round_div = [&](int i) { return static_cast<int>(std::floor(static_cast<double>(i) * extent / grid + 0.5)); };
  std::vector<CellRange> cells(static_cast<std::size_t>(grid));
  for (int i = 0; i < grid; ++i) {
    const int begin = std::min(extent - 1, round_div(i));
    const int end = std::max(begin + 1, std::min(extent, round_div(i + 1)));
    cells[i] = {begin, end};
  }
  return cells;
}

namespace {

Tensor4<float> to_tensor(const Image& img) {
  Tensor4<float> t(1, 3, img.height, img.width);
  t.data = to_planar(img);
  return t;
}

Image prepare_input(const Model& model, const Image& image) {
  require(!image.empty(), "extract_features: empty image");
  Image img = image;
  const int need = std::max(model.spec.input.height, model.spec.input.width);
  const int short_side = std::min(img.height, img.width);
  if (short_side < need) {
    const double f = static_cast<double>(need) / short_side;
    img = resize_bilinear(img, std::max(need, static_cast<int>(std::ceil(img.height * f - 1e-9))),
                          std::max(need, static_cast<int>(std::ceil(img.width * f - 1e-9))));
  }
  return img;
}

}  // namespace

std::vector<Tensor4<float>> response_maps(const Model& model, const Image& image) {
  const NetworkSpec& spec = model.spec;
  const Image img = prepare_input(model, image);
  Tensor4<float> x = to_tensor(img);
  if (model.input_mean.size() > 0) {
    const Image mean = resize_bilinear(from_planar(model.input_mean, spec.input.height, spec.input.width), img.height, img.width);
    x.data -= to_planar(mean);
  }

  const auto shapes = spec.shapes();
  const std::size_t classifier = spec.layers.size() - 2;
  std::vector<Tensor4<float>> maps;
  for (std::size_t i = 0; i < classifier; ++i) {
    const auto& l = spec.layers[i];
    switch (l.kind) {
      case LayerKind::conv: x = conv_forward(x, model.params.layers[i], l.kernel, l.stride, l.pad); break;
      case LayerKind::relu:
        x = relu_forward(std::move(x));
        if (i > 0 && spec.layers[i - 1].kind == LayerKind::fully_connected) maps.back() = x;
        break;
      case LayerKind::max_pool:
        x = max_pool_forward(x, l.kernel);
        maps.push_back(x);
        break;
      case LayerKind::fully_connected:
        require(shapes[i].height == shapes[i].width, "convolutional FC needs a square input map");
        x = conv_forward(x, model.params.layers[i], shapes[i].height);
        maps.push_back(x);
        break;
      case LayerKind::dropout: break;  // identity at evaluation
      case LayerKind::softmax: break;
    }
  }
  return maps;
}

Eigen::VectorXf spatial_pyramid(std::span<const Tensor4<float>> maps) {
  Eigen::Index dim = 0;
  for (const auto& m : maps) dim += Eigen::Index(m.c) * 21;
  Eigen::VectorXf out(dim);
  Eigen::Index k = 0;
  for (const auto& m : maps) {
    require(m.n == 1, "spatial_pyramid expects single-image maps");
    for (int grid : kPyramidLevels) {
      const auto rows = pyramid_cells(m.h, grid);
      const auto cols = pyramid_cells(m.w, grid);
      for (const auto& r : rows)
        for (const auto& c : cols)
          for (int ch = 0; ch < m.c; ++ch) {
            float best = m.at(0, ch, r.begin, c.begin);
            for (int y = r.begin; y < r.end; ++y)
              for (int x = c.begin; x < c.end; ++x) best = std::max(best, m.at(0, ch, y, x));
            out[k++] = best;
          }
    }
  }
  return out;
}

int feature_dim(const NetworkSpec& spec) {
  const auto shapes = spec.shapes();
  int channels = 0;
  for (std::size_t i = 0; i + 2 < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    if (l.kind == LayerKind::max_pool || l.kind == LayerKind::fully_connected) channels += shapes[i + 1].channels;
  }
  return channels * 21;
}

Eigen::VectorXf extract_features(const Model& model, const Image& image) {
  const auto maps = response_maps(model, image);
  return spatial_pyramid(maps);
}

FeatureMatrix extract_batch(const Model& model, std::span<const Image> images) {
  FeatureMatrix out(static_cast<Eigen::Index>(images.size()), feature_dim(model.spec));
  for (std::size_t i = 0; i < images.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = extract_features(model, images[i]).transpose();
  return out;
}

namespace {
std::filesystem::path labels_sidecar(const std::filesystem::path& path) {
  auto p = path;
  p += ".labels";
  return p;
}
}  // namespace

void save_features(const std::filesystem::path& path, const FeatureMatrix& features, std::span<const int> labels) {
  require(labels.empty() || static_cast<Eigen::Index>(labels.size()) == features.rows(), "feature/label count mismatch");
  {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot write " + path.string());
    io::write_pod(os, static_cast<std::uint32_t>(features.rows()));
    io::write_pod(os, static_cast<std::uint32_t>(features.cols()));
    io::write_array(os, features.data(), static_cast<std::size_t>(features.size()));
  }
  std::ofstream ls(labels_sidecar(path), std::ios::binary);
  for (Eigen::Index i = 0; i < features.rows(); ++i)
    io::write_pod(ls, static_cast<std::int32_t>(labels.empty() ? -1 : labels[static_cast<std::size_t>(i)]));
}

FeatureMatrix load_features(const std::filesystem::path& path, std::vector<int>* labels) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  const auto count = io::read_pod<std::uint32_t>(is);
  const auto dim = io::read_pod<std::uint32_t>(is);
  FeatureMatrix f(count, dim);
  io::read_array(is, f.data(), static_cast<std::size_t>(f.size()));
  io::expect_eof(is);
  if (labels) {
    labels->assign(count, -1);
    std::ifstream ls(labels_sidecar(path), std::ios::binary);
    if (ls)
      for (auto& l : *labels) l = io::read_pod<std::int32_t>(ls);
  }
  return f;
}

void write_features_csv(const std::filesystem::path& path, const FeatureMatrix& features, std::span<const int> labels) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot write " + path.string());
  os.precision(9);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    os << (labels.empty() ? -1 : labels[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < features.cols(); ++j) os << ',' << features(i, j);
    os << '\n';
  }
}

}  // namespace exemplar
