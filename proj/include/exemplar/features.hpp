#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <span>
#include <vector>

#include "exemplar/imaging.hpp"
#include "exemplar/net.hpp"

namespace exemplar {

/// Samples as rows.
using FeatureMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr int kPyramidLevels[] = {1, 2, 4};

struct CellRange {
  int begin = 0;
  int end = 0;  // exclusive, always > begin
};

/// Cell i of a g-way split of [0, extent): [round(i*E/g), round((i+1)*E/g)),
/// widened to one element when it would be empty.
std::vector<CellRange> pyramid_cells(int extent, int grid);

/// Responses of every pooled conv stage and of each hidden fully connected
/// layer applied as a convolution, for one image of any size >= the network
/// input. The image has the model's input mean (resized) subtracted first.
std::vector<Tensor4<float>> response_maps(const Model& model, const Image& image);

/// Per map, per level (1x1, 2x2, 4x4), per cell (row-major), per channel:
/// the max over the cell.
Eigen::VectorXf spatial_pyramid(std::span<const Tensor4<float>> maps);

int feature_dim(const NetworkSpec& spec);

/// Images with a side below the network input are upscaled (aspect kept).
Eigen::VectorXf extract_features(const Model& model, const Image& image);
FeatureMatrix extract_batch(const Model& model, std::span<const Image> images);

/// Dump: u32 count, u32 dim, then count rows of dim f32. Labels (i32, -1 when
/// unknown) go to a ".labels" sidecar.
void save_features(const std::filesystem::path& path, const FeatureMatrix& features, std::span<const int> labels);
FeatureMatrix load_features(const std::filesystem::path& path, std::vector<int>* labels = nullptr);
void write_features_csv(const std::filesystem::path& path, const FeatureMatrix& features, std::span<const int> labels);

}  // namespace exemplar
