#pragma once

// Procedural image generators used as fixture corpora.

#include <cstdint>
#include <vector>

#include "exemplar/imaging.hpp"

namespace exemplar::synth {

/// Unlabeled natural-ish images: smooth color ramps, flat regions, colored
/// shapes with hard edges, oriented gratings and mild noise.
std::vector<Image> textured_corpus(int count, int height, int width, std::uint64_t seed);

inline constexpr int kShapeClasses = 4;

/// Labeled object-like images: one foreground shape per image (0 disc,
/// 1 square, 2 triangle, 3 cross) of random color, size, position and
/// rotation over a cluttered textured background. Labels cycle 0..3.
std::vector<LabeledImage> shapes_dataset(int per_class, int side, std::uint64_t seed);

}  // namespace exemplar::synth
