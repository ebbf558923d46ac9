#pragma once

#include <Eigen/Core>

#include "protonet/image.hpp"

namespace protonet {

// Dense gradient-orientation histogram parameters. The default values give
// 3888-dimensional features (9x9 blocks of 2x2 cells, 12 bins each).
struct HogConfig {
  int resize_side = 100;      // s
  int cell_size = 10;         // c, pixels per cell side
  int block_size = 2;         // b, cells per block side
  int block_overlap = 1;      // o, cells shared between adjacent blocks
  int num_bins = 12;          // n
  bool signed_orientations = false;  // false: fold angles to [0, 180)
  double epsilon = 1e-5;      // block normalization: v / sqrt(|v|^2 + eps^2)

  void validate() const;
  int cells_per_side() const { return resize_side / cell_size; }
  int blocks_per_side() const {
    return (cells_per_side() - block_size) / (block_size - block_overlap) + 1;
  }

  bool operator==(const HogConfig&) const = default;
};

// Feature length k = blocks_per_side^2 * b^2 * n.
int hog_dimension(const HogConfig& config);

// Raw block-normalized descriptor, length hog_dimension(config).
// Blocks in row-major order, cells row-major within a block, bins in
// increasing-angle order.
Eigen::VectorXd hog_extract_raw(const Image& image, const HogConfig& config);

// Unit-norm prototype embedding. Throws "degenerate-prototype" when the raw
// descriptor is all zeros (a constant image has no direction).
Eigen::VectorXd hog_embed_prototype(const Image& image,
                                    const HogConfig& config);

}  // namespace protonet
