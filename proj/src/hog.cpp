#include "protonet/hog.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace protonet {

void HogConfig::validate() const {
  if (resize_side <= 0 || cell_size <= 0)
    throw Error("invalid-config", "resize_side and cell_size must be positive");
  if (resize_side % cell_size != 0)
    throw Error("invalid-config", "resize_side must be a multiple of cell_size");
  if (block_overlap < 0 || block_size <= block_overlap)
    throw Error("invalid-config", "need block_size > block_overlap >= 0");
  if (num_bins < 2) throw Error("invalid-config", "num_bins must be >= 2");
  if (!(epsilon > 0)) throw Error("invalid-config", "epsilon must be positive");
  const int cells = resize_side / cell_size;
  if (cells < block_size)
    throw Error("invalid-config", "block does not fit in the resized image");
  if ((cells - block_size) % (block_size - block_overlap) != 0)
    throw Error("invalid-config", "block stride does not divide evenly");
}

int hog_dimension(const HogConfig& config) {
  config.validate();
  const int blocks = config.blocks_per_side();
  return blocks * blocks * config.block_size * config.block_size *
         config.num_bins;
}

Eigen::VectorXd hog_extract_raw(const Image& image, const HogConfig& config) {
  config.validate();
  if (image.height() < 2 || image.width() < 2)
    throw Error("degenerate-image", "image smaller than 2x2");

  const int s = config.resize_side;
  const Eigen::MatrixXd gray =
      resize_bilinear(to_grayscale(image), s, s).cast<double>();

  const int n = config.num_bins;
  const int cells = config.cells_per_side();
  const double range = config.signed_orientations ? 360.0 : 180.0;
  const double bin_width = range / n;

  // Per-cell orientation histograms: cell (cy,cx) occupies row cy*cells+cx.
  Eigen::MatrixXd hist = Eigen::MatrixXd::Zero(cells * cells, n);

  for (int y = 0; y < s; ++y) {
    const int ym = std::max(y - 1, 0), yp = std::min(y + 1, s - 1);
    for (int x = 0; x < s; ++x) {
      const int xm = std::max(x - 1, 0), xp = std::min(x + 1, s - 1);
      const double gx = gray(y, xp) - gray(y, xm);
      const double gy = gray(yp, x) - gray(ym, x);
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      double ang = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
      if (ang < 0) ang += 360.0;
      if (!config.signed_orientations && ang >= 180.0) ang -= 180.0;
      // split the vote linearly between the two nearest bin centers,
      // centers at i * bin_width, circular wrap
      const double t = ang / bin_width;
      const int b0 = int(t) % n;
      const int b1 = (b0 + 1) % n;
      const double frac = t - std::floor(t);
      const int cell = (y / config.cell_size) * cells + x / config.cell_size;
      hist(cell, b0) += mag * (1.0 - frac);
      hist(cell, b1) += mag * frac;
    }
  }

  const int b = config.block_size;
  const int stride = b - config.block_overlap;
  const int blocks = config.blocks_per_side();
  const int block_len = b * b * n;

  Eigen::VectorXd out(blocks * blocks * block_len);
  Eigen::VectorXd block(block_len);
  int offset = 0;
  for (int by = 0; by < blocks; ++by) {
    for (int bx = 0; bx < blocks; ++bx) {
      int pos = 0;
      for (int cy = 0; cy < b; ++cy)
        for (int cx = 0; cx < b; ++cx) {
          const int cell = (by * stride + cy) * cells + bx * stride + cx;
          block.segment(pos, n) = hist.row(cell);
          pos += n;
        }
      const double norm =
          std::sqrt(block.squaredNorm() + config.epsilon * config.epsilon);
      out.segment(offset, block_len) = block / norm;
      offset += block_len;
    }
  }
  return out;
}

Eigen::VectorXd hog_embed_prototype(const Image& image,
                                    const HogConfig& config) {
  Eigen::VectorXd raw = hog_extract_raw(image, config);
  const double norm = raw.norm();
  if (norm == 0.0)
    throw Error("degenerate-prototype",
                "prototype has no gradient structure (constant image)");
  return raw / norm;
}

}  // namespace protonet
