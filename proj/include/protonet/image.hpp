#pragma once

#include <Eigen/Core>
#include <vector>

#include "protonet/error.hpp"

namespace protonet {

using Plane = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic>;

// Pixel intensities in [0,1]; one plane per channel (1 = grayscale, 3 = RGB).
struct Image {
  std::vector<Plane> planes;

  Image() = default;
  explicit Image(Plane gray) { planes.push_back(std::move(gray)); }

  int height() const { return planes.empty() ? 0 : int(planes[0].rows()); }
  int width() const { return planes.empty() ? 0 : int(planes[0].cols()); }
  int channels() const { return int(planes.size()); }
  bool grayscale() const { return planes.size() == 1; }
};

// Rec. 601 luma weights (0.299/0.587/0.114). Identity for grayscale input.
Plane to_grayscale(const Image& img);

// Bilinear resampling to out_h x out_w.
Plane resize_bilinear(const Plane& src, int out_h, int out_w);

Image resize_bilinear(const Image& src, int out_h, int out_w);

}  // namespace protonet
