#include "protonet/image.hpp"

#include <algorithm>
#include <cmath>

namespace protonet {

Plane to_grayscale(const Image& img) {
  if (img.channels() == 1) return img.planes[0];
  if (img.channels() != 3)
    throw Error("bad-image", "expected 1 or 3 channels, got " +
                                 std::to_string(img.channels()));
  return 0.299f * img.planes[0] + 0.587f * img.planes[1] +
         0.114f * img.planes[2];
}

Plane resize_bilinear(const Plane& src, int out_h, int out_w) {
  const int in_h = int(src.rows()), in_w = int(src.cols());
  if (in_h < 1 || in_w < 1 || out_h < 1 || out_w < 1)
    throw Error("bad-image", "empty image in resize");
  Plane dst(out_h, out_w);
  const float sy = float(in_h) / float(out_h);
  const float sx = float(in_w) / float(out_w);
  for (int y = 0; y < out_h; ++y) {
    // pixel-center alignment
    float fy = (float(y) + 0.5f) * sy - 0.5f;
    fy = std::clamp(fy, 0.0f, float(in_h - 1));
    const int y0 = int(std::floor(fy));
    const int y1 = std::min(y0 + 1, in_h - 1);
    const float wy = fy - float(y0);
    for (int x = 0; x < out_w; ++x) {
      float fx = (float(x) + 0.5f) * sx - 0.5f;
      fx = std::clamp(fx, 0.0f, float(in_w - 1));
      const int x0 = int(std::floor(fx));
      const int x1 = std::min(x0 + 1, in_w - 1);
      const float wx = fx - float(x0);
      dst(y, x) = (1 - wy) * ((1 - wx) * src(y0, x0) + wx * src(y0, x1)) +
                  wy * ((1 - wx) * src(y1, x0) + wx * src(y1, x1));
    }
  }
  return dst;
}

Image resize_bilinear(const Image& src, int out_h, int out_w) {
  Image out;
  out.planes.reserve(src.planes.size());
  for (const Plane& p : src.planes)
    out.planes.push_back(resize_bilinear(p, out_h, out_w));
  return out;
}

}  // namespace protonet
