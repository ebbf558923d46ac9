#include "protonet/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

namespace protonet {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Image read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw Error("missing-file", path);

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("bad-image", "libpng init failed");
  }
  std::vector<png_bytep> row_ptrs;
  std::vector<png_byte> pixels;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("bad-image", "failed to decode " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  png_set_expand(png);      // palette/low-bit-depth -> 8-bit
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int h = int(png_get_image_height(png, info));
  const int w = int(png_get_image_width(png, info));
  const int ch = int(png_get_channels(png, info));
  if (ch != 1 && ch != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("bad-image", path + ": unsupported channel count");
  }
  pixels.resize(size_t(h) * size_t(w) * size_t(ch));
  row_ptrs.resize(size_t(h));
  for (int y = 0; y < h; ++y)
    row_ptrs[size_t(y)] = pixels.data() + size_t(y) * size_t(w) * size_t(ch);
  png_read_image(png, row_ptrs.data());
  png_destroy_read_struct(&png, &info, nullptr);

  Image img;
  for (int c = 0; c < ch; ++c) img.planes.emplace_back(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c)
        img.planes[size_t(c)](y, x) =
            float(pixels[(size_t(y) * size_t(w) + size_t(x)) * size_t(ch) +
                         size_t(c)]) /
            255.0f;
  return img;
}

void write_png_gray(const std::string& path, const Plane& plane) {
  const int h = int(plane.rows()), w = int(plane.cols());
  if (h < 1 || w < 1) throw Error("bad-image", "empty image for " + path);

  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw Error("io-error", "cannot write " + path);

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error("io-error", "libpng init failed");
  }
  std::vector<png_byte> pixels(size_t(h) * size_t(w), 0);
  std::vector<png_bytep> row_ptrs(size_t(h), nullptr);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("io-error", "failed to encode " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, png_uint_32(w), png_uint_32(h), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float v = std::clamp(plane(y, x), 0.0f, 1.0f);
      pixels[size_t(y) * size_t(w) + size_t(x)] =
          png_byte(std::lround(v * 255.0f));
    }
    row_ptrs[size_t(y)] = pixels.data() + size_t(y) * size_t(w);
  }
  png_set_rows(png, info, row_ptrs.data());
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace protonet
