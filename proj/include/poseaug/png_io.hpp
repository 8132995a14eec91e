#pragma once

// 8-bit RGB PNG exchange. Load maps byte b to b / 255; save rounds half-up.

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "poseaug/error.hpp"
#include "poseaug/types.hpp"

namespace poseaug {

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace detail

inline std::uint8_t to_byte(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::floor(c * 255.0 + 0.5));
}

inline Image load_png(const std::string& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&img, path.c_str()) == 0) {
    throw IoError("cannot read PNG " + path + ": " + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(img));
  if (png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr) == 0) {
    png_image_free(&img);
    throw IoError("cannot decode PNG " + path + ": " + img.message);
  }
  Image out(static_cast<int>(img.height), static_cast<int>(img.width));
  auto& px = out.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = buf[i] / 255.0;
  return out;
}

inline void save_png(const std::string& path, const Image& image) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buf(image.pixels().size());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = to_byte(image.pixels()[i]);
  detail::FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw IoError("cannot open " + path + " for writing");
  if (png_image_write_to_stdio(&img, f.get(), 0, buf.data(), 0, nullptr) == 0) {
    throw IoError("cannot write PNG " + path + ": " + img.message);
  }
}

}  // namespace poseaug
