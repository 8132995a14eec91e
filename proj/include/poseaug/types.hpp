#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "poseaug/error.hpp"

namespace poseaug {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Raster size, height first.
struct Size {
  int height = 0;
  int width = 0;

  friend bool operator==(const Size&, const Size&) = default;
};

/// Integer pixel rectangle covering columns [x, x + width) and rows [y, y + height).
struct Rect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  [[nodiscard]] bool empty() const { return width <= 0 || height <= 0; }
  [[nodiscard]] bool contains(int px, int py) const {
    return px >= x && px < x + width && py >= y && py < y + height;
  }

  friend bool operator==(const Rect&, const Rect&) = default;
};

inline Rect clip_rect(Rect r, Size bounds) {
  const int x0 = std::max(r.x, 0);
  const int y0 = std::max(r.y, 0);
  const int x1 = std::min(r.x + r.width, bounds.width);
  const int y1 = std::min(r.y + r.height, bounds.height);
  return {x0, y0, std::max(0, x1 - x0), std::max(0, y1 - y0)};
}

/// Dense RGB raster, values in [0, 1], interleaved row-major (y, x, channel).
class Image {
 public:
  static constexpr int kChannels = 3;

  Image() = default;
  Image(int height, int width, double fill = 0.0) : height_(height), width_(width) {
    if (height <= 0 || width <= 0) throw InvalidParameter("Image: dimensions must be positive");
    pixels_.assign(static_cast<std::size_t>(height) * width * kChannels, fill);
  }

  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] Size size() const { return {height_, width_}; }
  [[nodiscard]] bool empty() const { return pixels_.empty(); }

  double& at(int y, int x, int c) { return pixels_[index(y, x, c)]; }
  [[nodiscard]] double at(int y, int x, int c) const { return pixels_[index(y, x, c)]; }

  [[nodiscard]] std::vector<double>& pixels() { return pixels_; }
  [[nodiscard]] const std::vector<double>& pixels() const { return pixels_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  [[nodiscard]] std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * kChannels + c;
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<double> pixels_;
};

/// k-channel response maps at 1/stride of the image resolution, channel-major.
struct Heatmap {
  int channels = 0;
  int height = 0;
  int width = 0;
  int stride = 4;
  std::vector<double> values;
  /// Set on teacher signals; consumers that backpropagate must refuse to differentiate through them.
  bool no_grad = false;

  Heatmap() = default;
  Heatmap(int k, int h, int w, int s) : channels(k), height(h), width(w), stride(s) {
    values.assign(static_cast<std::size_t>(k) * h * w, 0.0);
  }

  [[nodiscard]] std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
  double& at(int c, int y, int x) { return values[c * plane() + static_cast<std::size_t>(y) * width + x]; }
  [[nodiscard]] double at(int c, int y, int x) const {
    return values[c * plane() + static_cast<std::size_t>(y) * width + x];
  }
  [[nodiscard]] bool same_shape(const Heatmap& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
};

inline Heatmap detach(Heatmap h) {
  h.no_grad = true;
  return h;
}

enum class JointState { invisible, visible, predicted };

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  JointState state = JointState::invisible;
  /// Meaningful only for predicted joints.
  double confidence = 0.0;

  [[nodiscard]] bool usable() const { return state != JointState::invisible; }
  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

struct KeypointSet {
  std::vector<Keypoint> joints;

  KeypointSet() = default;
  explicit KeypointSet(std::size_t k) : joints(k) {}

  [[nodiscard]] std::size_t size() const { return joints.size(); }
  Keypoint& operator[](std::size_t i) { return joints[i]; }
  const Keypoint& operator[](std::size_t i) const { return joints[i]; }

  friend bool operator==(const KeypointSet&, const KeypointSet&) = default;
};

}  // namespace poseaug
