#pragma once

// Affine transforms over images, keypoints and heatmaps, plus Gaussian
// heatmap rendering and argmax decoding.
//
// Pixel convention: y points down, origin at the top-left pixel, pixel
// centers at integer coordinates. A heatmap pixel (u, v) corresponds to the
// image pixel (stride * u, stride * v).

#include <array>
#include <cmath>
#include <numbers>

#include "poseaug/error.hpp"
#include "poseaug/types.hpp"

namespace poseaug {

/// Invertible 2x3 map from source pixel (x, y, 1) to destination pixel,
/// together with the rotation/scale it was generated from.
struct AffineMap {
  /// Row-major [a b tx; c d ty].
  std::array<double, 6> matrix{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};
  double rotation_deg = 0.0;
  double scale = 1.0;
  Point2 center{};

  [[nodiscard]] Point2 apply(Point2 p) const {
    return {matrix[0] * p.x + matrix[1] * p.y + matrix[2], matrix[3] * p.x + matrix[4] * p.y + matrix[5]};
  }
  [[nodiscard]] double det() const { return matrix[0] * matrix[4] - matrix[1] * matrix[3]; }

  static AffineMap identity() { return {}; }

  static AffineMap translation(double dx, double dy) {
    AffineMap a;
    a.matrix = {1.0, 0.0, dx, 0.0, 1.0, dy};
    return a;
  }
};

namespace detail {

// Exact cos/sin for multiples of 90 degrees so axis rotations are bit-exact.
inline std::array<double, 2> cos_sin_deg(double deg) {
  const double turns = deg / 90.0;
  if (turns == std::nearbyint(turns)) {
    switch (((static_cast<long long>(turns) % 4) + 4) % 4) {
      case 0: return {1.0, 0.0};
      case 1: return {0.0, 1.0};
      case 2: return {-1.0, 0.0};
      default: return {0.0, -1.0};
    }
  }
  const double th = deg * std::numbers::pi / 180.0;
  return {std::cos(th), std::sin(th)};
}

}  // namespace detail

/// translate(center) * rotate(rotation_deg) * scale(scale) * translate(-center).
inline AffineMap make_affine(double rotation_deg, double scale, Point2 center) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidParameter("make_affine: scale must be positive");
  const auto [c, s] = detail::cos_sin_deg(rotation_deg);
  AffineMap a;
  const double la = scale * c;
  const double lb = -scale * s;
  const double lc = scale * s;
  const double ld = scale * c;
  a.matrix = {la, lb, center.x - (la * center.x + lb * center.y),
              lc, ld, center.y - (lc * center.x + ld * center.y)};
  a.rotation_deg = rotation_deg;
  a.scale = scale;
  a.center = center;
  return a;
}

/// The map p -> second(first(p)).
inline AffineMap compose(const AffineMap& second, const AffineMap& first) {
  const auto& s = second.matrix;
  const auto& f = first.matrix;
  AffineMap r;
  r.matrix = {s[0] * f[0] + s[1] * f[3], s[0] * f[1] + s[1] * f[4], s[0] * f[2] + s[1] * f[5] + s[2],
              s[3] * f[0] + s[4] * f[3], s[3] * f[1] + s[4] * f[4], s[3] * f[2] + s[4] * f[5] + s[5]};
  r.rotation_deg = second.rotation_deg + first.rotation_deg;
  r.scale = second.scale * first.scale;
  // Pivot = fixed point of the composite when one exists.
  const double m00 = 1.0 - r.matrix[0];
  const double m01 = -r.matrix[1];
  const double m10 = -r.matrix[3];
  const double m11 = 1.0 - r.matrix[4];
  const double d = m00 * m11 - m01 * m10;
  if (std::abs(d) > 1e-9) {
    r.center = {(m11 * r.matrix[2] - m01 * r.matrix[5]) / d, (-m10 * r.matrix[2] + m00 * r.matrix[5]) / d};
  } else {
    r.center = second.center;
  }
  return r;
}

inline AffineMap invert(const AffineMap& a) {
  const double d = a.det();
  if (!(std::abs(d) >= 1e-12)) throw DegenerateTransform("invert: singular affine map");
  const auto& m = a.matrix;
  AffineMap r;
  const double ia = m[4] / d;
  const double ib = -m[1] / d;
  const double ic = -m[3] / d;
  const double id = m[0] / d;
  r.matrix = {ia, ib, -(ia * m[2] + ib * m[5]), ic, id, -(ic * m[2] + id * m[5])};
  r.rotation_deg = -a.rotation_deg;
  r.scale = 1.0 / a.scale;
  r.center = a.center;
  return r;
}

/// Expresses an image-pixel map in heatmap pixels: translation divided by stride.
inline AffineMap to_heatmap_frame(const AffineMap& a, int stride) {
  AffineMap h = a;
  h.matrix[2] /= stride;
  h.matrix[5] /= stride;
  h.center = {a.center.x / stride, a.center.y / stride};
  return h;
}

namespace detail {

// Bilinear sample of `channels` interleaved values at (x, y); taps outside the raster read 0.
inline void sample_bilinear(const double* data, int height, int width, int channels, std::ptrdiff_t channel_step,
                            std::ptrdiff_t pixel_step, double x, double y, double* out) {
  for (int c = 0; c < channels; ++c) out[c] = 0.0;
  if (!(x > -1.0 && x < width && y > -1.0 && y < height)) return;
  const double fx0 = std::floor(x);
  const double fy0 = std::floor(y);
  const int x0 = static_cast<int>(fx0);
  const int y0 = static_cast<int>(fy0);
  const double wx = x - fx0;
  const double wy = y - fy0;
  const double w[4] = {(1.0 - wx) * (1.0 - wy), wx * (1.0 - wy), (1.0 - wx) * wy, wx * wy};
  const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
  const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
  for (int t = 0; t < 4; ++t) {
    if (w[t] == 0.0) continue;
    if (xs[t] < 0 || xs[t] >= width || ys[t] < 0 || ys[t] >= height) continue;
    const double* px = data + (static_cast<std::ptrdiff_t>(ys[t]) * width + xs[t]) * pixel_step;
    for (int c = 0; c < channels; ++c) out[c] += w[t] * px[c * channel_step];
  }
}

}  // namespace detail

/// Resamples `img` through `a` (source -> destination) into a raster of `out_size`.
/// Bilinear interpolation, zero outside the source.
inline Image warp_image(const Image& img, const AffineMap& a, Size out_size) {
  if (out_size.height <= 0 || out_size.width <= 0) throw InvalidParameter("warp_image: output size must be positive");
  const AffineMap inv = invert(a);
  const auto& m = inv.matrix;
  Image out(out_size.height, out_size.width);
  double px[Image::kChannels];
  for (int y = 0; y < out_size.height; ++y) {
    for (int x = 0; x < out_size.width; ++x) {
      const double sx = m[0] * x + m[1] * y + m[2];
      const double sy = m[3] * x + m[4] * y + m[5];
      detail::sample_bilinear(img.pixels().data(), img.height(), img.width(), Image::kChannels, 1, Image::kChannels,
                              sx, sy, px);
      for (int c = 0; c < Image::kChannels; ++c) out.at(y, x, c) = std::clamp(px[c], 0.0, 1.0);
    }
  }
  return out;
}

inline bool inside_raster(Point2 p, Size raster) {
  return p.x >= 0.0 && p.x <= raster.width - 1 && p.y >= 0.0 && p.y <= raster.height - 1;
}

/// Maps each joint through `a`; joints landing outside `raster` become invisible.
inline KeypointSet warp_points(const KeypointSet& kps, const AffineMap& a, Size raster) {
  KeypointSet out = kps;
  for (auto& j : out.joints) {
    const Point2 p = a.apply({j.x, j.y});
    j.x = p.x;
    j.y = p.y;
    if (j.usable() && !inside_raster(p, raster)) {
      j.state = JointState::invisible;
      j.confidence = 0.0;
    }
  }
  return out;
}

/// Warps every channel of `hm` by an image-pixel map `a` (rescaled to heatmap pixels).
inline Heatmap warp_heatmap(const Heatmap& hm, const AffineMap& a) {
  const AffineMap inv = invert(to_heatmap_frame(a, hm.stride));
  const auto& m = inv.matrix;
  Heatmap out(hm.channels, hm.height, hm.width, hm.stride);
  out.no_grad = hm.no_grad;
  for (int c = 0; c < hm.channels; ++c) {
    const double* plane = hm.values.data() + c * hm.plane();
    for (int y = 0; y < hm.height; ++y) {
      for (int x = 0; x < hm.width; ++x) {
        const double sx = m[0] * x + m[1] * y + m[2];
        const double sy = m[3] * x + m[4] * y + m[5];
        double v = 0.0;
        detail::sample_bilinear(plane, hm.height, hm.width, 1, 0, 1, sx, sy, &v);
        out.at(c, y, x) = v;
      }
    }
  }
  return out;
}

/// One Gaussian channel per joint, peaked at the joint's quantized heatmap pixel and
/// truncated to a 6-sigma window. Invisible joints and joints whose peak falls outside
/// the heatmap give all-zero channels.
inline Heatmap render_heatmaps(const KeypointSet& kps, Size image_size, int stride, double sigma) {
  if (!(sigma > 0.0)) throw InvalidParameter("render_heatmaps: sigma must be positive");
  if (stride <= 0 || image_size.height % stride != 0 || image_size.width % stride != 0) {
    throw ShapeError("render_heatmaps: image size must be divisible by stride");
  }
  const int h = image_size.height / stride;
  const int w = image_size.width / stride;
  Heatmap hm(static_cast<int>(kps.size()), h, w, stride);
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  const double denom = 2.0 * sigma * sigma;
  for (int c = 0; c < hm.channels; ++c) {
    const Keypoint& j = kps[c];
    if (!j.usable()) continue;
    if (!inside_raster({j.x, j.y}, image_size)) continue;
    // Joints in the last half stride quantize past the map edge; keep them on the border cell.
    const int mx = std::min(w - 1, static_cast<int>(std::floor(j.x / stride + 0.5)));
    const int my = std::min(h - 1, static_cast<int>(std::floor(j.y / stride + 0.5)));
    for (int y = std::max(0, my - radius); y <= std::min(h - 1, my + radius); ++y) {
      for (int x = std::max(0, mx - radius); x <= std::min(w - 1, mx + radius); ++x) {
        const double dx = x - mx;
        const double dy = y - my;
        hm.at(c, y, x) = std::exp(-(dx * dx + dy * dy) / denom);
      }
    }
  }
  return hm;
}

/// Per-channel argmax (first maximum in row-major order wins), scaled to image pixels.
inline KeypointSet decode_heatmaps(const Heatmap& hm) {
  KeypointSet out(static_cast<std::size_t>(hm.channels));
  for (int c = 0; c < hm.channels; ++c) {
    const double* plane = hm.values.data() + c * hm.plane();
    std::size_t best = 0;
    for (std::size_t i = 1; i < hm.plane(); ++i) {
      if (plane[i] > plane[best]) best = i;
    }
    Keypoint& j = out[c];
    j.x = static_cast<double>(best % hm.width) * hm.stride;
    j.y = static_cast<double>(best / hm.width) * hm.stride;
    j.state = JointState::predicted;
    j.confidence = hm.plane() > 0 ? std::clamp(plane[best], 0.0, 1.0) : 0.0;
  }
  return out;
}

}  // namespace poseaug
