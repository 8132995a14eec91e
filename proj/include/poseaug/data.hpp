#pragma once

// COCO keypoint annotations, the synthetic stick-figure generator and
// labeled/unlabeled splitting.

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "poseaug/augment.hpp"
#include "poseaug/error.hpp"
#include "poseaug/geometry.hpp"
#include "poseaug/png_io.hpp"
#include "poseaug/rng.hpp"
#include "poseaug/types.hpp"

namespace poseaug {

enum class Profile { body17, hand21, synth13, fisheye_body, generic };

inline std::string to_string(Profile p) {
  switch (p) {
    case Profile::body17: return "body17";
    case Profile::hand21: return "hand21";
    case Profile::synth13: return "synth13";
    case Profile::fisheye_body: return "fisheye-body";
    case Profile::generic: return "generic";
  }
  return "generic";
}

inline Profile parse_profile(const std::string& s) {
  for (Profile p : {Profile::body17, Profile::hand21, Profile::synth13, Profile::fisheye_body, Profile::generic}) {
    if (to_string(p) == s) return p;
  }
  throw InvalidParameter("unknown dataset profile '" + s + "' (expected body17, hand21, synth13, fisheye-body)");
}

inline int profile_joints(Profile p) {
  switch (p) {
    case Profile::body17:
    case Profile::fisheye_body: return 17;
    case Profile::hand21: return 21;
    case Profile::synth13: return 13;
    case Profile::generic: return 0;
  }
  return 0;
}

inline GeometryProfile geometry_of(Profile p) {
  return p == Profile::fisheye_body ? GeometryProfile::fisheye : GeometryProfile::normal;
}

struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  [[nodiscard]] double diagonal() const { return std::hypot(w, h); }
  friend bool operator==(const BBox&, const BBox&) = default;
};

struct DatasetSample {
  int image_id = 0;
  int annotation_id = 0;
  std::string file_name;
  Size image_size;
  std::optional<KeypointSet> keypoints;
  std::optional<BBox> bbox;
  std::optional<double> area;
  std::optional<double> head_size;
  bool image_missing = false;

  [[nodiscard]] bool labeled() const { return keypoints.has_value(); }
  friend bool operator==(const DatasetSample&, const DatasetSample&) = default;
};

struct DatasetIndex {
  Profile profile = Profile::generic;
  int num_joints = 0;
  std::vector<std::string> joint_names;
  std::vector<DatasetSample> samples;
  /// Directory that file names are relative to.
  std::string image_root;
  int skipped_crowd = 0;
  int skipped_unlabeled = 0;

  friend bool operator==(const DatasetIndex& a, const DatasetIndex& b) {
    return a.profile == b.profile && a.num_joints == b.num_joints && a.joint_names == b.joint_names &&
           a.samples == b.samples;
  }
};

// ---------------------------------------------------------------------------
// COCO schema
// ---------------------------------------------------------------------------

namespace detail {

using nlohmann::json;

inline const json& require(const json& obj, const char* key, const std::string& ctx) {
  if (!obj.is_object() || !obj.contains(key)) throw ParseError(ctx + ": missing field '" + key + "'");
  return obj.at(key);
}

inline double require_number(const json& obj, const char* key, const std::string& ctx) {
  const json& v = require(obj, key, ctx);
  if (!v.is_number()) throw ParseError(ctx + "." + key + ": expected a number");
  return v.get<double>();
}

inline int require_int(const json& obj, const char* key, const std::string& ctx) {
  const json& v = require(obj, key, ctx);
  if (!v.is_number_integer()) throw ParseError(ctx + "." + key + ": expected an integer");
  return v.get<int>();
}

}  // namespace detail

/// Parses an in-memory COCO keypoint document. `source` names it in error messages.
inline DatasetIndex parse_coco_json(const nlohmann::json& doc, const std::string& image_root,
                                    const std::string& source = "<json>") {
  using detail::json;
  if (!doc.is_object()) throw ParseError(source + ": top level must be an object");
  DatasetIndex idx;
  idx.image_root = image_root;

  const json& images = detail::require(doc, "images", source);
  const json& annotations = detail::require(doc, "annotations", source);
  if (!images.is_array()) throw ParseError(source + ".images: expected an array");
  if (!annotations.is_array()) throw ParseError(source + ".annotations: expected an array");

  if (doc.contains("categories") && doc["categories"].is_array() && !doc["categories"].empty()) {
    const json& cat = doc["categories"][0];
    if (cat.contains("keypoints") && cat["keypoints"].is_array()) {
      for (const auto& n : cat["keypoints"]) idx.joint_names.push_back(n.get<std::string>());
    }
  }

  struct ImageInfo {
    std::string file_name;
    Size size;
  };
  std::map<int, ImageInfo> by_id;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string ctx = source + ".images[" + std::to_string(i) + "]";
    const json& im = images[i];
    const int id = detail::require_int(im, "id", ctx);
    const json& fn = detail::require(im, "file_name", ctx);
    if (!fn.is_string()) throw ParseError(ctx + ".file_name: expected a string");
    by_id[id] = {fn.get<std::string>(), {detail::require_int(im, "height", ctx), detail::require_int(im, "width", ctx)}};
  }

  int k = static_cast<int>(idx.joint_names.size());
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const std::string ctx = source + ".annotations[" + std::to_string(i) + "]";
    const json& an = annotations[i];
    const json& kp = detail::require(an, "keypoints", ctx);
    if (!kp.is_array() || kp.size() % 3 != 0 || kp.empty()) {
      throw ParseError(ctx + ".keypoints: expected a non-empty list of (x, y, v) triplets");
    }
    const int this_k = static_cast<int>(kp.size() / 3);
    if (k == 0) k = this_k;
    if (this_k != k) {
      throw ParseError(ctx + ".keypoints: expected " + std::to_string(3 * k) + " numbers, got " + std::to_string(kp.size()));
    }
    const int crowd = an.contains("iscrowd") ? detail::require_int(an, "iscrowd", ctx) : 0;
    if (crowd != 0) {
      ++idx.skipped_crowd;
      continue;
    }
    DatasetSample s;
    s.annotation_id = detail::require_int(an, "id", ctx);
    s.image_id = detail::require_int(an, "image_id", ctx);
    detail::require_int(an, "category_id", ctx);
    auto it = by_id.find(s.image_id);
    if (it == by_id.end()) throw ParseError(ctx + ".image_id: no image with id " + std::to_string(s.image_id));
    s.file_name = it->second.file_name;
    s.image_size = it->second.size;

    KeypointSet kps(static_cast<std::size_t>(k));
    int labeled = 0;
    for (int j = 0; j < k; ++j) {
      for (int t = 0; t < 3; ++t) {
        if (!kp[static_cast<std::size_t>(3 * j + t)].is_number()) {
          throw ParseError(ctx + ".keypoints[" + std::to_string(3 * j + t) + "]: expected a number");
        }
      }
      Keypoint& p = kps[static_cast<std::size_t>(j)];
      p.x = kp[static_cast<std::size_t>(3 * j)].get<double>();
      p.y = kp[static_cast<std::size_t>(3 * j + 1)].get<double>();
      const int v = static_cast<int>(kp[static_cast<std::size_t>(3 * j + 2)].get<double>());
      p.state = v > 0 ? JointState::visible : JointState::invisible;
      if (v > 0) ++labeled;
    }
    if (labeled == 0) {
      ++idx.skipped_unlabeled;
      continue;
    }
    s.keypoints = std::move(kps);
    s.area = detail::require_number(an, "area", ctx);
    const json& bb = detail::require(an, "bbox", ctx);
    if (!bb.is_array() || bb.size() != 4) throw ParseError(ctx + ".bbox: expected [x, y, w, h]");
    s.bbox = BBox{bb[0].get<double>(), bb[1].get<double>(), bb[2].get<double>(), bb[3].get<double>()};
    if (an.contains("head_size")) s.head_size = detail::require_number(an, "head_size", ctx);
    s.image_missing = !std::filesystem::exists(std::filesystem::path(image_root) / s.file_name);
    idx.samples.push_back(std::move(s));
  }
  idx.num_joints = k;

  Profile profile = Profile::generic;
  if (doc.contains("info") && doc["info"].is_object() && doc["info"].contains("profile")) {
    profile = parse_profile(doc["info"]["profile"].get<std::string>());
  } else if (k == 17) {
    profile = Profile::body17;
  } else if (k == 21) {
    profile = Profile::hand21;
  } else if (k == 13) {
    profile = Profile::synth13;
  }
  if (profile_joints(profile) != 0 && k != 0 && profile_joints(profile) != k) {
    throw ParseError(source + ": profile " + to_string(profile) + " expects " + std::to_string(profile_joints(profile)) +
                     " joints, annotations have " + std::to_string(k));
  }
  idx.profile = profile;
  return idx;
}

/// Reads a COCO keypoint annotation file; image file names resolve against the file's directory
/// unless `image_root` is given.
inline DatasetIndex parse_coco_keypoints(const std::string& path, std::optional<std::string> image_root = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open annotation file " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  const std::string root = image_root ? *image_root : std::filesystem::path(path).parent_path().string();
  return parse_coco_json(doc, root, path);
}

/// Serializes labeled samples back to the COCO schema (visible joints written with v = 2).
inline nlohmann::json to_coco_json(const DatasetIndex& idx) {
  using nlohmann::json;
  json doc;
  doc["info"] = {{"profile", to_string(idx.profile)}};
  json images = json::array();
  std::map<int, bool> seen;
  for (const auto& s : idx.samples) {
    if (seen[s.image_id]) continue;
    seen[s.image_id] = true;
    images.push_back({{"id", s.image_id}, {"file_name", s.file_name}, {"height", s.image_size.height}, {"width", s.image_size.width}});
  }
  json anns = json::array();
  for (const auto& s : idx.samples) {
    if (!s.keypoints) continue;
    json kp = json::array();
    int num = 0;
    for (const auto& j : s.keypoints->joints) {
      kp.push_back(j.x);
      kp.push_back(j.y);
      kp.push_back(j.usable() ? 2 : 0);
      if (j.usable()) ++num;
    }
    json a = {{"id", s.annotation_id}, {"image_id", s.image_id}, {"category_id", 1}, {"keypoints", kp},
              {"num_keypoints", num}, {"iscrowd", 0}};
    a["area"] = s.area.value_or(0.0);
    const BBox b = s.bbox.value_or(BBox{});
    a["bbox"] = {b.x, b.y, b.w, b.h};
    if (s.head_size) a["head_size"] = *s.head_size;
    anns.push_back(std::move(a));
  }
  doc["images"] = std::move(images);
  doc["annotations"] = std::move(anns);
  json cat = {{"id", 1}, {"name", "person"}, {"supercategory", "person"}};
  cat["keypoints"] = idx.joint_names;
  doc["categories"] = json::array({cat});
  return doc;
}

inline void write_coco_keypoints(const std::string& path, const DatasetIndex& idx) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << to_coco_json(idx).dump(1) << '\n';
}

// ---------------------------------------------------------------------------
// Loading crops
// ---------------------------------------------------------------------------

/// A training/evaluation crop at network input resolution.
struct Sample {
  int id = 0;
  Image image;
  std::optional<KeypointSet> joints;
  BBox bbox;
  double area = 0.0;
  std::optional<double> head_size;
};

/// Maps the sample's bbox, padded by 25% and widened to the input aspect ratio, onto the input raster.
/// Synthetic samples are already crops and use the whole image.
inline AffineMap crop_transform(const DatasetSample& s, Profile profile, Size input) {
  double x0 = 0.0, y0 = 0.0, w = s.image_size.width, h = s.image_size.height;
  if (profile != Profile::synth13 && s.bbox) {
    const double cx = s.bbox->x + s.bbox->w / 2.0;
    const double cy = s.bbox->y + s.bbox->h / 2.0;
    w = std::max(1.0, s.bbox->w * 1.25);
    h = std::max(1.0, s.bbox->h * 1.25);
    const double aspect = static_cast<double>(input.width) / input.height;
    if (w > aspect * h) {
      h = w / aspect;
    } else {
      w = h * aspect;
    }
    x0 = cx - w / 2.0;
    y0 = cy - h / 2.0;
  }
  if (x0 == 0.0 && y0 == 0.0 && w == input.width && h == input.height) return AffineMap::identity();
  const double sx = input.width / w;
  const double sy = input.height / h;
  AffineMap a;
  a.matrix = {sx, 0.0, -x0 * sx, 0.0, sy, -y0 * sy};
  a.scale = std::sqrt(sx * sy);
  return a;
}

/// Loads every sample's crop. Missing images raise IoError.
inline std::vector<Sample> load_samples(const DatasetIndex& idx, Size input) {
  std::map<std::string, Image> cache;
  std::vector<Sample> out;
  out.reserve(idx.samples.size());
  for (const auto& s : idx.samples) {
    const std::string path = (std::filesystem::path(idx.image_root) / s.file_name).string();
    auto it = cache.find(path);
    if (it == cache.end()) it = cache.emplace(path, load_png(path)).first;
    const AffineMap crop = crop_transform(s, idx.profile, input);
    Sample smp;
    smp.id = s.annotation_id;
    smp.image = (crop.matrix == AffineMap::identity().matrix && it->second.size() == input)
                    ? it->second
                    : warp_image(it->second, crop, input);
    if (s.keypoints) smp.joints = warp_points(*s.keypoints, crop, input);
    if (s.bbox) {
      const Point2 a = crop.apply({s.bbox->x, s.bbox->y});
      const Point2 b = crop.apply({s.bbox->x + s.bbox->w, s.bbox->y + s.bbox->h});
      smp.bbox = {a.x, a.y, b.x - a.x, b.y - a.y};
    }
    const double sc2 = std::abs(crop.det());
    smp.area = s.area.value_or(smp.bbox.w * smp.bbox.h / std::max(sc2, 1e-12)) * sc2;
    if (s.head_size) smp.head_size = *s.head_size * std::sqrt(sc2);
    out.push_back(std::move(smp));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic stick figures
// ---------------------------------------------------------------------------

struct SynthConfig {
  Size image_size{64, 48};
  std::pair<double, double> torso_length{14.0, 18.0};
  std::pair<double, double> head_length{5.0, 7.0};
  std::pair<double, double> shoulder_half_width{5.0, 7.0};
  std::pair<double, double> hip_half_width{3.5, 5.0};
  std::pair<double, double> upper_arm{8.0, 11.0};
  std::pair<double, double> forearm{7.0, 10.0};
  std::pair<double, double> thigh{10.0, 13.0};
  std::pair<double, double> shin{9.0, 12.0};
  std::pair<double, double> limb_width{1.6, 2.6};
  /// Per-channel background level range.
  std::pair<double, double> background{0.05, 0.2};
  double noise = 0.04;
  int distractors = 2;
  std::uint64_t seed = 0;
};

inline const std::vector<std::string>& synth_joint_names() {
  static const std::vector<std::string> names = {"head",       "left_shoulder", "right_shoulder", "left_elbow", "right_elbow",
                                                 "left_wrist", "right_wrist",   "left_hip",       "right_hip",  "left_knee",
                                                 "right_knee", "left_ankle",    "right_ankle"};
  return names;
}

struct SynthDataset {
  DatasetIndex index;
  std::vector<Image> images;
};

namespace detail {

using Rgb = std::array<double, 3>;

// Anti-aliased thick segment blended over the image.
inline void draw_segment(Image& img, Point2 a, Point2 b, double width, Rgb color) {
  const double half = width / 2.0;
  const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - half - 1)));
  const int x1 = std::min(img.width() - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + half + 1)));
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - half - 1)));
  const int y1 = std::min(img.height() - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + half + 1)));
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      double t = len2 > 0 ? ((x - a.x) * dx + (y - a.y) * dy) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const double d = std::hypot(x - (a.x + t * dx), y - (a.y + t * dy));
      const double cov = std::clamp(half + 0.5 - d, 0.0, 1.0);
      if (cov <= 0.0) continue;
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = img.at(y, x, c) * (1.0 - cov) + color[static_cast<std::size_t>(c)] * cov;
    }
  }
}

// 0 degrees points straight down; positive angles turn toward +x.
inline Point2 step(Point2 from, double angle_deg, double length) {
  const double a = angle_deg * std::numbers::pi / 180.0;
  return {from.x + length * std::sin(a), from.y + length * std::cos(a)};
}

inline const std::array<Rgb, 12>& limb_palette() {
  static const std::array<Rgb, 12> p = {{
      {0.95, 0.90, 0.20},  // head
      {0.85, 0.85, 0.85},  // torso
      {0.95, 0.20, 0.20},  // left upper arm
      {0.95, 0.60, 0.10},  // left forearm
      {0.20, 0.40, 0.95},  // right upper arm
      {0.10, 0.90, 0.90},  // right forearm
      {0.90, 0.20, 0.80},  // left thigh
      {0.95, 0.60, 0.75},  // left shin
      {0.20, 0.85, 0.20},  // right thigh
      {0.60, 0.95, 0.40},  // right shin
      {0.85, 0.85, 0.85},  // shoulders
      {0.85, 0.85, 0.85},  // hips
  }};
  return p;
}

}  // namespace detail

/// Renders one stick figure; returns the image, its 13 ground-truth joints and the head length.
inline std::pair<Image, KeypointSet> render_stick_figure(const SynthConfig& cfg, RandomStream& rng, double* head_len = nullptr) {
  const int H = cfg.image_size.height;
  const int W = cfg.image_size.width;
  const double f = H / 64.0;
  auto U = [&](std::pair<double, double> r) { return rng.uniform(r.first, r.second) * f; };

  std::array<Point2, 13> j{};
  Point2 neck, pelvis;
  double lw = 2.0;
  for (int attempt = 0;; ++attempt) {
    const double torso_angle = rng.uniform(-15.0, 15.0);
    neck = {W / 2.0 + rng.uniform(-4.0, 4.0) * f, rng.uniform(14.0, 20.0) * f};
    pelvis = detail::step(neck, torso_angle, U(cfg.torso_length));
    const double hl = U(cfg.head_length);
    if (head_len) *head_len = hl;
    j[0] = detail::step(neck, torso_angle + 180.0 + rng.uniform(-20.0, 20.0), hl);
    const double sw = U(cfg.shoulder_half_width);
    const double hw = U(cfg.hip_half_width);
    j[1] = detail::step(neck, torso_angle + 90.0, sw);
    j[2] = detail::step(neck, torso_angle - 90.0, sw);
    j[7] = detail::step(pelvis, torso_angle + 90.0, hw);
    j[8] = detail::step(pelvis, torso_angle - 90.0, hw);
    for (int side = 0; side < 2; ++side) {
      const double s = side == 0 ? 1.0 : -1.0;
      const double upper = torso_angle + s * rng.uniform(-20.0, 150.0);
      const double fore = upper + s * rng.uniform(-10.0, 130.0);
      j[static_cast<std::size_t>(3 + side)] = detail::step(j[static_cast<std::size_t>(1 + side)], upper, U(cfg.upper_arm));
      j[static_cast<std::size_t>(5 + side)] = detail::step(j[static_cast<std::size_t>(3 + side)], fore, U(cfg.forearm));
      const double thigh = torso_angle + s * rng.uniform(-15.0, 45.0);
      const double shin = thigh + s * rng.uniform(-60.0, 10.0);
      j[static_cast<std::size_t>(9 + side)] = detail::step(j[static_cast<std::size_t>(7 + side)], thigh, U(cfg.thigh));
      j[static_cast<std::size_t>(11 + side)] = detail::step(j[static_cast<std::size_t>(9 + side)], shin, U(cfg.shin));
    }
    bool inside = true;
    for (const auto& p : j) inside = inside && p.x >= 2 && p.x <= W - 3 && p.y >= 2 && p.y <= H - 3;
    if (inside || attempt > 200) {
      if (!inside) {
        for (auto& p : j) p = {std::clamp(p.x, 2.0, W - 3.0), std::clamp(p.y, 2.0, H - 3.0)};
      }
      lw = U(cfg.limb_width) / f * f;
      break;
    }
  }

  Image img(H, W);
  const auto [bg_lo, bg_hi] = cfg.background;
  detail::Rgb bg{rng.uniform(bg_lo, bg_hi), rng.uniform(bg_lo, bg_hi), rng.uniform(bg_lo, bg_hi)};
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = bg[static_cast<std::size_t>(c)];
    }
  }
  for (int d = 0; d < cfg.distractors; ++d) {
    const Point2 a{rng.uniform(0.0, W - 1.0), rng.uniform(0.0, H - 1.0)};
    const Point2 b = detail::step(a, rng.uniform(0.0, 360.0), rng.uniform(4.0, 10.0) * f);
    detail::draw_segment(img, a, b, rng.uniform(1.0, 2.0) * f,
                         {rng.uniform(0.2, 0.9), rng.uniform(0.2, 0.9), rng.uniform(0.2, 0.9)});
  }

  const auto& pal = detail::limb_palette();
  const double brightness = rng.uniform(0.75, 1.0);
  auto color = [&](std::size_t i) {
    detail::Rgb c = pal[i];
    for (auto& v : c) v = std::clamp((v + rng.uniform(-0.08, 0.08)) * brightness, 0.0, 1.0);
    return c;
  };
  const std::array<detail::Rgb, 12> col = {color(0), color(1), color(2), color(3), color(4), color(5),
                                           color(6), color(7), color(8), color(9), color(10), color(11)};
  detail::draw_segment(img, neck, pelvis, lw, col[1]);
  detail::draw_segment(img, j[1], j[2], lw, col[10]);
  detail::draw_segment(img, j[7], j[8], lw, col[11]);
  detail::draw_segment(img, neck, j[0], lw, col[0]);
  detail::draw_segment(img, j[0], j[0], lw + 2.0 * f, col[0]);
  detail::draw_segment(img, j[1], j[3], lw, col[2]);
  detail::draw_segment(img, j[3], j[5], lw, col[3]);
  detail::draw_segment(img, j[2], j[4], lw, col[4]);
  detail::draw_segment(img, j[4], j[6], lw, col[5]);
  detail::draw_segment(img, j[7], j[9], lw, col[6]);
  detail::draw_segment(img, j[9], j[11], lw, col[7]);
  detail::draw_segment(img, j[8], j[10], lw, col[8]);
  detail::draw_segment(img, j[10], j[12], lw, col[9]);

  for (auto& v : img.pixels()) {
    v = std::clamp(v + cfg.noise * rng.normal(), 0.0, 1.0);
    v = std::floor(v * 255.0 + 0.5) / 255.0;  // 8-bit exact, so PNG round trips are lossless
  }

  KeypointSet kps(13);
  for (std::size_t i = 0; i < 13; ++i) kps[i] = {j[i].x, j[i].y, JointState::visible, 0.0};
  return {std::move(img), std::move(kps)};
}

/// Deterministic per (seed, sample index); sample i is independent of `count`.
inline SynthDataset generate_synthetic(const SynthConfig& cfg, int count) {
  if (count <= 0) throw InvalidParameter("generate_synthetic: count must be positive");
  SynthDataset ds;
  ds.index.profile = Profile::synth13;
  ds.index.num_joints = 13;
  ds.index.joint_names = synth_joint_names();
  const RandomStream root = RandomStream(cfg.seed).split("synth");
  for (int i = 0; i < count; ++i) {
    RandomStream rng = root.split(static_cast<std::uint64_t>(i));
    double head_len = 0.0;
    auto [img, kps] = render_stick_figure(cfg, rng, &head_len);
    DatasetSample s;
    s.image_id = i + 1;
    s.annotation_id = i + 1;
    char name[32];
    std::snprintf(name, sizeof(name), "images/%06d.png", i);
    s.file_name = name;
    s.image_size = cfg.image_size;
    double x0 = 1e9, y0 = 1e9, x1 = -1e9, y1 = -1e9;
    for (const auto& p : kps.joints) {
      x0 = std::min(x0, p.x);
      y0 = std::min(y0, p.y);
      x1 = std::max(x1, p.x);
      y1 = std::max(y1, p.y);
    }
    s.bbox = BBox{x0, y0, x1 - x0, y1 - y0};
    s.area = (x1 - x0) * (y1 - y0);
    s.head_size = 2.0 * head_len;
    s.keypoints = std::move(kps);
    ds.index.samples.push_back(std::move(s));
    ds.images.push_back(std::move(img));
  }
  return ds;
}

/// Writes `dir/images/*.png` and `dir/annotations.json`.
inline void write_synthetic(const std::string& dir, const SynthDataset& ds) {
  std::filesystem::create_directories(std::filesystem::path(dir) / "images");
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    save_png((std::filesystem::path(dir) / ds.index.samples[i].file_name).string(), ds.images[i]);
  }
  write_coco_keypoints((std::filesystem::path(dir) / "annotations.json").string(), ds.index);
}

/// In-memory crops of a generated dataset (synthetic images are already at input size).
inline std::vector<Sample> synthetic_samples(const SynthDataset& ds) {
  std::vector<Sample> out;
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    const auto& s = ds.index.samples[i];
    out.push_back({s.annotation_id, ds.images[i], s.keypoints, *s.bbox, *s.area, s.head_size});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

enum class SplitMode { prefix, shuffled };

/// First `labeled_count` samples (index order) become labeled, the rest unlabeled with
/// keypoints, area and head size stripped (the person box stays: it defines the crop).
/// Shuffled mode permutes by `seed` first.
inline std::pair<DatasetIndex, DatasetIndex> split_labeled_unlabeled(const DatasetIndex& idx, int labeled_count,
                                                                     std::uint64_t seed, SplitMode mode = SplitMode::prefix) {
  if (labeled_count < 0 || labeled_count > static_cast<int>(idx.samples.size())) {
    throw InvalidParameter("split_labeled_unlabeled: labeled_count exceeds dataset size");
  }
  std::vector<std::size_t> order(idx.samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (mode == SplitMode::shuffled) {
    RandomStream rng = RandomStream(seed).split("split");
    rng.shuffle(std::span<std::size_t>(order));
  }
  DatasetIndex lab = idx, unl = idx;
  lab.samples.clear();
  unl.samples.clear();
  for (std::size_t i = 0; i < order.size(); ++i) {
    DatasetSample s = idx.samples[order[i]];
    if (static_cast<int>(i) < labeled_count) {
      lab.samples.push_back(std::move(s));
    } else {
      s.keypoints.reset();
      s.area.reset();
      s.head_size.reset();
      unl.samples.push_back(std::move(s));
    }
  }
  return {std::move(lab), std::move(unl)};
}

/// Sample-level prefix split for in-memory data.
inline std::pair<std::vector<Sample>, std::vector<Sample>> split_samples(std::vector<Sample> samples, int labeled_count) {
  if (labeled_count < 0 || labeled_count > static_cast<int>(samples.size())) {
    throw InvalidParameter("split_samples: labeled_count exceeds dataset size");
  }
  std::vector<Sample> unl(std::make_move_iterator(samples.begin() + labeled_count), std::make_move_iterator(samples.end()));
  samples.resize(static_cast<std::size_t>(labeled_count));
  for (auto& s : unl) s.joints.reset();
  return {std::move(samples), std::move(unl)};
}

}  // namespace poseaug
