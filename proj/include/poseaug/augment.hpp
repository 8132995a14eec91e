#pragma once

// Basic augmentations (affine, Cutout, CutMix, MixUp, Joint Cutout, Joint
// Cut-Occlude), their sequential composition into named pipelines, hard-view
// construction and the combination validator.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "poseaug/error.hpp"
#include "poseaug/geometry.hpp"
#include "poseaug/rng.hpp"
#include "poseaug/types.hpp"

namespace poseaug {

enum class AugTag { A30, A60, A90, CO, CM, MU, JC, JO };

inline std::string_view to_string(AugTag t) {
  switch (t) {
    case AugTag::A30: return "A30";
    case AugTag::A60: return "A60";
    case AugTag::A90: return "A90";
    case AugTag::CO: return "CO";
    case AugTag::CM: return "CM";
    case AugTag::MU: return "MU";
    case AugTag::JC: return "JC";
    case AugTag::JO: return "JO";
  }
  return "?";
}

inline bool is_affine(AugTag t) { return t == AugTag::A30 || t == AugTag::A60 || t == AugTag::A90; }

struct AugOp {
  AugTag tag = AugTag::A30;
  int n_patches = 0;
  int patch_size = 20;
  double rotation_range_deg = 0.0;
  std::pair<double, double> scale_range{0.75, 1.25};
  std::pair<double, double> mix_lambda_range{0.3, 0.7};
};

/// Default hyper-parameters of each basic augmentation.
inline AugOp default_op(AugTag tag) {
  AugOp op;
  op.tag = tag;
  switch (tag) {
    case AugTag::A30: op.rotation_range_deg = 30.0; break;
    case AugTag::A60: op.rotation_range_deg = 60.0; break;
    case AugTag::A90: op.rotation_range_deg = 90.0; break;
    case AugTag::CO: op.n_patches = 5; break;
    case AugTag::CM: op.n_patches = 2; break;
    case AugTag::JC: op.n_patches = 5; break;
    case AugTag::JO: op.n_patches = 2; break;
    case AugTag::MU: break;
  }
  return op;
}

inline std::optional<AugTag> parse_tag(std::string_view s) {
  for (AugTag t : {AugTag::A30, AugTag::A60, AugTag::A90, AugTag::CO, AugTag::CM, AugTag::MU, AugTag::JC, AugTag::JO}) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

/// Ordered list of augmentations applied one after another.
struct AugPipeline {
  std::string name;
  std::vector<AugOp> ops;

  [[nodiscard]] std::vector<AugTag> tags() const {
    std::vector<AugTag> out;
    for (const auto& op : ops) out.push_back(op.tag);
    return out;
  }
  [[nodiscard]] std::vector<AugTag> patch_tags() const {
    std::vector<AugTag> out;
    for (const auto& op : ops) {
      if (!is_affine(op.tag)) out.push_back(op.tag);
    }
    return out;
  }
};

/// Affine ops are only allowed as the first and/or last element.
inline void check_pipeline(const AugPipeline& p) {
  for (std::size_t i = 0; i < p.ops.size(); ++i) {
    if (!is_affine(p.ops[i].tag)) continue;
    const bool leading = i == 0;
    const bool trailing = i + 1 == p.ops.size();
    if (!leading && !trailing) {
      throw InvalidParameter("pipeline " + p.name + ": affine op " + std::string(to_string(p.ops[i].tag)) +
                             " must be leading or trailing");
    }
  }
}

inline AugPipeline make_pipeline(std::string name, std::initializer_list<AugTag> tags) {
  AugPipeline p{std::move(name), {}};
  for (AugTag t : tags) p.ops.push_back(default_op(t));
  check_pipeline(p);
  return p;
}

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"A60", "CO", "CM", "MU", "JC", "JO", "JOCO", "JCCM"};
  return names;
}

/// Named presets. "A60" carries no patch op: its geometry is the shared inner A30
/// followed by the hard view's outer A30.
inline AugPipeline preset(std::string_view name) {
  if (name == "A60") return make_pipeline("A60", {});
  if (name == "CO") return make_pipeline("CO", {AugTag::CO});
  if (name == "CM") return make_pipeline("CM", {AugTag::CM});
  if (name == "MU") return make_pipeline("MU", {AugTag::MU});
  if (name == "JC") return make_pipeline("JC", {AugTag::JC});
  if (name == "JO") return make_pipeline("JO", {AugTag::JO});
  if (name == "JOCO") return make_pipeline("JOCO", {AugTag::JO, AugTag::CO});
  if (name == "JCCM") return make_pipeline("JCCM", {AugTag::JC, AugTag::CM});
  std::string valid;
  for (const auto& n : preset_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw InvalidParameter("unknown pipeline '" + std::string(name) + "'; valid presets: " + valid);
}

/// Parses "JOCO" or an op list joined by ',' or '+' such as "JC,MU" (presets expand in place).
inline AugPipeline parse_pipeline(std::string_view spec) {
  AugPipeline p{std::string(spec), {}};
  std::size_t start = 0;
  while (start <= spec.size()) {
    const std::size_t end = std::min(spec.find_first_of(",+", start), spec.size());
    const std::string_view item = spec.substr(start, end - start);
    if (item.empty()) throw InvalidParameter("empty element in pipeline '" + std::string(spec) + "'");
    const auto& names = preset_names();
    if (std::find(names.begin(), names.end(), item) != names.end()) {
      const AugPipeline sub = preset(item);
      p.ops.insert(p.ops.end(), sub.ops.begin(), sub.ops.end());
    } else if (auto tag = parse_tag(item)) {
      p.ops.push_back(default_op(*tag));
    } else {
      preset(item);  // throws with the list of valid names
    }
    start = end + 1;
  }
  check_pipeline(p);
  return p;
}

// ---------------------------------------------------------------------------
// Patch operations
// ---------------------------------------------------------------------------

enum class PatchSource { zero, donor };

struct PatchRecord {
  AugTag op = AugTag::CO;
  Rect dest;
  /// Donor rectangle for CM/JO (same size as dest after clipping).
  std::optional<Rect> source;
  PatchSource kind = PatchSource::zero;
  /// Jittered, pre-clipping center for joint-centered patches.
  std::optional<Point2> placement_center;
  std::optional<int> joint_index;
  /// Set when a joint-aware op ran its joint-free fallback.
  bool fallback = false;
};

struct PatchResult {
  Image image;
  std::vector<PatchRecord> log;
};

namespace detail {

inline Rect random_rect(RandomStream& rng, Size bounds, int size) {
  const int x0 = static_cast<int>(rng.uniform_int(0, std::max(0, bounds.width - size)));
  const int y0 = static_cast<int>(rng.uniform_int(0, std::max(0, bounds.height - size)));
  return {x0, y0, size, size};
}

inline void fill_zero(Image& img, Rect r) {
  for (int y = r.y; y < r.y + r.height; ++y) {
    for (int x = r.x; x < r.x + r.width; ++x) {
      for (int c = 0; c < Image::kChannels; ++c) img.at(y, x, c) = 0.0;
    }
  }
}

inline void copy_region(Image& dst, const Image& src, Rect d, Rect s) {
  for (int dy = 0; dy < d.height; ++dy) {
    for (int dx = 0; dx < d.width; ++dx) {
      for (int c = 0; c < Image::kChannels; ++c) dst.at(d.y + dy, d.x + dx, c) = src.at(s.y + dy, s.x + dx, c);
    }
  }
}

// Unclipped size x size rectangle whose center is `center` (pixel-center convention).
inline Rect centered_rect(Point2 center, int size) {
  const double half = (size - 1) / 2.0;
  return {static_cast<int>(std::lround(center.x - half)), static_cast<int>(std::lround(center.y - half)), size, size};
}

// Clips a (dest, source) pair of equal-size rectangles so both stay inside their rasters.
inline std::pair<Rect, Rect> clip_pair(Rect d, Rect s, Size dst_bounds, Size src_bounds) {
  const int ox0 = std::max({0, -d.x, -s.x});
  const int oy0 = std::max({0, -d.y, -s.y});
  const int ox1 = std::min({d.width, dst_bounds.width - d.x, src_bounds.width - s.x});
  const int oy1 = std::min({d.height, dst_bounds.height - d.y, src_bounds.height - s.y});
  const int w = std::max(0, ox1 - ox0);
  const int h = std::max(0, oy1 - oy0);
  return {Rect{d.x + ox0, d.y + oy0, w, h}, Rect{s.x + ox0, s.y + oy0, w, h}};
}

inline std::vector<int> usable_joints(const KeypointSet& kps) {
  std::vector<int> idx;
  for (std::size_t i = 0; i < kps.size(); ++i) {
    if (kps[i].usable()) idx.push_back(static_cast<int>(i));
  }
  return idx;
}

// n picks: without replacement when enough joints exist, with replacement otherwise.
inline std::vector<int> pick_joints(std::vector<int> pool, int n, RandomStream& rng) {
  std::vector<int> out;
  if (pool.empty() || n <= 0) return out;
  if (static_cast<int>(pool.size()) >= n) {
    for (int i = 0; i < n; ++i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(i, static_cast<std::int64_t>(pool.size()) - 1));
      std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
      out.push_back(pool[static_cast<std::size_t>(i)]);
    }
  } else {
    for (int i = 0; i < n; ++i) {
      out.push_back(pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1))]);
    }
  }
  return out;
}

inline Point2 jittered(const Keypoint& j, double radius, RandomStream& rng) {
  const double dx = rng.uniform(-radius, radius);
  const double dy = rng.uniform(-radius, radius);
  return {j.x + dx, j.y + dy};
}

}  // namespace detail

/// Zeroes n random size x size squares (all channels).
inline PatchResult apply_cutout(const Image& img, RandomStream& rng, int n, int size) {
  if (n < 0 || size <= 0) throw InvalidParameter("apply_cutout: need n >= 0 and size > 0");
  PatchResult r{img, {}};
  for (int i = 0; i < n; ++i) {
    const Rect rect = clip_rect(detail::random_rect(rng, img.size(), size), img.size());
    detail::fill_zero(r.image, rect);
    r.log.push_back({AugTag::CO, rect, std::nullopt, PatchSource::zero, std::nullopt, std::nullopt, false});
  }
  return r;
}

/// Pastes n random donor squares at random destinations.
inline PatchResult apply_cutmix(const Image& img, const Image& donor, RandomStream& rng, int n, int size) {
  if (img.size() != donor.size()) throw DimensionMismatch("apply_cutmix: donor dimensions differ from image");
  if (n < 0 || size <= 0) throw InvalidParameter("apply_cutmix: need n >= 0 and size > 0");
  PatchResult r{img, {}};
  for (int i = 0; i < n; ++i) {
    const Rect d = detail::random_rect(rng, img.size(), size);
    const Rect s = detail::random_rect(rng, donor.size(), size);
    const auto [dc, sc] = detail::clip_pair(d, s, img.size(), donor.size());
    detail::copy_region(r.image, donor, dc, sc);
    r.log.push_back({AugTag::CM, dc, sc, PatchSource::donor, std::nullopt, std::nullopt, false});
  }
  return r;
}

/// lambda * img + (1 - lambda) * donor.
inline Image apply_mixup(const Image& img, const Image& donor, double lambda) {
  if (img.size() != donor.size()) throw DimensionMismatch("apply_mixup: donor dimensions differ from image");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidParameter("apply_mixup: lambda must lie in [0, 1]");
  Image out = img;
  auto& o = out.pixels();
  const auto& d = donor.pixels();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = lambda * o[i] + (1.0 - lambda) * d[i];
  return out;
}

struct JointPatchOptions {
  int n = 5;
  int size = 20;
  /// Half-width of the uniform center jitter; negative means size / 4.
  double jitter = -1.0;

  [[nodiscard]] double radius() const { return jitter < 0.0 ? size / 4.0 : jitter; }
};

/// Zero patches centered (with jitter) on usable joints. Falls back to Cutout when no joint is usable.
inline PatchResult apply_joint_cutout(const Image& img, const KeypointSet& joints, RandomStream& rng,
                                      JointPatchOptions opt) {
  if (opt.n < 0 || opt.size <= 0) throw InvalidParameter("apply_joint_cutout: need n >= 0 and size > 0");
  const auto pool = detail::usable_joints(joints);
  if (pool.empty() && opt.n > 0) {
    PatchResult r = apply_cutout(img, rng, opt.n, opt.size);
    for (auto& rec : r.log) {
      rec.op = AugTag::JC;
      rec.fallback = true;
    }
    return r;
  }
  PatchResult r{img, {}};
  for (int j : detail::pick_joints(pool, opt.n, rng)) {
    const Point2 center = detail::jittered(joints[static_cast<std::size_t>(j)], opt.radius(), rng);
    const Rect rect = clip_rect(detail::centered_rect(center, opt.size), img.size());
    detail::fill_zero(r.image, rect);
    r.log.push_back({AugTag::JC, rect, std::nullopt, PatchSource::zero, center, j, false});
  }
  return r;
}

inline PatchResult apply_joint_cutout(const Image& img, const KeypointSet& joints, RandomStream& rng, int n, int size) {
  return apply_joint_cutout(img, joints, rng, JointPatchOptions{n, size, -1.0});
}

/// Donor patches centered on donor joints pasted over patches centered on target joints.
/// Falls back to CutMix when either joint set has no usable joint.
inline PatchResult apply_joint_cutocclude(const Image& img, const KeypointSet& joints, const Image& donor,
                                          const KeypointSet& donor_joints, RandomStream& rng, JointPatchOptions opt) {
  if (img.size() != donor.size()) throw DimensionMismatch("apply_joint_cutocclude: donor dimensions differ from image");
  if (opt.n < 0 || opt.size <= 0) throw InvalidParameter("apply_joint_cutocclude: need n >= 0 and size > 0");
  const auto pool = detail::usable_joints(joints);
  const auto donor_pool = detail::usable_joints(donor_joints);
  if ((pool.empty() || donor_pool.empty()) && opt.n > 0) {
    PatchResult r = apply_cutmix(img, donor, rng, opt.n, opt.size);
    for (auto& rec : r.log) {
      rec.op = AugTag::JO;
      rec.fallback = true;
    }
    return r;
  }
  PatchResult r{img, {}};
  for (int j : detail::pick_joints(pool, opt.n, rng)) {
    const int dj = donor_pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(donor_pool.size()) - 1))];
    const Point2 dest_center = detail::jittered(joints[static_cast<std::size_t>(j)], opt.radius(), rng);
    const Point2 src_center = detail::jittered(donor_joints[static_cast<std::size_t>(dj)], opt.radius(), rng);
    const auto [dc, sc] = detail::clip_pair(detail::centered_rect(dest_center, opt.size),
                                            detail::centered_rect(src_center, opt.size), img.size(), donor.size());
    detail::copy_region(r.image, donor, dc, sc);
    r.log.push_back({AugTag::JO, dc, sc, PatchSource::donor, dest_center, j, false});
  }
  return r;
}

inline PatchResult apply_joint_cutocclude(const Image& img, const KeypointSet& joints, const Image& donor,
                                          const KeypointSet& donor_joints, RandomStream& rng, int n, int size) {
  return apply_joint_cutocclude(img, joints, donor, donor_joints, rng, JointPatchOptions{n, size, -1.0});
}

/// Rotation uniform in (-range, range), scale uniform in the op's scale range, pivot `center`.
inline AffineMap sample_affine(const AugOp& op, RandomStream& rng, Point2 center) {
  if (!is_affine(op.tag)) throw InvalidParameter("sample_affine: not an affine op");
  const double r = op.rotation_range_deg;
  double rot = rng.uniform(-r, r);
  while (r > 0.0 && rot == -r) rot = rng.uniform(-r, r);
  const double scale = rng.uniform(op.scale_range.first, op.scale_range.second);
  return make_affine(rot, scale, center);
}

inline AffineMap sample_affine(AugTag kind, RandomStream& rng, Point2 center) {
  return sample_affine(default_op(kind), rng, center);
}

inline Point2 image_center(Size s) { return {(s.width - 1) / 2.0, (s.height - 1) / 2.0}; }

// ---------------------------------------------------------------------------
// Hard views
// ---------------------------------------------------------------------------

enum class GeometryProfile { normal, fisheye };

struct MixPartner {
  int sample_id = -1;
  double lambda = 1.0;
};

struct AugmentedView {
  Image image;
  /// Easy-view frame -> this view's frame.
  AffineMap relative_affine;
  std::vector<PatchRecord> patch_log;
  std::optional<MixPartner> mix_partner;

  [[nodiscard]] int fallback_count() const {
    return static_cast<int>(std::count_if(patch_log.begin(), patch_log.end(), [](const PatchRecord& r) { return r.fallback; }));
  }
};

struct Donor {
  const Image& image;
  const KeypointSet& joints;
  int sample_id = -1;
};

struct HardViewOptions {
  GeometryProfile profile = GeometryProfile::normal;
  /// Replaces the sampled outer affine (tests, degenerate configurations).
  std::optional<AffineMap> outer_override;
};

/// Default outer affine of a hard view. With the shared inner A30 the total rotation
/// budget is +-60 degrees (normal) or +-90 degrees (fisheye).
inline AugTag outer_affine_kind(GeometryProfile p) { return p == GeometryProfile::fisheye ? AugTag::A60 : AugTag::A30; }

/// Applies the pipeline's patch ops in order to the easy view, then one outer affine.
inline AugmentedView build_hard_view(const Image& easy_img, const KeypointSet& easy_joints, const Donor& donor,
                                     const AugPipeline& pipeline, RandomStream& rng, const HardViewOptions& opt = {}) {
  check_pipeline(pipeline);
  const Size size = easy_img.size();
  const Point2 center = image_center(size);
  AugmentedView view;
  view.image = easy_img;
  KeypointSet joints = easy_joints;
  AffineMap leading = AffineMap::identity();

  std::size_t first = 0;
  std::size_t last = pipeline.ops.size();
  if (!pipeline.ops.empty() && is_affine(pipeline.ops.front().tag) && pipeline.ops.size() > 1) {
    RandomStream r = rng.split("leading");
    leading = sample_affine(pipeline.ops.front(), r, center);
    view.image = warp_image(view.image, leading, size);
    joints = warp_points(joints, leading, size);
    first = 1;
  }
  AugOp outer_op = default_op(outer_affine_kind(opt.profile));
  if (last > first && is_affine(pipeline.ops[last - 1].tag)) {
    outer_op = pipeline.ops[last - 1];
    --last;
  }

  for (std::size_t i = first; i < last; ++i) {
    const AugOp& op = pipeline.ops[i];
    RandomStream r = rng.split(static_cast<std::uint64_t>(i));
    PatchResult res;
    switch (op.tag) {
      case AugTag::CO: res = apply_cutout(view.image, r, op.n_patches, op.patch_size); break;
      case AugTag::CM: res = apply_cutmix(view.image, donor.image, r, op.n_patches, op.patch_size); break;
      case AugTag::JC: res = apply_joint_cutout(view.image, joints, r, op.n_patches, op.patch_size); break;
      case AugTag::JO:
        res = apply_joint_cutocclude(view.image, joints, donor.image, donor.joints, r, op.n_patches, op.patch_size);
        break;
      case AugTag::MU: {
        const double lambda = r.uniform(op.mix_lambda_range.first, op.mix_lambda_range.second);
        res.image = apply_mixup(view.image, donor.image, lambda);
        view.mix_partner = MixPartner{donor.sample_id, lambda};
        break;
      }
      default: throw InvalidParameter("build_hard_view: unexpected affine op inside pipeline");
    }
    view.image = std::move(res.image);
    view.patch_log.insert(view.patch_log.end(), res.log.begin(), res.log.end());
  }

  AffineMap outer;
  if (opt.outer_override) {
    outer = *opt.outer_override;
  } else {
    RandomStream r = rng.split("outer");
    outer = sample_affine(outer_op, r, center);
  }
  view.image = warp_image(view.image, outer, size);
  view.relative_affine = compose(outer, leading);
  return view;
}

// ---------------------------------------------------------------------------
// Combination validator
// ---------------------------------------------------------------------------

enum class Principle { P1, P2, P3 };

inline std::string_view to_string(Principle p) {
  switch (p) {
    case Principle::P1: return "P1";
    case Principle::P2: return "P2";
    case Principle::P3: return "P3";
  }
  return "?";
}

struct Violation {
  Principle principle;
  std::string message;
};

struct ComboReport {
  enum class Verdict { recommended, warned };
  Verdict verdict = Verdict::recommended;
  std::vector<Violation> violations;

  [[nodiscard]] bool has(Principle p) const {
    return std::any_of(violations.begin(), violations.end(), [p](const Violation& v) { return v.principle == p; });
  }
};

namespace detail {

// Pairs that stack the same perturbation type or difficulty level.
inline bool similar_pair(AugTag a, AugTag b) {
  auto is = [&](AugTag x, AugTag y) { return (a == x && b == y) || (a == y && b == x); };
  return a == b || is(AugTag::JC, AugTag::JO) || is(AugTag::JC, AugTag::CO) || is(AugTag::JO, AugTag::CM) ||
         is(AugTag::CM, AugTag::CO);
}

}  // namespace detail

/// P1: MixUp combined with another patch op. P2: similar ops stacked.
/// P3: three or more patch ops stacked. Each pipeline is judged on its own.
inline ComboReport validate_combination(const std::vector<AugPipeline>& pipelines) {
  ComboReport rep;
  for (const auto& p : pipelines) {
    const auto tags = p.patch_tags();
    const std::string label = p.name.empty() ? std::string("<unnamed>") : p.name;
    const bool has_mu = std::find(tags.begin(), tags.end(), AugTag::MU) != tags.end();
    if (has_mu && tags.size() >= 2) {
      rep.violations.push_back({Principle::P1, label + ": MixUp combined with other hard augmentations blends away joint evidence"});
    }
    for (std::size_t i = 0; i < tags.size(); ++i) {
      for (std::size_t j = i + 1; j < tags.size(); ++j) {
        if (detail::similar_pair(tags[i], tags[j])) {
          rep.violations.push_back({Principle::P2, label + ": " + std::string(to_string(tags[i])) + " and " +
                                                       std::string(to_string(tags[j])) +
                                                       " share a perturbation type or difficulty level"});
        }
      }
    }
    if (tags.size() >= 3) {
      rep.violations.push_back({Principle::P3, label + ": " + std::to_string(tags.size()) +
                                                   " stacked augmentations over-pollute the image"});
    }
  }
  rep.verdict = rep.violations.empty() ? ComboReport::Verdict::recommended : ComboReport::Verdict::warned;
  return rep;
}

}  // namespace poseaug
