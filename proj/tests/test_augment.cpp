#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "support.hpp"

namespace {

using namespace poseaug;
using poseaug::testing::random_image;
using poseaug::testing::random_joints;

const Size kSize{64, 48};

// Rebuilds the output from the input and the log alone.
Image replay(const Image& img, const Image* donor, const std::vector<PatchRecord>& log) {
  Image out = img;
  for (const auto& rec : log) {
    for (int dy = 0; dy < rec.dest.height; ++dy) {
      for (int dx = 0; dx < rec.dest.width; ++dx) {
        for (int c = 0; c < 3; ++c) {
          double v = 0.0;
          if (rec.kind == PatchSource::donor) v = donor->at(rec.source->y + dy, rec.source->x + dx, c);
          out.at(rec.dest.y + dy, rec.dest.x + dx, c) = v;
        }
      }
    }
  }
  return out;
}

// Pixels whose value changed must be exactly the union of logged destinations.
void expect_accounting(const Image& before, const PatchResult& res, const Image* donor) {
  for (int y = 0; y < before.height(); ++y) {
    for (int x = 0; x < before.width(); ++x) {
      bool covered = false;
      for (const auto& rec : res.log) covered |= rec.dest.contains(x, y);
      bool changed = false;
      for (int c = 0; c < 3; ++c) changed |= res.image.at(y, x, c) != before.at(y, x, c);
      ASSERT_EQ(changed, covered) << "pixel (" << x << "," << y << ")";
    }
  }
  ASSERT_EQ(replay(before, donor, res.log), res.image);
  for (const auto& rec : res.log) {
    ASSERT_EQ(clip_rect(rec.dest, before.size()), rec.dest);
    if (rec.source) {
      ASSERT_EQ(rec.source->width, rec.dest.width);
      ASSERT_EQ(rec.source->height, rec.dest.height);
      ASSERT_EQ(clip_rect(*rec.source, before.size()), *rec.source);
    }
  }
}

// Random images live in [0.01, 1) so zero fills and donor copies always change a pixel.
Image test_image(RandomStream r) {
  Image img = random_image(kSize.height, kSize.width, r);
  for (double& v : img.pixels()) v = 0.01 + 0.99 * v;
  return img;
}

void expect_centers(const PatchResult& res, const KeypointSet& joints, int size) {
  const double limit = size / 4.0 * std::sqrt(2.0);
  for (const auto& rec : res.log) {
    ASSERT_TRUE(rec.placement_center && rec.joint_index);
    const Keypoint& j = joints[static_cast<std::size_t>(*rec.joint_index)];
    ASSERT_TRUE(j.usable());
    ASSERT_LE(std::hypot(rec.placement_center->x - j.x, rec.placement_center->y - j.y), limit + 1e-12);
    // The clipped rectangle lies inside the unclipped square centered on the placement center.
    const Rect full = detail::centered_rect(*rec.placement_center, size);
    ASSERT_GE(rec.dest.x, full.x);
    ASSERT_GE(rec.dest.y, full.y);
    ASSERT_LE(rec.dest.x + rec.dest.width, full.x + full.width);
    ASSERT_LE(rec.dest.y + rec.dest.height, full.y + full.height);
  }
}

TEST(Augment, CutoutAccounting) {
  RandomStream root(1);
  for (int t = 0; t < 200; ++t) {
    RandomStream r = root.split(static_cast<std::uint64_t>(t));
    const Image img = test_image(r.split("img"));
    const int size = static_cast<int>(r.uniform_int(1, 30));
    const PatchResult res = apply_cutout(img, r, 5, size);
    ASSERT_EQ(res.log.size(), 5U);
    for (const auto& rec : res.log) ASSERT_EQ(rec.kind, PatchSource::zero);
    expect_accounting(img, res, nullptr);
  }
}

TEST(Augment, CutmixAccounting) {
  RandomStream root(2);
  for (int t = 0; t < 200; ++t) {
    RandomStream r = root.split(static_cast<std::uint64_t>(t));
    const Image img = test_image(r.split("img"));
    const Image donor = test_image(r.split("donor"));
    const int size = static_cast<int>(r.uniform_int(1, 30));
    const PatchResult res = apply_cutmix(img, donor, r, 2, size);
    ASSERT_EQ(res.log.size(), 2U);
    expect_accounting(img, res, &donor);
  }
}

TEST(Augment, JointCutoutAccountingAndCenters) {
  RandomStream root(3);
  for (int t = 0; t < 200; ++t) {
    RandomStream r = root.split(static_cast<std::uint64_t>(t));
    const Image img = test_image(r.split("img"));
    KeypointSet joints = random_joints(13, kSize, r.split("joints"));
    for (auto& j : joints.joints) {
      if (r.uniform() < 0.3) j.state = JointState::invisible;
    }
    if (detail::usable_joints(joints).empty()) joints[0].state = JointState::visible;
    const int size = static_cast<int>(r.uniform_int(2, 24));
    const PatchResult res = apply_joint_cutout(img, joints, r, 5, size);
    ASSERT_EQ(res.log.size(), 5U);
    expect_accounting(img, res, nullptr);
    expect_centers(res, joints, size);
  }
}

TEST(Augment, JointCutOccludeAccountingAndCenters) {
  RandomStream root(4);
  for (int t = 0; t < 200; ++t) {
    RandomStream r = root.split(static_cast<std::uint64_t>(t));
    const Image img = test_image(r.split("img"));
    const Image donor = test_image(r.split("donor"));
    const KeypointSet joints = random_joints(13, kSize, r.split("joints"));
    const KeypointSet donor_joints = random_joints(13, kSize, r.split("donor-joints"));
    const int size = static_cast<int>(r.uniform_int(2, 24));
    const PatchResult res = apply_joint_cutocclude(img, joints, donor, donor_joints, r, 2, size);
    ASSERT_EQ(res.log.size(), 2U);
    expect_accounting(img, res, &donor);
    expect_centers(res, joints, size);
  }
}

TEST(Augment, MixupMatchesClosedForm) {
  RandomStream r(5);
  const Image a = random_image(16, 12, r.split("a"));
  const Image b = random_image(16, 12, r.split("b"));
  for (double lam : {0.0, 0.3, 0.5, 0.7, 1.0}) {
    const Image m = apply_mixup(a, b, lam);
    for (std::size_t i = 0; i < m.pixels().size(); ++i) {
      EXPECT_NEAR(m.pixels()[i], lam * a.pixels()[i] + (1 - lam) * b.pixels()[i], 1e-12);
    }
  }
  EXPECT_THROW(apply_mixup(a, b, 1.5), InvalidParameter);
  EXPECT_THROW(apply_mixup(a, Image(8, 8), 0.5), DimensionMismatch);
}

TEST(Augment, JointOpsFallBackWithoutUsableJoints) {
  RandomStream r(6);
  const Image img = test_image(r.split("img"));
  const Image donor = test_image(r.split("donor"));
  KeypointSet none(13);
  RandomStream a = r.split(1);
  const PatchResult jc = apply_joint_cutout(img, none, a, 5, 10);
  ASSERT_EQ(jc.log.size(), 5U);
  for (const auto& rec : jc.log) {
    EXPECT_TRUE(rec.fallback);
    EXPECT_EQ(rec.op, AugTag::JC);
    EXPECT_FALSE(rec.joint_index);
  }
  expect_accounting(img, jc, nullptr);

  const KeypointSet some = random_joints(13, kSize, r.split("j"));
  RandomStream b = r.split(2);
  const PatchResult jo = apply_joint_cutocclude(img, some, donor, none, b, 2, 10);
  ASSERT_EQ(jo.log.size(), 2U);
  for (const auto& rec : jo.log) {
    EXPECT_TRUE(rec.fallback);
    EXPECT_EQ(rec.op, AugTag::JO);
  }
  expect_accounting(img, jo, &donor);
}

TEST(Augment, FewJointsArePickedWithReplacement) {
  RandomStream r(7);
  const Image img = test_image(r.split("img"));
  KeypointSet joints(13);
  joints[4] = {20, 30, JointState::visible, 0};
  joints[9] = {10, 40, JointState::predicted, 0.9};
  const PatchResult res = apply_joint_cutout(img, joints, r, 5, 8);
  ASSERT_EQ(res.log.size(), 5U);
  for (const auto& rec : res.log) {
    EXPECT_TRUE(*rec.joint_index == 4 || *rec.joint_index == 9);
    EXPECT_FALSE(rec.fallback);
  }
}

TEST(Augment, EnoughJointsArePickedWithoutReplacement) {
  RandomStream root(8);
  for (int t = 0; t < 50; ++t) {
    RandomStream r = root.split(static_cast<std::uint64_t>(t));
    const KeypointSet joints = random_joints(13, kSize, r.split("j"));
    const PatchResult res = apply_joint_cutout(test_image(r.split("i")), joints, r, 5, 6);
    std::set<int> seen;
    for (const auto& rec : res.log) seen.insert(*rec.joint_index);
    EXPECT_EQ(seen.size(), 5U);
  }
}

TEST(Augment, PatchOpsRejectBadArguments) {
  RandomStream r(9);
  const Image img(16, 12);
  EXPECT_THROW(apply_cutout(img, r, -1, 4), InvalidParameter);
  EXPECT_THROW(apply_cutout(img, r, 1, 0), InvalidParameter);
  EXPECT_THROW(apply_cutmix(img, Image(8, 8), r, 1, 4), DimensionMismatch);
}

TEST(Augment, SampledAffinesRespectTheirRanges) {
  RandomStream r(10);
  for (AugTag tag : {AugTag::A30, AugTag::A60, AugTag::A90}) {
    const double range = default_op(tag).rotation_range_deg;
    for (int i = 0; i < 2000; ++i) {
      const AffineMap a = sample_affine(tag, r, {10, 10});
      ASSERT_GT(a.rotation_deg, -range);
      ASSERT_LT(a.rotation_deg, range);
      ASSERT_GE(a.scale, 0.75);
      ASSERT_LE(a.scale, 1.25);
    }
  }
  EXPECT_THROW(sample_affine(AugTag::CO, r, {0, 0}), InvalidParameter);
}

TEST(Augment, DefaultHyperParameters) {
  EXPECT_EQ(default_op(AugTag::CO).n_patches, 5);
  EXPECT_EQ(default_op(AugTag::CM).n_patches, 2);
  EXPECT_EQ(default_op(AugTag::JC).n_patches, 5);
  EXPECT_EQ(default_op(AugTag::JO).n_patches, 2);
  for (AugTag t : {AugTag::CO, AugTag::CM, AugTag::JC, AugTag::JO}) EXPECT_EQ(default_op(t).patch_size, 20);
  EXPECT_EQ(default_op(AugTag::A30).rotation_range_deg, 30.0);
  EXPECT_EQ(default_op(AugTag::A60).rotation_range_deg, 60.0);
}

TEST(Augment, ParsePipelines) {
  EXPECT_EQ(parse_pipeline("JOCO").tags(), (std::vector<AugTag>{AugTag::JO, AugTag::CO}));
  EXPECT_EQ(parse_pipeline("JCCM").tags(), (std::vector<AugTag>{AugTag::JC, AugTag::CM}));
  EXPECT_EQ(parse_pipeline("JC,MU").tags(), (std::vector<AugTag>{AugTag::JC, AugTag::MU}));
  EXPECT_EQ(parse_pipeline("JC+MU").tags(), (std::vector<AugTag>{AugTag::JC, AugTag::MU}));
  EXPECT_TRUE(parse_pipeline("A60").ops.empty());
  EXPECT_EQ(parse_pipeline("A30,CO,A30").tags().size(), 3U);
  EXPECT_THROW(parse_pipeline("CO,A30,CM"), InvalidParameter);
  EXPECT_THROW(parse_pipeline("JC,,CO"), InvalidParameter);
  try {
    parse_pipeline("XX");
    FAIL();
  } catch (const InvalidParameter& e) {
    EXPECT_NE(std::string(e.what()).find("JOCO"), std::string::npos);
  }
}

TEST(Augment, EmptyPipelineHardViewIsTheOuterWarp) {
  RandomStream r(11);
  const Image easy = test_image(r.split("img"));
  const KeypointSet joints = random_joints(13, kSize, r.split("j"));
  const Donor donor{easy, joints, 0};
  RandomStream hv = r.split("hv");
  const AugmentedView v = build_hard_view(easy, joints, donor, preset("A60"), hv);
  EXPECT_EQ(v.image, warp_image(easy, v.relative_affine, kSize));
  EXPECT_LT(std::abs(v.relative_affine.rotation_deg), 30.0);
  EXPECT_TRUE(v.patch_log.empty());
}

TEST(Augment, HardViewOrderIsPatchesThenOuterAffine) {
  RandomStream r(12);
  const Image easy = test_image(r.split("img"));
  const Image donor_img = test_image(r.split("donor"));
  const KeypointSet joints = random_joints(13, kSize, r.split("j"), 5.0);
  const Donor donor{donor_img, joints, 3};
  HardViewOptions opt;
  opt.outer_override = make_affine(17.0, 1.1, image_center(kSize));
  RandomStream a = r.split("a");
  RandomStream b = a;
  const AugmentedView v = build_hard_view(easy, joints, donor, preset("JOCO"), a, opt);

  // Manual replay: JO on the easy view, CO after it, then the outer warp.
  RandomStream jo_rng = b.split(std::uint64_t{0});
  RandomStream co_rng = b.split(std::uint64_t{1});
  const PatchResult jo = apply_joint_cutocclude(easy, joints, donor_img, joints, jo_rng, 2, 20);
  const PatchResult co = apply_cutout(jo.image, co_rng, 5, 20);
  EXPECT_EQ(v.image, warp_image(co.image, *opt.outer_override, kSize));
  ASSERT_EQ(v.patch_log.size(), 7U);
  EXPECT_EQ(v.patch_log[0].op, AugTag::JO);
  EXPECT_EQ(v.patch_log[6].op, AugTag::CO);
  EXPECT_EQ(v.relative_affine.matrix, opt.outer_override->matrix);
}

TEST(Augment, LeadingAffineIsPartOfTheRelativeMap) {
  RandomStream r(13);
  const Image easy = test_image(r.split("img"));
  const KeypointSet joints = random_joints(13, kSize, r.split("j"));
  const Donor donor{easy, joints, 0};
  RandomStream a = r.split("a");
  const AugmentedView v = build_hard_view(easy, joints, donor, parse_pipeline("A30,CO,A30"), a);
  EXPECT_NE(v.relative_affine.rotation_deg, 0.0);
  EXPECT_LT(std::abs(v.relative_affine.rotation_deg), 60.0);
  EXPECT_EQ(v.patch_log.size(), 5U);
}

TEST(Augment, MixupViewRecordsItsPartner) {
  RandomStream r(14);
  const Image easy = test_image(r.split("img"));
  const Image donor_img = test_image(r.split("donor"));
  const KeypointSet joints = random_joints(13, kSize, r.split("j"));
  const Donor donor{donor_img, joints, 5};
  HardViewOptions opt;
  opt.outer_override = AffineMap::identity();
  RandomStream a = r.split("a");
  const AugmentedView v = build_hard_view(easy, joints, donor, preset("MU"), a, opt);
  ASSERT_TRUE(v.mix_partner);
  EXPECT_EQ(v.mix_partner->sample_id, 5);
  EXPECT_GE(v.mix_partner->lambda, 0.3);
  EXPECT_LE(v.mix_partner->lambda, 0.7);
  EXPECT_EQ(v.image, apply_mixup(easy, donor_img, v.mix_partner->lambda));
}

TEST(Augment, FisheyeUsesTheWiderOuterAffine) {
  EXPECT_EQ(outer_affine_kind(GeometryProfile::normal), AugTag::A30);
  EXPECT_EQ(outer_affine_kind(GeometryProfile::fisheye), AugTag::A60);
  RandomStream r(15);
  const Image easy = test_image(r.split("img"));
  const KeypointSet joints = random_joints(13, kSize, r.split("j"));
  const Donor donor{easy, joints, 0};
  double widest = 0.0;
  for (int i = 0; i < 200; ++i) {
    RandomStream a = r.split(static_cast<std::uint64_t>(i));
    HardViewOptions opt;
    opt.profile = GeometryProfile::fisheye;
    widest = std::max(widest, std::abs(build_hard_view(easy, joints, donor, preset("A60"), a, opt).relative_affine.rotation_deg));
  }
  EXPECT_GT(widest, 30.0);
  EXPECT_LT(widest, 60.0);
}

// Combination table: pipeline ops and the principles each must trip.
struct ComboCase {
  const char* id;
  const char* spec;
  std::vector<Principle> tags;
};

TEST(Validator, PresetCombinationsAreRecommended) {
  for (const char* p : {"JOCO", "JCCM"}) {
    const ComboReport r = validate_combination({parse_pipeline(p)});
    EXPECT_EQ(r.verdict, ComboReport::Verdict::recommended) << p;
    EXPECT_TRUE(r.violations.empty());
  }
  const ComboReport both = validate_combination({preset("JOCO"), preset("JCCM")});
  EXPECT_EQ(both.verdict, ComboReport::Verdict::recommended);
}

TEST(Validator, FlaggedCombinationsCarryTheirPrinciples) {
  const std::vector<ComboCase> cases = {
      {"c3", "JC,MU", {Principle::P1}},
      {"c4", "JO,MU", {Principle::P1}},
      {"c7", "JC,JO", {Principle::P2}},
      {"c8", "JC,CM,MU", {Principle::P1, Principle::P3}},
      {"c9", "JO,CO,MU", {Principle::P1, Principle::P3}},
      {"c10", "JC,JO,CO", {Principle::P2, Principle::P3}},
      {"c11", "JC,JO,CM", {Principle::P2, Principle::P3}},
      {"c12", "JC,CO,CM", {Principle::P2, Principle::P3}},
      {"c13", "JO,CO,CM", {Principle::P2, Principle::P3}},
  };
  for (const auto& c : cases) {
    const ComboReport r = validate_combination({parse_pipeline(c.spec)});
    EXPECT_EQ(r.verdict, ComboReport::Verdict::warned) << c.id;
    for (Principle p : c.tags) EXPECT_TRUE(r.has(p)) << c.id << " missing " << to_string(p);
  }
  EXPECT_FALSE(validate_combination({parse_pipeline("JC,MU")}).has(Principle::P3));
  EXPECT_FALSE(validate_combination({parse_pipeline("JC,JO")}).has(Principle::P1));
}

TEST(Validator, SingleOpsAndGeometryAreClean) {
  for (const char* p : {"CO", "CM", "MU", "JC", "JO", "A60", "A30,JO,CO,A30"}) {
    EXPECT_EQ(validate_combination({parse_pipeline(p)}).verdict, ComboReport::Verdict::recommended) << p;
  }
}

TEST(Validator, MessagesNameThePipeline) {
  const ComboReport r = validate_combination({parse_pipeline("JC,MU")});
  ASSERT_FALSE(r.violations.empty());
  EXPECT_NE(r.violations[0].message.find("JC,MU"), std::string::npos);
}

}  // namespace
