#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "support.hpp"

namespace {

using namespace poseaug;
using poseaug::testing::images_of;
using poseaug::testing::scratch_dir;
using poseaug::testing::synth_samples;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<AugPipeline> pipes(std::initializer_list<const char*> names, int patch = 5) {
  TrainConfig c;
  c.paths.assign(names.begin(), names.end());
  c.patch_size = patch;
  return c.pipelines();
}

// Network trained briefly so its teacher joints clear the confidence threshold.
const TinyPoseNet& warm_net() {
  static const TinyPoseNet net = [] {
    const auto data = synth_samples(120, 90);
    TrainConfig c;
    c.paths = {};
    c.epochs = 6;
    return train(c, data, {}, {}).nets[0];
  }();
  return net;
}

TEST(TrainConfig, DefaultsAndDerivedQuantities) {
  TrainConfig c;
  EXPECT_EQ(c.paths, (std::vector<std::string>{"JOCO", "JC", "JCCM", "JO"}));
  EXPECT_EQ(c.lambda_u, 1.0);
  EXPECT_EQ(c.warmup_epochs(), 4);
  EXPECT_EQ(c.lambda_at(3), 0.0);
  EXPECT_EQ(c.lambda_at(4), 1.0);
  EXPECT_EQ(c.schedule().milestones, (std::vector<int>{28, 36}));
  c.warmup_fraction = 0.0;
  EXPECT_EQ(c.lambda_at(0), 1.0);
  c.patch_size = 5;
  for (const auto& p : c.pipelines()) {
    for (const auto& op : p.ops) EXPECT_EQ(op.patch_size, 5);
  }
}

TEST(TrainConfig, ValidationRejectsBadValues) {
  TrainConfig c;
  c.epochs = 0;
  EXPECT_THROW(c.validate(), InvalidParameter);
  c = TrainConfig{};
  c.lambda_u = -1;
  EXPECT_THROW(c.validate(), InvalidParameter);
  c = TrainConfig{};
  c.paths = {"JC,A30,CO"};
  EXPECT_THROW(c.validate(), InvalidParameter);
  c = TrainConfig{};
  c.paths = {"nope"};
  EXPECT_THROW(c.validate(), InvalidParameter);
}

TEST(Consistency, BatchHasOneHardViewAndTeacherPerPathAndImage) {
  const auto data = synth_samples(4, 1);
  const TinyPoseNet net = init_params(1);
  const TinyPoseNet* teachers[] = {&net};
  const ConsistencyBatch cb = build_consistency_batch(images_of(data), teachers, pipes({"JOCO", "JC", "JCCM", "JO"}), {}, RandomStream(2));
  ASSERT_EQ(cb.num_paths(), 4U);
  ASSERT_EQ(cb.num_images(), 4U);
  ASSERT_EQ(cb.teacher.size(), 1U);
  for (std::size_t p = 0; p < 4; ++p) {
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_TRUE(cb.teacher[0][p][i].no_grad);
      EXPECT_EQ(cb.hard[p][i].image.size(), data[i].image.size());
    }
  }
}

TEST(Consistency, TeacherIsTheEasyPredictionWarpedByTheViewAffine) {
  const auto data = synth_samples(3, 3);
  const TinyPoseNet& net = warm_net();
  const TinyPoseNet* teachers[] = {&net};
  const ConsistencyBatch cb = build_consistency_batch(images_of(data), teachers, pipes({"JOCO", "A60"}), {}, RandomStream(4));
  const ForwardResult easy = forward(net, cb.easy_images, false);
  for (std::size_t p = 0; p < 2; ++p) {
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_EQ(cb.teacher[0][p][i].values, warp_heatmap(easy.heatmaps[i], cb.hard[p][i].relative_affine).values);
    }
  }
  // Teacher joints are the thresholded easy-view decode.
  for (std::size_t i = 0; i < 3; ++i) {
    const KeypointSet d = decode_heatmaps(easy.heatmaps[i]);
    for (std::size_t j = 0; j < d.size(); ++j) {
      EXPECT_EQ(cb.joints[i][j].usable(), d[j].confidence >= 0.3);
    }
  }
}

TEST(Consistency, IdentityViewsGiveZeroUnsupervisedLoss) {
  const auto data = synth_samples(4, 5);
  const TinyPoseNet& net = warm_net();
  const TinyPoseNet* teachers[] = {&net};
  ConsistencyOptions opt;
  opt.inner_override = AffineMap::identity();
  opt.outer_override = AffineMap::identity();
  const ConsistencyBatch cb = build_consistency_batch(images_of(data), teachers, pipes({"A60", "A60"}), opt, RandomStream(6));
  const LabeledBatch lab = prepare_labeled(std::span(data).first(2), 1.0, RandomStream(7));
  const ObjectiveResult r = objective(net, lab, &cb, 0, 1.0, UnsupMode::multi_loss());
  EXPECT_EQ(r.report.loss_u, 0.0);
  EXPECT_EQ(r.report.loss_u_per_path, (std::vector<double>{0.0, 0.0}));
}

TEST(Consistency, FallbacksAreCountedPerPatch) {
  const auto data = synth_samples(4, 8);
  const TinyPoseNet net = init_params(9);
  const TinyPoseNet* teachers[] = {&net};
  const ConsistencyBatch cb = build_consistency_batch(images_of(data), teachers, pipes({"JOCO", "JC", "JCCM", "JO"}), {}, RandomStream(10));
  int expected = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    const bool none = detail::usable_joints(cb.joints[i]).empty();
    const bool donor_none = detail::usable_joints(cb.joints[(i + 1) % 4]).empty();
    const int jc = none ? 5 : 0;
    const int jo = (none || donor_none) ? 2 : 0;
    expected += jo + jc + jc + jo;  // JOCO, JC, JCCM, JO
  }
  EXPECT_EQ(cb.fallback_count(), expected);
}

TEST(Objective, PathLossesSumToTheUnsupervisedLoss) {
  const auto data = synth_samples(6, 11);
  const TinyPoseNet& net = warm_net();
  const TinyPoseNet* teachers[] = {&net};
  const ConsistencyBatch cb = build_consistency_batch(images_of(data), teachers, pipes({"JOCO", "JC", "JCCM", "JO"}), {}, RandomStream(12));
  const LabeledBatch lab = prepare_labeled(std::span(data).first(3), 1.0, RandomStream(13));
  const ObjectiveResult r = objective(net, lab, &cb, 0, 0.7, UnsupMode::multi_loss());
  double sum = 0.0;
  for (double v : r.report.loss_u_per_path) sum += v;
  EXPECT_NEAR(r.report.loss_u, sum, 1e-15);
  EXPECT_GT(r.report.loss_u, 0.0);
  EXPECT_NEAR(r.report.total, r.report.loss_s + 0.7 * r.report.loss_u, 1e-15);
}

TEST(Objective, FusionRejectsUnalignedStudents) {
  const auto data = synth_samples(3, 14);
  const TinyPoseNet& net = warm_net();
  const TinyPoseNet* teachers[] = {&net};
  const LabeledBatch lab = prepare_labeled(std::span(data).first(1), 1.0, RandomStream(15));
  const ConsistencyBatch loose = build_consistency_batch(images_of(data), teachers, pipes({"JOCO", "JCCM"}), {}, RandomStream(16));
  EXPECT_THROW(objective(net, lab, &loose, 0, 1.0, UnsupMode::heatmap_fusion()), ContractError);
  ConsistencyOptions opt;
  opt.shared_outer = true;
  const ConsistencyBatch aligned = build_consistency_batch(images_of(data), teachers, pipes({"JOCO", "JCCM"}), opt, RandomStream(16));
  EXPECT_NO_THROW(objective(net, lab, &aligned, 0, 1.0, UnsupMode::heatmap_fusion()));
}

// Relative error of the analytic objective gradient against central differences with the
// consistency batch (and so every teacher signal) held fixed. The views hold thousands of
// ReLUs, so the step is small enough that kink crossings stay rare.
double frozen_teacher_gradient_error(std::size_t param_stride) {
  const auto data = synth_samples(4, 17);
  TinyPoseNet net = warm_net();
  const TinyPoseNet* teachers[] = {&net};
  const ConsistencyBatch cb = build_consistency_batch(images_of(data), teachers, pipes({"JOCO", "JCCM"}), {}, RandomStream(18));
  const LabeledBatch lab = prepare_labeled(std::span(data).first(2), 1.0, RandomStream(19));
  const UnsupMode mode = UnsupMode::multi_loss();
  const std::vector<double> g = objective(net, lab, &cb, 0, 1.0, mode).grads;
  const double h = 1e-7;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < net.parameter_count(); i += param_stride) {
    const double o = net.params()[i];
    net.mutable_params()[i] = o + h;
    const double up = objective(net, lab, &cb, 0, 1.0, mode).report.total;
    net.mutable_params()[i] = o - h;
    const double down = objective(net, lab, &cb, 0, 1.0, mode).report.total;
    net.mutable_params()[i] = o;
    const double fd = (up - down) / (2 * h);
    num += (fd - g[i]) * (fd - g[i]);
    den += fd * fd;
  }
  return std::sqrt(num / den);
}

TEST(Objective, GradientMatchesFrozenTeacherFiniteDifferences) {
  EXPECT_LT(frozen_teacher_gradient_error(13), 1e-3);
}

TEST(Objective, ZeroLambdaSkipsTheUnsupervisedTerm) {
  const auto data = synth_samples(4, 20);
  const TinyPoseNet& net = warm_net();
  const TinyPoseNet* teachers[] = {&net};
  const ConsistencyBatch cb = build_consistency_batch(images_of(data), teachers, pipes({"JOCO"}), {}, RandomStream(21));
  const LabeledBatch lab = prepare_labeled(std::span(data).first(2), 1.0, RandomStream(22));
  const ObjectiveResult with = objective(net, lab, &cb, 0, 0.0, UnsupMode::multi_loss());
  const ObjectiveResult without = objective(net, lab, nullptr, 0, 1.0, UnsupMode::multi_loss());
  EXPECT_EQ(with.grads, without.grads);
  EXPECT_EQ(with.report.total, without.report.loss_s);
}

TEST(TrainStep, ZeroLambdaReproducesTheSupervisedStepBitForBit) {
  const auto data = synth_samples(16, 23);
  TinyPoseNet a = init_params(24), b = a;
  OptimizerState oa(a.parameter_count(), LrSchedule{}), ob = oa;
  TrainConfig cfg;
  StepContext ssl = make_step_context(cfg, 0);
  ssl.lambda = 0.0;
  StepContext sup = ssl;
  sup.pipelines.clear();
  const RandomStream rng(25);
  for (int s = 0; s < 3; ++s) {
    const RandomStream sr = rng.split(static_cast<std::uint64_t>(s));
    train_step_single(a, oa, std::span(data).first(8), images_of(data), ssl, sr);
    train_step_single(b, ob, std::span(data).first(8), {}, sup, sr);
  }
  EXPECT_TRUE(a == b);
  EXPECT_EQ(oa.m, ob.m);
}

TEST(Dual, IdenticalNetworksReportIdenticalLosses) {
  const auto data = synth_samples(8, 26);
  TinyPoseNet a = warm_net(), b = warm_net();
  OptimizerState oa(a.parameter_count(), LrSchedule{}), ob = oa;
  TrainConfig cfg;
  cfg.patch_size = 5;
  const StepContext ctx = make_step_context(cfg, 10);
  const DualReport r = train_step_dual(a, b, oa, ob, std::span(data).first(4), images_of(data), ctx, RandomStream(27));
  EXPECT_LT(std::abs(r.a.loss_u - r.b.loss_u), 1e-12);
  EXPECT_GT(r.a.loss_u, 0.0);
  EXPECT_EQ(r.a.total, r.b.total);
  EXPECT_TRUE(a == b);
}

TEST(Dual, SwappingNetworksSwapsTheReports) {
  const auto data = synth_samples(8, 28);
  const TinyPoseNet base_a = warm_net();
  const TinyPoseNet base_b = init_params(29);
  TrainConfig cfg;
  cfg.patch_size = 5;
  const StepContext ctx = make_step_context(cfg, 10);
  TinyPoseNet a1 = base_a, b1 = base_b, a2 = base_b, b2 = base_a;
  OptimizerState o1(a1.parameter_count(), LrSchedule{}), o2 = o1, o3 = o1, o4 = o1;
  const DualReport r1 = train_step_dual(a1, b1, o1, o2, std::span(data).first(4), images_of(data), ctx, RandomStream(30));
  const DualReport r2 = train_step_dual(a2, b2, o3, o4, std::span(data).first(4), images_of(data), ctx, RandomStream(30));
  EXPECT_EQ(r1.a.loss_u, r2.b.loss_u);
  EXPECT_EQ(r1.b.loss_u, r2.a.loss_u);
  EXPECT_TRUE(a1 == b2);
  EXPECT_TRUE(b1 == a2);
}

TEST(Dual, CrossLossDoesNotReachTheTeacherNetwork) {
  const auto data = synth_samples(6, 31);
  TinyPoseNet a = warm_net();
  TinyPoseNet b = init_params(32);
  const TinyPoseNet* teachers[] = {&a, &b};
  const ConsistencyBatch cb = build_consistency_batch(images_of(data), teachers, pipes({"JOCO", "JCCM"}), {}, RandomStream(33));
  const LabeledBatch lab = prepare_labeled(std::span(data).first(3), 1.0, RandomStream(34));
  const ObjectiveResult ra = objective(a, lab, &cb, 1, 1.0, UnsupMode::multi_loss());
  // Perturb every parameter of B; A's objective over the frozen batch is unchanged.
  RandomStream r(35);
  for (double& v : b.mutable_params()) v += r.uniform(-0.1, 0.1);
  const ObjectiveResult again = objective(a, lab, &cb, 1, 1.0, UnsupMode::multi_loss());
  EXPECT_EQ(ra.report.loss_u, again.report.loss_u);
  EXPECT_EQ(ra.grads, again.grads);
  EXPECT_EQ(ra.grads.size(), a.parameter_count());
}

TEST(Dual, EachNetworkIsUpdatedByItsOwnObjectiveOnly) {
  const auto data = synth_samples(8, 36);
  TinyPoseNet a = warm_net(), b = init_params(37);
  const TinyPoseNet a0 = a, b0 = b;
  OptimizerState oa(a.parameter_count(), LrSchedule{}), ob = oa;
  TrainConfig cfg;
  cfg.patch_size = 5;
  const StepContext ctx = make_step_context(cfg, 10);
  const RandomStream rng(38);
  const auto lab_samples = std::span(data).first(4);
  train_step_dual(a, b, oa, ob, lab_samples, images_of(data), ctx, rng);

  // Replay B's update from its own objective with A's teacher signal.
  const LabeledBatch lab = prepare_labeled(lab_samples, ctx.sigma, rng.split("labeled"));
  const TinyPoseNet* teachers[] = {&a0, &b0};
  const ConsistencyBatch cb = build_consistency_batch(images_of(data), teachers, ctx.pipelines, ctx.consistency, rng.split("unlabeled"));
  TinyPoseNet b_ref = b0;
  OptimizerState o_ref(b_ref.parameter_count(), LrSchedule{});
  adam_step(o_ref, b_ref, objective(b0, lab, &cb, 0, ctx.lambda, ctx.mode).grads, ctx.epoch);
  EXPECT_TRUE(b == b_ref);
}

TEST(Evaluate, PerfectPredictionsScoreOne) {
  const auto data = synth_samples(10, 39);
  std::vector<KeypointSet> preds;
  for (const auto& s : data) preds.push_back(*s.joints);
  const auto pairs = make_pairs(preds, data);
  EvalOptions pck, pckh, oks_opt;
  pckh.metric = Metric::pckh;
  oks_opt.metric = Metric::oks;
  EXPECT_EQ(score_pairs(pairs, pck).value, 1.0);
  EXPECT_EQ(score_pairs(pairs, pckh).value, 1.0);
  EXPECT_NEAR(score_pairs(pairs, oks_opt).value, 1.0, 1e-12);
}

TEST(Evaluate, DualMeanIsTheAverage) {
  const auto data = synth_samples(20, 40);
  const TinyPoseNet a = warm_net(), b = init_params(41);
  const TinyPoseNet* nets[] = {&a, &b};
  const EvalReport r = evaluate(nets, data, EvalOptions{});
  ASSERT_EQ(r.per_net.size(), 2U);
  EXPECT_DOUBLE_EQ(r.mean, (r.per_net[0].value + r.per_net[1].value) / 2);
  EXPECT_DOUBLE_EQ(r.per_net[0].value, evaluate(a, data, EvalOptions{}).mean);
}

TEST(Train, SupervisedSanityFloor) {
  const auto data = synth_samples(600, 42);
  const std::span<const Sample> all(data);
  TrainConfig cfg;
  cfg.paths = {};
  cfg.epochs = 20;
  const TrainRun run = train(cfg, all.first(500), {}, all.subspan(500));
  EXPECT_GE(run.history.back().val_mean, 0.8);
}

TEST(Train, ConsistencyTrainingDoesNotCollapse) {
  const auto data = synth_samples(400, 43);
  const std::span<const Sample> all(data);
  TrainConfig cfg;
  cfg.paths = {"JOCO", "JCCM"};
  cfg.patch_size = 5;
  cfg.epochs = 20;
  const TrainRun run = train(cfg, all.first(100), all.subspan(100, 250), {});
  const ForwardResult fr = forward(run.nets[0], images_of(std::vector<Sample>(data.begin() + 350, data.end())), false);
  const int k = fr.heatmaps[0].channels;
  for (int c = 0; c < k; ++c) {
    double s = 0.0, s2 = 0.0, n = 0.0;
    for (const auto& h : fr.heatmaps) {
      for (std::size_t i = 0; i < h.plane(); ++i) {
        const double v = h.values[static_cast<std::size_t>(c) * h.plane() + i];
        s += v;
        s2 += v * v;
        n += 1;
      }
    }
    EXPECT_GT(s2 / n - (s / n) * (s / n), 1e-6) << "channel " << c;
  }
}

TEST(Train, LogsHaveOneColumnPerPath) {
  const auto dir = scratch_dir("train_logs");
  const auto data = synth_samples(40, 44);
  const std::span<const Sample> all(data);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.warmup_fraction = 0.0;
  cfg.patch_size = 5;
  const TrainIo io{dir.string(), false};
  train(cfg, all.first(16), all.subspan(16, 16), all.subspan(32), &io);
  std::ifstream steps(dir / "steps.csv");
  std::string header;
  std::getline(steps, header);
  EXPECT_EQ(header, "step,epoch,net,lambda,loss_s,loss_u_0_JOCO,loss_u_1_JC,loss_u_2_JCCM,loss_u_3_JO,loss_u,total");
  int rows = 0;
  for (std::string line; std::getline(steps, line);) ++rows;
  EXPECT_EQ(rows, 4);  // 2 epochs x 2 steps of 8
  std::ifstream epochs(dir / "epochs.csv");
  std::getline(epochs, header);
  EXPECT_EQ(header, "epoch,lr,lambda,loss_s_A,loss_u_A,val_A,val_mean");
  EXPECT_TRUE(std::filesystem::exists(dir / "checkpoint_A.tensors"));
}

TEST(Train, DualLogsBothNetworks) {
  const auto dir = scratch_dir("train_dual");
  const auto data = synth_samples(24, 45);
  const std::span<const Sample> all(data);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.mode = NetworkMode::dual;
  cfg.paths = {"JOCO"};
  const TrainIo io{dir.string(), false};
  const TrainRun run = train(cfg, all.first(8), all.subspan(8, 8), all.subspan(16), &io);
  EXPECT_EQ(run.nets.size(), 2U);
  EXPECT_FALSE(run.nets[0] == run.nets[1]);
  const std::string steps = slurp(dir / "steps.csv");
  EXPECT_NE(steps.find(",A,"), std::string::npos);
  EXPECT_NE(steps.find(",B,"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir / "checkpoint_B.tensors"));
  std::ifstream epochs(dir / "epochs.csv");
  std::string header;
  std::getline(epochs, header);
  EXPECT_EQ(header, "epoch,lr,lambda,loss_s_A,loss_u_A,val_A,loss_s_B,loss_u_B,val_B,val_mean");
}

TEST(Train, RerunsAreByteIdenticalAcrossThreadCounts) {
  const auto data = synth_samples(40, 46);
  const std::span<const Sample> all(data);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.warmup_fraction = 0.0;
  cfg.patch_size = 5;
  const auto d1 = scratch_dir("det1");
  const auto d2 = scratch_dir("det2");
  setenv("POSEAUG_THREADS", "1", 1);
  const TrainIo io1{d1.string(), false};
  train(cfg, all.first(16), all.subspan(16, 16), all.subspan(32), &io1);
  setenv("POSEAUG_THREADS", "4", 1);
  const TrainIo io2{d2.string(), false};
  train(cfg, all.first(16), all.subspan(16, 16), all.subspan(32), &io2);
  unsetenv("POSEAUG_THREADS");
  EXPECT_EQ(slurp(d1 / "steps.csv"), slurp(d2 / "steps.csv"));
  EXPECT_EQ(slurp(d1 / "epochs.csv"), slurp(d2 / "epochs.csv"));
  EXPECT_EQ(slurp(d1 / "checkpoint_A.tensors"), slurp(d2 / "checkpoint_A.tensors"));
}

TEST(Train, ResumeContinuesExactly) {
  const auto data = synth_samples(40, 47);
  const std::span<const Sample> all(data);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.warmup_fraction = 0.0;
  cfg.patch_size = 5;
  cfg.paths = {"JOCO", "JCCM"};
  const auto full = scratch_dir("resume_full");
  const auto part = scratch_dir("resume_part");
  const TrainIo io_full{full.string(), false};
  const TrainRun ref = train(cfg, all.first(16), all.subspan(16, 16), all.subspan(32), &io_full);

  struct Stop {};
  const TrainIo io_part{part.string(), false};
  try {
    train(cfg, all.first(16), all.subspan(16, 16), all.subspan(32), &io_part, [](const EpochRecord& e) {
      if (e.epoch == 1) throw Stop{};
    });
  } catch (const Stop&) {
  }
  // Simulate a crash that left a partial row after the last checkpoint.
  std::ofstream(part / "steps.csv", std::ios::app) << "99,2,A,1,0,0,0,0,0\n";
  const TrainIo io_resume{part.string(), true};
  const TrainRun resumed = train(cfg, all.first(16), all.subspan(16, 16), all.subspan(32), &io_resume);
  EXPECT_TRUE(resumed.nets[0] == ref.nets[0]);
  EXPECT_EQ(slurp(full / "steps.csv"), slurp(part / "steps.csv"));
  EXPECT_EQ(slurp(full / "epochs.csv"), slurp(part / "epochs.csv"));
}

TEST(Ranking, TiedCandidatesShareARankAndKeepInputOrder) {
  const auto data = synth_samples(40, 48);
  const std::span<const Sample> all(data);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.warmup_fraction = 0.0;
  cfg.patch_size = 5;
  const auto ranking = rank_augmentations({"CO", "JC", "CO"}, cfg, all.first(16), all.subspan(16, 16), all.subspan(32));
  ASSERT_EQ(ranking.size(), 3U);
  std::vector<const RankEntry*> co;
  for (const auto& e : ranking) {
    if (e.candidate == "CO") co.push_back(&e);
  }
  ASSERT_EQ(co.size(), 2U);
  EXPECT_EQ(co[0]->rank, co[1]->rank);
  EXPECT_EQ(co[0]->curve, co[1]->curve);
  EXPECT_LT(co[0]->position, co[1]->position);
  for (std::size_t i = 1; i < ranking.size(); ++i) EXPECT_GE(ranking[i - 1].best, ranking[i].best);
  const std::string curves = ranking_curves_csv(ranking);
  EXPECT_EQ(std::count(curves.begin(), curves.end(), '\n'), 1 + 3 * 2);
  EXPECT_EQ(ranking_csv(ranking).substr(0, 27), "rank,candidate,best,best_ep");
}

}  // namespace
