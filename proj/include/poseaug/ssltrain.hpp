#pragma once

// Single- and dual-network multi-path consistency training.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "poseaug/augment.hpp"
#include "poseaug/data.hpp"
#include "poseaug/error.hpp"
#include "poseaug/geometry.hpp"
#include "poseaug/losses.hpp"
#include "poseaug/metrics.hpp"
#include "poseaug/model.hpp"
#include "poseaug/parallel.hpp"
#include "poseaug/rng.hpp"
#include "poseaug/types.hpp"

namespace poseaug {

enum class NetworkMode { single, dual };

inline std::string to_string(NetworkMode m) { return m == NetworkMode::dual ? "dual" : "single"; }

struct TrainConfig {
  double lambda_u = 1.0;
  /// Hard-view pipelines, one per path; empty trains supervised-only.
  std::vector<std::string> paths = {"JOCO", "JC", "JCCM", "JO"};
  int epochs = 40;
  int batch_size = 8;
  double base_lr = 1e-3;
  /// Learning-rate drops, as fractions of the epoch budget.
  std::vector<double> milestones = {0.7, 0.9};
  double lr_gamma = 0.1;
  NetworkMode mode = NetworkMode::single;
  GeometryProfile profile = GeometryProfile::normal;
  UnsupMode unsup = UnsupMode::multi_loss();
  /// Leading fraction of epochs trained with lambda = 0.
  double warmup_fraction = 0.1;
  double joint_threshold = 0.3;
  /// Target Gaussian width in heatmap pixels.
  double sigma = 1.0;
  /// Replaces the patch side of CO/CM/JC/JO when positive (the defaults assume 256x192 crops).
  int patch_size = 0;
  std::uint64_t seed = 0;

  [[nodiscard]] LrSchedule schedule() const {
    LrSchedule s;
    s.base_lr = base_lr;
    s.gamma = lr_gamma;
    for (double f : milestones) s.milestones.push_back(static_cast<int>(std::lround(f * epochs)));
    return s;
  }

  [[nodiscard]] std::vector<AugPipeline> pipelines() const {
    std::vector<AugPipeline> out;
    for (const auto& p : paths) {
      AugPipeline pipe = parse_pipeline(p);
      if (patch_size > 0) {
        for (auto& op : pipe.ops) {
          if (!is_affine(op.tag) && op.tag != AugTag::MU) op.patch_size = patch_size;
        }
      }
      out.push_back(std::move(pipe));
    }
    return out;
  }

  [[nodiscard]] int warmup_epochs() const { return static_cast<int>(std::ceil(warmup_fraction * epochs - 1e-9)); }

  [[nodiscard]] double lambda_at(int epoch) const { return epoch < warmup_epochs() ? 0.0 : lambda_u; }

  void validate() const {
    if (epochs <= 0) throw InvalidParameter("epochs must be positive");
    if (batch_size <= 0) throw InvalidParameter("batch_size must be positive");
    if (!(base_lr > 0.0)) throw InvalidParameter("base_lr must be positive");
    if (lambda_u < 0.0) throw InvalidParameter("lambda_u must be non-negative");
    if (warmup_fraction < 0.0 || warmup_fraction > 1.0) throw InvalidParameter("warmup_fraction must lie in [0, 1]");
    if (!(sigma > 0.0)) throw InvalidParameter("sigma must be positive");
    if (patch_size < 0) throw InvalidParameter("patch_size must be non-negative");
    (void)pipelines();
  }
};

// ---------------------------------------------------------------------------
// Batches
// ---------------------------------------------------------------------------

/// Easy views of labeled samples with their rendered targets.
struct LabeledBatch {
  std::vector<Image> images;
  std::vector<Heatmap> targets;
};

inline LabeledBatch prepare_labeled(std::span<const Sample> samples, double sigma, const RandomStream& rng) {
  LabeledBatch b;
  b.images.resize(samples.size());
  b.targets.resize(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const Sample& s = samples[i];
    if (!s.joints) throw ContractError("prepare_labeled: sample has no keypoints");
    const Size size = s.image.size();
    RandomStream r = rng.split(static_cast<std::uint64_t>(i));
    const AffineMap inner = sample_affine(AugTag::A30, r, image_center(size));
    b.images[i] = warp_image(s.image, inner, size);
    b.targets[i] = render_heatmaps(warp_points(*s.joints, inner, size), size, TinyPoseNet::kStride, sigma);
  });
  return b;
}

struct ConsistencyOptions {
  GeometryProfile profile = GeometryProfile::normal;
  double joint_threshold = 0.3;
  /// All paths of an image share one outer affine (needed for heatmap fusion).
  bool shared_outer = false;
  std::optional<AffineMap> inner_override;
  std::optional<AffineMap> outer_override;
};

struct ConsistencyBatch {
  std::vector<AugPipeline> pipelines;
  std::vector<Image> easy_images;
  std::vector<AffineMap> inner;
  /// Teacher predictions on the easy views, below-threshold joints marked invisible.
  std::vector<KeypointSet> joints;
  /// [path][image]
  std::vector<std::vector<AugmentedView>> hard;
  /// [teacher][path][image], detached.
  std::vector<std::vector<std::vector<Heatmap>>> teacher;

  [[nodiscard]] std::size_t num_paths() const { return hard.size(); }
  [[nodiscard]] std::size_t num_images() const { return easy_images.size(); }
  [[nodiscard]] int fallback_count() const {
    int n = 0;
    for (const auto& path : hard) {
      for (const auto& v : path) n += v.fallback_count();
    }
    return n;
  }
};

/// Two phases: easy views are forwarded once per teacher without gradient and decoded into
/// joints for the joint-aware ops; then every path builds its hard view and receives the easy
/// prediction warped by that view's affine.
inline ConsistencyBatch build_consistency_batch(std::span<const Image> unlabeled, std::span<const TinyPoseNet* const> teachers,
                                                const std::vector<AugPipeline>& pipelines, const ConsistencyOptions& opt,
                                                const RandomStream& rng) {
  if (pipelines.empty()) throw InvalidParameter("build_consistency_batch: need at least one path");
  if (teachers.empty()) throw InvalidParameter("build_consistency_batch: need a teacher network");
  ConsistencyBatch cb;
  cb.pipelines = pipelines;
  const std::size_t n = unlabeled.size();
  cb.easy_images.resize(n);
  cb.inner.resize(n);
  const RandomStream easy_rng = rng.split("easy");
  parallel_for(n, [&](std::size_t i) {
    const Size size = unlabeled[i].size();
    RandomStream r = easy_rng.split(static_cast<std::uint64_t>(i));
    cb.inner[i] = opt.inner_override ? *opt.inner_override : sample_affine(AugTag::A30, r, image_center(size));
    cb.easy_images[i] = warp_image(unlabeled[i], cb.inner[i], size);
  });

  std::vector<std::vector<Heatmap>> easy_pred;
  for (const TinyPoseNet* t : teachers) easy_pred.push_back(forward(*t, cb.easy_images, false).heatmaps);

  cb.joints.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    Heatmap avg = easy_pred[0][i];
    if (teachers.size() == 2) {
      for (std::size_t p = 0; p < avg.values.size(); ++p) avg.values[p] = (avg.values[p] + easy_pred[1][i].values[p]) / 2.0;
    } else if (teachers.size() > 2) {
      for (std::size_t t = 1; t < teachers.size(); ++t) {
        for (std::size_t p = 0; p < avg.values.size(); ++p) avg.values[p] += easy_pred[t][i].values[p];
      }
      for (double& v : avg.values) v /= static_cast<double>(teachers.size());
    }
    KeypointSet j = decode_heatmaps(avg);
    for (auto& k : j.joints) {
      if (k.confidence < opt.joint_threshold) k.state = JointState::invisible;
    }
    cb.joints[i] = std::move(j);
  }

  const std::size_t paths = pipelines.size();
  cb.hard.assign(paths, std::vector<AugmentedView>(n));
  cb.teacher.assign(teachers.size(), std::vector<std::vector<Heatmap>>(paths, std::vector<Heatmap>(n)));
  const RandomStream path_rng = rng.split("paths");
  const RandomStream shared_rng = rng.split("shared-outer");
  parallel_for(paths * n, [&](std::size_t job) {
    const std::size_t p = job / n;
    const std::size_t i = job % n;
    const std::size_t d = (i + 1) % n;
    const Donor donor{cb.easy_images[d], cb.joints[d], static_cast<int>(d)};
    HardViewOptions hv;
    hv.profile = opt.profile;
    hv.outer_override = opt.outer_override;
    if (opt.shared_outer && !hv.outer_override) {
      RandomStream r = shared_rng.split(static_cast<std::uint64_t>(i));
      hv.outer_override = sample_affine(outer_affine_kind(opt.profile), r, image_center(cb.easy_images[i].size()));
    }
    RandomStream r = path_rng.split(static_cast<std::uint64_t>(p)).split(static_cast<std::uint64_t>(i));
    cb.hard[p][i] = build_hard_view(cb.easy_images[i], cb.joints[i], donor, pipelines[p], r, hv);
    for (std::size_t t = 0; t < teachers.size(); ++t) {
      cb.teacher[t][p][i] = detach(warp_heatmap(easy_pred[t][i], cb.hard[p][i].relative_affine));
    }
  });
  return cb;
}

// ---------------------------------------------------------------------------
// Objective and steps
// ---------------------------------------------------------------------------

struct StepReport {
  double loss_s = 0.0;
  double loss_u = 0.0;
  std::vector<double> loss_u_per_path;
  double lambda = 0.0;
  double total = 0.0;
};

struct ObjectiveResult {
  StepReport report;
  std::vector<double> grads;
};

namespace detail {

inline bool same_values(const Heatmap& a, const Heatmap& b) { return a.same_shape(b) && a.values == b.values; }

}  // namespace detail

/// L = L_s + lambda * L_u for one network, with the consistency batch's teacher signals held
/// fixed. Both losses are averaged over images; L_u sums its paths. `teacher` selects whose
/// easy predictions supervise this network.
inline ObjectiveResult objective(const TinyPoseNet& net, const LabeledBatch& lab, const ConsistencyBatch* cb,
                                 std::size_t teacher, double lambda, const UnsupMode& mode) {
  const bool unsup = cb != nullptr && lambda != 0.0;
  std::vector<Image> inputs = lab.images;
  const std::size_t nl = lab.images.size();
  const std::size_t paths = unsup ? cb->num_paths() : 0;
  const std::size_t nu = unsup ? cb->num_images() : 0;
  for (std::size_t p = 0; p < paths; ++p) {
    for (std::size_t i = 0; i < nu; ++i) inputs.push_back(cb->hard[p][i].image);
  }
  ForwardResult fr = forward(net, inputs, true);
  std::vector<Heatmap> out_grads(inputs.size());

  ObjectiveResult res;
  res.report.lambda = unsup ? lambda : 0.0;
  for (std::size_t i = 0; i < nl; ++i) {
    LossGrad lg = supervised_loss(fr.heatmaps[i], lab.targets[i]);
    res.report.loss_s += lg.value / static_cast<double>(nl);
    for (double& g : lg.grad.values) g /= static_cast<double>(nl);
    out_grads[i] = std::move(lg.grad);
  }

  if (unsup) {
    if (teacher >= cb->teacher.size()) throw InvalidParameter("objective: teacher index out of range");
    res.report.loss_u_per_path.assign(paths, 0.0);
    const double scale = lambda / static_cast<double>(nu);
    for (std::size_t i = 0; i < nu; ++i) {
      auto student = [&](std::size_t p) -> const Heatmap& { return fr.heatmaps[nl + p * nu + i]; };
      auto grad_slot = [&](std::size_t p) -> Heatmap& { return out_grads[nl + p * nu + i]; };
      const auto& tch = cb->teacher[teacher];
      bool shared = true;
      for (std::size_t p = 1; p < paths && shared; ++p) shared = detail::same_values(tch[p][i], tch[0][i]);
      if (mode.kind == UnsupMode::Kind::heatmap_fusion && !shared) {
        throw ContractError("heatmap fusion needs students aligned under one outer affine");
      }
      std::vector<std::pair<std::size_t, std::size_t>> groups;  // [first, last) path ranges sharing a teacher
      if (shared) {
        groups.emplace_back(0, paths);
      } else {
        for (std::size_t p = 0; p < paths; ++p) groups.emplace_back(p, p + 1);
      }
      for (const auto& [first, last] : groups) {
        std::vector<Heatmap> students;
        for (std::size_t p = first; p < last; ++p) students.push_back(student(p));
        MultipathLoss ml = multipath_unsup_loss(tch[first][i], students, mode);
        for (std::size_t p = first; p < last; ++p) {
          res.report.loss_u_per_path[p] += ml.per_path[p - first] / static_cast<double>(nu);
          Heatmap g = std::move(ml.grads[p - first]);
          for (double& v : g.values) v *= scale;
          grad_slot(p) = std::move(g);
        }
      }
    }
    for (double v : res.report.loss_u_per_path) res.report.loss_u += v;
  }
  res.report.total = res.report.loss_s + res.report.lambda * res.report.loss_u;
  res.grads = backward(net, fr.cache, out_grads);
  return res;
}

struct StepContext {
  std::vector<AugPipeline> pipelines;
  UnsupMode mode;
  double lambda = 1.0;
  int epoch = 0;
  double sigma = 1.0;
  ConsistencyOptions consistency;
};

inline StepContext make_step_context(const TrainConfig& cfg, int epoch) {
  StepContext ctx;
  ctx.pipelines = cfg.pipelines();
  ctx.mode = cfg.unsup;
  ctx.lambda = cfg.lambda_at(epoch);
  ctx.epoch = epoch;
  ctx.sigma = cfg.sigma;
  ctx.consistency.profile = cfg.profile;
  ctx.consistency.joint_threshold = cfg.joint_threshold;
  ctx.consistency.shared_outer = cfg.unsup.kind == UnsupMode::Kind::heatmap_fusion;
  return ctx;
}

/// One optimizer step of the single-network objective. Labeled and unlabeled batches draw
/// from separate streams, so lambda = 0 reproduces the supervised step exactly.
inline StepReport train_step_single(TinyPoseNet& net, OptimizerState& opt, std::span<const Sample> labeled,
                                    std::span<const Image> unlabeled, const StepContext& ctx, const RandomStream& rng) {
  const LabeledBatch lab = prepare_labeled(labeled, ctx.sigma, rng.split("labeled"));
  std::optional<ConsistencyBatch> cb;
  if (ctx.lambda != 0.0 && !ctx.pipelines.empty() && !unlabeled.empty()) {
    const TinyPoseNet* teachers[] = {&net};
    cb = build_consistency_batch(unlabeled, teachers, ctx.pipelines, ctx.consistency, rng.split("unlabeled"));
  }
  ObjectiveResult r = objective(net, lab, cb ? &*cb : nullptr, 0, ctx.lambda, ctx.mode);
  adam_step(opt, net, r.grads, ctx.epoch);
  return r.report;
}

struct DualReport {
  StepReport a;
  StepReport b;
};

/// Both networks predict the easy views without gradient; A learns from B's teacher signal and
/// B from A's, each alongside its own supervised loss.
inline DualReport train_step_dual(TinyPoseNet& net_a, TinyPoseNet& net_b, OptimizerState& opt_a, OptimizerState& opt_b,
                                  std::span<const Sample> labeled, std::span<const Image> unlabeled, const StepContext& ctx,
                                  const RandomStream& rng) {
  const LabeledBatch lab = prepare_labeled(labeled, ctx.sigma, rng.split("labeled"));
  std::optional<ConsistencyBatch> cb;
  if (ctx.lambda != 0.0 && !ctx.pipelines.empty() && !unlabeled.empty()) {
    const TinyPoseNet* teachers[] = {&net_a, &net_b};
    cb = build_consistency_batch(unlabeled, teachers, ctx.pipelines, ctx.consistency, rng.split("unlabeled"));
  }
  ObjectiveResult ra = objective(net_a, lab, cb ? &*cb : nullptr, 1, ctx.lambda, ctx.mode);
  ObjectiveResult rb = objective(net_b, lab, cb ? &*cb : nullptr, 0, ctx.lambda, ctx.mode);
  adam_step(opt_a, net_a, ra.grads, ctx.epoch);
  adam_step(opt_b, net_b, rb.grads, ctx.epoch);
  return {ra.report, rb.report};
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

enum class Metric { oks, pckh, pck };

inline std::string to_string(Metric m) {
  switch (m) {
    case Metric::oks: return "oks";
    case Metric::pckh: return "pckh";
    case Metric::pck: return "pck";
  }
  return "pck";
}

inline Metric parse_metric(const std::string& s) {
  if (s == "oks") return Metric::oks;
  if (s == "pckh") return Metric::pckh;
  if (s == "pck") return Metric::pck;
  throw InvalidParameter("unknown metric '" + s + "' (expected oks, pckh, pck)");
}

struct EvalOptions {
  Metric metric = Metric::pck;
  /// PCK@alpha on the bbox diagonal.
  double pck_alpha = 0.2;
  /// PCKh@alpha on the head size.
  double pckh_alpha = 0.5;
  std::optional<OksConfig> oks;
};

/// Decoded predictions paired with ground truth; the instance score is the mean joint confidence.
inline std::vector<EvalPair> make_pairs(std::span<const KeypointSet> predictions, std::span<const Sample> samples) {
  if (predictions.size() != samples.size()) throw DimensionMismatch("make_pairs: prediction count mismatch");
  std::vector<EvalPair> pairs;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    if (!s.joints) throw ContractError("make_pairs: evaluation sample has no keypoints");
    EvalPair p;
    p.pred = predictions[i];
    p.gt = *s.joints;
    p.area = s.area;
    p.head_size = s.head_size;
    p.bbox_diagonal = s.bbox.diagonal();
    double conf = 0.0;
    for (const auto& j : p.pred.joints) conf += j.confidence;
    p.score = p.pred.size() > 0 ? conf / static_cast<double>(p.pred.size()) : 0.0;
    p.image_id = s.id;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

inline std::vector<KeypointSet> predict(const TinyPoseNet& net, std::span<const Sample> samples) {
  std::vector<Image> imgs;
  imgs.reserve(samples.size());
  for (const auto& s : samples) imgs.push_back(s.image);
  const ForwardResult fr = forward(net, imgs, false);
  std::vector<KeypointSet> out;
  for (const auto& h : fr.heatmaps) out.push_back(decode_heatmaps(h));
  return out;
}

struct MetricValue {
  double value = 0.0;
  /// Per-threshold AP for the OKS metric.
  std::vector<double> per_threshold;
};

inline MetricValue score_pairs(std::span<const EvalPair> pairs, const EvalOptions& opt) {
  MetricValue v;
  switch (opt.metric) {
    case Metric::pck: v.value = pck_rate(pairs, opt.pck_alpha, PckNorm::bbox_diagonal); break;
    case Metric::pckh: v.value = pck_rate(pairs, opt.pckh_alpha, PckNorm::head); break;
    case Metric::oks: {
      const int k = pairs.empty() ? 0 : static_cast<int>(pairs[0].gt.size());
      const OksConfig cfg = opt.oks ? *opt.oks : OksConfig::for_joints(std::max(k, 1));
      const ApReport ap = average_precision(pairs, cfg);
      v.value = ap.map;
      v.per_threshold = ap.ap;
      break;
    }
  }
  return v;
}

struct EvalReport {
  Metric metric = Metric::pck;
  std::vector<MetricValue> per_net;
  double mean = 0.0;
};

/// Scores every network and their arithmetic mean.
inline EvalReport evaluate(std::span<const TinyPoseNet* const> nets, std::span<const Sample> samples, const EvalOptions& opt) {
  EvalReport r;
  r.metric = opt.metric;
  for (const TinyPoseNet* n : nets) {
    const auto preds = predict(*n, samples);
    const auto pairs = make_pairs(preds, samples);
    r.per_net.push_back(score_pairs(pairs, opt));
  }
  for (const auto& v : r.per_net) r.mean += v.value;
  if (!r.per_net.empty()) r.mean /= static_cast<double>(r.per_net.size());
  return r;
}

inline EvalReport evaluate(const TinyPoseNet& net, std::span<const Sample> samples, const EvalOptions& opt) {
  const TinyPoseNet* nets[] = {&net};
  return evaluate(nets, samples, opt);
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

/// Pipeline specs may contain commas; CSV columns use '+' instead.
inline std::string csv_name(std::string s) {
  std::replace(s.begin(), s.end(), ',', '+');
  return s;
}

inline std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double lambda = 0.0;
  /// Mean step losses per network.
  std::vector<StepReport> losses;
  /// Validation metric per network; empty without a validation set.
  std::vector<double> val;
  double val_mean = 0.0;
};

struct TrainRun {
  std::vector<TinyPoseNet> nets;
  std::vector<OptimizerState> opts;
  std::vector<EpochRecord> history;
  std::int64_t step = 0;
};

/// Run-directory outputs: `steps.csv`, `epochs.csv` and per-network checkpoints after every epoch.
struct TrainIo {
  std::string run_dir;
  bool resume = false;
};

namespace detail {

inline std::string step_header(const std::vector<AugPipeline>& pipes) {
  std::string h = "step,epoch,net,lambda,loss_s";
  for (std::size_t p = 0; p < pipes.size(); ++p) h += ",loss_u_" + std::to_string(p) + "_" + csv_name(pipes[p].name);
  return h + ",loss_u,total\n";
}

inline std::string step_row(std::int64_t step, int epoch, char net, const StepReport& r, std::size_t paths) {
  std::string s = std::to_string(step) + "," + std::to_string(epoch) + "," + net + "," + fmt_num(r.lambda) + "," + fmt_num(r.loss_s);
  for (std::size_t p = 0; p < paths; ++p) s += "," + fmt_num(p < r.loss_u_per_path.size() ? r.loss_u_per_path[p] : 0.0);
  return s + "," + fmt_num(r.loss_u) + "," + fmt_num(r.total) + "\n";
}

inline std::string epoch_header(std::size_t nets) {
  std::string h = "epoch,lr,lambda";
  for (std::size_t n = 0; n < nets; ++n) {
    const std::string t(1, static_cast<char>('A' + n));
    h += ",loss_s_" + t + ",loss_u_" + t + ",val_" + t;
  }
  return h + ",val_mean\n";
}

inline std::string epoch_row(const EpochRecord& e) {
  std::string s = std::to_string(e.epoch) + "," + fmt_num(e.lr) + "," + fmt_num(e.lambda);
  for (std::size_t n = 0; n < e.losses.size(); ++n) {
    s += "," + fmt_num(e.losses[n].loss_s) + "," + fmt_num(e.losses[n].loss_u) + "," +
         (n < e.val.size() ? fmt_num(e.val[n]) : std::string("nan"));
  }
  return s + "," + (e.val.empty() ? std::string("nan") : fmt_num(e.val_mean)) + "\n";
}

// Keeps the header and rows whose integer field `column` is <= limit.
inline void truncate_csv(const std::filesystem::path& path, std::size_t column, int limit) {
  std::ifstream in(path);
  if (!in) return;
  std::string line, kept;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      kept += line + "\n";
      header = false;
      continue;
    }
    std::stringstream ss(line);
    std::string field;
    for (std::size_t c = 0; c <= column; ++c) std::getline(ss, field, ',');
    if (std::stoi(field) <= limit) kept += line + "\n";
  }
  in.close();
  std::ofstream(path, std::ios::trunc) << kept;
}

inline void accumulate(StepReport& acc, const StepReport& r, double w) {
  acc.loss_s += w * r.loss_s;
  acc.loss_u += w * r.loss_u;
  acc.total += w * r.total;
  acc.lambda = r.lambda;
  if (acc.loss_u_per_path.size() < r.loss_u_per_path.size()) acc.loss_u_per_path.resize(r.loss_u_per_path.size(), 0.0);
  for (std::size_t p = 0; p < r.loss_u_per_path.size(); ++p) acc.loss_u_per_path[p] += w * r.loss_u_per_path[p];
}

// Shuffled pass over n items, a fresh permutation per pass.
class CyclicSampler {
 public:
  CyclicSampler(std::size_t n, RandomStream rng) : n_(n), rng_(rng) {}
  std::size_t at(std::int64_t pos) {
    const auto pass = static_cast<std::uint64_t>(pos) / n_;
    auto it = perms_.find(pass);
    if (it == perms_.end()) {
      std::vector<std::size_t> perm(n_);
      std::iota(perm.begin(), perm.end(), 0);
      RandomStream r = rng_.split(pass);
      r.shuffle(std::span<std::size_t>(perm));
      it = perms_.emplace(pass, std::move(perm)).first;
    }
    return it->second[static_cast<std::uint64_t>(pos) % n_];
  }

 private:
  std::size_t n_;
  RandomStream rng_;
  std::map<std::uint64_t, std::vector<std::size_t>> perms_;
};

}  // namespace detail

inline std::uint64_t init_seed(std::uint64_t seed, char net) {
  RandomStream r = RandomStream(seed).split(std::string("init-") + net);
  return r.next_u64();
}

/// Trains per `cfg`. Each epoch is one shuffled pass over the labeled set; every step pairs
/// its labeled batch with an equal number of unlabeled images drawn cyclically from
/// successive shuffles of the unlabeled pool.
inline TrainRun train(const TrainConfig& cfg, std::span<const Sample> labeled, std::span<const Sample> unlabeled,
                      std::span<const Sample> validation, const TrainIo* io = nullptr,
                      const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  cfg.validate();
  if (labeled.empty()) throw InvalidParameter("train: labeled set is empty");
  const int k = static_cast<int>(labeled[0].joints->size());
  const std::size_t nets = cfg.mode == NetworkMode::dual ? 2 : 1;
  const std::vector<AugPipeline> pipes = cfg.pipelines();
  const RandomStream root(cfg.seed);

  TrainRun run;
  for (std::size_t n = 0; n < nets; ++n) {
    run.nets.push_back(init_params(init_seed(cfg.seed, static_cast<char>('A' + n)), k));
    run.opts.emplace_back(run.nets.back().parameter_count(), cfg.schedule());
  }
  int start_epoch = 0;

  namespace fs = std::filesystem;
  std::ofstream step_log, epoch_log;
  auto ckpt_path = [&](std::size_t n) { return fs::path(io->run_dir) / (std::string("checkpoint_") + static_cast<char>('A' + n) + ".tensors"); };
  if (io != nullptr) {
    fs::create_directories(io->run_dir);
    const fs::path steps = fs::path(io->run_dir) / "steps.csv";
    const fs::path epochs = fs::path(io->run_dir) / "epochs.csv";
    if (io->resume && fs::exists(ckpt_path(0))) {
      int done = -1;
      for (std::size_t n = 0; n < nets; ++n) {
        const TensorFile tf = read_tensor_file(ckpt_path(n).string());
        run.nets[n] = net_from_tensor_file(tf);
        run.opts[n] = optimizer_from_tensor_file(tf, cfg.schedule());
        done = std::stoi(tf.meta_at("epoch"));
        run.step = std::stoll(tf.meta_at("step"));
      }
      start_epoch = done + 1;
      detail::truncate_csv(steps, 1, done);
      detail::truncate_csv(epochs, 0, done);
      step_log.open(steps, std::ios::app);
      epoch_log.open(epochs, std::ios::app);
    } else {
      step_log.open(steps, std::ios::trunc);
      epoch_log.open(epochs, std::ios::trunc);
      step_log << detail::step_header(pipes);
      epoch_log << detail::epoch_header(nets);
    }
    if (!step_log || !epoch_log) throw IoError("cannot write logs in " + io->run_dir);
  }

  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t steps_per_epoch = (labeled.size() + bs - 1) / bs;
  detail::CyclicSampler unl_sampler(std::max<std::size_t>(unlabeled.size(), 1), root.split("unlabeled-order"));

  for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    StepContext ctx = make_step_context(cfg, epoch);
    std::vector<std::size_t> order(labeled.size());
    std::iota(order.begin(), order.end(), 0);
    RandomStream er = root.split("labeled-order").split(static_cast<std::uint64_t>(epoch));
    er.shuffle(std::span<std::size_t>(order));

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = cfg.schedule().lr_at(epoch);
    rec.lambda = ctx.lambda;
    rec.losses.assign(nets, StepReport{});
    for (std::size_t s = 0; s < steps_per_epoch; ++s) {
      const std::size_t first = s * bs;
      const std::size_t last = std::min(labeled.size(), first + bs);
      std::vector<Sample> lab;
      std::vector<Image> unl;
      for (std::size_t i = first; i < last; ++i) lab.push_back(labeled[order[i]]);
      if (!unlabeled.empty() && ctx.lambda != 0.0 && !pipes.empty()) {
        const std::int64_t base = static_cast<std::int64_t>(epoch) * static_cast<std::int64_t>(labeled.size());
        for (std::size_t i = first; i < last; ++i) unl.push_back(unlabeled[unl_sampler.at(base + static_cast<std::int64_t>(i))].image);
      }
      const RandomStream sr = root.split("step").split(static_cast<std::uint64_t>(run.step));
      std::vector<StepReport> reps;
      if (nets == 1) {
        reps.push_back(train_step_single(run.nets[0], run.opts[0], lab, unl, ctx, sr));
      } else {
        DualReport d = train_step_dual(run.nets[0], run.nets[1], run.opts[0], run.opts[1], lab, unl, ctx, sr);
        reps = {d.a, d.b};
      }
      const double w = static_cast<double>(lab.size()) / static_cast<double>(labeled.size());
      for (std::size_t n = 0; n < nets; ++n) {
        detail::accumulate(rec.losses[n], reps[n], w);
        if (step_log.is_open()) step_log << detail::step_row(run.step, epoch, static_cast<char>('A' + n), reps[n], pipes.size());
      }
      ++run.step;
    }
    if (!validation.empty()) {
      EvalOptions eo;
      for (const auto& net : run.nets) rec.val.push_back(evaluate(net, validation, eo).mean);
      rec.val_mean = std::accumulate(rec.val.begin(), rec.val.end(), 0.0) / static_cast<double>(rec.val.size());
    }
    if (io != nullptr) {
      epoch_log << detail::epoch_row(rec);
      step_log.flush();
      epoch_log.flush();
      for (std::size_t n = 0; n < nets; ++n) {
        save_checkpoint(ckpt_path(n).string(), run.nets[n], &run.opts[n],
                        {{"epoch", std::to_string(epoch)}, {"step", std::to_string(run.step)}});
      }
    }
    if (on_epoch) on_epoch(rec);
    run.history.push_back(std::move(rec));
  }
  return run;
}

// ---------------------------------------------------------------------------
// Difficulty ranking
// ---------------------------------------------------------------------------

struct RankEntry {
  std::string candidate;
  int position = 0;
  int rank = 0;
  double best = 0.0;
  int best_epoch = 0;
  std::vector<double> curve;
};

/// Trains each candidate as the single path of an otherwise identical run and orders them by
/// best validation metric. Ties share a rank and keep input order.
inline std::vector<RankEntry> rank_augmentations(const std::vector<std::string>& candidates, TrainConfig base,
                                                 std::span<const Sample> labeled, std::span<const Sample> unlabeled,
                                                 std::span<const Sample> validation) {
  if (candidates.empty()) throw InvalidParameter("rank_augmentations: no candidates");
  if (validation.empty()) throw InvalidParameter("rank_augmentations: need a validation set");
  for (const auto& c : candidates) (void)parse_pipeline(c);
  base.mode = NetworkMode::single;
  std::vector<RankEntry> out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    TrainConfig cfg = base;
    cfg.paths = {candidates[i]};
    const TrainRun run = train(cfg, labeled, unlabeled, validation);
    RankEntry e;
    e.candidate = candidates[i];
    e.position = static_cast<int>(i);
    for (const auto& r : run.history) e.curve.push_back(r.val_mean);
    const auto best = std::max_element(e.curve.begin(), e.curve.end());
    e.best = *best;
    e.best_epoch = static_cast<int>(best - e.curve.begin());
    out.push_back(std::move(e));
  }
  std::stable_sort(out.begin(), out.end(), [](const RankEntry& a, const RankEntry& b) { return a.best > b.best; });
  for (auto& e : out) {
    e.rank = 1 + static_cast<int>(std::count_if(out.begin(), out.end(), [&](const RankEntry& o) { return o.best > e.best; }));
  }
  return out;
}

inline std::string ranking_csv(const std::vector<RankEntry>& entries) {
  std::string s = "rank,candidate,best,best_epoch\n";
  for (const auto& e : entries) s += std::to_string(e.rank) + "," + csv_name(e.candidate) + "," + fmt_num(e.best) + "," + std::to_string(e.best_epoch) + "\n";
  return s;
}

/// One row per (candidate, epoch), candidates in input order.
inline std::string ranking_curves_csv(std::vector<RankEntry> entries) {
  std::sort(entries.begin(), entries.end(), [](const RankEntry& a, const RankEntry& b) { return a.position < b.position; });
  std::string s = "candidate,epoch,val\n";
  for (const auto& e : entries) {
    for (std::size_t i = 0; i < e.curve.size(); ++i) s += csv_name(e.candidate) + "," + std::to_string(i) + "," + fmt_num(e.curve[i]) + "\n";
  }
  return s;
}

}  // namespace poseaug
