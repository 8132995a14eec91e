#pragma once

// OKS average precision and PCK-family metrics.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "poseaug/error.hpp"
#include "poseaug/types.hpp"

namespace poseaug {

/// Per-joint OKS falloff constants kappa_j (COCO's 2 * sigma_j).
struct OksConfig {
  std::vector<double> kappa;

  static OksConfig coco17() {
    OksConfig c;
    c.kappa = {.26, .25, .25, .35, .35, .79, .79, .72, .72, .62, .62, 1.07, 1.07, .87, .87, .89, .89};
    for (double& k : c.kappa) k = 2.0 * k / 10.0;
    return c;
  }

  static OksConfig uniform(int k, double value = 0.1) {
    if (k <= 0 || !(value > 0.0)) throw InvalidParameter("OksConfig::uniform: need k > 0 and kappa > 0");
    return {std::vector<double>(static_cast<std::size_t>(k), value)};
  }

  /// COCO constants for 17 joints, uniform 0.1 otherwise.
  static OksConfig for_joints(int k) { return k == 17 ? coco17() : uniform(k); }
};

struct EvalPair {
  KeypointSet pred;
  KeypointSet gt;
  double area = 0.0;
  std::optional<double> head_size;
  std::optional<double> bbox_diagonal;
  /// Instance score for AP ranking.
  double score = 1.0;
  int image_id = 0;
};

inline double oks(const KeypointSet& pred, const KeypointSet& gt, double area, const OksConfig& cfg) {
  if (pred.size() != gt.size() || cfg.kappa.size() != gt.size()) throw DimensionMismatch("oks: joint count mismatch");
  if (!(area > 0.0)) throw InvalidParameter("oks: instance area must be positive");
  double sum = 0.0;
  int n = 0;
  for (std::size_t j = 0; j < gt.size(); ++j) {
    if (!gt[j].usable()) continue;
    const double dx = pred[j].x - gt[j].x;
    const double dy = pred[j].y - gt[j].y;
    const double k = cfg.kappa[j];
    sum += std::exp(-(dx * dx + dy * dy) / (2.0 * area * k * k));
    ++n;
  }
  if (n == 0) throw InvalidParameter("oks: ground truth has no labeled joints");
  return sum / n;
}

inline double oks(const EvalPair& p, const OksConfig& cfg) { return oks(p.pred, p.gt, p.area, cfg); }

struct Detection {
  int image_id = 0;
  KeypointSet joints;
  double score = 0.0;
};

struct GroundTruth {
  int image_id = 0;
  KeypointSet joints;
  double area = 0.0;
};

struct ApReport {
  double map = 0.0;
  std::vector<double> thresholds;
  std::vector<double> ap;
};

inline std::vector<double> default_oks_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(0.5 + 0.05 * i);
  return t;
}

/// Area under the 101-point interpolated precision/recall curve of score-ordered TP flags.
inline double interpolated_ap(const std::vector<bool>& tp_in_score_order, int num_gt) {
  if (num_gt <= 0) return 0.0;
  const std::size_t n = tp_in_score_order.size();
  std::vector<double> precision(n), recall(n);
  int tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (tp_in_score_order[i]) ++tp;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(tp) / num_gt;
  }
  for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double sum = 0.0;
  for (int r = 0; r <= 100; ++r) {
    const double level = r / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), level - 1e-12);
    if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / 101.0;
}

/// COCO-style keypoint AP. Within each image detections are visited by descending score
/// and claim the unmatched ground truth of highest OKS at or above the threshold.
inline ApReport average_precision(std::span<const GroundTruth> gts, std::span<const Detection> dets, const OksConfig& cfg,
                                  std::vector<double> thresholds = default_oks_thresholds()) {
  ApReport rep;
  rep.thresholds = thresholds;
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

  std::map<int, std::vector<std::size_t>> gts_of;
  for (std::size_t g = 0; g < gts.size(); ++g) gts_of[gts[g].image_id].push_back(g);

  // OKS of every detection against the ground truths of its image.
  std::vector<std::vector<double>> scores(dets.size());
  for (std::size_t d = 0; d < dets.size(); ++d) {
    auto it = gts_of.find(dets[d].image_id);
    if (it == gts_of.end()) continue;
    for (std::size_t g : it->second) scores[d].push_back(oks(dets[d].joints, gts[g].joints, gts[g].area, cfg));
  }

  for (double thr : thresholds) {
    std::map<int, std::vector<bool>> taken;
    for (const auto& [img, list] : gts_of) taken[img].assign(list.size(), false);
    std::vector<bool> tp;
    tp.reserve(order.size());
    for (std::size_t d : order) {
      bool matched = false;
      auto it = taken.find(dets[d].image_id);
      if (it != taken.end()) {
        int best = -1;
        double best_oks = thr;
        for (std::size_t g = 0; g < it->second.size(); ++g) {
          if (it->second[g] || scores[d][g] < best_oks) continue;
          if (best < 0 || scores[d][g] > best_oks) {
            best = static_cast<int>(g);
            best_oks = scores[d][g];
          }
        }
        if (best >= 0) {
          it->second[static_cast<std::size_t>(best)] = true;
          matched = true;
        }
      }
      tp.push_back(matched);
    }
    rep.ap.push_back(interpolated_ap(tp, static_cast<int>(gts.size())));
  }
  rep.map = rep.ap.empty() ? 0.0 : std::accumulate(rep.ap.begin(), rep.ap.end(), 0.0) / static_cast<double>(rep.ap.size());
  return rep;
}

/// One detection per pair, scored by the pair's score.
inline ApReport average_precision(std::span<const EvalPair> pairs, const OksConfig& cfg,
                                  std::vector<double> thresholds = default_oks_thresholds()) {
  std::vector<GroundTruth> gts;
  std::vector<Detection> dets;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    gts.push_back({static_cast<int>(i), pairs[i].gt, pairs[i].area});
    dets.push_back({static_cast<int>(i), pairs[i].pred, pairs[i].score});
  }
  return average_precision(gts, dets, cfg, std::move(thresholds));
}

enum class PckNorm { head, bbox_diagonal };

struct PckResult {
  /// Hit flag per joint; unlabeled joints are never hits.
  std::vector<bool> hit;
  int hits = 0;
  int labeled = 0;
  double rate = 0.0;
};

/// Joint j is a hit iff its error is at most alpha * normalizer (boundary inclusive).
inline PckResult pck(const EvalPair& p, double alpha, PckNorm norm) {
  if (p.pred.size() != p.gt.size()) throw DimensionMismatch("pck: joint count mismatch");
  const std::optional<double>& len = norm == PckNorm::head ? p.head_size : p.bbox_diagonal;
  if (!len) throw InvalidParameter(norm == PckNorm::head ? "pck: head size missing" : "pck: bbox diagonal missing");
  if (!(*len > 0.0)) throw InvalidParameter("pck: normalizer must be positive");
  const double limit = alpha * *len;
  PckResult r;
  r.hit.assign(p.gt.size(), false);
  for (std::size_t j = 0; j < p.gt.size(); ++j) {
    if (!p.gt[j].usable()) continue;
    ++r.labeled;
    const double d = std::hypot(p.pred[j].x - p.gt[j].x, p.pred[j].y - p.gt[j].y);
    if (d <= limit) {
      r.hit[j] = true;
      ++r.hits;
    }
  }
  r.rate = r.labeled > 0 ? static_cast<double>(r.hits) / r.labeled : 0.0;
  return r;
}

/// Pooled rate: total hits over total labeled joints.
inline double pck_rate(std::span<const EvalPair> pairs, double alpha, PckNorm norm) {
  long hits = 0, labeled = 0;
  for (const auto& p : pairs) {
    const PckResult r = pck(p, alpha, norm);
    hits += r.hits;
    labeled += r.labeled;
  }
  return labeled > 0 ? static_cast<double>(hits) / static_cast<double>(labeled) : 0.0;
}

}  // namespace poseaug
