#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "poseaug/error.hpp"
#include "poseaug/types.hpp"

namespace poseaug {

struct LossGrad {
  double value = 0.0;
  /// d value / d prediction (student side only for consistency losses).
  Heatmap grad;
};

/// Mean squared error over every element; gradient 2 (pred - target) / count.
inline LossGrad supervised_loss(const Heatmap& pred, const Heatmap& target) {
  if (!pred.same_shape(target)) throw ShapeError("supervised_loss: shape mismatch");
  LossGrad r;
  r.grad = Heatmap(pred.channels, pred.height, pred.width, pred.stride);
  const auto n = static_cast<double>(pred.values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    const double d = pred.values[i] - target.values[i];
    sum += d * d;
    r.grad.values[i] = 2.0 * d / n;
  }
  r.value = n > 0 ? sum / n : 0.0;
  return r;
}

/// MSE between a detached teacher signal and a student prediction.
inline LossGrad consistency_loss(const Heatmap& teacher, const Heatmap& student) {
  if (!teacher.no_grad) throw ContractError("consistency_loss: teacher heatmap must carry the no-gradient marker");
  return supervised_loss(student, teacher);
}

struct UnsupMode {
  enum class Kind { multi_loss, confidence_mask, heatmap_fusion };
  Kind kind = Kind::multi_loss;
  double tau = 0.5;

  static UnsupMode multi_loss() { return {}; }
  static UnsupMode confidence_mask(double tau = 0.5) {
    if (!(tau > 0.0 && tau < 1.0)) throw InvalidParameter("confidence mask threshold must lie in (0, 1)");
    return {Kind::confidence_mask, tau};
  }
  static UnsupMode heatmap_fusion() { return {Kind::heatmap_fusion, 0.5}; }
};

inline std::string to_string(const UnsupMode& m) {
  switch (m.kind) {
    case UnsupMode::Kind::multi_loss: return "ml";
    case UnsupMode::Kind::confidence_mask: return "cm";
    case UnsupMode::Kind::heatmap_fusion: return "hf";
  }
  return "?";
}

struct MultipathLoss {
  double value = 0.0;
  /// Contribution of each path (sums to value; in fusion mode the single loss is split evenly).
  std::vector<double> per_path;
  std::vector<Heatmap> grads;
};

/// Unsupervised loss of one teacher against n student heatmaps.
///
/// multi-loss:      sum_i MSE(teacher, student_i)
/// confidence-mask: per path, mean of per-channel MSE over channels whose teacher
///                  peak exceeds tau (0 when no channel survives), summed over paths
/// heatmap-fusion:  MSE(teacher, mean_i student_i), gradient shared equally
inline MultipathLoss multipath_unsup_loss(const Heatmap& teacher, std::span<const Heatmap> students, UnsupMode mode) {
  if (students.empty()) throw InvalidParameter("multipath_unsup_loss: need at least one student");
  if (!teacher.no_grad) throw ContractError("multipath_unsup_loss: teacher heatmap must carry the no-gradient marker");
  for (const auto& s : students) {
    if (!s.same_shape(teacher)) throw ShapeError("multipath_unsup_loss: shape mismatch");
  }
  const std::size_t n = students.size();
  MultipathLoss r;
  r.per_path.assign(n, 0.0);
  r.grads.reserve(n);

  switch (mode.kind) {
    case UnsupMode::Kind::multi_loss: {
      for (std::size_t i = 0; i < n; ++i) {
        LossGrad lg = consistency_loss(teacher, students[i]);
        r.per_path[i] = lg.value;
        r.value += lg.value;
        r.grads.push_back(std::move(lg.grad));
      }
      break;
    }
    case UnsupMode::Kind::confidence_mask: {
      const std::size_t plane = teacher.plane();
      std::vector<int> keep;
      for (int c = 0; c < teacher.channels; ++c) {
        const auto first = teacher.values.begin() + static_cast<std::ptrdiff_t>(c * plane);
        if (plane > 0 && *std::max_element(first, first + static_cast<std::ptrdiff_t>(plane)) > mode.tau) keep.push_back(c);
      }
      const double denom = static_cast<double>(keep.size()) * static_cast<double>(plane);
      for (std::size_t i = 0; i < n; ++i) {
        Heatmap g(teacher.channels, teacher.height, teacher.width, teacher.stride);
        double sum = 0.0;
        for (int c : keep) {
          for (std::size_t p = 0; p < plane; ++p) {
            const std::size_t idx = c * plane + p;
            const double d = students[i].values[idx] - teacher.values[idx];
            sum += d * d;
            g.values[idx] = 2.0 * d / denom;
          }
        }
        r.per_path[i] = keep.empty() ? 0.0 : sum / denom;
        r.value += r.per_path[i];
        r.grads.push_back(std::move(g));
      }
      break;
    }
    case UnsupMode::Kind::heatmap_fusion: {
      Heatmap fused(teacher.channels, teacher.height, teacher.width, teacher.stride);
      for (const auto& s : students) {
        for (std::size_t p = 0; p < fused.values.size(); ++p) fused.values[p] += s.values[p];
      }
      for (double& v : fused.values) v /= static_cast<double>(n);
      LossGrad lg = consistency_loss(teacher, fused);
      r.value = lg.value;
      for (double& g : lg.grad.values) g /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        r.per_path[i] = lg.value / static_cast<double>(n);
        r.grads.push_back(lg.grad);
      }
      break;
    }
  }
  return r;
}

}  // namespace poseaug
