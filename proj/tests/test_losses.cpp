#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

namespace {

using namespace poseaug;
using poseaug::testing::random_heatmap;

double plain_mse(const Heatmap& a, const Heatmap& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += (a.values[i] - b.values[i]) * (a.values[i] - b.values[i]);
  return s / static_cast<double>(a.values.size());
}

std::vector<Heatmap> students(int n, std::uint64_t seed) {
  std::vector<Heatmap> s;
  for (int i = 0; i < n; ++i) s.push_back(random_heatmap(5, 6, 4, RandomStream(seed + static_cast<std::uint64_t>(i))));
  return s;
}

TEST(Losses, SupervisedIsMeanSquaredError) {
  const Heatmap p = random_heatmap(3, 4, 5, RandomStream(1));
  const Heatmap t = random_heatmap(3, 4, 5, RandomStream(2));
  const LossGrad lg = supervised_loss(p, t);
  EXPECT_NEAR(lg.value, plain_mse(p, t), 1e-15);
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    EXPECT_NEAR(lg.grad.values[i], 2.0 * (p.values[i] - t.values[i]) / 60.0, 1e-15);
  }
  EXPECT_EQ(supervised_loss(t, t).value, 0.0);
  EXPECT_THROW(supervised_loss(p, Heatmap(3, 4, 4, 4)), ShapeError);
}

TEST(Losses, SupervisedGradientMatchesFiniteDifferences) {
  Heatmap p = random_heatmap(2, 3, 3, RandomStream(3));
  const Heatmap t = random_heatmap(2, 3, 3, RandomStream(4));
  const LossGrad lg = supervised_loss(p, t);
  const double h = 1e-4;
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    const double o = p.values[i];
    p.values[i] = o + h;
    const double up = supervised_loss(p, t).value;
    p.values[i] = o - h;
    const double down = supervised_loss(p, t).value;
    p.values[i] = o;
    EXPECT_NEAR((up - down) / (2 * h), lg.grad.values[i], 1e-10);
  }
}

TEST(Losses, ConsistencyNeedsADetachedTeacher) {
  const Heatmap t = random_heatmap(2, 3, 3, RandomStream(5));
  const Heatmap s = random_heatmap(2, 3, 3, RandomStream(6));
  EXPECT_THROW(consistency_loss(t, s), ContractError);
  const LossGrad lg = consistency_loss(detach(t), s);
  EXPECT_NEAR(lg.value, plain_mse(s, t), 1e-15);
  EXPECT_THROW(multipath_unsup_loss(t, std::vector<Heatmap>{s}, UnsupMode::multi_loss()), ContractError);
}

TEST(Losses, MultiLossIsTheSumOfPathLosses) {
  const Heatmap t = detach(random_heatmap(5, 6, 4, RandomStream(7)));
  for (int n : {1, 2, 4}) {
    const auto s = students(n, 10);
    const MultipathLoss ml = multipath_unsup_loss(t, s, UnsupMode::multi_loss());
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double li = plain_mse(s[static_cast<std::size_t>(i)], t);
      EXPECT_NEAR(ml.per_path[static_cast<std::size_t>(i)], li, 1e-12);
      sum += li;
    }
    EXPECT_NEAR(ml.value, sum, 1e-12);
  }
}

TEST(Losses, SinglePathReducesToTheConsistencyLoss) {
  const Heatmap t = detach(random_heatmap(5, 6, 4, RandomStream(8)));
  const auto s = students(1, 20);
  const MultipathLoss ml = multipath_unsup_loss(t, s, UnsupMode::multi_loss());
  const LossGrad lg = consistency_loss(t, s[0]);
  EXPECT_EQ(ml.value, lg.value);
  EXPECT_EQ(ml.grads[0].values, lg.grad.values);
}

TEST(Losses, FusionOfIdenticalStudentsIsMultiLossOverN) {
  const Heatmap t = detach(random_heatmap(5, 6, 4, RandomStream(9)));
  const Heatmap one = random_heatmap(5, 6, 4, RandomStream(30));
  for (int n : {2, 3, 4}) {
    const std::vector<Heatmap> s(static_cast<std::size_t>(n), one);
    const double ml = multipath_unsup_loss(t, s, UnsupMode::multi_loss()).value;
    const MultipathLoss hf = multipath_unsup_loss(t, s, UnsupMode::heatmap_fusion());
    EXPECT_NEAR(hf.value, ml / n, 1e-12);
    double parts = 0.0;
    for (double v : hf.per_path) parts += v;
    EXPECT_NEAR(parts, hf.value, 1e-15);
  }
}

TEST(Losses, FusionComparesTheMeanStudent) {
  const Heatmap t = detach(random_heatmap(5, 6, 4, RandomStream(10)));
  const auto s = students(3, 40);
  Heatmap mean = s[0];
  for (std::size_t i = 0; i < mean.values.size(); ++i) mean.values[i] = (s[0].values[i] + s[1].values[i] + s[2].values[i]) / 3.0;
  const MultipathLoss hf = multipath_unsup_loss(t, s, UnsupMode::heatmap_fusion());
  EXPECT_NEAR(hf.value, plain_mse(mean, t), 1e-14);
  for (std::size_t i = 0; i < mean.values.size(); ++i) {
    EXPECT_NEAR(hf.grads[1].values[i], 2.0 * (mean.values[i] - t.values[i]) / mean.values.size() / 3.0, 1e-15);
  }
}

TEST(Losses, ConfidenceMaskZeroesSubThresholdChannels) {
  Heatmap t = random_heatmap(5, 6, 4, RandomStream(11), 0.0, 0.45);
  t.at(1, 2, 2) = 0.9;
  t.at(3, 0, 1) = 0.51;
  t.at(4, 5, 3) = 0.5;  // exactly tau: not strictly above, masked
  t = detach(t);
  const auto s = students(2, 50);
  const MultipathLoss cm = multipath_unsup_loss(t, s, UnsupMode::confidence_mask(0.5));
  const std::size_t plane = t.plane();
  for (std::size_t p = 0; p < 2; ++p) {
    double sum = 0.0;
    for (int c : {1, 3}) {
      for (std::size_t i = 0; i < plane; ++i) {
        const double d = s[p].values[c * plane + i] - t.values[c * plane + i];
        sum += d * d;
      }
    }
    EXPECT_NEAR(cm.per_path[p], sum / (2.0 * plane), 1e-14);
    for (int c : {0, 2, 4}) {
      for (std::size_t i = 0; i < plane; ++i) EXPECT_EQ(cm.grads[p].values[c * plane + i], 0.0);
    }
    for (std::size_t i = 0; i < plane; ++i) EXPECT_NE(cm.grads[p].values[plane + i], 0.0);
  }
}

TEST(Losses, ConfidenceMaskWithNoSurvivorsIsZero) {
  const Heatmap t = detach(random_heatmap(5, 6, 4, RandomStream(12), 0.0, 0.4));
  const MultipathLoss cm = multipath_unsup_loss(t, students(3, 60), UnsupMode::confidence_mask(0.5));
  EXPECT_EQ(cm.value, 0.0);
  for (const auto& g : cm.grads) {
    for (double v : g.values) EXPECT_EQ(v, 0.0);
  }
}

TEST(Losses, ModeArgumentsAreValidated) {
  EXPECT_THROW(UnsupMode::confidence_mask(0.0), InvalidParameter);
  EXPECT_THROW(UnsupMode::confidence_mask(1.0), InvalidParameter);
  const Heatmap t = detach(Heatmap(1, 2, 2, 4));
  EXPECT_THROW(multipath_unsup_loss(t, std::vector<Heatmap>{}, UnsupMode::multi_loss()), InvalidParameter);
  EXPECT_THROW(multipath_unsup_loss(t, std::vector<Heatmap>{Heatmap(1, 3, 2, 4)}, UnsupMode::multi_loss()), ShapeError);
}

}  // namespace
