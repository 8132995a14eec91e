#pragma once

// TinyPoseNet: conv3x3/s2 (3->16) + ReLU, conv3x3/s2 (16->32) + ReLU, conv1x1 (32->k).
// Output heatmaps are at 1/4 of the input resolution. Gradients are hand-written and
// accumulated in 64-bit; Adam with a piecewise-constant learning-rate schedule.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "poseaug/error.hpp"
#include "poseaug/parallel.hpp"
#include "poseaug/rng.hpp"
#include "poseaug/tensor_file.hpp"
#include "poseaug/types.hpp"

namespace poseaug {

struct ParamView {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

class TinyPoseNet {
 public:
  static constexpr int kIn = 3;
  static constexpr int kHidden1 = 16;
  static constexpr int kHidden2 = 32;
  static constexpr int kFeatureDim = kHidden2;
  static constexpr int kStride = 4;

  explicit TinyPoseNet(int num_joints = 13) : joints_(num_joints) {
    if (num_joints <= 0) throw InvalidParameter("TinyPoseNet: need at least one joint");
    auto add = [&](std::string name, std::vector<std::size_t> shape) {
      std::size_t n = 1;
      for (auto d : shape) n *= d;
      views_.push_back({std::move(name), std::move(shape), total_, n});
      total_ += n;
    };
    add("conv1.weight", {kHidden1, kIn, 3, 3});
    add("conv1.bias", {kHidden1});
    add("conv2.weight", {kHidden2, kHidden1, 3, 3});
    add("conv2.bias", {kHidden2});
    add("head.weight", {static_cast<std::size_t>(num_joints), kHidden2});
    add("head.bias", {static_cast<std::size_t>(num_joints)});
    params_.assign(total_, 0.0);
  }

  [[nodiscard]] int num_joints() const { return joints_; }
  [[nodiscard]] std::size_t parameter_count() const { return total_; }
  [[nodiscard]] const std::vector<ParamView>& views() const { return views_; }

  [[nodiscard]] std::span<const double> params() const { return params_; }
  /// Mutable access; bumps the version so caches from earlier forwards become stale.
  std::span<double> mutable_params() {
    ++version_;
    return params_;
  }
  [[nodiscard]] std::uint64_t version() const { return version_; }

  [[nodiscard]] std::span<const double> tensor(std::size_t i) const {
    return std::span<const double>(params_).subspan(views_[i].offset, views_[i].size);
  }
  std::span<double> mutable_tensor(std::size_t i) {
    ++version_;
    return std::span<double>(params_).subspan(views_[i].offset, views_[i].size);
  }

  enum Index : std::size_t { kConv1W = 0, kConv1B, kConv2W, kConv2B, kHeadW, kHeadB };

  friend bool operator==(const TinyPoseNet& a, const TinyPoseNet& b) {
    return a.joints_ == b.joints_ && a.params_ == b.params_;
  }

 private:
  int joints_;
  std::vector<ParamView> views_;
  std::size_t total_ = 0;
  std::vector<double> params_;
  std::uint64_t version_ = 0;
};

/// Uniform fan-in scaled initialization (He bound for rectified layers); biases start at zero.
inline TinyPoseNet init_params(std::uint64_t seed, int num_joints = 13) {
  TinyPoseNet net(num_joints);
  RandomStream root(seed);
  auto fill = [&](std::size_t idx, double bound) {
    RandomStream r = root.split(net.views()[idx].name);
    for (double& w : net.mutable_tensor(idx)) w = r.uniform(-bound, bound);
  };
  fill(TinyPoseNet::kConv1W, std::sqrt(6.0 / (TinyPoseNet::kIn * 9)));
  fill(TinyPoseNet::kConv2W, std::sqrt(6.0 / (TinyPoseNet::kHidden1 * 9)));
  fill(TinyPoseNet::kHeadW, 1.0 / std::sqrt(static_cast<double>(TinyPoseNet::kHidden2)));
  return net;
}

struct SampleCache {
  std::vector<double> col1, z1, col2, z2;
};

struct ForwardCache {
  int height = 0;
  int width = 0;
  std::uint64_t version = 0;
  std::vector<SampleCache> samples;
};

struct ForwardResult {
  std::vector<Heatmap> heatmaps;
  /// Global-average-pooled second hidden layer, one 32-vector per sample.
  std::vector<std::vector<double>> features;
  ForwardCache cache;
};

namespace detail {

inline double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

// 3x3, stride 2, zero padding 1. Rows are (channel, ky, kx), columns output pixels.
inline void im2col_3x3s2(const double* in, int channels, int h, int w, std::vector<double>& col) {
  const int oh = h / 2;
  const int ow = w / 2;
  const std::size_t p = static_cast<std::size_t>(oh) * ow;
  col.assign(static_cast<std::size_t>(channels) * 9 * p, 0.0);
  for (int c = 0; c < channels; ++c) {
    const double* plane = in + static_cast<std::size_t>(c) * h * w;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        double* row = col.data() + (static_cast<std::size_t>(c) * 9 + ky * 3 + kx) * p;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = 2 * oy + ky - 1;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = 2 * ox + kx - 1;
            if (ix >= 0 && ix < w) row[static_cast<std::size_t>(oy) * ow + ox] = plane[static_cast<std::size_t>(iy) * w + ix];
          }
        }
      }
    }
  }
}

inline void col2im_3x3s2(const std::vector<double>& col, int channels, int h, int w, double* out) {
  const int oh = h / 2;
  const int ow = w / 2;
  const std::size_t p = static_cast<std::size_t>(oh) * ow;
  for (int c = 0; c < channels; ++c) {
    double* plane = out + static_cast<std::size_t>(c) * h * w;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const double* row = col.data() + (static_cast<std::size_t>(c) * 9 + ky * 3 + kx) * p;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = 2 * oy + ky - 1;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = 2 * ox + kx - 1;
            if (ix >= 0 && ix < w) plane[static_cast<std::size_t>(iy) * w + ix] += row[static_cast<std::size_t>(oy) * ow + ox];
          }
        }
      }
    }
  }
}

// out[o][p] = bias[o] + sum_k weight[o][k] * in[k][p]
inline void dense(const double* weight, const double* bias, const double* in, int outs, int ins, std::size_t p,
                  double* out) {
  for (int o = 0; o < outs; ++o) {
    double* row = out + static_cast<std::size_t>(o) * p;
    std::fill(row, row + p, bias[o]);
    for (int k = 0; k < ins; ++k) axpy(weight[static_cast<std::size_t>(o) * ins + k], in + static_cast<std::size_t>(k) * p, row, p);
  }
}

inline void forward_one(const TinyPoseNet& net, const Image& img, Heatmap& out, std::vector<double>& feature,
                        SampleCache& cache) {
  const int h = img.height();
  const int w = img.width();
  const int h1 = h / 2, w1 = w / 2, h2 = h / 4, w2 = w / 4;
  const std::size_t p1 = static_cast<std::size_t>(h1) * w1;
  const std::size_t p2 = static_cast<std::size_t>(h2) * w2;

  std::vector<double> chw(static_cast<std::size_t>(TinyPoseNet::kIn) * h * w);
  const auto& px = img.pixels();
  for (int c = 0; c < TinyPoseNet::kIn; ++c) {
    for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i) chw[c * static_cast<std::size_t>(h) * w + i] = px[i * 3 + c];
  }

  im2col_3x3s2(chw.data(), TinyPoseNet::kIn, h, w, cache.col1);
  cache.z1.resize(TinyPoseNet::kHidden1 * p1);
  dense(net.tensor(TinyPoseNet::kConv1W).data(), net.tensor(TinyPoseNet::kConv1B).data(), cache.col1.data(),
        TinyPoseNet::kHidden1, TinyPoseNet::kIn * 9, p1, cache.z1.data());
  std::vector<double> a1(cache.z1.size());
  for (std::size_t i = 0; i < a1.size(); ++i) a1[i] = cache.z1[i] > 0.0 ? cache.z1[i] : 0.0;

  im2col_3x3s2(a1.data(), TinyPoseNet::kHidden1, h1, w1, cache.col2);
  cache.z2.resize(TinyPoseNet::kHidden2 * p2);
  dense(net.tensor(TinyPoseNet::kConv2W).data(), net.tensor(TinyPoseNet::kConv2B).data(), cache.col2.data(),
        TinyPoseNet::kHidden2, TinyPoseNet::kHidden1 * 9, p2, cache.z2.data());
  std::vector<double> a2(cache.z2.size());
  for (std::size_t i = 0; i < a2.size(); ++i) a2[i] = cache.z2[i] > 0.0 ? cache.z2[i] : 0.0;

  feature.assign(TinyPoseNet::kHidden2, 0.0);
  for (int c = 0; c < TinyPoseNet::kHidden2; ++c) {
    double s = 0.0;
    for (std::size_t i = 0; i < p2; ++i) s += a2[c * p2 + i];
    feature[static_cast<std::size_t>(c)] = s / static_cast<double>(p2);
  }

  out = Heatmap(net.num_joints(), h2, w2, TinyPoseNet::kStride);
  dense(net.tensor(TinyPoseNet::kHeadW).data(), net.tensor(TinyPoseNet::kHeadB).data(), a2.data(), net.num_joints(),
        TinyPoseNet::kHidden2, p2, out.values.data());
}

}  // namespace detail

/// Batched forward pass. Every image must share one size divisible by 4.
inline ForwardResult forward(const TinyPoseNet& net, std::span<const Image> batch, bool keep_cache = true) {
  ForwardResult r;
  if (batch.empty()) return r;
  const int h = batch[0].height();
  const int w = batch[0].width();
  if (h % 4 != 0 || w % 4 != 0) throw ShapeError("forward: input height and width must be divisible by 4");
  for (const auto& img : batch) {
    if (img.height() != h || img.width() != w) throw ShapeError("forward: batch images differ in size");
  }
  r.heatmaps.resize(batch.size());
  r.features.resize(batch.size());
  r.cache.height = h;
  r.cache.width = w;
  r.cache.version = net.version();
  r.cache.samples.resize(batch.size());
  parallel_for(batch.size(), [&](std::size_t i) {
    detail::forward_one(net, batch[i], r.heatmaps[i], r.features[i], r.cache.samples[i]);
    if (!keep_cache) r.cache.samples[i] = SampleCache{};
  });
  if (!keep_cache) r.cache.samples.clear();
  return r;
}

/// Analytic parameter gradient of sum_i <output_grads[i], output_i>, laid out like net.params().
inline std::vector<double> backward(const TinyPoseNet& net, const ForwardCache& cache,
                                    std::span<const Heatmap> output_grads) {
  if (cache.version != net.version()) throw ContractError("backward: forward cache is stale (parameters changed)");
  if (cache.samples.size() != output_grads.size()) throw ContractError("backward: cache/gradient batch size mismatch");
  const int h = cache.height, w = cache.width;
  const int h1 = h / 2, w1 = w / 2, h2 = h / 4, w2 = w / 4;
  const std::size_t p1 = static_cast<std::size_t>(h1) * w1;
  const std::size_t p2 = static_cast<std::size_t>(h2) * w2;
  const int k = net.num_joints();
  constexpr int c1 = TinyPoseNet::kHidden1, c2 = TinyPoseNet::kHidden2;
  constexpr int k1 = TinyPoseNet::kIn * 9, k2 = TinyPoseNet::kHidden1 * 9;
  const auto& views = net.views();

  for (const auto& g : output_grads) {
    if (g.channels != k || g.height != h2 || g.width != w2) throw ShapeError("backward: output gradient shape mismatch");
  }

  std::vector<std::vector<double>> per_sample(cache.samples.size());
  parallel_for(cache.samples.size(), [&](std::size_t s) {
    const SampleCache& sc = cache.samples[s];
    const double* dout = output_grads[s].values.data();
    std::vector<double>& g = per_sample[s];
    g.assign(net.parameter_count(), 0.0);
    double* g_hw = g.data() + views[TinyPoseNet::kHeadW].offset;
    double* g_hb = g.data() + views[TinyPoseNet::kHeadB].offset;
    double* g_w2 = g.data() + views[TinyPoseNet::kConv2W].offset;
    double* g_b2 = g.data() + views[TinyPoseNet::kConv2B].offset;
    double* g_w1 = g.data() + views[TinyPoseNet::kConv1W].offset;
    double* g_b1 = g.data() + views[TinyPoseNet::kConv1B].offset;
    const double* hw = net.tensor(TinyPoseNet::kHeadW).data();
    const double* w2p = net.tensor(TinyPoseNet::kConv2W).data();

    std::vector<double> a2(sc.z2.size());
    for (std::size_t i = 0; i < a2.size(); ++i) a2[i] = sc.z2[i] > 0.0 ? sc.z2[i] : 0.0;

    // head
    std::vector<double> dz2(static_cast<std::size_t>(c2) * p2, 0.0);
    for (int j = 0; j < k; ++j) {
      const double* dj = dout + static_cast<std::size_t>(j) * p2;
      double sb = 0.0;
      for (std::size_t i = 0; i < p2; ++i) sb += dj[i];
      g_hb[j] += sb;
      for (int c = 0; c < c2; ++c) {
        g_hw[j * c2 + c] += detail::dot(dj, a2.data() + static_cast<std::size_t>(c) * p2, p2);
        detail::axpy(hw[j * c2 + c], dj, dz2.data() + static_cast<std::size_t>(c) * p2, p2);
      }
    }
    for (std::size_t i = 0; i < dz2.size(); ++i) {
      if (!(sc.z2[i] > 0.0)) dz2[i] = 0.0;
    }

    // conv2
    std::vector<double> dcol2(static_cast<std::size_t>(k2) * p2, 0.0);
    for (int o = 0; o < c2; ++o) {
      const double* d = dz2.data() + static_cast<std::size_t>(o) * p2;
      double sb = 0.0;
      for (std::size_t i = 0; i < p2; ++i) sb += d[i];
      g_b2[o] += sb;
      for (int r = 0; r < k2; ++r) {
        g_w2[o * k2 + r] += detail::dot(d, sc.col2.data() + static_cast<std::size_t>(r) * p2, p2);
        detail::axpy(w2p[o * k2 + r], d, dcol2.data() + static_cast<std::size_t>(r) * p2, p2);
      }
    }
    std::vector<double> dz1(static_cast<std::size_t>(c1) * p1, 0.0);
    detail::col2im_3x3s2(dcol2, c1, h1, w1, dz1.data());
    for (std::size_t i = 0; i < dz1.size(); ++i) {
      if (!(sc.z1[i] > 0.0)) dz1[i] = 0.0;
    }

    // conv1
    for (int o = 0; o < c1; ++o) {
      const double* d = dz1.data() + static_cast<std::size_t>(o) * p1;
      double sb = 0.0;
      for (std::size_t i = 0; i < p1; ++i) sb += d[i];
      g_b1[o] += sb;
      for (int r = 0; r < k1; ++r) g_w1[o * k1 + r] += detail::dot(d, sc.col1.data() + static_cast<std::size_t>(r) * p1, p1);
    }
  });

  std::vector<double> grads(net.parameter_count(), 0.0);
  for (const auto& g : per_sample) {
    for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += g[i];
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

/// Piecewise-constant schedule: base_lr * gamma^(number of milestones <= epoch).
struct LrSchedule {
  double base_lr = 1e-3;
  std::vector<int> milestones;
  double gamma = 0.1;

  [[nodiscard]] double lr_at(int epoch) const {
    double lr = base_lr;
    for (int m : milestones) {
      if (epoch >= m) lr *= gamma;
    }
    return lr;
  }
};

struct OptimizerState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
  LrSchedule schedule;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  OptimizerState() = default;
  OptimizerState(std::size_t n, LrSchedule s) : m(n, 0.0), v(n, 0.0), schedule(std::move(s)) {}
};

/// One bias-corrected Adam update at the learning rate scheduled for `epoch`.
inline void adam_step(OptimizerState& st, TinyPoseNet& net, std::span<const double> grads, int epoch) {
  if (grads.size() != net.parameter_count() || st.m.size() != grads.size() || st.v.size() != grads.size()) {
    throw ShapeError("adam_step: gradient/state size mismatch");
  }
  ++st.step;
  const double lr = st.schedule.lr_at(epoch);
  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  auto p = net.mutable_params();
  for (std::size_t i = 0; i < p.size(); ++i) {
    st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * grads[i];
    st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * grads[i] * grads[i];
    const double mh = st.m[i] / bc1;
    const double vh = st.v[i] / bc2;
    p[i] -= lr * mh / (std::sqrt(vh) + st.eps);
  }
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

inline TensorFile to_tensor_file(const TinyPoseNet& net, const OptimizerState* opt = nullptr) {
  TensorFile tf;
  tf.meta["model"] = "TinyPoseNet";
  tf.meta["num_joints"] = std::to_string(net.num_joints());
  const auto p = net.params();
  for (const auto& v : net.views()) {
    tf.tensors.push_back({v.name, v.shape, std::vector<double>(p.begin() + static_cast<std::ptrdiff_t>(v.offset),
                                                               p.begin() + static_cast<std::ptrdiff_t>(v.offset + v.size))});
  }
  if (opt != nullptr) {
    tf.meta["adam.step"] = std::to_string(opt->step);
    tf.tensors.push_back({"adam.m", {opt->m.size()}, opt->m});
    tf.tensors.push_back({"adam.v", {opt->v.size()}, opt->v});
  }
  return tf;
}

inline TinyPoseNet net_from_tensor_file(const TensorFile& tf) {
  TinyPoseNet net(std::stoi(tf.meta_at("num_joints")));
  auto p = net.mutable_params();
  for (const auto& v : net.views()) {
    const NamedTensor& t = tf.get(v.name);
    if (t.shape != v.shape) throw ParseError("checkpoint: shape mismatch for " + v.name);
    std::copy(t.values.begin(), t.values.end(), p.begin() + static_cast<std::ptrdiff_t>(v.offset));
  }
  return net;
}

inline void save_checkpoint(const std::string& path, const TinyPoseNet& net, const OptimizerState* opt = nullptr,
                            const std::map<std::string, std::string>& extra_meta = {}) {
  TensorFile tf = to_tensor_file(net, opt);
  for (const auto& [k, v] : extra_meta) tf.meta[k] = v;
  write_tensor_file(path, tf);
}

inline TinyPoseNet load_checkpoint(const std::string& path) { return net_from_tensor_file(read_tensor_file(path)); }

/// Restores Adam moments and step; the schedule is configuration, not state.
inline OptimizerState optimizer_from_tensor_file(const TensorFile& tf, LrSchedule schedule) {
  OptimizerState st;
  st.m = tf.get("adam.m").values;
  st.v = tf.get("adam.v").values;
  st.step = std::stoll(tf.meta_at("adam.step"));
  st.schedule = std::move(schedule);
  return st;
}

}  // namespace poseaug
