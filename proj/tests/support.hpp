#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>

#include "poseaug/poseaug.hpp"

namespace poseaug::testing {

inline Image random_image(int h, int w, RandomStream rng) {
  Image img(h, w);
  for (double& v : img.pixels()) v = rng.uniform();
  return img;
}

inline KeypointSet random_joints(int k, Size bounds, RandomStream rng, double margin = 0.0) {
  KeypointSet kps(static_cast<std::size_t>(k));
  for (auto& j : kps.joints) {
    j.x = rng.uniform(margin, bounds.width - 1 - margin);
    j.y = rng.uniform(margin, bounds.height - 1 - margin);
    j.state = JointState::visible;
  }
  return kps;
}

inline Heatmap random_heatmap(int k, int h, int w, RandomStream rng, double lo = 0.0, double hi = 1.0) {
  Heatmap hm(k, h, w, 4);
  for (double& v : hm.values) v = rng.uniform(lo, hi);
  return hm;
}

/// A small network, batch and targets for central differences with step `h`.
struct FdSetup {
  TinyPoseNet net;
  std::vector<Image> batch;
  std::vector<Heatmap> targets;
};

inline std::vector<bool> relu_pattern(const TinyPoseNet& net, const std::vector<Image>& batch) {
  const ForwardResult fr = forward(net, batch);
  std::vector<bool> on;
  for (const auto& s : fr.cache.samples) {
    for (double z : s.z1) on.push_back(z > 0.0);
    for (double z : s.z2) on.push_back(z > 0.0);
  }
  return on;
}

/// First candidate in a fixed seed sequence where no single-parameter step of +-h flips any
/// ReLU. Central differences across a kink measure a secant, not the derivative, so the
/// comparison is only meaningful at such points. Selection never looks at gradients.
inline FdSetup kink_free_setup(std::uint64_t seed, double h) {
  for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
    RandomStream r = RandomStream(seed).split(attempt);
    FdSetup s{init_params(r.split("init").next_u64(), 4), {}, {}};
    RandomStream biases = r.split("biases");
    for (std::size_t t : {TinyPoseNet::kConv1B, TinyPoseNet::kConv2B, TinyPoseNet::kHeadB}) {
      for (double& v : s.net.mutable_tensor(t)) v = biases.uniform(-0.1, 0.1);
    }
    for (std::uint64_t i = 0; i < 2; ++i) {
      s.batch.push_back(random_image(8, 8, r.split("image").split(i)));
      s.targets.push_back(random_heatmap(4, 2, 2, r.split("target").split(i)));
    }
    const std::vector<bool> base = relu_pattern(s.net, s.batch);
    bool clean = true;
    for (std::size_t i = 0; clean && i < s.net.parameter_count(); ++i) {
      const double o = s.net.params()[i];
      for (double step : {h, -h}) {
        s.net.mutable_params()[i] = o + step;
        clean = clean && relu_pattern(s.net, s.batch) == base;
      }
      s.net.mutable_params()[i] = o;
    }
    if (clean) return s;
  }
  throw std::runtime_error("kink_free_setup: no candidate found");
}

/// Fresh per-test scratch directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("poseaug_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Synthetic samples with the default 64x48 generator.
inline std::vector<Sample> synth_samples(int count, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.seed = seed;
  return synthetic_samples(generate_synthetic(cfg, count));
}

inline std::vector<Image> images_of(const std::vector<Sample>& samples) {
  std::vector<Image> out;
  for (const auto& s : samples) out.push_back(s.image);
  return out;
}

}  // namespace poseaug::testing
