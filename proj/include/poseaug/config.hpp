#pragma once

// Run configuration documents (JSON). Unknown keys are rejected.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "poseaug/data.hpp"
#include "poseaug/error.hpp"
#include "poseaug/ssltrain.hpp"

namespace poseaug {

struct DataConfig {
  /// COCO annotation file of the training pool; the first labeled_count samples are labeled.
  std::string train_annotations;
  /// Optional separate unlabeled pool; otherwise the rest of the training pool.
  std::string unlabeled_annotations;
  std::string val_annotations;
  std::string image_root;
  std::optional<Profile> profile;
  int labeled_count = 100;
  SplitMode split = SplitMode::prefix;
  Size input_size{64, 48};
};

struct AnalysisConfig {
  int top_k = 50;
  bool centered = false;
};

struct RunConfig {
  std::uint64_t seed = 0;
  DataConfig data;
  TrainConfig train;
  EvalOptions eval;
  AnalysisConfig analysis;
};

namespace detail {

inline void check_keys(const nlohmann::json& obj, const std::string& section, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ParseError("config: section '" + section + "' must be an object");
  for (const auto& [k, v] : obj.items()) {
    if (!allowed.contains(k)) throw ParseError("config: unknown key '" + k + "' in section '" + section + "'");
  }
}

template <class T>
void read_field(const nlohmann::json& obj, const char* key, const std::string& section, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("config: " + section + "." + key + ": " + e.what());
  }
}

inline UnsupMode parse_unsup_mode(const std::string& s, double tau) {
  if (s == "ml" || s == "multi-loss") return UnsupMode::multi_loss();
  if (s == "cm" || s == "confidence-mask") return UnsupMode::confidence_mask(tau);
  if (s == "hf" || s == "heatmap-fusion") return UnsupMode::heatmap_fusion();
  throw InvalidParameter("unknown unsupervised mode '" + s + "' (expected ml, cm, hf)");
}

}  // namespace detail

inline UnsupMode parse_unsup_mode(const std::string& s, double tau = 0.5) { return detail::parse_unsup_mode(s, tau); }

inline NetworkMode parse_network_mode(const std::string& s) {
  if (s == "single") return NetworkMode::single;
  if (s == "dual") return NetworkMode::dual;
  throw InvalidParameter("unknown network mode '" + s + "' (expected single, dual)");
}

inline RunConfig config_from_json(const nlohmann::json& doc) {
  detail::check_keys(doc, "<root>", {"seed", "data", "train", "eval", "analysis"});
  RunConfig c;
  detail::read_field(doc, "seed", "<root>", c.seed);

  if (doc.contains("data")) {
    const auto& d = doc["data"];
    detail::check_keys(d, "data", {"train_annotations", "unlabeled_annotations", "val_annotations", "image_root", "profile",
                                   "labeled_count", "split", "input_size"});
    detail::read_field(d, "train_annotations", "data", c.data.train_annotations);
    detail::read_field(d, "unlabeled_annotations", "data", c.data.unlabeled_annotations);
    detail::read_field(d, "val_annotations", "data", c.data.val_annotations);
    detail::read_field(d, "image_root", "data", c.data.image_root);
    detail::read_field(d, "labeled_count", "data", c.data.labeled_count);
    if (d.contains("profile")) c.data.profile = parse_profile(d["profile"].get<std::string>());
    if (d.contains("split")) {
      const std::string s = d["split"].get<std::string>();
      if (s == "prefix") {
        c.data.split = SplitMode::prefix;
      } else if (s == "shuffled") {
        c.data.split = SplitMode::shuffled;
      } else {
        throw ParseError("config: data.split must be 'prefix' or 'shuffled'");
      }
    }
    if (d.contains("input_size")) {
      const auto& s = d["input_size"];
      if (!s.is_array() || s.size() != 2) throw ParseError("config: data.input_size must be [height, width]");
      c.data.input_size = {s[0].get<int>(), s[1].get<int>()};
    }
  }

  if (doc.contains("train")) {
    const auto& t = doc["train"];
    detail::check_keys(t, "train", {"lambda_u", "paths", "epochs", "batch_size", "base_lr", "milestones", "lr_gamma", "mode",
                                    "profile", "unsup_mode", "tau", "warmup_fraction", "joint_threshold", "sigma",
                                    "patch_size"});
    TrainConfig& tc = c.train;
    detail::read_field(t, "lambda_u", "train", tc.lambda_u);
    detail::read_field(t, "paths", "train", tc.paths);
    detail::read_field(t, "epochs", "train", tc.epochs);
    detail::read_field(t, "batch_size", "train", tc.batch_size);
    detail::read_field(t, "base_lr", "train", tc.base_lr);
    detail::read_field(t, "milestones", "train", tc.milestones);
    detail::read_field(t, "lr_gamma", "train", tc.lr_gamma);
    detail::read_field(t, "warmup_fraction", "train", tc.warmup_fraction);
    detail::read_field(t, "joint_threshold", "train", tc.joint_threshold);
    detail::read_field(t, "sigma", "train", tc.sigma);
    detail::read_field(t, "patch_size", "train", tc.patch_size);
    if (t.contains("mode")) tc.mode = parse_network_mode(t["mode"].get<std::string>());
    if (t.contains("profile")) {
      const std::string p = t["profile"].get<std::string>();
      if (p == "normal") {
        tc.profile = GeometryProfile::normal;
      } else if (p == "fisheye") {
        tc.profile = GeometryProfile::fisheye;
      } else {
        throw ParseError("config: train.profile must be 'normal' or 'fisheye'");
      }
    }
    double tau = 0.5;
    detail::read_field(t, "tau", "train", tau);
    if (t.contains("unsup_mode")) tc.unsup = parse_unsup_mode(t["unsup_mode"].get<std::string>(), tau);
  }

  if (doc.contains("eval")) {
    const auto& e = doc["eval"];
    detail::check_keys(e, "eval", {"metric", "pck_alpha", "pckh_alpha"});
    if (e.contains("metric")) c.eval.metric = parse_metric(e["metric"].get<std::string>());
    detail::read_field(e, "pck_alpha", "eval", c.eval.pck_alpha);
    detail::read_field(e, "pckh_alpha", "eval", c.eval.pckh_alpha);
  }

  if (doc.contains("analysis")) {
    const auto& a = doc["analysis"];
    detail::check_keys(a, "analysis", {"top_k", "centered"});
    detail::read_field(a, "top_k", "analysis", c.analysis.top_k);
    detail::read_field(a, "centered", "analysis", c.analysis.centered);
  }
  c.train.seed = c.seed;
  c.train.validate();
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  try {
    return config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

/// Fully resolved document; feeding it back to config_from_json reproduces the config.
inline nlohmann::json config_to_json(const RunConfig& c) {
  using nlohmann::json;
  json d = {{"train_annotations", c.data.train_annotations},
            {"unlabeled_annotations", c.data.unlabeled_annotations},
            {"val_annotations", c.data.val_annotations},
            {"image_root", c.data.image_root},
            {"labeled_count", c.data.labeled_count},
            {"split", c.data.split == SplitMode::prefix ? "prefix" : "shuffled"},
            {"input_size", {c.data.input_size.height, c.data.input_size.width}}};
  if (c.data.profile) d["profile"] = to_string(*c.data.profile);
  const TrainConfig& t = c.train;
  json tr = {{"lambda_u", t.lambda_u},
             {"paths", t.paths},
             {"epochs", t.epochs},
             {"batch_size", t.batch_size},
             {"base_lr", t.base_lr},
             {"milestones", t.milestones},
             {"lr_gamma", t.lr_gamma},
             {"mode", to_string(t.mode)},
             {"profile", t.profile == GeometryProfile::fisheye ? "fisheye" : "normal"},
             {"unsup_mode", to_string(t.unsup)},
             {"tau", t.unsup.tau},
             {"warmup_fraction", t.warmup_fraction},
             {"joint_threshold", t.joint_threshold},
             {"sigma", t.sigma},
             {"patch_size", t.patch_size}};
  json ev = {{"metric", to_string(c.eval.metric)}, {"pck_alpha", c.eval.pck_alpha}, {"pckh_alpha", c.eval.pckh_alpha}};
  json an = {{"top_k", c.analysis.top_k}, {"centered", c.analysis.centered}};
  return {{"seed", c.seed}, {"data", d}, {"train", tr}, {"eval", ev}, {"analysis", an}};
}

}  // namespace poseaug
