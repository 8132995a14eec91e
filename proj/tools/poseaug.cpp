// poseaug: synthetic data, training, ranking, evaluation and spectrum analysis.
//
// Exit codes: 0 success, 1 validator or runtime failure, 2 usage error.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "poseaug/poseaug.hpp"

namespace fs = std::filesystem;
using namespace poseaug;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t end = std::min(s.find(',', start), s.size());
    if (end > start) out.push_back(s.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

// Wall-clock facts live apart from the reproducible outputs.
void write_meta(const fs::path& dir, const std::string& command, double seconds) {
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  nlohmann::json meta = {{"command", command}, {"finished_utc", stamp}, {"wall_seconds", seconds}, {"threads", worker_count()}};
  write_text(dir / "run_meta.json", meta.dump(1) + "\n");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<std::string> validated_pipelines(const std::vector<std::string>& specs) {
  for (const auto& s : specs) {
    try {
      (void)parse_pipeline(s);
    } catch (const InvalidParameter& e) {
      throw UsageError(e.what());
    }
  }
  return specs;
}

struct LoadedData {
  Profile profile = Profile::generic;
  std::vector<Sample> labeled;
  std::vector<Sample> unlabeled;
  std::vector<Sample> validation;
};

std::optional<std::string> root_of(const RunConfig& c) {
  if (c.data.image_root.empty()) return std::nullopt;
  return c.data.image_root;
}

LoadedData load_data(const RunConfig& c) {
  if (c.data.train_annotations.empty()) throw UsageError("config: data.train_annotations is required");
  LoadedData d;
  const DatasetIndex idx = parse_coco_keypoints(c.data.train_annotations, root_of(c));
  d.profile = c.data.profile.value_or(idx.profile);
  if (c.data.labeled_count > static_cast<int>(idx.samples.size())) {
    throw UsageError("config: data.labeled_count exceeds the " + std::to_string(idx.samples.size()) + " training samples");
  }
  auto [lab, unl] = split_labeled_unlabeled(idx, c.data.labeled_count, c.seed, c.data.split);
  lab.profile = unl.profile = d.profile;
  d.labeled = load_samples(lab, c.data.input_size);
  if (!c.data.unlabeled_annotations.empty()) {
    DatasetIndex u = parse_coco_keypoints(c.data.unlabeled_annotations, root_of(c));
    u.profile = d.profile;
    d.unlabeled = load_samples(u, c.data.input_size);
    for (auto& s : d.unlabeled) s.joints.reset();
  } else {
    d.unlabeled = load_samples(unl, c.data.input_size);
  }
  if (!c.data.val_annotations.empty()) {
    DatasetIndex v = parse_coco_keypoints(c.data.val_annotations, root_of(c));
    v.profile = d.profile;
    d.validation = load_samples(v, c.data.input_size);
  }
  return d;
}

RunConfig read_config(const std::string& path) {
  try {
    return load_config(path);
  } catch (const ParseError& e) {
    throw UsageError(e.what());
  } catch (const InvalidParameter& e) {
    throw UsageError(e.what());
  }
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  int count = 0;
  std::uint64_t seed = 0;
  std::string out;
  int height = 64;
  int width = 48;
  double noise = 0.04;
  int distractors = 2;
};

int cmd_synth_gen(const SynthArgs& a) {
  if (a.count <= 0) throw UsageError("--count must be positive");
  if (a.height <= 0 || a.width <= 0) throw UsageError("--height and --width must be positive");
  SynthConfig cfg;
  cfg.seed = a.seed;
  cfg.image_size = {a.height, a.width};
  cfg.noise = a.noise;
  cfg.distractors = a.distractors;
  const SynthDataset ds = generate_synthetic(cfg, a.count);
  write_synthetic(a.out, ds);
  std::cout << "wrote " << a.count << " samples (" << a.height << "x" << a.width << ", " << ds.index.num_joints
            << " joints, seed " << a.seed << ") to " << a.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string config;
  std::string out;
  std::string mode;
  std::string paths;
  std::string unsup_mode;
  std::optional<double> tau;
  std::optional<int> epochs;
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda;
  bool resume = false;
};

void apply_overrides(RunConfig& c, const TrainArgs& a) {
  try {
    if (!a.mode.empty()) c.train.mode = parse_network_mode(a.mode);
    if (!a.paths.empty()) c.train.paths = validated_pipelines(split_list(a.paths));
    if (!a.unsup_mode.empty() || a.tau) {
      c.train.unsup = parse_unsup_mode(a.unsup_mode.empty() ? to_string(c.train.unsup) : a.unsup_mode, a.tau.value_or(0.5));
    }
    if (a.epochs) c.train.epochs = *a.epochs;
    if (a.seed) c.seed = *a.seed;
    if (a.lambda) c.train.lambda_u = *a.lambda;
    c.train.seed = c.seed;
    c.train.validate();
  } catch (const InvalidParameter& e) {
    throw UsageError(e.what());
  }
}

int cmd_train(const TrainArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  RunConfig c = read_config(a.config);
  apply_overrides(c, a);
  LoadedData d = load_data(c);
  if (d.profile == Profile::fisheye_body) c.train.profile = GeometryProfile::fisheye;
  fs::create_directories(a.out);
  write_text(fs::path(a.out) / "config.json", config_to_json(c).dump(1) + "\n");
  TrainIo io{a.out, a.resume};
  const TrainRun run = train(c.train, d.labeled, d.unlabeled, d.validation, &io, [](const EpochRecord& r) {
    std::cout << "epoch " << r.epoch << " loss_s " << fmt_num(r.losses[0].loss_s) << " loss_u " << fmt_num(r.losses[0].loss_u);
    if (!r.val.empty()) std::cout << " val " << fmt_num(r.val_mean);
    std::cout << "\n";
  });
  write_meta(a.out, "train", seconds_since(t0));
  std::cout << "trained " << run.nets.size() << " network(s), " << run.step << " steps; outputs in " << a.out << "\n";
  return 0;
}

struct RankArgs {
  std::string config;
  std::string candidates;
  std::optional<int> epochs;
  std::string out;
};

int cmd_rank_augs(const RankArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  RunConfig c = read_config(a.config);
  const std::vector<std::string> cands = validated_pipelines(split_list(a.candidates));
  if (cands.empty()) throw UsageError("--candidates is empty");
  if (a.epochs) {
    if (*a.epochs <= 0) throw UsageError("--epochs must be positive");
    c.train.epochs = *a.epochs;
  }
  LoadedData d = load_data(c);
  if (d.validation.empty()) throw UsageError("config: rank-augs needs data.val_annotations");
  const auto ranking = rank_augmentations(cands, c.train, d.labeled, d.unlabeled, d.validation);
  fs::create_directories(a.out);
  write_text(fs::path(a.out) / "config.json", config_to_json(c).dump(1) + "\n");
  write_text(fs::path(a.out) / "ranking.csv", ranking_csv(ranking));
  write_text(fs::path(a.out) / "curves.csv", ranking_curves_csv(ranking));
  write_meta(a.out, "rank-augs", seconds_since(t0));
  std::cout << ranking_csv(ranking);
  return 0;
}

struct EvalArgs {
  std::vector<std::string> checkpoints;
  std::string dataset;
  std::string image_root;
  std::string metric = "pck";
  std::string predictions;
  std::string config;
  std::string out;
};

std::vector<Detection> read_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open predictions " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!doc.is_array()) throw ParseError(path + ": expected a list of results");
  std::vector<Detection> dets;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& r = doc[i];
    const std::string ctx = path + "[" + std::to_string(i) + "]";
    if (!r.contains("image_id") || !r.contains("keypoints")) throw ParseError(ctx + ": needs image_id and keypoints");
    const auto& kp = r["keypoints"];
    if (!kp.is_array() || kp.size() % 3 != 0) throw ParseError(ctx + ".keypoints: expected (x, y, v) triplets");
    Detection d;
    d.image_id = r["image_id"].get<int>();
    d.score = r.value("score", 1.0);
    d.joints = KeypointSet(kp.size() / 3);
    for (std::size_t j = 0; j < kp.size() / 3; ++j) {
      d.joints[j] = {kp[3 * j].get<double>(), kp[3 * j + 1].get<double>(), JointState::predicted,
                     std::clamp(kp[3 * j + 2].get<double>(), 0.0, 1.0)};
    }
    dets.push_back(std::move(d));
  }
  return dets;
}

std::string metric_rows(const std::string& model, const EvalOptions& opt, const MetricValue& v) {
  std::string s;
  if (opt.metric == Metric::oks) {
    const auto th = default_oks_thresholds();
    for (std::size_t i = 0; i < v.per_threshold.size(); ++i) s += model + ",ap," + fmt_num(th[i]) + "," + fmt_num(v.per_threshold[i]) + "\n";
    s += model + ",map,all," + fmt_num(v.value) + "\n";
  } else if (opt.metric == Metric::pckh) {
    s += model + ",pckh," + fmt_num(opt.pckh_alpha) + "," + fmt_num(v.value) + "\n";
  } else {
    s += model + ",pck," + fmt_num(opt.pck_alpha) + "," + fmt_num(v.value) + "\n";
  }
  return s;
}

// Scores a COCO results file in original image coordinates.
MetricValue score_predictions(const DatasetIndex& idx, const std::vector<Detection>& dets, const EvalOptions& opt) {
  if (opt.metric == Metric::oks) {
    std::vector<GroundTruth> gts;
    for (const auto& s : idx.samples) gts.push_back({s.image_id, *s.keypoints, s.area.value_or(0.0)});
    const OksConfig cfg = OksConfig::for_joints(idx.num_joints);
    const ApReport ap = average_precision(gts, dets, cfg);
    return {ap.map, ap.ap};
  }
  // PCK family: each ground truth takes the highest-scoring detection of its image.
  std::map<int, const Detection*> best;
  for (const auto& d : dets) {
    auto it = best.find(d.image_id);
    if (it == best.end() || d.score > it->second->score) best[d.image_id] = &d;
  }
  std::vector<EvalPair> pairs;
  for (const auto& s : idx.samples) {
    EvalPair p;
    p.gt = *s.keypoints;
    auto it = best.find(s.image_id);
    p.pred = it != best.end() ? it->second->joints : KeypointSet(p.gt.size());
    if (it == best.end()) {
      for (auto& j : p.pred.joints) j = {-1e9, -1e9, JointState::predicted, 0.0};
    }
    p.area = s.area.value_or(0.0);
    p.head_size = s.head_size;
    if (s.bbox) p.bbox_diagonal = s.bbox->diagonal();
    pairs.push_back(std::move(p));
  }
  return score_pairs(pairs, opt);
}

int cmd_eval(const EvalArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  RunConfig c;
  if (!a.config.empty()) c = read_config(a.config);
  EvalOptions opt = c.eval;
  try {
    opt.metric = parse_metric(a.metric);
  } catch (const InvalidParameter& e) {
    throw UsageError(e.what());
  }
  if (a.checkpoints.empty() == a.predictions.empty()) throw UsageError("give either --checkpoint(s) or --predictions");
  if (a.checkpoints.size() > 2) throw UsageError("at most two checkpoints (single or dual mode)");
  const DatasetIndex idx =
      parse_coco_keypoints(a.dataset, a.image_root.empty() ? std::nullopt : std::optional<std::string>(a.image_root));
  fs::create_directories(a.out);
  std::string csv = "model,metric,threshold,value\n";
  nlohmann::json summary = {{"metric", to_string(opt.metric)}, {"samples", idx.samples.size()}};

  if (!a.predictions.empty()) {
    const MetricValue v = score_predictions(idx, read_predictions(a.predictions), opt);
    csv += metric_rows("predictions", opt, v);
    summary["value"] = v.value;
  } else {
    const std::vector<Sample> samples = load_samples(idx, c.data.input_size);
    std::vector<TinyPoseNet> nets;
    for (const auto& ck : a.checkpoints) nets.push_back(load_checkpoint(ck));
    std::vector<const TinyPoseNet*> ptrs;
    for (const auto& n : nets) ptrs.push_back(&n);
    const EvalReport rep = evaluate(ptrs, samples, opt);
    for (std::size_t i = 0; i < nets.size(); ++i) {
      const std::string name(1, static_cast<char>('A' + i));
      csv += metric_rows(name, opt, rep.per_net[i]);
      summary["models"][name] = rep.per_net[i].value;

      std::vector<Image> imgs;
      for (const auto& s : samples) imgs.push_back(s.image);
      const ForwardResult fr = forward(nets[i], imgs, false);
      TensorFile tf;
      tf.meta["source"] = a.checkpoints[i];
      NamedTensor t{"features", {samples.size(), static_cast<std::size_t>(TinyPoseNet::kFeatureDim)}, {}};
      for (const auto& f : fr.features) t.values.insert(t.values.end(), f.begin(), f.end());
      tf.tensors.push_back(std::move(t));
      write_tensor_file((fs::path(a.out) / ("features_" + name + ".tensors")).string(), tf);
    }
    if (nets.size() > 1) {
      MetricValue mean{rep.mean, {}};
      if (opt.metric == Metric::oks) {
        mean.per_threshold.assign(rep.per_net[0].per_threshold.size(), 0.0);
        for (const auto& v : rep.per_net) {
          for (std::size_t t = 0; t < v.per_threshold.size(); ++t) mean.per_threshold[t] += v.per_threshold[t] / static_cast<double>(nets.size());
        }
      }
      csv += metric_rows("mean", opt, mean);
    }
    summary["value"] = rep.mean;
  }
  write_text(fs::path(a.out) / "metrics.csv", csv);
  write_text(fs::path(a.out) / "summary.json", summary.dump(1) + "\n");
  write_meta(a.out, "eval", seconds_since(t0));
  std::cout << csv;
  return 0;
}

struct SvdArgs {
  std::string features;
  std::string tensor = "features";
  int top_k = 50;
  bool centered = false;
  std::string out;
};

int cmd_svd(const SvdArgs& a) {
  if (a.top_k <= 0) throw UsageError("--top-k must be positive");
  const TensorFile tf = read_tensor_file(a.features);
  const NamedTensor& t = tf.get(a.tensor);
  if (t.shape.size() != 2) throw ParseError(a.features + ": tensor '" + a.tensor + "' is not a matrix");
  const FeatureMatrix f(static_cast<int>(t.shape[0]), static_cast<int>(t.shape[1]), t.values);
  const SpectrumReport rep = spectrum_report(f, a.top_k, a.centered);
  const std::string csv = spectrum_csv(rep);
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    write_text(a.out, csv);
    std::cout << "H_nsv " << fmt_num(rep.entropy) << " (" << rep.sigma.size() << " of " << rep.dimension << " singular values written)\n";
  }
  return 0;
}

int cmd_validate_combo(const std::vector<std::string>& specs) {
  std::vector<AugPipeline> pipes;
  for (const auto& s : validated_pipelines(specs)) pipes.push_back(parse_pipeline(s));
  const ComboReport rep = validate_combination(pipes);
  const bool ok = rep.verdict == ComboReport::Verdict::recommended;
  std::cout << (ok ? "recommended" : "warned") << "\n";
  for (const auto& v : rep.violations) std::cout << to_string(v.principle) << ": " << v.message << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-supervised keypoint estimation with composed hard augmentations"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* sg = app.add_subcommand("synth-gen", "Render a synthetic stick-figure dataset");
  sg->add_option("--count", synth.count, "Number of samples")->required();
  sg->add_option("--seed", synth.seed, "Generator seed");
  sg->add_option("--out", synth.out, "Output directory")->required();
  sg->add_option("--height", synth.height, "Image height");
  sg->add_option("--width", synth.width, "Image width");
  sg->add_option("--noise", synth.noise, "Gaussian pixel noise");
  sg->add_option("--distractors", synth.distractors, "Distractor segments per image");

  TrainArgs tr;
  auto* tc = app.add_subcommand("train", "Train single or dual networks");
  tc->add_option("--config", tr.config, "Run configuration (JSON)")->required();
  tc->add_option("--out", tr.out, "Run directory")->required();
  tc->add_option("--mode", tr.mode, "single | dual");
  tc->add_option("--paths", tr.paths, "Comma-separated hard-view pipelines; '+' joins ops within one path");
  tc->add_option("--unsup-mode", tr.unsup_mode, "ml | cm | hf");
  tc->add_option("--tau", tr.tau, "Confidence-mask threshold");
  tc->add_option("--epochs", tr.epochs, "Epoch budget");
  tc->add_option("--seed", tr.seed, "Run seed");
  tc->add_option("--lambda", tr.lambda, "Unsupervised loss weight");
  tc->add_flag("--resume", tr.resume, "Continue from the run directory's checkpoints");

  RankArgs rk;
  auto* rc = app.add_subcommand("rank-augs", "Rank single-path augmentations by validation accuracy");
  rc->add_option("--config", rk.config, "Run configuration (JSON)")->required();
  rc->add_option("--candidates", rk.candidates, "Comma-separated pipelines")->required();
  rc->add_option("--epochs", rk.epochs, "Epoch budget per candidate");
  rc->add_option("--out", rk.out, "Output directory")->required();

  EvalArgs ev;
  auto* ec = app.add_subcommand("eval", "Evaluate checkpoints or a results file");
  ec->add_option("--checkpoint", ev.checkpoints, "Checkpoint (repeat for dual mode)");
  ec->add_option("--dataset", ev.dataset, "COCO keypoint annotations")->required();
  ec->add_option("--image-root", ev.image_root, "Image directory (default: annotation directory)");
  ec->add_option("--metric", ev.metric, "oks | pckh | pck");
  ec->add_option("--predictions", ev.predictions, "COCO keypoint results instead of checkpoints");
  ec->add_option("--config", ev.config, "Run configuration for input size and metric parameters");
  ec->add_option("--out", ev.out, "Output directory")->required();

  SvdArgs sv;
  auto* vc = app.add_subcommand("svd", "Singular-value spectrum and entropy of a feature dump");
  vc->add_option("--features", sv.features, "Feature tensor file")->required();
  vc->add_option("--tensor", sv.tensor, "Tensor name inside the file");
  vc->add_option("--top-k", sv.top_k, "Number of singular values to export");
  vc->add_flag("--centered", sv.centered, "Subtract column means first");
  vc->add_option("--out", sv.out, "Output CSV (default: stdout)");

  std::vector<std::string> combo;
  auto* cc = app.add_subcommand("validate-combo", "Check pipelines against the combination principles");
  cc->add_option("--pipelines", combo, "Pipeline (repeatable; ',' or '+' joins ops)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sg) return cmd_synth_gen(synth);
    if (*tc) return cmd_train(tr);
    if (*rc) return cmd_rank_augs(rk);
    if (*ec) return cmd_eval(ev);
    if (*vc) return cmd_svd(sv);
    if (*cc) return cmd_validate_combo(combo);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
