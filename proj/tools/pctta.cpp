// Copyright 2026 The pctta Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// pctta command-line tool. Exit codes: 0 success, 64 usage error, 2 runtime
// failure. Failures print one line "<Code>: <message>" to stderr.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pctta/aggregation.hpp"
#include "pctta/augmentation.hpp"
#include "pctta/error.hpp"
#include "pctta/evaluation.hpp"
#include "pctta/geometry.hpp"
#include "pctta/io.hpp"
#include "pctta/predictor.hpp"
#include "pctta/synth.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitRuntime = 2;
constexpr int kExitUsage = 64;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Flags shared by every command that runs TTA.
struct TtaFlags {
  std::string method;
  std::size_t samples = 10;
  std::uint64_t seed = 0;
  double sigma = 0.01;
  double scale_r = 4.0;
  std::string target = "same";
  std::string mesh;
  std::size_t k_plane = 12;
  std::optional<double> voxel_edge;

  void add_to(CLI::App& cmd, const std::string& default_method, bool allow_none) {
    method = default_method;
    std::vector<std::string> methods = {"copy", "jitter", "upsample", "mesh"};
    if (allow_none) methods.insert(methods.begin(), "none");
    cmd.add_option(allow_none ? "--tta" : "--method", method, "Augmentation method")
        ->check(CLI::IsMember(methods))
        ->capture_default_str();
    cmd.add_option("--samples", samples, "Number of augmented clouds M")->capture_default_str();
    cmd.add_option("--seed", seed, "Master seed")->capture_default_str();
    cmd.add_option("--sigma", sigma, "Jitter standard deviation")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    cmd.add_option("--scale-r", scale_r, "Upsampling ratio r")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd.add_option("--target", target, "Points per augmented cloud: 'same' or a count")
        ->capture_default_str();
    cmd.add_option("--k-plane", k_plane, "Neighbors per local plane fit")
        ->check(CLI::Range(std::size_t{3}, std::size_t{1} << 20))
        ->capture_default_str();
    cmd.add_option("--voxel-edge", voxel_edge, "Seed grid cell edge in normalized units")
        ->check(CLI::PositiveNumber);
  }

  bool enabled() const { return method != "none"; }

  pctta::TtaConfig config() const {
    pctta::TtaConfig c;
    if (enabled()) c.method = pctta::parse_augmentation_method(method);
    c.samples_m = samples;
    c.master_seed = seed;
    c.jitter.sigma = sigma;
    c.upsample.scale_r = scale_r;
    c.upsample.k_plane = k_plane;
    c.upsample.voxel_edge = voxel_edge;
    if (target != "same") {
      std::size_t pos = 0;
      unsigned long long v = 0;
      try {
        v = std::stoull(target, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != target.size() || v == 0) {
        throw UsageError("--target must be 'same' or a positive count, got '" + target + "'");
      }
      c.target_count = static_cast<std::size_t>(v);
    }
    return c;
  }

  bool needs_mesh() const { return method == "mesh"; }
};

/// Mesh in the normalized frame of the cloud, when the mesh method is used.
std::optional<pctta::TriangleMesh> load_mesh_for(const TtaFlags& tta,
                                                 const pctta::NormalizationTransform& t) {
  if (!tta.needs_mesh()) return std::nullopt;
  if (tta.mesh.empty()) throw UsageError("the mesh method requires --mesh");
  pctta::TriangleMesh mesh = pctta::read_mesh(tta.mesh);
  mesh.vertices = t.apply(mesh.vertices);
  return mesh;
}

json logits_json(const pctta::LogitMatrix& logits) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index c = 0; c < logits.cols(); ++c) row.push_back(logits(i, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

void emit(const json& j, const std::string& path) {
  const std::string text = j.dump(2) + "\n";
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    pctta::write_text_file(path, text);
  }
}

// augment

struct AugmentArgs {
  std::string input;
  std::string output;
  TtaFlags tta;
};

int run_augment(const AugmentArgs& a) {
  if (a.tta.needs_mesh() && a.tta.mesh.empty()) {
    throw UsageError("--method mesh requires --mesh");
  }
  const pctta::PointCloud cloud = pctta::read_point_cloud(a.input);
  const auto [normalized, transform] = pctta::normalize_unit_sphere(cloud);
  const auto mesh = load_mesh_for(a.tta, transform);
  const pctta::TtaConfig config = a.tta.config();
  const pctta::AugmentationSet set =
      pctta::make_augmentations(normalized, config, mesh ? &*mesh : nullptr);

  fs::create_directories(a.output);
  json outputs = json::array();
  for (std::size_t k = 0; k < set.augmented.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "aug_%03zu.xyz", k);
    pctta::write_point_cloud(pctta::denormalize(set.augmented[k], transform),
                             fs::path(a.output) / name);
    outputs.push_back({{"file", name},
                       {"seed", set.seeds[k]},
                       {"points", set.augmented[k].size()}});
  }
  json prov;
  prov["input"] = a.input;
  prov["method"] = std::string(pctta::to_string(config.method));
  prov["samples"] = config.samples_m;
  prov["master_seed"] = config.master_seed;
  prov["normalization"] = {{"center", {transform.center.x(), transform.center.y(),
                                       transform.center.z()}},
                           {"scale", transform.scale}};
  json params;
  params["sigma"] = config.jitter.sigma;
  params["scale_r"] = config.upsample.scale_r;
  if (config.method == pctta::AugmentationMethod::Upsample) {
    params["voxel_edge"] = pctta::resolve_voxel_edge(normalized, config.upsample);
    params["seed_band"] = pctta::resolve_seed_band(normalized, config.upsample);
    params["k_triangle"] = config.upsample.k_triangle;
    params["k_plane"] = config.upsample.k_plane;
    params["k_bias"] = config.upsample.k_bias;
    params["outlier_factor"] = config.upsample.outlier_factor;
  }
  if (config.target_count) {
    params["target"] = *config.target_count;
  } else {
    params["target"] = "same";
  }
  if (a.tta.needs_mesh()) params["mesh"] = a.tta.mesh;
  prov["params"] = std::move(params);
  prov["outputs"] = std::move(outputs);
  pctta::write_text_file(fs::path(a.output) / "provenance.json", prov.dump(2) + "\n");
  return 0;
}

// classify

struct LoadedModel {
  std::unique_ptr<pctta::MlpPredictor> mlp;
  std::unique_ptr<pctta::CentroidClassifier> centroid;

  const pctta::GlobalClassifier& classifier() const {
    if (mlp) return *mlp;
    return *centroid;
  }
};

LoadedModel load_model(const std::string& path) {
  LoadedModel m;
  if (pctta::is_weights_file(path)) {
    m.mlp = std::make_unique<pctta::MlpPredictor>(pctta::load_predictor(path));
  } else {
    m.centroid =
        std::make_unique<pctta::CentroidClassifier>(pctta::load_centroid_classifier(path));
  }
  return m;
}

struct ClassifyArgs {
  std::string model;
  std::string input;
  bool as_json = false;
  TtaFlags tta;
};

int run_classify(const ClassifyArgs& a) {
  if (a.tta.needs_mesh() && a.tta.mesh.empty()) throw UsageError("--tta mesh requires --mesh");
  const pctta::TtaConfig config = a.tta.config();
  const LoadedModel loaded = load_model(a.model);
  const pctta::GlobalClassifier& model = loaded.classifier();
  const pctta::PointCloud cloud = pctta::read_point_cloud(a.input);
  const auto [normalized, transform] = pctta::normalize_unit_sphere(cloud);

  double t_augment = 0.0;
  double t_inference = 0.0;
  double t_aggregation = 0.0;
  auto start = Clock::now();
  std::vector<Eigen::VectorXd> features{model.global_feature(normalized)};
  t_inference += seconds_since(start);
  if (a.tta.enabled()) {
    const auto mesh = load_mesh_for(a.tta, transform);
    start = Clock::now();
    const auto set = pctta::make_augmentations(normalized, config, mesh ? &*mesh : nullptr);
    t_augment = seconds_since(start);
    start = Clock::now();
    for (const auto& c : set.augmented) features.push_back(model.global_feature(c));
    t_inference += seconds_since(start);
  }
  start = Clock::now();
  const pctta::ClassificationResult result = pctta::classify_from_features(model, features);
  t_aggregation = seconds_since(start);

  if (a.as_json) {
    json j;
    j["label"] = result.label;
    j["logits"] = logits_json(result.logits)[0];
    j["tta"] = a.tta.method;
    j["samples"] = a.tta.enabled() ? config.samples_m : 0;
    j["timings"] = {{"augment", t_augment},
                    {"inference", t_inference},
                    {"aggregation", t_aggregation}};
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "label " << result.label << "\nlogits";
    char buf[32];
    for (Eigen::Index c = 0; c < result.logits.cols(); ++c) {
      std::snprintf(buf, sizeof buf, " %.17g", result.logits(0, c));
      std::cout << buf;
    }
    std::cout << "\n";
  }
  return 0;
}

// segment

struct SegmentArgs {
  std::string model;
  std::string input;
  std::string labels_out;
  std::string json_out;
  std::string feat = "xyz+logit";
  std::string agg = "avg";
  std::size_t k = 1;
  double logit_weight = 1.0;
  bool probabilities = false;
  TtaFlags tta;
};

int run_segment(const SegmentArgs& a) {
  if (a.tta.needs_mesh() && a.tta.mesh.empty()) throw UsageError("--tta mesh requires --mesh");
  pctta::TtaConfig config = a.tta.config();
  config.feature_mode = pctta::parse_feature_mode(a.feat);
  config.agg_mode = pctta::parse_aggregation_mode(a.agg);
  config.neighbor_k = a.k;
  config.logit_weight = a.logit_weight;
  config.aggregate_probabilities = a.probabilities;
  if (!a.tta.enabled()) config.samples_m = 0;

  if (!pctta::is_weights_file(a.model)) {
    throw UsageError("segment needs a weights file model, got '" + a.model + "'");
  }
  const pctta::MlpPredictor model = pctta::load_predictor(a.model);
  if (!model.has_seg_head()) throw UsageError("model '" + a.model + "' has no segmentation head");
  const pctta::PointCloud cloud = pctta::read_point_cloud(a.input);
  const auto [normalized, transform] = pctta::normalize_unit_sphere(cloud);
  const auto mesh = config.samples_m > 0 ? load_mesh_for(a.tta, transform) : std::nullopt;

  auto start = Clock::now();
  const auto set = pctta::make_augmentations(normalized, config, mesh ? &*mesh : nullptr);
  const double t_augment = seconds_since(start);
  start = Clock::now();
  std::vector<pctta::LogitMatrix> logits;
  logits.push_back(model.point_logits(set.original));
  for (const auto& c : set.augmented) logits.push_back(model.point_logits(c));
  const double t_inference = seconds_since(start);
  start = Clock::now();
  const pctta::SegmentationResult result = pctta::aggregate_segmentation(set, logits, config);
  const double t_aggregation = seconds_since(start);

  if (!a.labels_out.empty()) pctta::write_labels(result.labels, a.labels_out);
  if (!a.json_out.empty()) {
    json j;
    j["points"] = result.labels.size();
    j["feature"] = a.feat;
    j["aggregation"] = a.agg;
    j["k"] = a.k;
    j["samples"] = config.samples_m;
    j["tta"] = a.tta.method;
    j["labels"] = result.labels;
    j["timings"] = {{"augment", t_augment},
                    {"inference", t_inference},
                    {"aggregation", t_aggregation}};
    emit(j, a.json_out);
  }
  if (a.labels_out.empty() && a.json_out.empty()) {
    for (int l : result.labels) std::cout << l << "\n";
  }
  return 0;
}

// eval

struct EvalArgs {
  std::string manifest;
  std::string model;
  std::string output;
  std::string task;
  std::string split = "test";
  std::vector<std::size_t> densities;
  std::string feat = "xyz+logit";
  std::string agg = "avg";
  std::size_t k = 1;
  double logit_weight = 1.0;
  bool probabilities = false;
  TtaFlags tta;
};

int run_eval(const EvalArgs& a, const CLI::App& cmd) {
  const pctta::DatasetManifest manifest = pctta::read_manifest(a.manifest);
  const bool seg = manifest.task == pctta::Task::PartSegmentation;
  if (!a.task.empty() && (a.task == "part_segmentation") != seg) {
    throw UsageError("--task " + a.task + " does not match the manifest task");
  }
  if (!seg) {
    for (const char* flag : {"--feat", "--agg", "--k", "--logit-weight", "--prob"}) {
      if (cmd.count(flag) > 0) {
        throw UsageError(std::string(flag) + " applies to part segmentation manifests only");
      }
    }
  }
  pctta::EvalOptions options;
  options.tta = a.tta.config();
  options.tta.feature_mode = pctta::parse_feature_mode(a.feat);
  options.tta.agg_mode = pctta::parse_aggregation_mode(a.agg);
  options.tta.neighbor_k = a.k;
  options.tta.logit_weight = a.logit_weight;
  options.tta.aggregate_probabilities = a.probabilities;
  options.run_tta = a.tta.enabled();
  options.densities = a.densities;
  options.split = a.split;

  const auto start = Clock::now();
  const LoadedModel loaded = load_model(a.model);
  pctta::EvaluationReport report;
  if (seg) {
    if (!loaded.mlp || !loaded.mlp->has_seg_head()) {
      throw UsageError("part segmentation needs a weights file model with a segmentation head");
    }
    report = pctta::evaluate_segmentation(*loaded.mlp, manifest, options);
  } else {
    report = pctta::evaluate_classification(loaded.classifier(), manifest, options);
  }
  json j = pctta::report_to_json(report);
  j["timings"]["wall"] = seconds_since(start);
  emit(j, a.output);
  return 0;
}

// synth

struct SynthArgs {
  std::vector<std::string> classes = {"sphere", "cube", "cylinder"};
  std::size_t per_class = 60;
  std::size_t points = 2048;
  double noise = 0.02;
  std::uint64_t seed = 1;
  std::string output;
};

int run_synth(const SynthArgs& a) {
  pctta::SynthOptions o;
  o.classes.clear();
  for (const auto& name : a.classes) {
    try {
      o.classes.push_back(pctta::parse_shape_class(name));
    } catch (const pctta::Error& e) {
      throw UsageError(e.what());
    }
  }
  o.per_class = a.per_class;
  o.points = a.points;
  o.noise = a.noise;
  o.seed = a.seed;
  const pctta::SynthOutput out = pctta::generate_dataset(o, a.output);
  std::cout << out.clouds << " clouds, " << out.classification_manifest.generic_string() << ", "
            << out.segmentation_manifest.generic_string() << "\n";
  return 0;
}

// fit-centroid

struct FitArgs {
  std::string manifest;
  std::string output;
  std::string split = "train";
  std::size_t bins = 16;
};

int run_fit(const FitArgs& a) {
  const pctta::DatasetManifest manifest = pctta::read_manifest(a.manifest);
  if (manifest.task != pctta::Task::Classification) {
    throw UsageError("fit-centroid needs a classification manifest");
  }
  std::vector<std::pair<pctta::PointCloud, int>> data;
  for (std::size_t i : manifest.split_indices(a.split)) {
    data.emplace_back(pctta::read_point_cloud(manifest.entries[i].cloud),
                      manifest.entries[i].id);
  }
  const auto model = pctta::fit_centroid_classifier(data, a.bins, manifest.classes.size());
  pctta::save_centroid_classifier(model, a.output);
  std::cout << "fit on " << data.size() << " clouds\n";
  return 0;
}

// init-mlp

struct InitArgs {
  std::size_t classes = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> point_dims = {64, 128, 256};
  std::vector<std::size_t> seg_hidden = {128};
  std::string output;
};

int run_init(const InitArgs& a) {
  pctta::save_predictor(
      pctta::MlpPredictor::random(a.seed, a.classes, a.point_dims, a.seg_hidden), a.output);
  return 0;
}

void add_seg_flags(CLI::App& cmd, std::string& feat, std::string& agg, std::size_t& k,
                   double& logit_weight, bool& prob) {
  cmd.add_option("--feat", feat, "Correspondence space")
      ->check(CLI::IsMember({"xyz", "xyz+logit"}))
      ->capture_default_str();
  cmd.add_option("--agg", agg, "Aggregation")
      ->check(CLI::IsMember({"max", "avg"}))
      ->capture_default_str();
  cmd.add_option("--k", k, "Neighbors per augmented cloud")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd.add_option("--logit-weight", logit_weight, "Weight of logits in the matching space")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd.add_flag("--prob", prob, "Aggregate softmax probabilities instead of logits");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Point cloud test-time augmentation"};
  app.require_subcommand(1);

  AugmentArgs augment;
  auto* c_aug = app.add_subcommand("augment", "Write augmented copies of a cloud");
  c_aug->add_option("-i,--input", augment.input, "Input cloud")->required();
  c_aug->add_option("-o,--output", augment.output, "Output directory")->required();
  augment.tta.add_to(*c_aug, "jitter", false);
  c_aug->add_option("--mesh", augment.tta.mesh, "Mesh for the mesh method");

  ClassifyArgs classify;
  auto* c_cls = app.add_subcommand("classify", "Classify a cloud");
  c_cls->add_option("--model", classify.model, "Weights file or centroid JSON")->required();
  c_cls->add_option("-i,--input", classify.input, "Input cloud")->required();
  c_cls->add_flag("--json", classify.as_json, "Print JSON");
  classify.tta.add_to(*c_cls, "none", true);
  c_cls->add_option("--mesh", classify.tta.mesh, "Mesh for the mesh method");

  SegmentArgs segment;
  auto* c_seg = app.add_subcommand("segment", "Per-point labels with TTA");
  c_seg->add_option("--model", segment.model, "Weights file")->required();
  c_seg->add_option("-i,--input", segment.input, "Input cloud")->required();
  c_seg->add_option("-o,--output", segment.labels_out, "Label file");
  c_seg->add_option("--json", segment.json_out, "JSON summary path, '-' for stdout");
  add_seg_flags(*c_seg, segment.feat, segment.agg, segment.k, segment.logit_weight,
                segment.probabilities);
  segment.tta.add_to(*c_seg, "upsample", true);
  c_seg->add_option("--mesh", segment.tta.mesh, "Mesh for the mesh method");

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "Evaluate baseline and TTA over a manifest");
  c_eval->add_option("--manifest", eval.manifest, "Dataset manifest")->required();
  c_eval->add_option("--model", eval.model, "Weights file or centroid JSON")->required();
  c_eval->add_option("-o,--output", eval.output, "Report path, stdout when omitted");
  c_eval->add_option("--task", eval.task, "Expected manifest task")
      ->check(CLI::IsMember({"classification", "part_segmentation"}));
  c_eval->add_option("--split", eval.split, "Split to evaluate")->capture_default_str();
  c_eval->add_option("--density-sweep", eval.densities, "Comma-separated point counts")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  add_seg_flags(*c_eval, eval.feat, eval.agg, eval.k, eval.logit_weight, eval.probabilities);
  eval.tta.add_to(*c_eval, "upsample", true);

  SynthArgs synth;
  auto* c_syn = app.add_subcommand("synth", "Generate a synthetic shape dataset");
  c_syn->add_option("--classes", synth.classes, "Subset of sphere,cube,cylinder")
      ->delimiter(',')
      ->capture_default_str();
  c_syn->add_option("--per-class", synth.per_class, "Clouds per class")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  c_syn->add_option("--points", synth.points, "Points per cloud")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  c_syn->add_option("--noise", synth.noise, "Gaussian noise standard deviation")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  c_syn->add_option("--seed", synth.seed, "Seed")->capture_default_str();
  c_syn->add_option("-o,--output", synth.output, "Output directory")->required();

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit-centroid", "Fit a nearest-centroid classifier");
  c_fit->add_option("--manifest", fit.manifest, "Classification manifest")->required();
  c_fit->add_option("-o,--output", fit.output, "Model JSON")->required();
  c_fit->add_option("--split", fit.split, "Split to fit on")->capture_default_str();
  c_fit->add_option("--bins", fit.bins, "Histogram bins")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  InitArgs init;
  auto* c_init = app.add_subcommand("init-mlp", "Write a randomly initialized weights file");
  c_init->add_option("--classes", init.classes, "Output classes")
      ->required()
      ->check(CLI::PositiveNumber);
  c_init->add_option("--seed", init.seed, "Seed")->capture_default_str();
  c_init->add_option("--point-dims", init.point_dims, "Point layer widths")->delimiter(',');
  c_init->add_option("--seg-hidden", init.seg_hidden, "Segmentation hidden widths")
      ->delimiter(',');
  c_init->add_option("-o,--output", init.output, "Weights file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e);
      return 0;
    }
    std::cerr << "UsageError: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*c_aug) return run_augment(augment);
    if (*c_cls) return run_classify(classify);
    if (*c_seg) return run_segment(segment);
    if (*c_eval) return run_eval(eval, *c_eval);
    if (*c_syn) return run_synth(synth);
    if (*c_fit) return run_fit(fit);
    if (*c_init) return run_init(init);
  } catch (const UsageError& e) {
    std::cerr << "UsageError: " << e.what() << "\n";
    return kExitUsage;
  } catch (const pctta::Error& e) {
    std::cerr << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "IoError: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
