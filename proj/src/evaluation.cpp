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

#include "pctta/evaluation.hpp"

#include <chrono>
#include <string>

#include "pctta/aggregation.hpp"
#include "pctta/augmentation.hpp"
#include "pctta/error.hpp"
#include "pctta/geometry.hpp"
#include "pctta/parallel.hpp"
#include "pctta/rng.hpp"

namespace pctta {
namespace {

using Clock = std::chrono::steady_clock;

class Stopwatch {
 public:
  explicit Stopwatch(double& sink) : sink_(sink), start_(Clock::now()) {}
  ~Stopwatch() { sink_ += std::chrono::duration<double>(Clock::now() - start_).count(); }
  Stopwatch(const Stopwatch&) = delete;
  Stopwatch& operator=(const Stopwatch&) = delete;

 private:
  double& sink_;
  Clock::time_point start_;
};

struct LoadedEntry {
  PointCloud cloud;
  std::optional<TriangleMesh> mesh;
  std::vector<int> labels;
};

/// Clouds at or below the density are used as-is.
std::vector<std::size_t> density_indices(const PointCloud& cloud,
                                         std::optional<std::size_t> density) {
  const std::size_t n = cloud.size();
  if (density && *density < n) return farthest_point_sample(cloud, *density, 0);
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  return all;
}

std::vector<std::optional<std::size_t>> density_list(const EvalOptions& options) {
  std::vector<std::optional<std::size_t>> out;
  for (std::size_t d : options.densities) out.emplace_back(d);
  if (out.empty()) out.emplace_back(std::nullopt);
  return out;
}

void validate_options(const EvalOptions& options) {
  options.tta.validate();
  for (std::size_t d : options.densities) {
    if (d == 0) throw Error(ErrorCode::InvalidArgument, "densities must be positive");
  }
}

std::vector<std::size_t> selected_entries(const DatasetManifest& manifest,
                                          const EvalOptions& options) {
  auto idx = manifest.split_indices(options.split);
  if (idx.empty()) {
    throw Error(ErrorCode::EmptyInput, "no manifest entries in split '" + options.split + "'");
  }
  return idx;
}

LoadedEntry load_entry(const ManifestEntry& entry, const EvalOptions& options, bool labels) {
  LoadedEntry out;
  out.cloud = read_point_cloud(entry.cloud);
  if (out.cloud.empty()) {
    throw Error(ErrorCode::EmptyCloud, entry.cloud.string() + " has no points");
  }
  if (options.run_tta && options.tta.method == AugmentationMethod::MeshSurface) {
    if (!entry.mesh) {
      throw Error(ErrorCode::MissingFile, entry.cloud.string() + " has no mesh for mesh TTA");
    }
    out.mesh = read_mesh(*entry.mesh);
  }
  if (labels) {
    if (!entry.labels) {
      throw Error(ErrorCode::MissingFile, entry.cloud.string() + " has no part labels");
    }
    out.labels = read_labels(*entry.labels);
    if (out.labels.size() != out.cloud.size()) {
      throw Error(ErrorCode::DimensionMismatch,
                  entry.labels->string() + ": " + std::to_string(out.labels.size()) +
                      " labels for " + std::to_string(out.cloud.size()) + " points");
    }
  }
  return out;
}

/// The cloud and mesh in normalized space, plus the TTA config for one entry.
struct PreparedInput {
  PointCloud cloud;
  std::optional<TriangleMesh> mesh;
  TtaConfig config;
};

PreparedInput prepare(const PointCloud& cloud, const std::optional<TriangleMesh>& mesh,
                      const EvalOptions& options, std::size_t entry_index) {
  auto [normalized, transform] = normalize_unit_sphere(cloud);
  PreparedInput out{std::move(normalized), std::nullopt, options.tta};
  out.config.master_seed = derive_seed(options.tta.master_seed, entry_index);
  if (mesh) {
    TriangleMesh m = *mesh;
    m.vertices = transform.apply(m.vertices);
    out.mesh = std::move(m);
  }
  return out;
}

int masked_argmax(const Eigen::Ref<const Eigen::RowVectorXd>& row, const std::set<int>& parts) {
  int best = -1;
  for (int p : parts) {
    if (p < 0 || p >= row.size()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "part " + std::to_string(p) + " outside the model's " +
                      std::to_string(row.size()) + " outputs");
    }
    if (best < 0 || row(p) > row(best)) best = p;
  }
  if (best < 0) throw Error(ErrorCode::EmptyInput, "category has no parts");
  return best;
}

std::vector<int> masked_labels(const LogitMatrix& logits, const std::set<int>& parts) {
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = masked_argmax(logits.row(i), parts);
  }
  return out;
}

MetricBlock finish_block(ConfusionMatrix cm) {
  MetricBlock b;
  b.oacc = overall_accuracy(cm);
  b.macc = mean_class_accuracy(cm);
  b.miou = mean_iou(cm);
  b.confusion = std::move(cm);
  return b;
}

StageTimings sum_timings(const std::vector<StageTimings>& parts) {
  StageTimings t;
  for (const auto& p : parts) {
    t.augment += p.augment;
    t.inference += p.inference;
    t.aggregation += p.aggregation;
    t.other += p.other;
  }
  return t;
}

nlohmann::ordered_json block_to_json(const MetricBlock& b) {
  nlohmann::ordered_json j;
  j["oAcc"] = b.oacc;
  j["mAcc"] = b.macc;
  j["mIoU"] = b.miou;
  if (b.parts) {
    j["mInsIoU"] = b.parts->instance_mean;
    j["mCatIoU"] = b.parts->category_mean;
  }
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t t = 0; t < b.confusion.classes(); ++t) {
    auto row = nlohmann::ordered_json::array();
    for (std::size_t p = 0; p < b.confusion.classes(); ++p) row.push_back(b.confusion.at(t, p));
    rows.push_back(std::move(row));
  }
  j["confusion"] = std::move(rows);
  return j;
}

}  // namespace

EvaluationReport evaluate_classification(const GlobalClassifier& model,
                                         const DatasetManifest& manifest,
                                         const EvalOptions& options) {
  validate_options(options);
  if (manifest.task != Task::Classification) {
    throw Error(ErrorCode::InvalidArgument, "manifest is not a classification manifest");
  }
  if (model.class_count() < manifest.classes.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "model has " + std::to_string(model.class_count()) + " classes, manifest has " +
                    std::to_string(manifest.classes.size()));
  }
  const auto entries = selected_entries(manifest, options);
  const auto densities = density_list(options);
  const std::size_t classes = model.class_count();

  // slots[e][d]
  std::vector<std::vector<EntryPrediction>> slots(entries.size(),
                                                  std::vector<EntryPrediction>(densities.size()));
  std::vector<StageTimings> times(entries.size());
  parallel_for(entries.size(), [&](std::size_t e) {
    const std::size_t index = entries[e];
    const ManifestEntry& entry = manifest.entries[index];
    StageTimings& t = times[e];
    LoadedEntry loaded;
    {
      Stopwatch w(t.other);
      loaded = load_entry(entry, options, false);
    }
    for (std::size_t d = 0; d < densities.size(); ++d) {
      EntryPrediction& pred = slots[e][d];
      pred.index = index;
      pred.cloud = entry.cloud.generic_string();
      pred.truth = entry.id;
      PreparedInput in;
      {
        Stopwatch w(t.other);
        const PointCloud sub =
            select(loaded.cloud, density_indices(loaded.cloud, densities[d]));
        in = prepare(sub, loaded.mesh, options, index);
      }
      Eigen::VectorXd base_feature;
      {
        Stopwatch w(t.inference);
        base_feature = model.global_feature(in.cloud);
      }
      if (!options.run_tta) {
        Stopwatch w(t.aggregation);
        pred.baseline = argmax(model.classify(base_feature).row(0));
        continue;
      }
      AugmentationSet set;
      {
        Stopwatch w(t.augment);
        set = make_augmentations(in.cloud, in.config, in.mesh ? &*in.mesh : nullptr);
      }
      std::vector<Eigen::VectorXd> features;
      features.reserve(set.augmented.size() + 1);
      features.push_back(base_feature);
      {
        Stopwatch w(t.inference);
        for (const auto& c : set.augmented) features.push_back(model.global_feature(c));
      }
      Stopwatch w(t.aggregation);
      pred.baseline = argmax(model.classify(base_feature).row(0));
      pred.tta = classify_from_features(model, features).label;
    }
  });

  EvaluationReport report;
  report.task = Task::Classification;
  report.config = config_to_json(options);
  report.timings = sum_timings(times);
  for (std::size_t d = 0; d < densities.size(); ++d) {
    DensityResult r;
    r.points = densities[d];
    ConfusionMatrix base(classes);
    ConfusionMatrix tta(classes);
    for (std::size_t e = 0; e < entries.size(); ++e) {
      const EntryPrediction& p = slots[e][d];
      base.add(static_cast<std::size_t>(p.truth), static_cast<std::size_t>(p.baseline));
      if (p.tta) tta.add(static_cast<std::size_t>(p.truth), static_cast<std::size_t>(*p.tta));
      r.entries.push_back(p);
    }
    r.baseline = finish_block(std::move(base));
    if (options.run_tta) r.tta = finish_block(std::move(tta));
    report.results.push_back(std::move(r));
  }
  return report;
}

EvaluationReport evaluate_segmentation(const PointSegmenter& model,
                                       const DatasetManifest& manifest,
                                       const EvalOptions& options) {
  validate_options(options);
  if (manifest.task != Task::PartSegmentation) {
    throw Error(ErrorCode::InvalidArgument, "manifest is not a part segmentation manifest");
  }
  const std::size_t parts = manifest.part_count();
  if (model.class_count() < parts) {
    throw Error(ErrorCode::DimensionMismatch,
                "model has " + std::to_string(model.class_count()) + " outputs, manifest has " +
                    std::to_string(parts) + " parts");
  }
  const auto entries = selected_entries(manifest, options);
  const auto densities = density_list(options);

  struct Slot {
    EntryPrediction pred;
    PartInstance base;
    std::optional<PartInstance> tta;
  };
  std::vector<std::vector<Slot>> slots(entries.size(), std::vector<Slot>(densities.size()));
  std::vector<StageTimings> times(entries.size());
  parallel_for(entries.size(), [&](std::size_t e) {
    const std::size_t index = entries[e];
    const ManifestEntry& entry = manifest.entries[index];
    const std::set<int>& cat_parts = manifest.categories.at(static_cast<std::size_t>(entry.id)).parts;
    StageTimings& t = times[e];
    LoadedEntry loaded;
    {
      Stopwatch w(t.other);
      loaded = load_entry(entry, options, true);
    }
    for (std::size_t d = 0; d < densities.size(); ++d) {
      Slot& slot = slots[e][d];
      slot.pred.index = index;
      slot.pred.cloud = entry.cloud.generic_string();
      slot.pred.truth = entry.id;
      PreparedInput in;
      std::vector<int> truth;
      {
        Stopwatch w(t.other);
        const auto keep = density_indices(loaded.cloud, densities[d]);
        truth.reserve(keep.size());
        for (std::size_t i : keep) truth.push_back(loaded.labels[i]);
        in = prepare(select(loaded.cloud, keep), loaded.mesh, options, index);
      }
      LogitMatrix base_logits;
      {
        Stopwatch w(t.inference);
        base_logits = model.point_logits(in.cloud);
      }
      {
        Stopwatch w(t.aggregation);
        slot.base = PartInstance{truth, masked_labels(base_logits, cat_parts), entry.id, cat_parts};
        slot.pred.baseline_iou = instance_iou(slot.base);
      }
      if (!options.run_tta) continue;
      AugmentationSet set;
      {
        Stopwatch w(t.augment);
        set = make_augmentations(in.cloud, in.config, in.mesh ? &*in.mesh : nullptr);
      }
      std::vector<LogitMatrix> logits;
      logits.reserve(set.augmented.size() + 1);
      logits.push_back(std::move(base_logits));
      {
        Stopwatch w(t.inference);
        for (const auto& c : set.augmented) logits.push_back(model.point_logits(c));
      }
      Stopwatch w(t.aggregation);
      const SegmentationResult seg = aggregate_segmentation(set, logits, in.config);
      slot.tta = PartInstance{truth, masked_labels(seg.logits, cat_parts), entry.id, cat_parts};
      slot.pred.tta_iou = instance_iou(*slot.tta);
    }
  });

  EvaluationReport report;
  report.task = Task::PartSegmentation;
  report.config = config_to_json(options);
  report.timings = sum_timings(times);
  for (std::size_t d = 0; d < densities.size(); ++d) {
    DensityResult r;
    r.points = densities[d];
    ConfusionMatrix base(parts);
    ConfusionMatrix tta(parts);
    std::vector<PartInstance> base_inst;
    std::vector<PartInstance> tta_inst;
    for (std::size_t e = 0; e < entries.size(); ++e) {
      const Slot& s = slots[e][d];
      for (std::size_t i = 0; i < s.base.truth.size(); ++i) {
        base.add(static_cast<std::size_t>(s.base.truth[i]),
                 static_cast<std::size_t>(s.base.prediction[i]));
      }
      base_inst.push_back(s.base);
      if (s.tta) {
        for (std::size_t i = 0; i < s.tta->truth.size(); ++i) {
          tta.add(static_cast<std::size_t>(s.tta->truth[i]),
                  static_cast<std::size_t>(s.tta->prediction[i]));
        }
        tta_inst.push_back(*s.tta);
      }
      r.entries.push_back(s.pred);
    }
    r.baseline = finish_block(std::move(base));
    r.baseline.parts = part_iou(base_inst);
    if (options.run_tta) {
      r.tta = finish_block(std::move(tta));
      r.tta->parts = part_iou(tta_inst);
    }
    report.results.push_back(std::move(r));
  }
  return report;
}

nlohmann::ordered_json config_to_json(const EvalOptions& options) {
  const TtaConfig& c = options.tta;
  nlohmann::ordered_json j;
  j["tta"] = options.run_tta ? std::string(to_string(c.method)) : std::string("none");
  j["samples"] = c.samples_m;
  j["feature"] = std::string(to_string(c.feature_mode));
  j["aggregation"] = std::string(to_string(c.agg_mode));
  j["k"] = c.neighbor_k;
  j["logit_weight"] = c.logit_weight;
  j["aggregate_probabilities"] = c.aggregate_probabilities;
  j["seed"] = c.master_seed;
  j["sigma"] = c.jitter.sigma;
  j["scale_r"] = c.upsample.scale_r;
  if (c.target_count) {
    j["target"] = *c.target_count;
  } else {
    j["target"] = "same";
  }
  j["densities"] = options.densities;
  j["split"] = options.split;
  return j;
}

nlohmann::ordered_json report_to_json(const EvaluationReport& report) {
  nlohmann::ordered_json j;
  const bool seg = report.task == Task::PartSegmentation;
  j["task"] = seg ? "part_segmentation" : "classification";
  j["config"] = report.config;
  auto results = nlohmann::ordered_json::array();
  for (const auto& r : report.results) {
    nlohmann::ordered_json row;
    if (r.points) {
      row["points"] = *r.points;
    } else {
      row["points"] = nullptr;
    }
    row["baseline"] = block_to_json(r.baseline);
    if (r.tta) row["tta"] = block_to_json(*r.tta);
    auto entries = nlohmann::ordered_json::array();
    for (const auto& p : r.entries) {
      nlohmann::ordered_json e;
      e["index"] = p.index;
      e["cloud"] = p.cloud;
      if (seg) {
        e["category"] = p.truth;
        e["baseline_iou"] = p.baseline_iou;
        if (p.tta_iou) e["tta_iou"] = *p.tta_iou;
      } else {
        e["truth"] = p.truth;
        e["baseline"] = p.baseline;
        if (p.tta) e["tta"] = *p.tta;
      }
      entries.push_back(std::move(e));
    }
    row["entries"] = std::move(entries);
    results.push_back(std::move(row));
  }
  j["results"] = std::move(results);
  nlohmann::ordered_json t;
  t["augment"] = report.timings.augment;
  t["inference"] = report.timings.inference;
  t["aggregation"] = report.timings.aggregation;
  t["other"] = report.timings.other;
  j["timings"] = std::move(t);
  return j;
}

}  // namespace pctta
