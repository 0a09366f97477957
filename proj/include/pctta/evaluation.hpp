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

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pctta/io.hpp"
#include "pctta/metrics.hpp"
#include "pctta/predictor.hpp"
#include "pctta/tta_config.hpp"

namespace pctta {

struct EvalOptions {
  TtaConfig tta;
  /// False runs the baseline only.
  bool run_tta = true;
  /// Point counts to subsample each cloud to by FPS; empty keeps the input.
  std::vector<std::size_t> densities;
  /// Manifest split to evaluate; every entry when no entry carries a split.
  std::string split = "test";
};

struct EntryPrediction {
  std::size_t index = 0;  // position in the manifest
  std::string cloud;
  int truth = 0;          // class id, or category id for segmentation
  int baseline = 0;       // classification only
  std::optional<int> tta;
  double baseline_iou = 0.0;  // segmentation only
  std::optional<double> tta_iou;
};

struct MetricBlock {
  ConfusionMatrix confusion{1};
  double oacc = 0.0;
  double macc = 0.0;
  double miou = 0.0;
  std::optional<PartIouSummary> parts;  // segmentation only
};

struct DensityResult {
  std::optional<std::size_t> points;  // unset when the input is not resampled
  MetricBlock baseline;
  std::optional<MetricBlock> tta;
  std::vector<EntryPrediction> entries;
};

/// Seconds summed over entries, so they exceed wall time when entries run
/// concurrently.
struct StageTimings {
  double augment = 0.0;
  double inference = 0.0;
  double aggregation = 0.0;
  double other = 0.0;
};

struct EvaluationReport {
  Task task = Task::Classification;
  nlohmann::ordered_json config;
  std::vector<DensityResult> results;
  StageTimings timings;
};

/// Entries run concurrently; entry i uses seed derive_seed(master_seed, i).
/// Clouds are normalized to the unit sphere before inference.
EvaluationReport evaluate_classification(const GlobalClassifier& model,
                                         const DatasetManifest& manifest,
                                         const EvalOptions& options);

/// Predictions are restricted to the parts of the entry's category.
EvaluationReport evaluate_segmentation(const PointSegmenter& model,
                                       const DatasetManifest& manifest,
                                       const EvalOptions& options);

nlohmann::ordered_json config_to_json(const EvalOptions& options);
nlohmann::ordered_json report_to_json(const EvaluationReport& report);

}  // namespace pctta
