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

#include <Eigen/Core>
#include <cstddef>
#include <vector>

#include "pctta/augmentation.hpp"
#include "pctta/predictor.hpp"
#include "pctta/tta_config.hpp"

namespace pctta {

struct ClassificationResult {
  int label = 0;
  LogitMatrix logits;                   // 1 x C
  std::vector<LogitMatrix> per_cloud;   // logits of x_0 .. x_M, diagnostics only
};

struct SegmentationResult {
  std::vector<int> labels;
  LogitMatrix logits;                // n x C aggregated
  std::vector<std::size_t> counts;   // rows aggregated per point, >= 1
};

/// Index of the largest entry; ties go to the lowest index.
int argmax(const Eigen::Ref<const Eigen::RowVectorXd>& row);
std::vector<int> row_argmax(const LogitMatrix& logits);

/// Averages the global features of x_0..x_M (in index order) and applies
/// the classifier head to the mean.
ClassificationResult classify_tta(const GlobalClassifier& model, const AugmentationSet& set);

/// The aggregation half of classify_tta: features[0] belongs to x_0.
ClassificationResult classify_from_features(const GlobalClassifier& model,
                                            const std::vector<Eigen::VectorXd>& features);

/// Matching space for point correspondences: xyz, optionally
/// followed by logit_weight * logits.
RowMatrixXd build_correspondence_features(const PointCloud& cloud, const LogitMatrix& logits,
                                          const TtaConfig& config);

/// Elementwise max or arithmetic mean over rows.
Eigen::RowVectorXd aggregate_logits(const std::vector<Eigen::RowVectorXd>& rows,
                                    AggregationMode mode);

/// Row-wise softmax, used when config.aggregate_probabilities is set.
LogitMatrix softmax_rows(const LogitMatrix& logits);

/// Per-point aggregation: each point of x_0 pools its own row with the rows
/// of its neighbor_k nearest points in each augmented cloud, matched in
/// correspondence-feature space.
SegmentationResult segment_tta(const PointSegmenter& model, const AugmentationSet& set,
                               const TtaConfig& config);

/// The aggregation half of segment_tta, given per-point logits of x_0..x_M.
SegmentationResult aggregate_segmentation(const AugmentationSet& set,
                                          const std::vector<LogitMatrix>& logits,
                                          const TtaConfig& config);

}  // namespace pctta
