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

#include "pctta/aggregation.hpp"

#include <algorithm>
#include <string>

#include "pctta/error.hpp"
#include "pctta/parallel.hpp"
#include "pctta/spatial_index.hpp"

namespace pctta {

std::string_view to_string(FeatureMode mode) {
  return mode == FeatureMode::XyzOnly ? "xyz" : "xyz+logit";
}

std::string_view to_string(AggregationMode mode) {
  return mode == AggregationMode::Max ? "max" : "avg";
}

FeatureMode parse_feature_mode(std::string_view name) {
  if (name == "xyz") return FeatureMode::XyzOnly;
  if (name == "xyz+logit") return FeatureMode::XyzPlusLogit;
  throw Error(ErrorCode::InvalidArgument, "unknown feature mode '" + std::string(name) + "'");
}

AggregationMode parse_aggregation_mode(std::string_view name) {
  if (name == "max") return AggregationMode::Max;
  if (name == "avg") return AggregationMode::Avg;
  throw Error(ErrorCode::InvalidArgument,
              "unknown aggregation mode '" + std::string(name) + "'");
}

int argmax(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  if (row.size() == 0) throw Error(ErrorCode::EmptyInput, "argmax of an empty row");
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < row.size(); ++c) {
    if (row(c) > row(best)) best = c;
  }
  return static_cast<int>(best);
}

std::vector<int> row_argmax(const LogitMatrix& logits) {
  std::vector<int> labels(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    labels[static_cast<std::size_t>(i)] = argmax(logits.row(i));
  }
  return labels;
}

ClassificationResult classify_tta(const GlobalClassifier& model, const AugmentationSet& set) {
  const std::size_t clouds = set.augmented.size() + 1;
  std::vector<Eigen::VectorXd> features(clouds);
  parallel_for(clouds, [&](std::size_t k) {
    features[k] = model.global_feature(k == 0 ? set.original : set.augmented[k - 1]);
  });
  return classify_from_features(model, features);
}

ClassificationResult classify_from_features(const GlobalClassifier& model,
                                            const std::vector<Eigen::VectorXd>& features) {
  if (features.empty()) throw Error(ErrorCode::EmptyInput, "no features to aggregate");
  const std::size_t clouds = features.size();
  ClassificationResult result;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(features[0].size());
  for (const auto& f : features) {
    if (f.size() != mean.size()) {
      throw Error(ErrorCode::DimensionMismatch, "global features differ in size");
    }
    mean += f;
  }
  mean /= static_cast<double>(clouds);
  result.logits = model.classify(mean);
  result.label = argmax(result.logits.row(0));
  result.per_cloud.reserve(clouds);
  for (const auto& f : features) result.per_cloud.push_back(model.classify(f));
  return result;
}

RowMatrixXd build_correspondence_features(const PointCloud& cloud, const LogitMatrix& logits,
                                          const TtaConfig& config) {
  if (static_cast<std::size_t>(logits.rows()) != cloud.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "logit rows (" + std::to_string(logits.rows()) + ") != points (" +
                    std::to_string(cloud.size()) + ")");
  }
  if (config.feature_mode == FeatureMode::XyzOnly) return cloud.points;
  RowMatrixXd feat(cloud.points.rows(), 3 + logits.cols());
  feat.leftCols(3) = cloud.points;
  feat.rightCols(logits.cols()) = config.logit_weight * logits;
  return feat;
}

Eigen::RowVectorXd aggregate_logits(const std::vector<Eigen::RowVectorXd>& rows,
                                    AggregationMode mode) {
  if (rows.empty()) throw Error(ErrorCode::EmptyInput, "nothing to aggregate");
  Eigen::RowVectorXd acc = rows.front();
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != acc.size()) {
      throw Error(ErrorCode::DimensionMismatch, "logit rows differ in length");
    }
    if (mode == AggregationMode::Max) {
      acc = acc.cwiseMax(rows[i]);
    } else {
      acc += rows[i];
    }
  }
  if (mode == AggregationMode::Avg) acc /= static_cast<double>(rows.size());
  return acc;
}

LogitMatrix softmax_rows(const LogitMatrix& logits) {
  LogitMatrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const Eigen::RowVectorXd shifted = logits.row(i).array() - logits.row(i).maxCoeff();
    const Eigen::RowVectorXd e = shifted.array().exp();
    out.row(i) = e / e.sum();
  }
  return out;
}

SegmentationResult segment_tta(const PointSegmenter& model, const AugmentationSet& set,
                               const TtaConfig& config) {
  const std::size_t clouds = set.augmented.size() + 1;
  auto cloud_at = [&](std::size_t k) -> const PointCloud& {
    return k == 0 ? set.original : set.augmented[k - 1];
  };

  std::vector<LogitMatrix> logits(clouds);
  parallel_for(clouds, [&](std::size_t k) { logits[k] = model.point_logits(cloud_at(k)); });
  return aggregate_segmentation(set, logits, config);
}

SegmentationResult aggregate_segmentation(const AugmentationSet& set,
                                          const std::vector<LogitMatrix>& logits,
                                          const TtaConfig& config) {
  config.validate();
  const std::size_t clouds = set.augmented.size() + 1;
  if (logits.size() != clouds) {
    throw Error(ErrorCode::DimensionMismatch, "need one logit matrix per cloud");
  }
  auto cloud_at = [&](std::size_t k) -> const PointCloud& {
    return k == 0 ? set.original : set.augmented[k - 1];
  };
  for (std::size_t k = 0; k < clouds; ++k) {
    if (static_cast<std::size_t>(logits[k].rows()) != cloud_at(k).size()) {
      throw Error(ErrorCode::DimensionMismatch, "model returned the wrong logit row count");
    }
  }
  // Aggregation happens on these rows; matching always uses raw logits.
  std::vector<LogitMatrix> pooled(clouds);
  for (std::size_t k = 0; k < clouds; ++k) {
    pooled[k] = config.aggregate_probabilities ? softmax_rows(logits[k]) : logits[k];
  }

  const RowMatrixXd query = build_correspondence_features(set.original, logits[0], config);
  std::vector<SpatialIndex> indices;
  indices.reserve(clouds - 1);
  for (std::size_t k = 1; k < clouds; ++k) {
    indices.emplace_back(build_correspondence_features(cloud_at(k), logits[k], config));
  }

  const std::size_t n = set.original.size();
  const Eigen::Index classes = logits[0].cols();
  SegmentationResult result;
  result.logits.resize(static_cast<Eigen::Index>(n), classes);
  result.counts.assign(n, 1);
  parallel_for(n, [&](std::size_t p) {
    const auto row = static_cast<Eigen::Index>(p);
    Eigen::RowVectorXd acc = pooled[0].row(row);
    std::size_t count = 1;
    for (std::size_t k = 1; k < clouds; ++k) {
      for (const auto& nb : indices[k - 1].knn(query.row(row), config.neighbor_k)) {
        const auto q = pooled[k].row(static_cast<Eigen::Index>(nb.index));
        if (config.agg_mode == AggregationMode::Max) {
          acc = acc.cwiseMax(q);
        } else {
          acc += q;
        }
        ++count;
      }
    }
    if (config.agg_mode == AggregationMode::Avg) acc /= static_cast<double>(count);
    result.logits.row(row) = acc;
    result.counts[p] = count;
  });
  result.labels = row_argmax(result.logits);
  return result;
}

}  // namespace pctta
