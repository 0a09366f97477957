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
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "pctta/point_cloud.hpp"

namespace pctta {

/// n x C per-point logits, or 1 x C for a whole cloud.
using LogitMatrix = Eigen::MatrixXd;

/// A cloud-level predictor split into a global feature extractor and a
/// classifier head on that feature.
class GlobalClassifier {
 public:
  virtual ~GlobalClassifier() = default;
  virtual std::size_t class_count() const = 0;
  virtual std::size_t feature_dim() const = 0;
  virtual Eigen::VectorXd global_feature(const PointCloud& cloud) const = 0;
  /// 1 x C logits for a global feature.
  virtual LogitMatrix classify(const Eigen::VectorXd& feature) const = 0;
};

/// A predictor emitting one logit row per input point.
class PointSegmenter {
 public:
  virtual ~PointSegmenter() = default;
  virtual std::size_t class_count() const = 0;
  virtual LogitMatrix point_logits(const PointCloud& cloud) const = 0;
};

struct DenseLayer {
  enum class Role : std::uint32_t { Point = 0, ClassHead = 1, SegHead = 2 };

  Role role = Role::Point;
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out

  Eigen::Index in_dim() const { return weight.cols(); }
  Eigen::Index out_dim() const { return weight.rows(); }
  friend bool operator==(const DenseLayer&, const DenseLayer&);
};

/// PointNet-shaped reference network: shared per-point layers with ReLU,
/// max-pool to a global feature, an affine class head, and a segmentation
/// head over [local feature | global feature]. The local feature is the
/// output of the second-to-last point layer (raw xyz with a single point
/// layer).
///
/// Weights are double in memory but always float-representable, so a
/// save/load round trip is exact.
class MlpPredictor final : public GlobalClassifier, public PointSegmenter {
 public:
  MlpPredictor() = default;
  /// Validates the dimension chain; throws DimensionMismatch naming the
  /// offending layer.
  MlpPredictor(std::vector<DenseLayer> point_layers, DenseLayer class_head,
               std::vector<DenseLayer> seg_head);

  /// Uniform [-0.1, 0.1] weights and biases from a SplitMix64 stream.
  static MlpPredictor random(std::uint64_t seed, std::size_t class_count,
                             std::vector<std::size_t> point_dims = {64, 128, 256},
                             std::vector<std::size_t> seg_hidden = {128});

  std::size_t class_count() const override;
  std::size_t feature_dim() const override;
  std::size_t local_dim() const;
  bool has_seg_head() const { return !seg_head_.empty(); }

  Eigen::VectorXd global_feature(const PointCloud& cloud) const override;
  LogitMatrix classify(const Eigen::VectorXd& feature) const override;
  LogitMatrix point_logits(const PointCloud& cloud) const override;

  const std::vector<DenseLayer>& point_layers() const { return point_layers_; }
  const DenseLayer& class_head() const { return class_head_; }
  const std::vector<DenseLayer>& seg_head() const { return seg_head_; }

  /// All layers in file order: point layers, class head, seg head.
  std::vector<DenseLayer> layers() const;

  friend bool operator==(const MlpPredictor&, const MlpPredictor&);

 private:
  struct Activations {
    Eigen::MatrixXd local;   // n x local_dim
    Eigen::MatrixXd output;  // n x feature_dim
  };
  Activations run_point_layers(const PointCloud& cloud) const;

  std::vector<DenseLayer> point_layers_;
  DenseLayer class_head_;
  std::vector<DenseLayer> seg_head_;
};

/// Weights file: "PCTTAW1", u32 layer count, then per layer u32 role
/// (0 point, 1 class head, 2 seg head), u32 rows, u32 cols, rows*cols f32
/// row-major weights, rows f32 biases. Little-endian throughout.
std::vector<std::uint8_t> serialize_predictor(const MlpPredictor& model);
MlpPredictor parse_predictor(const std::vector<std::uint8_t>& bytes);
void save_predictor(const MlpPredictor& model, const std::filesystem::path& path);
MlpPredictor load_predictor(const std::filesystem::path& path);

/// True if the file starts with the weights magic.
bool is_weights_file(const std::filesystem::path& path);

Eigen::VectorXd extract_global_feature(const MlpPredictor& model, const PointCloud& cloud);
LogitMatrix classify_logits(const GlobalClassifier& model, const Eigen::VectorXd& feature);
LogitMatrix classify_logits(const GlobalClassifier& model, const PointCloud& cloud);
LogitMatrix per_point_logits(const MlpPredictor& model, const PointCloud& cloud);

/// Training-free nearest-centroid classifier over radial histograms.
class CentroidClassifier final : public GlobalClassifier {
 public:
  CentroidClassifier() = default;
  CentroidClassifier(std::size_t bins, Eigen::MatrixXd centroids);

  std::size_t class_count() const override {
    return static_cast<std::size_t>(centroids_.rows());
  }
  std::size_t feature_dim() const override { return bins_; }
  std::size_t bins() const { return bins_; }
  const Eigen::MatrixXd& centroids() const { return centroids_; }

  /// The radial histogram descriptor.
  Eigen::VectorXd global_feature(const PointCloud& cloud) const override;
  /// Negative L2 distance to each class centroid.
  LogitMatrix classify(const Eigen::VectorXd& feature) const override;

 private:
  std::size_t bins_ = 16;
  Eigen::MatrixXd centroids_;  // C x bins
};

/// Histogram of point radii after unit-sphere normalization, bins over
/// [0, 1], normalized to sum 1.
Eigen::VectorXd radial_histogram(const PointCloud& cloud, std::size_t bins);

/// Per-class mean descriptor. Labels must cover 0..class_count-1
/// (class_count defaults to max label + 1).
CentroidClassifier fit_centroid_classifier(
    const std::vector<std::pair<PointCloud, int>>& dataset, std::size_t bins = 16,
    std::size_t class_count = 0);

void save_centroid_classifier(const CentroidClassifier& model,
                              const std::filesystem::path& path);
CentroidClassifier load_centroid_classifier(const std::filesystem::path& path);

}  // namespace pctta
