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
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "pctta/point_cloud.hpp"

namespace pctta {

struct JitterParams {
  double sigma = 0.01;  // in normalized-cloud units
  std::uint64_t rng_seed = 0;
};

/// Parameters of the seed / project / filter / resample upsampler.
struct UpsampleParams {
  double scale_r = 4.0;
  /// Grid cell edge. Unset picks bounding_diagonal / sqrt(scale_r * n).
  std::optional<double> voxel_edge;
  /// Max estimated center-to-surface distance for a seed. Unset uses the
  /// resolved voxel edge.
  std::optional<double> seed_band;
  std::size_t k_triangle = 3;
  std::size_t k_plane = 12;
  std::size_t k_bias = 8;
  double outlier_factor = 1.5;
  bool include_original = true;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct SeedProjection {
  Vec3 seed;
  Vec3 projected;
  Vec3 direction;
  double distance = 0.0;
  double bias = 0.0;
};

enum class AugmentationMethod { Jitter, MeshSurface, Upsample, IdentityCopy };

std::string_view to_string(AugmentationMethod method);
/// Accepts "jitter", "mesh", "upsample", "copy".
AugmentationMethod parse_augmentation_method(std::string_view name);

struct AugmentationSet {
  PointCloud original;
  std::vector<PointCloud> augmented;
  AugmentationMethod method = AugmentationMethod::IdentityCopy;
  std::vector<std::uint64_t> seeds;

  std::size_t size() const { return augmented.size(); }
};

struct TtaConfig;

/// x + sigma * z with z iid standard normal per coordinate.
PointCloud jitter(const PointCloud& cloud, const JitterParams& params);

/// Draws m mesh vertices, without replacement when m <= vertex count and
/// with replacement otherwise. Area-weighted vertex normals are attached
/// when the mesh has faces.
PointCloud sample_mesh_vertices(const TriangleMesh& mesh, std::size_t m,
                                std::uint64_t rng_seed);

double resolve_voxel_edge(const PointCloud& cloud, const UpsampleParams& params);
double resolve_seed_band(const PointCloud& cloud, const UpsampleParams& params);

/// Voxel centers (over the bounding box padded by one edge) whose distance
/// to the triangle spanned by their nearest cloud points is within the band.
/// With k_triangle > 3, the minimum over all triangles of the k_triangle
/// nearest points is used.
std::vector<Vec3> sample_seeds(const PointCloud& cloud, const UpsampleParams& params);

/// Moves each seed onto the least-squares plane of its k_plane nearest cloud
/// points. Seeds with degenerate neighborhoods are dropped.
std::vector<SeedProjection> project_seeds(const PointCloud& cloud,
                                          const std::vector<Vec3>& seeds,
                                          const UpsampleParams& params);

struct OutlierFilterResult {
  std::vector<SeedProjection> kept;
  double mean_bias = 0.0;
  /// Set when every projection failed the test and all were kept instead.
  bool kept_all = false;
};

/// Fills each projection's bias (mean distance to its k_bias nearest other
/// projections) and keeps those with bias <= outlier_factor * mean bias.
OutlierFilterResult remove_outliers(std::vector<SeedProjection> projections,
                                    const UpsampleParams& params);

/// The dense set y: filtered projections, followed by the input points when
/// include_original is set.
Points upsample_dense(const PointCloud& cloud, const UpsampleParams& params);

/// Farthest-point resample of the dense set to target_count points
/// (default floor(scale_r * n)), starting from a point chosen by rng_seed.
PointCloud upsample(const PointCloud& cloud, const UpsampleParams& params,
                    std::optional<std::size_t> target_count = std::nullopt);

/// Produces config.samples_m augmented clouds of x_0. Each cloud k uses
/// seed derive_seed(master_seed, k). `mesh` must be in the cloud's frame and
/// is required for the mesh method.
AugmentationSet make_augmentations(const PointCloud& cloud, const TtaConfig& config,
                                   const TriangleMesh* mesh = nullptr);

}  // namespace pctta
