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

#include "pctta/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <unordered_set>

#include "pctta/error.hpp"
#include "pctta/geometry.hpp"
#include "pctta/parallel.hpp"
#include "pctta/rng.hpp"
#include "pctta/spatial_index.hpp"
#include "pctta/tta_config.hpp"

namespace pctta {

std::string_view to_string(AugmentationMethod method) {
  switch (method) {
    case AugmentationMethod::Jitter: return "jitter";
    case AugmentationMethod::MeshSurface: return "mesh";
    case AugmentationMethod::Upsample: return "upsample";
    case AugmentationMethod::IdentityCopy: return "copy";
  }
  return "unknown";
}

AugmentationMethod parse_augmentation_method(std::string_view name) {
  if (name == "jitter") return AugmentationMethod::Jitter;
  if (name == "mesh") return AugmentationMethod::MeshSurface;
  if (name == "upsample") return AugmentationMethod::Upsample;
  if (name == "copy") return AugmentationMethod::IdentityCopy;
  throw Error(ErrorCode::InvalidArgument,
              "unknown augmentation method '" + std::string(name) + "'");
}

void UpsampleParams::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::InvalidArgument, what);
  };
  if (!(scale_r >= 1.0)) fail("scale_r must be >= 1");
  if (voxel_edge && !(*voxel_edge > 0.0)) {
    throw Error(ErrorCode::InvalidEdge, "voxel_edge must be positive");
  }
  if (seed_band && !(*seed_band >= 0.0)) fail("seed_band must be nonnegative");
  if (k_triangle < 3) fail("k_triangle must be >= 3");
  if (k_plane < 3) fail("k_plane must be >= 3");
  if (k_bias < 1) fail("k_bias must be >= 1");
  if (!(outlier_factor > 0.0)) fail("outlier_factor must be positive");
}

PointCloud jitter(const PointCloud& cloud, const JitterParams& params) {
  if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "cannot jitter an empty cloud");
  if (!(params.sigma >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "jitter sigma must be nonnegative");
  }
  PointCloud out = cloud;
  if (params.sigma == 0.0) return out;
  Rng rng(params.rng_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < out.points.rows(); ++i) {
    for (Eigen::Index a = 0; a < 3; ++a) {
      out.points(i, a) += params.sigma * normal(rng);
    }
  }
  return out;
}

PointCloud sample_mesh_vertices(const TriangleMesh& mesh, std::size_t m,
                                std::uint64_t rng_seed) {
  const std::size_t nv = mesh.vertex_count();
  if (nv == 0) throw Error(ErrorCode::EmptyMesh, "mesh has no vertices");
  if (m == 0) throw Error(ErrorCode::InvalidArgument, "sample count must be positive");
  Rng rng(rng_seed);
  std::vector<std::size_t> picks;
  picks.reserve(m);
  if (m <= nv) {
    std::vector<std::size_t> all(nv);
    std::iota(all.begin(), all.end(), std::size_t{0});
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < m; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, nv - 1);
      std::swap(all[i], all[pick(rng)]);
    }
    picks.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(m));
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, nv - 1);
    for (std::size_t i = 0; i < m; ++i) picks.push_back(pick(rng));
  }
  PointCloud source(mesh.vertices);
  if (!mesh.faces.empty()) source.normals = vertex_normals(mesh);
  return select(source, picks);
}

double resolve_voxel_edge(const PointCloud& cloud, const UpsampleParams& params) {
  if (params.voxel_edge) return *params.voxel_edge;
  if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "empty cloud");
  const double diag = Box::bounding(cloud.points).diagonal();
  const double target = std::max(1.0, params.scale_r * static_cast<double>(cloud.size()));
  const double edge = diag / std::sqrt(target);
  if (!(edge > 0.0)) {
    throw Error(ErrorCode::InvalidEdge, "cannot derive a voxel edge from a point-like cloud");
  }
  return edge;
}

double resolve_seed_band(const PointCloud& cloud, const UpsampleParams& params) {
  return params.seed_band ? *params.seed_band : resolve_voxel_edge(cloud, params);
}

std::vector<Vec3> sample_seeds(const PointCloud& cloud, const UpsampleParams& params) {
  params.validate();
  if (cloud.size() < params.k_triangle) {
    throw Error(ErrorCode::TooFewPoints,
                "seed sampling needs at least " + std::to_string(params.k_triangle) +
                    " points");
  }
  const double edge = resolve_voxel_edge(cloud, params);
  const double band = resolve_seed_band(cloud, params);
  const SpatialIndex index = build_spatial_index(cloud);
  const auto centers = voxel_grid_centers(Box::bounding(cloud.points).padded(edge), edge);

  std::vector<Vec3> seeds;
  for (const Vec3& c : centers) {
    const auto nn = index.knn(c, params.k_triangle);
    double best = std::numeric_limits<double>::infinity();
    const std::size_t k = nn.size();
    for (std::size_t a = 0; a + 2 < k && best > band; ++a) {
      for (std::size_t b = a + 1; b + 1 < k && best > band; ++b) {
        for (std::size_t d = b + 1; d < k && best > band; ++d) {
          best = std::min(best, point_triangle_distance<double>(
                                    c, cloud.point(nn[a].index), cloud.point(nn[b].index),
                                    cloud.point(nn[d].index)));
        }
      }
    }
    if (best <= band) seeds.push_back(c);
  }
  return seeds;
}

std::vector<SeedProjection> project_seeds(const PointCloud& cloud,
                                          const std::vector<Vec3>& seeds,
                                          const UpsampleParams& params) {
  params.validate();
  if (cloud.size() < params.k_plane) {
    throw Error(ErrorCode::TooFewPoints,
                "projection needs at least " + std::to_string(params.k_plane) + " points");
  }
  const SpatialIndex index = build_spatial_index(cloud);
  std::vector<SeedProjection> out;
  out.reserve(seeds.size());
  Points hood(static_cast<Eigen::Index>(params.k_plane), 3);
  for (const Vec3& c : seeds) {
    const auto nn = index.knn(c, params.k_plane);
    for (std::size_t j = 0; j < nn.size(); ++j) {
      hood.row(static_cast<Eigen::Index>(j)) =
          cloud.points.row(static_cast<Eigen::Index>(nn[j].index));
    }
    Plane plane;
    try {
      plane = fit_plane(hood);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::DegenerateNeighborhood) continue;
      throw;
    }
    SeedProjection p;
    p.seed = c;
    p.direction = plane.normal;
    if (plane.signed_distance(c) < 0.0) p.direction = -p.direction;
    p.distance = -(c - plane.centroid).dot(p.direction);
    p.projected = c + p.distance * p.direction;
    out.push_back(p);
  }
  return out;
}

OutlierFilterResult remove_outliers(std::vector<SeedProjection> projections,
                                    const UpsampleParams& params) {
  params.validate();
  OutlierFilterResult result;
  const std::size_t count = projections.size();
  if (count == 0) return result;
  if (count == 1) {
    projections[0].bias = 0.0;
    result.kept = std::move(projections);
    return result;
  }
  RowMatrixXd pts(static_cast<Eigen::Index>(count), 3);
  for (std::size_t i = 0; i < count; ++i) {
    pts.row(static_cast<Eigen::Index>(i)) = projections[i].projected.transpose();
  }
  const SpatialIndex index(pts);
  const std::size_t k = std::min(params.k_bias, count - 1);
  double total = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const auto nn = index.knn(projections[i].projected, k + 1);
    double sum = 0.0;
    std::size_t used = 0;
    for (const auto& nb : nn) {
      if (nb.index == i || used == k) continue;
      sum += nb.distance;
      ++used;
    }
    projections[i].bias = sum / static_cast<double>(used);
    total += projections[i].bias;
  }
  result.mean_bias = total / static_cast<double>(count);
  const double threshold = params.outlier_factor * result.mean_bias;
  for (const auto& p : projections) {
    if (p.bias <= threshold) result.kept.push_back(p);
  }
  if (result.kept.empty()) {
    result.kept = std::move(projections);
    result.kept_all = true;
  }
  return result;
}

Points upsample_dense(const PointCloud& cloud, const UpsampleParams& params) {
  params.validate();
  const std::size_t need = std::max(params.k_triangle, params.k_plane);
  if (cloud.size() < need) {
    throw Error(ErrorCode::TooFewPoints,
                "upsampling needs at least " + std::to_string(need) + " points");
  }
  const auto seeds = sample_seeds(cloud, params);
  auto projections = project_seeds(cloud, seeds, params);
  std::vector<SeedProjection> kept;
  if (!projections.empty()) kept = remove_outliers(std::move(projections), params).kept;

  const auto extra = params.include_original ? cloud.points.rows() : Eigen::Index{0};
  Points dense(static_cast<Eigen::Index>(kept.size()) + extra, 3);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    dense.row(static_cast<Eigen::Index>(i)) = kept[i].projected.transpose();
  }
  if (extra > 0) dense.bottomRows(extra) = cloud.points;
  return dense;
}

namespace {

std::size_t default_target(const PointCloud& cloud, const UpsampleParams& params) {
  return static_cast<std::size_t>(
      std::floor(params.scale_r * static_cast<double>(cloud.size())));
}

void require_density(const Points& dense, std::size_t target) {
  if (static_cast<std::size_t>(dense.rows()) < target) {
    throw Error(ErrorCode::InsufficientDensity,
                "dense set has " + std::to_string(dense.rows()) + " points but " +
                    std::to_string(target) +
                    " were requested; loosen voxel_edge or seed_band");
  }
  if (target == 0) throw Error(ErrorCode::InvalidArgument, "target count must be positive");
}

std::size_t draw_start(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace

PointCloud upsample(const PointCloud& cloud, const UpsampleParams& params,
                    std::optional<std::size_t> target_count) {
  const Points dense = upsample_dense(cloud, params);
  const std::size_t target = target_count.value_or(default_target(cloud, params));
  require_density(dense, target);
  const std::size_t start =
      draw_start(params.rng_seed, static_cast<std::size_t>(dense.rows()));
  PointCloud y(dense);
  return select(y, farthest_point_sample(dense, target, start));
}

void TtaConfig::validate() const {
  if (neighbor_k < 1) throw Error(ErrorCode::InvalidArgument, "neighbor_k must be >= 1");
  if (!(logit_weight >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "logit_weight must be nonnegative");
  }
  if (!(jitter.sigma >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "jitter sigma must be nonnegative");
  }
  if (target_count && *target_count == 0) {
    throw Error(ErrorCode::InvalidArgument, "target count must be positive");
  }
  upsample.validate();
}

AugmentationSet make_augmentations(const PointCloud& cloud, const TtaConfig& config,
                                   const TriangleMesh* mesh) {
  config.validate();
  if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "cannot augment an empty cloud");
  AugmentationSet set;
  set.original = cloud;
  set.method = config.method;
  const std::size_t m = config.samples_m;
  set.seeds.resize(m);
  for (std::size_t k = 0; k < m; ++k) set.seeds[k] = derive_seed(config.master_seed, k + 1);
  set.augmented.resize(m);
  if (m == 0) return set;

  const std::size_t target = config.target_count.value_or(cloud.size());
  switch (config.method) {
    case AugmentationMethod::IdentityCopy:
      for (auto& c : set.augmented) c = cloud;
      break;
    case AugmentationMethod::Jitter:
      parallel_for(m, [&](std::size_t k) {
        JitterParams p = config.jitter;
        p.rng_seed = set.seeds[k];
        set.augmented[k] = jitter(cloud, p);
      });
      break;
    case AugmentationMethod::MeshSurface:
      if (mesh == nullptr) {
        throw Error(ErrorCode::InvalidArgument, "mesh augmentation requires a mesh");
      }
      parallel_for(m, [&](std::size_t k) {
        set.augmented[k] = sample_mesh_vertices(*mesh, target, set.seeds[k]);
      });
      break;
    case AugmentationMethod::Upsample: {
      // The dense set does not depend on the seed; only the resampling start
      // does, so it is built once and shared by all k.
      const Points dense = upsample_dense(cloud, config.upsample);
      require_density(dense, target);
      const auto n = static_cast<std::size_t>(dense.rows());
      std::vector<std::size_t> starts(m);
      std::unordered_set<std::size_t> used;
      for (std::size_t k = 0; k < m; ++k) {
        std::size_t s = draw_start(set.seeds[k], n);
        if (used.size() < n) {
          while (used.count(s)) s = (s + 1) % n;
        }
        used.insert(s);
        starts[k] = s;
      }
      const PointCloud y(dense);
      parallel_for(m, [&](std::size_t k) {
        set.augmented[k] = select(y, farthest_point_sample(dense, target, starts[k]));
      });
      break;
    }
  }
  return set;
}

}  // namespace pctta
