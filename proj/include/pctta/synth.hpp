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
#include <filesystem>
#include <string>
#include <vector>

#include "pctta/io.hpp"
#include "pctta/point_cloud.hpp"

namespace pctta {

enum class ShapeClass { Sphere, Cube, Cylinder };

ShapeClass parse_shape_class(std::string_view name);
std::string_view to_string(ShapeClass shape);

/// Part ids per shape: sphere {0 upper, 1 lower}, cube {2 top/bottom,
/// 3 sides}, cylinder {4 caps, 5 side}.
std::vector<int> shape_parts(ShapeClass shape);

struct ShapeInstance {
  ShapeClass shape = ShapeClass::Sphere;
  /// Sphere: radius in x. Cube: half extents. Cylinder: radius in x,
  /// half height in z.
  Vec3 dims = Vec3::Ones();
};

struct SampledShape {
  PointCloud cloud;
  std::vector<int> part_labels;
};

/// Area-uniform surface samples with iid Gaussian coordinate noise. Part
/// labels come from the noise-free sample.
SampledShape sample_shape(const ShapeInstance& shape, std::size_t points, double noise,
                          std::uint64_t seed);

/// Triangulated surface of the instance.
TriangleMesh shape_mesh(const ShapeInstance& shape);

/// Instance dimensions drawn around the canonical shape.
ShapeInstance random_instance(ShapeClass shape, std::uint64_t seed);

struct SynthOptions {
  std::vector<ShapeClass> classes = {ShapeClass::Sphere, ShapeClass::Cube, ShapeClass::Cylinder};
  std::size_t per_class = 60;
  std::size_t points = 2048;
  double noise = 0.02;
  std::uint64_t seed = 1;
  /// Fraction of each class assigned to the train split.
  double train_fraction = 2.0 / 3.0;
};

struct SynthOutput {
  std::filesystem::path classification_manifest;
  std::filesystem::path segmentation_manifest;
  std::size_t clouds = 0;
};

/// Writes clouds/, meshes/, labels/, manifest.json (classification) and
/// manifest_parts.json (part segmentation) under `dir`.
SynthOutput generate_dataset(const SynthOptions& options, const std::filesystem::path& dir);

}  // namespace pctta
