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

#include "pctta/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "pctta/error.hpp"
#include "pctta/rng.hpp"

namespace pctta {

namespace fs = std::filesystem;

ShapeClass parse_shape_class(std::string_view name) {
  if (name == "sphere") return ShapeClass::Sphere;
  if (name == "cube") return ShapeClass::Cube;
  if (name == "cylinder") return ShapeClass::Cylinder;
  throw Error(ErrorCode::InvalidArgument, "unknown shape class '" + std::string(name) + "'");
}

std::string_view to_string(ShapeClass shape) {
  switch (shape) {
    case ShapeClass::Sphere: return "sphere";
    case ShapeClass::Cube: return "cube";
    case ShapeClass::Cylinder: return "cylinder";
  }
  return "unknown";
}

std::vector<int> shape_parts(ShapeClass shape) {
  switch (shape) {
    case ShapeClass::Sphere: return {0, 1};
    case ShapeClass::Cube: return {2, 3};
    case ShapeClass::Cylinder: return {4, 5};
  }
  return {};
}

ShapeInstance random_instance(ShapeClass shape, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ShapeInstance inst;
  inst.shape = shape;
  switch (shape) {
    case ShapeClass::Sphere: {
      const double r = 0.8 + 0.4 * u(rng);
      inst.dims = Vec3(r, r, r);
      break;
    }
    case ShapeClass::Cube:
      for (int a = 0; a < 3; ++a) inst.dims(a) = 0.85 + 0.3 * u(rng);
      break;
    case ShapeClass::Cylinder: {
      const double r = 0.45 + 0.15 * u(rng);
      inst.dims = Vec3(r, r, 0.9 + 0.2 * u(rng));
      break;
    }
  }
  return inst;
}

SampledShape sample_shape(const ShapeInstance& shape, std::size_t points, double noise,
                          std::uint64_t seed) {
  constexpr double pi = std::numbers::pi;
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  SampledShape out;
  out.cloud.points.resize(static_cast<Eigen::Index>(points), 3);
  out.part_labels.resize(points);
  const Vec3& d = shape.dims;

  for (std::size_t i = 0; i < points; ++i) {
    Vec3 p;
    int label = 0;
    switch (shape.shape) {
      case ShapeClass::Sphere: {
        Vec3 dir;
        do {
          dir = Vec3(gauss(rng), gauss(rng), gauss(rng));
        } while (dir.norm() < 1e-12);
        p = dir.normalized() * d.x();
        label = p.z() >= 0.0 ? 0 : 1;
        break;
      }
      case ShapeClass::Cube: {
        // Face pairs weighted by area: x faces 4yz, y faces 4xz, z faces 4xy.
        const double ax = d.y() * d.z(), ay = d.x() * d.z(), az = d.x() * d.y();
        const double pick = u(rng) * (ax + ay + az);
        const double sign = u(rng) < 0.5 ? -1.0 : 1.0;
        const double s = 2.0 * u(rng) - 1.0, t = 2.0 * u(rng) - 1.0;
        if (pick < ax) {
          p = Vec3(sign * d.x(), s * d.y(), t * d.z());
          label = 3;
        } else if (pick < ax + ay) {
          p = Vec3(s * d.x(), sign * d.y(), t * d.z());
          label = 3;
        } else {
          p = Vec3(s * d.x(), t * d.y(), sign * d.z());
          label = 2;
        }
        break;
      }
      case ShapeClass::Cylinder: {
        const double r = d.x(), h = d.z();
        const double cap_area = 2.0 * pi * r * r;
        const double side_area = 2.0 * pi * r * 2.0 * h;
        const double theta = 2.0 * pi * u(rng);
        if (u(rng) * (cap_area + side_area) < cap_area) {
          const double rho = r * std::sqrt(u(rng));
          const double z = u(rng) < 0.5 ? -h : h;
          p = Vec3(rho * std::cos(theta), rho * std::sin(theta), z);
          label = 4;
        } else {
          p = Vec3(r * std::cos(theta), r * std::sin(theta), h * (2.0 * u(rng) - 1.0));
          label = 5;
        }
        break;
      }
    }
    if (noise > 0.0) p += noise * Vec3(gauss(rng), gauss(rng), gauss(rng));
    out.cloud.points.row(static_cast<Eigen::Index>(i)) = p.transpose();
    out.part_labels[i] = label;
  }
  return out;
}

namespace {

class MeshBuilder {
 public:
  std::size_t vertex(const Vec3& p) {
    verts_.push_back(p);
    return verts_.size() - 1;
  }
  void tri(std::size_t a, std::size_t b, std::size_t c) { faces_.push_back({a, b, c}); }
  void quad(std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
    tri(a, b, c);
    tri(a, c, d);
  }
  TriangleMesh finish() {
    TriangleMesh m;
    m.vertices.resize(static_cast<Eigen::Index>(verts_.size()), 3);
    for (std::size_t i = 0; i < verts_.size(); ++i) {
      m.vertices.row(static_cast<Eigen::Index>(i)) = verts_[i].transpose();
    }
    m.faces = std::move(faces_);
    return m;
  }

 private:
  std::vector<Vec3> verts_;
  std::vector<std::array<std::size_t, 3>> faces_;
};

}  // namespace

TriangleMesh shape_mesh(const ShapeInstance& shape) {
  constexpr double pi = std::numbers::pi;
  MeshBuilder mb;
  const Vec3& d = shape.dims;
  switch (shape.shape) {
    case ShapeClass::Sphere: {
      constexpr int slices = 32, stacks = 16;
      const std::size_t top = mb.vertex(Vec3(0, 0, d.x()));
      std::vector<std::size_t> ring_start;
      for (int s = 1; s < stacks; ++s) {
        const double phi = pi * s / stacks;
        ring_start.push_back(mb.vertex(Vec3(d.x() * std::sin(phi), 0, d.x() * std::cos(phi))));
        for (int k = 1; k < slices; ++k) {
          const double th = 2.0 * pi * k / slices;
          mb.vertex(Vec3(d.x() * std::sin(phi) * std::cos(th), d.x() * std::sin(phi) * std::sin(th),
                         d.x() * std::cos(phi)));
        }
      }
      const std::size_t bottom = mb.vertex(Vec3(0, 0, -d.x()));
      auto at = [&](int ring, int k) { return ring_start[static_cast<std::size_t>(ring)] + static_cast<std::size_t>(k % slices); };
      for (int k = 0; k < slices; ++k) mb.tri(top, at(0, k), at(0, k + 1));
      for (int s = 0; s + 1 < stacks - 1; ++s) {
        for (int k = 0; k < slices; ++k) mb.quad(at(s, k), at(s + 1, k), at(s + 1, k + 1), at(s, k + 1));
      }
      for (int k = 0; k < slices; ++k) mb.tri(bottom, at(stacks - 2, k + 1), at(stacks - 2, k));
      break;
    }
    case ShapeClass::Cube: {
      constexpr int cells = 12;
      // Each face is a separate grid; seam vertices are duplicated.
      for (int axis = 0; axis < 3; ++axis) {
        const int u_axis = (axis + 1) % 3, v_axis = (axis + 2) % 3;
        for (double sign : {-1.0, 1.0}) {
          std::vector<std::size_t> ids;
          for (int j = 0; j <= cells; ++j) {
            for (int i = 0; i <= cells; ++i) {
              Vec3 p;
              p(axis) = sign * d(axis);
              p(u_axis) = d(u_axis) * (2.0 * i / cells - 1.0);
              p(v_axis) = d(v_axis) * (2.0 * j / cells - 1.0);
              ids.push_back(mb.vertex(p));
            }
          }
          auto id = [&](int i, int j) { return ids[static_cast<std::size_t>(j * (cells + 1) + i)]; };
          for (int j = 0; j < cells; ++j) {
            for (int i = 0; i < cells; ++i) {
              if (sign > 0) {
                mb.quad(id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
              } else {
                mb.quad(id(i, j), id(i, j + 1), id(i + 1, j + 1), id(i + 1, j));
              }
            }
          }
        }
      }
      break;
    }
    case ShapeClass::Cylinder: {
      constexpr int slices = 48, rings = 16, cap_rings = 6;
      const double r = d.x(), h = d.z();
      std::vector<std::size_t> side;
      for (int j = 0; j <= rings; ++j) {
        for (int k = 0; k < slices; ++k) {
          const double th = 2.0 * pi * k / slices;
          side.push_back(mb.vertex(Vec3(r * std::cos(th), r * std::sin(th), -h + 2.0 * h * j / rings)));
        }
      }
      auto s = [&](int j, int k) { return side[static_cast<std::size_t>(j * slices + k % slices)]; };
      for (int j = 0; j < rings; ++j) {
        for (int k = 0; k < slices; ++k) mb.quad(s(j, k), s(j, k + 1), s(j + 1, k + 1), s(j + 1, k));
      }
      for (double sign : {-1.0, 1.0}) {
        const std::size_t center = mb.vertex(Vec3(0, 0, sign * h));
        std::vector<std::size_t> cap;
        for (int c = 1; c <= cap_rings; ++c) {
          for (int k = 0; k < slices; ++k) {
            const double th = 2.0 * pi * k / slices;
            const double rho = r * c / cap_rings;
            cap.push_back(mb.vertex(Vec3(rho * std::cos(th), rho * std::sin(th), sign * h)));
          }
        }
        auto cp = [&](int c, int k) { return cap[static_cast<std::size_t>(c * slices + k % slices)]; };
        for (int k = 0; k < slices; ++k) {
          if (sign > 0) mb.tri(center, cp(0, k), cp(0, k + 1));
          else mb.tri(center, cp(0, k + 1), cp(0, k));
        }
        for (int c = 0; c + 1 < cap_rings; ++c) {
          for (int k = 0; k < slices; ++k) {
            if (sign > 0) mb.quad(cp(c, k), cp(c + 1, k), cp(c + 1, k + 1), cp(c, k + 1));
            else mb.quad(cp(c, k), cp(c, k + 1), cp(c + 1, k + 1), cp(c + 1, k));
          }
        }
      }
      break;
    }
  }
  return mb.finish();
}

SynthOutput generate_dataset(const SynthOptions& options, const fs::path& dir) {
  if (options.classes.empty() || options.per_class == 0 || options.points == 0) {
    throw Error(ErrorCode::InvalidArgument, "synth needs classes, per-class count and points");
  }
  if (!(options.noise >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise must be >= 0");
  fs::create_directories(dir / "clouds");
  fs::create_directories(dir / "meshes");
  fs::create_directories(dir / "labels");

  DatasetManifest cls;
  cls.task = Task::Classification;
  DatasetManifest seg;
  seg.task = Task::PartSegmentation;
  for (ShapeClass c : options.classes) {
    cls.classes.emplace_back(to_string(c));
    seg.classes.emplace_back(to_string(c));
    const auto parts = shape_parts(c);
    seg.categories.push_back({std::string(to_string(c)), {parts.begin(), parts.end()}});
  }

  const auto train_count = static_cast<std::size_t>(
      std::llround(options.train_fraction * static_cast<double>(options.per_class)));
  std::size_t global = 0;
  for (std::size_t ci = 0; ci < options.classes.size(); ++ci) {
    const ShapeClass c = options.classes[ci];
    for (std::size_t i = 0; i < options.per_class; ++i, ++global) {
      const std::uint64_t seed = derive_seed(options.seed, global);
      const ShapeInstance inst = random_instance(c, splitmix64(seed));
      const SampledShape sample = sample_shape(inst, options.points, options.noise, seed);
      char stem[64];
      std::snprintf(stem, sizeof stem, "%s_%03zu", std::string(to_string(c)).c_str(), i);
      ManifestEntry e;
      e.cloud = dir / "clouds" / (std::string(stem) + ".xyz");
      e.mesh = dir / "meshes" / (std::string(stem) + ".off");
      e.labels = dir / "labels" / (std::string(stem) + ".txt");
      e.id = static_cast<int>(ci);
      e.split = i < train_count ? "train" : "test";
      write_point_cloud(sample.cloud, e.cloud, CloudFormat::Xyz);
      write_mesh_off(shape_mesh(inst), *e.mesh);
      write_labels(sample.part_labels, *e.labels);
      cls.entries.push_back(e);
      seg.entries.push_back(e);
    }
  }
  SynthOutput out;
  out.classification_manifest = dir / "manifest.json";
  out.segmentation_manifest = dir / "manifest_parts.json";
  out.clouds = global;
  write_manifest(cls, out.classification_manifest);
  write_manifest(seg, out.segmentation_manifest);
  return out;
}

}  // namespace pctta
