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

#include "pctta/point_cloud.hpp"

#include <cmath>

#include "pctta/error.hpp"

namespace pctta {

bool PointCloud::is_valid() const {
  if (!points.allFinite()) return false;
  if (!normals) return true;
  if (normals->rows() != points.rows()) return false;
  for (Eigen::Index i = 0; i < normals->rows(); ++i) {
    if (std::abs(normals->row(i).norm() - 1.0) > 1e-5) return false;
  }
  return true;
}

bool operator==(const PointCloud& a, const PointCloud& b) {
  if (a.points.rows() != b.points.rows() || a.points != b.points) return false;
  if (a.normals.has_value() != b.normals.has_value()) return false;
  return !a.normals || *a.normals == *b.normals;
}

PointCloud select(const PointCloud& cloud, const std::vector<std::size_t>& indices) {
  PointCloud out;
  out.points.resize(static_cast<Eigen::Index>(indices.size()), 3);
  if (cloud.normals) out.normals = Points(static_cast<Eigen::Index>(indices.size()), 3);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= cloud.size()) {
      throw Error(ErrorCode::InvalidArgument, "point index out of range");
    }
    const auto src = static_cast<Eigen::Index>(indices[i]);
    const auto dst = static_cast<Eigen::Index>(i);
    out.points.row(dst) = cloud.points.row(src);
    if (cloud.normals) out.normals->row(dst) = cloud.normals->row(src);
  }
  return out;
}

PointCloud from_vectors(const std::vector<Vec3>& pts) {
  Points block(static_cast<Eigen::Index>(pts.size()), 3);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    block.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
  }
  return PointCloud(std::move(block));
}

Points vertex_normals(const TriangleMesh& mesh) {
  Points acc = Points::Zero(mesh.vertices.rows(), 3);
  for (const auto& f : mesh.faces) {
    const Vec3 a = mesh.vertices.row(static_cast<Eigen::Index>(f[0])).transpose();
    const Vec3 b = mesh.vertices.row(static_cast<Eigen::Index>(f[1])).transpose();
    const Vec3 c = mesh.vertices.row(static_cast<Eigen::Index>(f[2])).transpose();
    // Cross product length is twice the area, so this is area weighting.
    const Vec3 n = (b - a).cross(c - a);
    for (auto v : f) acc.row(static_cast<Eigen::Index>(v)) += n.transpose();
  }
  for (Eigen::Index i = 0; i < acc.rows(); ++i) {
    const double len = acc.row(i).norm();
    if (len > 0.0 && std::isfinite(len)) {
      acc.row(i) /= len;
    } else {
      acc.row(i) << 0.0, 0.0, 1.0;
    }
  }
  return acc;
}

}  // namespace pctta
