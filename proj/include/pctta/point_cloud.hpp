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
#include <Eigen/Geometry>
#include <array>
#include <cstddef>
#include <optional>
#include <vector>

namespace pctta {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
using Vec3 = Vector3<double>;

/// Row-major n x 3 coordinate block; row i is point i.
using Points = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// Generic row-major n x d feature matrix used for feature-space search.
template <typename Scalar>
using RowMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixXd = RowMatrix<double>;

struct PointCloud {
  Points points;
  std::optional<Points> normals;

  PointCloud() = default;
  explicit PointCloud(Points pts) : points(std::move(pts)) {}
  PointCloud(Points pts, Points nrm)
      : points(std::move(pts)), normals(std::move(nrm)) {}

  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
  bool empty() const { return points.rows() == 0; }
  bool has_normals() const { return normals.has_value(); }
  Vec3 point(std::size_t i) const {
    return points.row(static_cast<Eigen::Index>(i)).transpose();
  }

  /// Finite coordinates and, if present, unit normals matching point count.
  bool is_valid() const;

  friend bool operator==(const PointCloud& a, const PointCloud& b);
};

/// Cloud made of the given rows of `cloud`, in the given order.
PointCloud select(const PointCloud& cloud, const std::vector<std::size_t>& indices);

PointCloud from_vectors(const std::vector<Vec3>& pts);

struct TriangleMesh {
  Points vertices;
  std::vector<std::array<std::size_t, 3>> faces;

  std::size_t vertex_count() const {
    return static_cast<std::size_t>(vertices.rows());
  }
  std::size_t face_count() const { return faces.size(); }
};

/// Unit area-weighted average of incident face normals. Vertices with no
/// nondegenerate incident face get +z.
Points vertex_normals(const TriangleMesh& mesh);

}  // namespace pctta
