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

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "pctta/error.hpp"
#include "pctta/point_cloud.hpp"

namespace pctta {

struct NormalizationTransform {
  Vec3 center = Vec3::Zero();
  double scale = 1.0;

  /// normalized = (p - center) / scale
  Vec3 apply(const Vec3& p) const { return (p - center) / scale; }
  Vec3 invert(const Vec3& q) const { return q * scale + center; }
  Points apply(const Points& pts) const;
  Points invert(const Points& pts) const;
};

/// Centers the cloud at its centroid and scales it so the farthest point has
/// norm 1. A cloud whose points all coincide keeps scale 1.
std::pair<PointCloud, NormalizationTransform> normalize_unit_sphere(
    const PointCloud& cloud);

PointCloud denormalize(const PointCloud& cloud, const NormalizationTransform& t);

/// Greedy maximin (farthest point) sampling. Each pick maximizes its
/// distance to the already-selected set; ties go to the lower index.
std::vector<std::size_t> farthest_point_sample(const Points& points, std::size_t m,
                                               std::size_t start = 0);

inline std::vector<std::size_t> farthest_point_sample(const PointCloud& cloud,
                                                      std::size_t m,
                                                      std::size_t start = 0) {
  return farthest_point_sample(cloud.points, m, start);
}

template <typename Scalar>
struct AlignedBox {
  Vector3<Scalar> min;
  Vector3<Scalar> max;

  static AlignedBox bounding(const Points& pts) {
    return {pts.colwise().minCoeff().transpose().template cast<Scalar>(),
            pts.colwise().maxCoeff().transpose().template cast<Scalar>()};
  }
  AlignedBox padded(Scalar pad) const {
    return {(min.array() - pad).matrix(), (max.array() + pad).matrix()};
  }
  Scalar diagonal() const { return (max - min).norm(); }
};
using Box = AlignedBox<double>;

/// Cell centers of the regular grid anchored at `bounds.min` covering the
/// box, ceil(extent / edge) cells per axis. A zero-extent axis becomes one
/// cell centered on its coordinate. Centers are ordered x fastest, then y,
/// then z.
template <typename Scalar>
std::vector<Vector3<Scalar>> voxel_grid_centers(const AlignedBox<Scalar>& bounds,
                                                Scalar edge) {
  if (!(edge > Scalar(0)) || !std::isfinite(static_cast<double>(edge))) {
    throw Error(ErrorCode::InvalidEdge, "voxel edge must be positive and finite");
  }
  std::array<std::size_t, 3> count{};
  Vector3<Scalar> origin = bounds.min;
  for (int a = 0; a < 3; ++a) {
    const Scalar extent = bounds.max(a) - bounds.min(a);
    if (extent <= Scalar(0)) {
      origin(a) -= edge / Scalar(2);
      count[a] = 1;
      continue;
    }
    count[a] = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(static_cast<double>(extent / edge))));
  }
  std::vector<Vector3<Scalar>> centers;
  centers.reserve(count[0] * count[1] * count[2]);
  for (std::size_t k = 0; k < count[2]; ++k) {
    for (std::size_t j = 0; j < count[1]; ++j) {
      for (std::size_t i = 0; i < count[0]; ++i) {
        centers.emplace_back(origin(0) + (Scalar(i) + Scalar(0.5)) * edge,
                             origin(1) + (Scalar(j) + Scalar(0.5)) * edge,
                             origin(2) + (Scalar(k) + Scalar(0.5)) * edge);
      }
    }
  }
  return centers;
}

namespace detail {

template <typename Scalar>
Scalar point_segment_distance(const Vector3<Scalar>& p, const Vector3<Scalar>& a,
                              const Vector3<Scalar>& b) {
  const Vector3<Scalar> ab = b - a;
  const Scalar len2 = ab.squaredNorm();
  if (len2 <= Scalar(0)) return (p - a).norm();
  const Scalar t = std::clamp((p - a).dot(ab) / len2, Scalar(0), Scalar(1));
  return (p - (a + t * ab)).norm();
}

}  // namespace detail

/// Exact distance from `p` to the closed triangle (a, b, c). Degenerate
/// triangles reduce to the nearest of their edges.
template <typename Scalar>
Scalar point_triangle_distance(const Vector3<Scalar>& p, const Vector3<Scalar>& a,
                               const Vector3<Scalar>& b, const Vector3<Scalar>& c) {
  const Vector3<Scalar> ab = b - a;
  const Vector3<Scalar> ac = c - a;
  const Vector3<Scalar> n = ab.cross(ac);
  const Scalar n2 = n.squaredNorm();
  const Scalar scale2 = std::max(ab.squaredNorm(), ac.squaredNorm());
  if (n2 > Scalar(1e-24) * scale2 * scale2) {
    // Barycentric coordinates of the projection onto the supporting plane.
    const Vector3<Scalar> ap = p - a;
    const Scalar v = ap.cross(ac).dot(n) / n2;
    const Scalar w = ab.cross(ap).dot(n) / n2;
    if (v >= Scalar(0) && w >= Scalar(0) && v + w <= Scalar(1)) {
      return std::abs(ap.dot(n)) / std::sqrt(n2);
    }
  }
  return std::min({detail::point_segment_distance(p, a, b),
                   detail::point_segment_distance(p, b, c),
                   detail::point_segment_distance(p, c, a)});
}

template <typename Scalar>
Scalar point_triangle_distance(const Vector3<Scalar>& p,
                               const std::array<Vector3<Scalar>, 3>& tri) {
  return point_triangle_distance(p, tri[0], tri[1], tri[2]);
}

template <typename Scalar>
struct PlaneT {
  Vector3<Scalar> centroid;
  Vector3<Scalar> normal;

  Scalar signed_distance(const Vector3<Scalar>& p) const {
    return (p - centroid).dot(normal);
  }
};
using Plane = PlaneT<double>;

/// Least-squares plane: centroid is the mean, normal the eigenvector of the
/// smallest covariance eigenvalue, signed so its first component above 1e-6
/// in magnitude is positive (smaller ones are treated as zero, so a plane
/// tilted by rounding noise keeps the sign of its ideal normal).
/// Rank-deficient (coincident or collinear) input is rejected.
template <typename Derived>
PlaneT<typename Derived::Scalar> fit_plane(const Eigen::MatrixBase<Derived>& pts) {
  using Scalar = typename Derived::Scalar;
  static_assert(Derived::ColsAtCompileTime == 3 ||
                    Derived::ColsAtCompileTime == Eigen::Dynamic,
                "fit_plane expects an n x 3 point block");
  const Eigen::Index n = pts.rows();
  if (n < 3 || pts.cols() != 3) {
    throw Error(ErrorCode::TooFewPoints, "plane fit needs at least 3 points");
  }
  const Vector3<Scalar> centroid = pts.colwise().mean().transpose();
  Eigen::Matrix<Scalar, 3, 3> cov = Eigen::Matrix<Scalar, 3, 3>::Zero();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector3<Scalar> d = pts.row(i).transpose() - centroid;
    cov.noalias() += d * d.transpose();
  }
  cov /= Scalar(n);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, 3, 3>> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::DegenerateNeighborhood, "covariance eigensolver failed");
  }
  // Eigenvalues come back in increasing order.
  const auto& ev = solver.eigenvalues();
  const Scalar tiny = std::numeric_limits<Scalar>::min();
  if (!(ev(2) > tiny) || !(ev(1) > Scalar(1e-12) * ev(2))) {
    throw Error(ErrorCode::DegenerateNeighborhood,
                "neighborhood spans fewer than two dimensions");
  }
  Vector3<Scalar> normal = solver.eigenvectors().col(0).normalized();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(normal(a)) > Scalar(1e-6)) {
      if (normal(a) < Scalar(0)) normal = -normal;
      break;
    }
  }
  return {centroid, normal};
}

inline Plane fit_plane(const std::vector<Vec3>& pts) {
  Points block(static_cast<Eigen::Index>(pts.size()), 3);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    block.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
  }
  return fit_plane(block);
}

}  // namespace pctta
