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

#include "pctta/geometry.hpp"

#include <limits>
#include <string>

#include "pctta/spatial_index.hpp"

namespace pctta {

Points NormalizationTransform::apply(const Points& pts) const {
  return (pts.rowwise() - center.transpose()) / scale;
}

Points NormalizationTransform::invert(const Points& pts) const {
  return (pts * scale).rowwise() + center.transpose();
}

std::pair<PointCloud, NormalizationTransform> normalize_unit_sphere(
    const PointCloud& cloud) {
  if (cloud.empty()) {
    throw Error(ErrorCode::EmptyCloud, "cannot normalize an empty cloud");
  }
  NormalizationTransform t;
  t.center = cloud.points.colwise().mean().transpose();
  const double radius = (cloud.points.rowwise() - t.center.transpose())
                            .rowwise()
                            .norm()
                            .maxCoeff();
  t.scale = radius > 0.0 ? radius : 1.0;
  PointCloud out = cloud;
  out.points = t.apply(cloud.points);
  return {std::move(out), t};
}

PointCloud denormalize(const PointCloud& cloud, const NormalizationTransform& t) {
  PointCloud out = cloud;
  out.points = t.invert(cloud.points);
  return out;
}

std::vector<std::size_t> farthest_point_sample(const Points& points, std::size_t m,
                                               std::size_t start) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (m == 0) throw Error(ErrorCode::InvalidArgument, "sample count must be positive");
  if (m > n) {
    throw Error(ErrorCode::TooFewPoints, "cannot select " + std::to_string(m) +
                                             " of " + std::to_string(n) + " points");
  }
  if (start >= n) throw Error(ErrorCode::InvalidArgument, "start index out of range");

  // Coordinates in separate arrays so the distance update vectorizes; the
  // sum order matches squared_distance.
  std::vector<double> xs(n), ys(n), zs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    xs[i] = points(r, 0);
    ys[i] = points(r, 1);
    zs[i] = points(r, 2);
  }
  std::vector<std::size_t> selected;
  selected.reserve(m);
  // Selected points hold -1 so they never win the argmax below.
  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  std::size_t current = start;
  for (;;) {
    selected.push_back(current);
    min_d2[current] = -1.0;
    if (selected.size() == m) break;
    const double cx = xs[current];
    const double cy = ys[current];
    const double cz = zs[current];
    double* md = min_d2.data();
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = xs[i] - cx;
      const double dy = ys[i] - cy;
      const double dz = zs[i] - cz;
      const double d2 = dx * dx + dy * dy + dz * dz;
      md[i] = d2 < md[i] ? d2 : md[i];
    }
    // Strict comparison keeps the lowest index among equals.
    std::size_t best = 0;
    double best_d2 = md[0];
    for (std::size_t i = 1; i < n; ++i) {
      if (md[i] > best_d2) {
        best_d2 = md[i];
        best = i;
      }
    }
    current = best;
  }
  return selected;
}

}  // namespace pctta
