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

#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "pctta/error.hpp"
#include "pctta/geometry.hpp"

using namespace pctta;

namespace {

Points rows(std::initializer_list<Vec3> pts) {
  Points p(static_cast<Eigen::Index>(pts.size()), 3);
  Eigen::Index i = 0;
  for (const auto& v : pts) p.row(i++) = v.transpose();
  return p;
}

bool close(const Vec3& a, const Vec3& b, double tol) { return (a - b).norm() <= tol; }

}  // namespace

TEST_CASE("normalize: two-point example") {
  const PointCloud c(rows({{2, 0, 0}, {4, 0, 0}}));
  const auto [n, t] = normalize_unit_sphere(c);
  CHECK(close(t.center, Vec3(3, 0, 0), 1e-12));
  CHECK(t.scale == doctest::Approx(1.0));
  CHECK(close(n.point(0), Vec3(-1, 0, 0), 1e-12));
  CHECK(close(n.point(1), Vec3(1, 0, 0), 1e-12));
}

TEST_CASE("normalize: single point keeps scale 1") {
  const PointCloud c(rows({{5, 5, 5}}));
  const auto [n, t] = normalize_unit_sphere(c);
  CHECK(t.scale == 1.0);
  CHECK(close(n.point(0), Vec3::Zero(), 1e-12));
}

TEST_CASE("normalize: already normalized cloud is unchanged") {
  // Antipodal pairs keep the centroid exactly at the origin.
  Points p(8, 3);
  const auto s = oracle::sphere_cloud(4, 3);
  p.topRows(4) = s.points;
  p.bottomRows(4) = -s.points;
  const auto [n, t] = normalize_unit_sphere(PointCloud(p));
  CHECK(t.center.norm() < 1e-12);
  CHECK(t.scale == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((n.points - p).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("normalize: centroid at origin, max norm 1, round trip") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    auto c = oracle::random_cloud(1 + trial * 7, rng, -30.0, 50.0);
    const auto [n, t] = normalize_unit_sphere(c);
    CHECK(n.points.colwise().mean().norm() < 1e-6);
    const double r = n.points.rowwise().norm().maxCoeff();
    if (c.size() > 1) CHECK(r == doctest::Approx(1.0).epsilon(1e-6));
    const PointCloud back = denormalize(n, t);
    const double scale = c.points.cwiseAbs().maxCoeff();
    CHECK((back.points - c.points).cwiseAbs().maxCoeff() <= 1e-6 * scale);
  }
}

TEST_CASE("normalize: empty cloud") {
  CHECK_THROWS_AS(normalize_unit_sphere(PointCloud{}), Error);
}

TEST_CASE("fps: hand example and exhaustive case") {
  const Points p = rows({{0, 0, 0}, {10, 0, 0}, {1, 0, 0}});
  CHECK(farthest_point_sample(p, 2, 0) == std::vector<std::size_t>{0, 1});
  const auto all = farthest_point_sample(p, 3, 0);
  CHECK(all == std::vector<std::size_t>{0, 1, 2});
  CHECK(std::set<std::size_t>(all.begin(), all.end()).size() == 3);
}

TEST_CASE("fps: errors") {
  const Points p = rows({{0, 0, 0}, {1, 0, 0}});
  CHECK_THROWS_AS(farthest_point_sample(p, 0, 0), Error);
  CHECK_THROWS_AS(farthest_point_sample(p, 3, 0), Error);
  CHECK_THROWS_AS(farthest_point_sample(p, 1, 2), Error);
  try {
    farthest_point_sample(p, 3, 0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewPoints);
  }
}

TEST_CASE("fps: matches brute-force greedy oracle") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> nd(1, 64);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = nd(rng);
    const std::size_t m = std::uniform_int_distribution<std::size_t>(1, std::min<std::size_t>(n, 16))(rng);
    const std::size_t start = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    auto c = oracle::random_cloud(n, rng);
    // Some trials snap to a coarse lattice to exercise ties and duplicates.
    if (trial % 3 == 0) c.points = (c.points * 2.0).array().round().matrix();
    REQUIRE(farthest_point_sample(c.points, m, start) == oracle::fps(c.points, m, start));
  }
}

TEST_CASE("fps: prefix consistency and maximin property") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    const auto c = oracle::random_cloud(40, rng);
    const auto full = farthest_point_sample(c.points, 12, 3);
    const auto shorter = farthest_point_sample(c.points, 11, 3);
    CHECK(std::equal(shorter.begin(), shorter.end(), full.begin()));
    for (std::size_t j = 1; j < full.size(); ++j) {
      auto min_to_prefix = [&](std::size_t i) {
        double d = 1e300;
        for (std::size_t s = 0; s < j; ++s) {
          d = std::min(d, oracle::sq_dist(c.points.row(static_cast<Eigen::Index>(i)),
                                          c.points.row(static_cast<Eigen::Index>(full[s]))));
        }
        return d;
      };
      const double chosen = min_to_prefix(full[j]);
      std::set<std::size_t> prefix(full.begin(), full.begin() + static_cast<long>(j));
      for (std::size_t i = 0; i < c.size(); ++i) {
        if (!prefix.count(i)) CHECK(chosen >= min_to_prefix(i));
      }
    }
  }
}

TEST_CASE("voxel grid: examples") {
  const Box unit{Vec3::Zero(), Vec3::Ones()};
  auto one = voxel_grid_centers(unit, 1.0);
  REQUIRE(one.size() == 1);
  CHECK(close(one[0], Vec3(0.5, 0.5, 0.5), 1e-12));

  auto eight = voxel_grid_centers(unit, 0.5);
  REQUIRE(eight.size() == 8);
  for (const auto& c : eight) {
    for (int a = 0; a < 3; ++a) {
      CHECK((std::abs(c(a) - 0.25) < 1e-12 || std::abs(c(a) - 0.75) < 1e-12));
    }
  }
  std::set<std::array<double, 3>> distinct;
  for (const auto& c : eight) distinct.insert({c.x(), c.y(), c.z()});
  CHECK(distinct.size() == 8);

  const Box slab{Vec3::Zero(), Vec3(1, 1, 0.4)};
  CHECK(voxel_grid_centers(slab, 0.5).size() == 4);
}

TEST_CASE("voxel grid: zero-extent axis and invalid edge") {
  const Box flat{Vec3(0, 0, 2), Vec3(1, 1, 2)};
  const auto c = voxel_grid_centers(flat, 0.5);
  CHECK(c.size() == 4);
  for (const auto& v : c) CHECK(v.z() == doctest::Approx(2.0));
  CHECK_THROWS_AS(voxel_grid_centers(flat, 0.0), Error);
  CHECK_THROWS_AS(voxel_grid_centers(flat, -1.0), Error);
}

TEST_CASE("point-triangle distance: examples") {
  const Vec3 a(0, 0, 0), b(1, 0, 0), c(0, 1, 0);
  CHECK(point_triangle_distance(Vec3(0.2, 0.3, 0), a, b, c) == doctest::Approx(0.0));
  CHECK(point_triangle_distance(Vec3(0.25, 0.25, 2), a, b, c) == doctest::Approx(2.0));
  CHECK(point_triangle_distance(Vec3(2, 0, 0), a, b, c) == doctest::Approx(1.0));
}

TEST_CASE("point-triangle distance: never above vertex distance, matches dense sampling") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 a(u(rng), u(rng), u(rng)), b(u(rng), u(rng), u(rng)), c(u(rng), u(rng), u(rng));
    const Vec3 p(2 * u(rng), 2 * u(rng), 2 * u(rng));
    const double d = point_triangle_distance(p, a, b, c);
    CHECK(d <= (p - a).norm() + 1e-12);
    CHECK(d <= (p - b).norm() + 1e-12);
    CHECK(d <= (p - c).norm() + 1e-12);
    // Barycentric grid: the true distance is a lower bound on every sample.
    double best = 1e300;
    const int steps = 60;
    for (int i = 0; i <= steps; ++i) {
      for (int j = 0; i + j <= steps; ++j) {
        const double s = double(i) / steps, t = double(j) / steps;
        best = std::min(best, (p - (a + s * (b - a) + t * (c - a))).norm());
      }
    }
    CHECK(d <= best + 1e-12);
    CHECK(best - d < 0.05 * ((b - a).norm() + (c - a).norm()));
  }
}

TEST_CASE("point-triangle distance: degenerate triangles") {
  const Vec3 a(0, 0, 0), b(1, 0, 0);
  CHECK(point_triangle_distance(Vec3(0.5, 1, 0), a, b, Vec3(2, 0, 0)) == doctest::Approx(1.0));
  CHECK(point_triangle_distance(Vec3(0, 3, 4), a, a, a) == doctest::Approx(5.0));
}

TEST_CASE("fit_plane: examples") {
  const Points flat = rows({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {0.3, 0.7, 0}});
  const Plane p = fit_plane(flat);
  CHECK(close(p.normal, Vec3(0, 0, 1), 1e-12));
  CHECK(close(p.centroid, flat.colwise().mean().transpose(), 1e-12));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  Points noisy(50, 3);
  for (Eigen::Index i = 0; i < 50; ++i) noisy.row(i) << u(rng), u(rng), 0.5 + 1e-9 * u(rng);
  CHECK(close(fit_plane(noisy).normal, Vec3(0, 0, 1), 1e-4));

  const Points tri = rows({{1, 0, 0.2}, {0, 2, -1}, {0.5, 0.5, 3}});
  const Plane q = fit_plane(tri);
  for (Eigen::Index i = 0; i < 3; ++i) {
    CHECK(std::abs(q.signed_distance(tri.row(i).transpose())) < 1e-9);
  }
}

TEST_CASE("fit_plane: sign convention and errors") {
  const Points flipped = rows({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}});
  CHECK(fit_plane(flipped).normal.z() > 0);
  // Normal along x: first component positive.
  const Points yz = rows({{0, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, 1, 1}});
  CHECK(fit_plane(yz).normal.x() == doctest::Approx(1.0));

  CHECK_THROWS_AS(fit_plane(rows({{0, 0, 0}, {1, 1, 1}})), Error);
  try {
    fit_plane(rows({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}}));
    FAIL("collinear points must be rejected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateNeighborhood);
  }
  try {
    fit_plane(rows({{1, 1, 1}, {1, 1, 1}, {1, 1, 1}}));
    FAIL("coincident points must be rejected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateNeighborhood);
  }
}

TEST_CASE("fit_plane: residual no worse than axis-aligned planes through the centroid") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto c = oracle::random_cloud(12, rng);
    const Plane p = fit_plane(c.points);
    auto rss = [&](const Vec3& normal) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < c.points.rows(); ++i) {
        const double d = (c.points.row(i).transpose() - p.centroid).dot(normal);
        s += d * d;
      }
      return s;
    };
    CHECK(p.normal.norm() == doctest::Approx(1.0));
    const double best = rss(p.normal);
    for (int a = 0; a < 3; ++a) CHECK(best <= rss(Vec3::Unit(a)) + 1e-12);
  }
}
