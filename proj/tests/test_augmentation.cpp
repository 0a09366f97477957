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
#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "pctta/augmentation.hpp"
#include "pctta/error.hpp"
#include "pctta/geometry.hpp"
#include "pctta/io.hpp"
#include "pctta/parallel.hpp"
#include "pctta/tta_config.hpp"

using namespace pctta;

namespace {

PointCloud grid_plane(int side, double spacing) {
  Points p(side * side, 3);
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) p.row(i * side + j) << i * spacing, j * spacing, 0.0;
  }
  return PointCloud(p);
}

std::vector<SeedProjection> as_projections(const std::vector<Vec3>& pts) {
  std::vector<SeedProjection> out;
  for (const auto& p : pts) {
    SeedProjection s;
    s.seed = p;
    s.projected = p;
    out.push_back(s);
  }
  return out;
}

TriangleMesh cube_mesh() {
  return read_mesh(std::string(PCTTA_FIXTURE_DIR) + "/cube.off");
}

std::array<double, 3> coordinate_std(const Points& d) {
  std::array<double, 3> out{};
  for (int a = 0; a < 3; ++a) {
    const double mean = d.col(a).mean();
    out[a] = std::sqrt((d.col(a).array() - mean).square().sum() / double(d.rows() - 1));
  }
  return out;
}

}  // namespace

TEST_CASE("jitter: sigma 0 is the identity") {
  std::mt19937_64 rng(1);
  const auto c = oracle::random_cloud(100, rng);
  CHECK(jitter(c, {0.0, 9}) == c);
}

TEST_CASE("jitter: empirical statistics") {
  const auto c = oracle::sphere_cloud(10000, 2);
  for (double sigma : {0.05, 0.07, 0.1}) {
    const Points d = jitter(c, {sigma, 42}).points - c.points;
    const auto sd = coordinate_std(d);
    for (int a = 0; a < 3; ++a) {
      CHECK(sd[a] >= 0.95 * sigma);
      CHECK(sd[a] <= 1.05 * sigma);
      CHECK(std::abs(d.col(a).mean()) <= 3.0 * sigma / std::sqrt(3.0 * 10000));
    }
  }
}

TEST_CASE("jitter: deterministic per seed, different across seeds") {
  const auto c = oracle::sphere_cloud(500, 3);
  CHECK(jitter(c, {0.05, 7}) == jitter(c, {0.05, 7}));
  CHECK(!(jitter(c, {0.05, 7}) == jitter(c, {0.05, 8})));
  CHECK_THROWS_AS(jitter(PointCloud{}, {0.05, 7}), Error);
  CHECK_THROWS_AS(jitter(c, {-1.0, 7}), Error);
}

TEST_CASE("mesh sampling: permutation, exhaustive, with replacement") {
  const TriangleMesh cube = cube_mesh();
  REQUIRE(cube.vertex_count() == 8);
  auto key = [](const Vec3& v) { return std::array<double, 3>{v.x(), v.y(), v.z()}; };
  std::set<std::array<double, 3>> corners;
  for (std::size_t i = 0; i < 8; ++i) corners.insert(key(cube.vertices.row(i).transpose()));

  const PointCloud all = sample_mesh_vertices(cube, 8, 5);
  std::set<std::array<double, 3>> got;
  for (std::size_t i = 0; i < all.size(); ++i) got.insert(key(all.point(i)));
  CHECK(got == corners);
  REQUIRE(all.has_normals());
  for (std::size_t i = 0; i < all.size(); ++i) {
    CHECK(all.normals->row(static_cast<Eigen::Index>(i)).norm() == doctest::Approx(1.0));
  }

  TriangleMesh big;
  big.vertices = oracle::sphere_cloud(1000, 4).points;
  std::set<std::array<double, 3>> members;
  for (Eigen::Index i = 0; i < big.vertices.rows(); ++i) {
    members.insert(key(big.vertices.row(i).transpose()));
  }
  const PointCloud many = sample_mesh_vertices(big, 2048, 6);
  CHECK(many.size() == 2048);
  CHECK(!many.has_normals());
  for (std::size_t i = 0; i < many.size(); ++i) CHECK(members.count(key(many.point(i))) == 1);

  CHECK_THROWS_AS(sample_mesh_vertices(TriangleMesh{}, 3, 1), Error);
}

TEST_CASE("seeds: dense sphere seeds lie near the surface") {
  const auto sphere = oracle::sphere_cloud(4000, 7);
  UpsampleParams p;
  p.voxel_edge = 0.1;
  p.seed_band = 0.05;
  const auto seeds = sample_seeds(sphere, p);
  REQUIRE(!seeds.empty());
  for (const auto& s : seeds) CHECK(std::abs(s.norm() - 1.0) <= 0.06);
}

TEST_CASE("seeds: planar cloud and zero band") {
  const auto plane = grid_plane(11, 0.1);
  UpsampleParams p;
  p.voxel_edge = 0.2;
  // The padded grid puts the nearest cell centers half an edge off the plane.
  p.seed_band = 0.12;
  const auto seeds = sample_seeds(plane, p);
  REQUIRE(!seeds.empty());
  for (const auto& s : seeds) CHECK(std::abs(std::abs(s.z()) - 0.1) < 1e-12);

  std::mt19937_64 rng(8);
  const auto generic = oracle::random_cloud(200, rng);
  p.voxel_edge = 0.1;
  p.seed_band = 0.0;
  CHECK(sample_seeds(generic, p).size() <= 2);
}

TEST_CASE("seeds: matches a direct recomputation") {
  const auto sphere = oracle::sphere_cloud(300, 9);
  UpsampleParams p;
  p.voxel_edge = 0.25;
  p.seed_band = 0.1;
  const auto seeds = sample_seeds(sphere, p);
  const Box box = Box::bounding(sphere.points).padded(0.25);
  std::vector<Vec3> want;
  for (const auto& c : voxel_grid_centers(box, 0.25)) {
    const auto order = oracle::scan(sphere.points, c);
    const double d = point_triangle_distance<double>(
        c, sphere.point(order[0].second), sphere.point(order[1].second),
        sphere.point(order[2].second));
    if (d <= 0.1) want.push_back(c);
  }
  REQUIRE(seeds.size() == want.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) CHECK(seeds[i] == want[i]);
}

TEST_CASE("projection: planar examples and on-plane invariant") {
  const auto plane = grid_plane(10, 0.1);
  UpsampleParams p;
  p.k_plane = 8;
  const auto proj = project_seeds(plane, {Vec3(0.3, 0.3, 0.2), Vec3(0.45, 0.2, 0.0)}, p);
  REQUIRE(proj.size() == 2);
  CHECK((proj[0].projected - Vec3(0.3, 0.3, 0)).norm() < 1e-6);
  CHECK(proj[0].distance <= 0.0);
  CHECK(proj[1].distance == doctest::Approx(0.0));
  CHECK((proj[1].projected - Vec3(0.45, 0.2, 0)).norm() < 1e-12);

  const auto sphere = oracle::sphere_cloud(800, 10);
  UpsampleParams q;
  q.voxel_edge = 0.15;
  const auto seeds = sample_seeds(sphere, q);
  const auto projected = project_seeds(sphere, seeds, q);
  REQUIRE(!projected.empty());
  for (const auto& s : projected) {
    CHECK(s.distance <= 0.0);
    // Re-fit the neighborhood independently and check the residual.
    const auto order = oracle::scan(sphere.points, s.seed);
    Points hood(12, 3);
    for (int j = 0; j < 12; ++j) hood.row(j) = sphere.points.row(static_cast<Eigen::Index>(order[j].second));
    const Plane pl = fit_plane(hood);
    CHECK(std::abs(pl.signed_distance(s.projected)) < 1e-6);
  }
}

TEST_CASE("outliers: uniform grid keeps everything") {
  std::vector<Vec3> pts;
  // With one neighbor every grid point has the same bias.
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) pts.emplace_back(i * 0.1, j * 0.1, 0.0);
  }
  UpsampleParams p;
  p.k_bias = 1;
  const auto r = remove_outliers(as_projections(pts), p);
  CHECK(r.kept.size() == 100);
  CHECK(!r.kept_all);
  for (const auto& k : r.kept) CHECK(k.bias == doctest::Approx(0.1));
}

TEST_CASE("outliers: grid plus one distant point removes exactly that point") {
  std::vector<Vec3> pts;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) pts.emplace_back(i * 0.1, j * 0.1, 0.0);
  }
  pts.emplace_back(0.45, 0.45, 10.0);
  const auto r = remove_outliers(as_projections(pts), UpsampleParams{});
  REQUIRE(r.kept.size() == 100);
  for (const auto& k : r.kept) CHECK(k.projected.z() == 0.0);
  const auto keep = oracle::outlier_keep(pts, 8, 1.5);
  CHECK(keep.size() == 100);
  CHECK(std::find(keep.begin(), keep.end(), 100) == keep.end());
}

TEST_CASE("outliers: single and empty inputs") {
  const auto one = remove_outliers(as_projections({Vec3(1, 2, 3)}), UpsampleParams{});
  REQUIRE(one.kept.size() == 1);
  CHECK(one.kept[0].bias == 0.0);
  CHECK(remove_outliers({}, UpsampleParams{}).kept.empty());
}

TEST_CASE("outliers: kept set equals the naive predicate") {
  std::mt19937_64 rng(12);
  std::exponential_distribution<double> spread(3.0);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vec3> pts;
    const int n = 20 + trial * 9;
    for (int i = 0; i < n; ++i) {
      const double s = spread(rng);
      pts.emplace_back(s * g(rng), s * g(rng), s * g(rng));
    }
    for (std::size_t k_bias : {1, 3, 8}) {
      UpsampleParams p;
      p.k_bias = k_bias;
      const auto r = remove_outliers(as_projections(pts), p);
      const auto keep = oracle::outlier_keep(pts, k_bias, 1.5);
      REQUIRE(r.kept.size() == keep.size());
      for (std::size_t i = 0; i < keep.size(); ++i) CHECK(r.kept[i].projected == pts[keep[i]]);
    }
  }
}

TEST_CASE("upsample: 512-point sphere to 2048 points near the surface") {
  const auto sphere = oracle::sphere_cloud(512, 13);
  const PointCloud up = upsample(sphere, UpsampleParams{});
  CHECK(up.size() == 2048);
  std::size_t near = 0;
  for (std::size_t i = 0; i < up.size(); ++i) near += std::abs(up.point(i).norm() - 1.0) <= 0.05;
  CHECK(double(near) / double(up.size()) >= 0.99);
}

TEST_CASE("upsample: output is a subset of the dense set, exact size") {
  const auto sphere = oracle::sphere_cloud(256, 14);
  UpsampleParams p;
  p.rng_seed = 3;
  const Points dense = upsample_dense(sphere, p);
  std::set<std::array<double, 3>> members;
  for (Eigen::Index i = 0; i < dense.rows(); ++i) members.insert({dense(i, 0), dense(i, 1), dense(i, 2)});
  for (std::size_t t : {std::size_t{1}, std::size_t{256}, std::size_t{700}}) {
    const PointCloud up = upsample(sphere, p, t);
    CHECK(up.size() == t);
    for (std::size_t i = 0; i < up.size(); ++i) {
      const Vec3 v = up.point(i);
      CHECK(members.count({v.x(), v.y(), v.z()}) == 1);
    }
  }
  // The input points are part of y.
  for (std::size_t i = 0; i < sphere.size(); ++i) {
    const Vec3 v = sphere.point(i);
    CHECK(members.count({v.x(), v.y(), v.z()}) == 1);
  }
}

TEST_CASE("upsample: target n on a clean cloud stays on the surface") {
  for (std::uint64_t seed : {15, 16, 17}) {
    const auto sphere = oracle::sphere_cloud(512, seed);
    const PointCloud up = upsample(sphere, UpsampleParams{}, 512);
    REQUIRE(up.size() == 512);
    const Eigen::ArrayXd err = (up.points.rowwise().norm().array() - 1.0).abs();
    CHECK((err <= 0.05).cast<double>().mean() >= 0.99);
    CHECK(err.maxCoeff() < 0.1);
  }
}

TEST_CASE("upsample: failure paths") {
  const auto sphere = oracle::sphere_cloud(64, 16);
  UpsampleParams tight;
  tight.seed_band = 1e-9;
  tight.include_original = false;
  CHECK_THROWS_AS(upsample(sphere, tight), Error);
  try {
    upsample(sphere, tight);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientDensity);
  }
  CHECK_THROWS_AS(upsample(oracle::sphere_cloud(5, 1), UpsampleParams{}), Error);
  UpsampleParams bad;
  bad.scale_r = 0.5;
  CHECK_THROWS_AS(upsample(sphere, bad), Error);
  bad = UpsampleParams{};
  bad.voxel_edge = -1.0;
  CHECK_THROWS_AS(upsample(sphere, bad), Error);
}

TEST_CASE("make_augmentations: counts and methods") {
  const auto sphere = oracle::sphere_cloud(300, 17);
  TtaConfig cfg;
  cfg.samples_m = 0;
  CHECK(make_augmentations(sphere, cfg).augmented.empty());

  cfg.method = AugmentationMethod::IdentityCopy;
  cfg.samples_m = 3;
  const auto copies = make_augmentations(sphere, cfg);
  REQUIRE(copies.augmented.size() == 3);
  for (const auto& c : copies.augmented) CHECK(c == sphere);

  cfg.method = AugmentationMethod::Upsample;
  cfg.samples_m = 10;
  const auto up = make_augmentations(sphere, cfg);
  REQUIRE(up.augmented.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(up.augmented[i].size() == sphere.size());
    for (std::size_t j = 0; j < i; ++j) CHECK(!(up.augmented[i] == up.augmented[j]));
  }
  CHECK(std::set<std::uint64_t>(up.seeds.begin(), up.seeds.end()).size() == 10);

  cfg.method = AugmentationMethod::MeshSurface;
  cfg.samples_m = 2;
  CHECK_THROWS_AS(make_augmentations(sphere, cfg), Error);
  const TriangleMesh cube = cube_mesh();
  const auto mesh_set = make_augmentations(sphere, cfg, &cube);
  CHECK(mesh_set.augmented[0].size() == sphere.size());
}

TEST_CASE("make_augmentations: bit-identical across runs and worker counts") {
  const auto sphere = oracle::sphere_cloud(256, 18);
  for (auto method : {AugmentationMethod::Jitter, AugmentationMethod::Upsample}) {
    TtaConfig cfg;
    cfg.method = method;
    cfg.samples_m = 4;
    cfg.master_seed = 99;
    setenv("PCTTA_THREADS", "1", 1);
    const auto a = make_augmentations(sphere, cfg);
    setenv("PCTTA_THREADS", "4", 1);
    const auto b = make_augmentations(sphere, cfg);
    unsetenv("PCTTA_THREADS");
    REQUIRE(a.augmented.size() == b.augmented.size());
    for (std::size_t k = 0; k < a.augmented.size(); ++k) CHECK(a.augmented[k] == b.augmented[k]);
    CHECK(a.seeds == b.seeds);
  }
}
