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

// Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero when
// any criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "cli_runner.hpp"
#include "json.hpp"
#include "oracles.hpp"
#include "pctta/aggregation.hpp"
#include "pctta/augmentation.hpp"
#include "pctta/error.hpp"
#include "pctta/geometry.hpp"
#include "pctta/io.hpp"
#include "pctta/metrics.hpp"
#include "pctta/predictor.hpp"
#include "pctta/spatial_index.hpp"

using namespace pctta;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++failures;
  std::printf("%s criterion %d: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, o.detail.c_str(),
              secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

Outcome fps_oracle() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> n_dist(1, 64);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = n_dist(rng);
    const std::size_t m = std::uniform_int_distribution<std::size_t>(1, std::min<std::size_t>(16, n))(rng);
    const std::size_t start = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    auto c = oracle::random_cloud(n, rng);
    if (trial % 4 == 0) c.points = (c.points * 2.0).array().round().matrix();  // ties
    if (farthest_point_sample(c.points, m, start) != oracle::fps(c.points, m, start)) ++mismatches;
  }
  return {mismatches == 0, fmt("%.0f mismatches over 200 clouds", double(mismatches))};
}

Outcome knn_oracle() {
  std::mt19937_64 rng(202);
  std::normal_distribution<double> g(0.0, 1.0);
  std::size_t mismatches = 0;
  std::size_t queries = 0;
  for (Eigen::Index dim : {3, 7}) {
    for (int cloud = 0; cloud < 10; ++cloud) {
      RowMatrixXd pts(500, dim);
      for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) pts(i, j) = g(rng);
      }
      const KdTree<double> tree(pts);
      for (int q = 0; q < 100; ++q, ++queries) {
        Eigen::VectorXd query(dim);
        for (Eigen::Index j = 0; j < dim; ++j) query(j) = g(rng);
        const std::size_t k = 1 + static_cast<std::size_t>(q % 8);
        const auto got = tree.knn(query, k);
        const auto want = oracle::scan(pts, query);
        bool ok = got.size() == k;
        for (std::size_t j = 0; ok && j < k; ++j) {
          ok = got[j].index == want[j].second && got[j].distance == std::sqrt(want[j].first);
        }
        if (!ok) ++mismatches;
      }
    }
  }
  return {mismatches == 0,
          fmt("%.0f mismatches over %.0f queries (3D and 7D)", double(mismatches), double(queries))};
}

Outcome correspondence_oracle() {
  std::size_t mismatched_points = 0;
  std::size_t runs = 0;
  for (std::uint64_t inst = 0; inst < 50; ++inst) {
    const auto model = MlpPredictor::random(1000 + inst, 4, {32, 64}, {32});
    const auto cloud = oracle::sphere_cloud(128, 2000 + inst);
    TtaConfig aug;
    aug.method = AugmentationMethod::Jitter;
    aug.samples_m = 3;
    aug.jitter.sigma = 0.03;
    aug.master_seed = inst;
    const auto set = make_augmentations(cloud, aug);
    for (auto feat : {FeatureMode::XyzOnly, FeatureMode::XyzPlusLogit}) {
      for (auto agg : {AggregationMode::Max, AggregationMode::Avg}) {
        for (std::size_t k : {1, 3}) {
          TtaConfig cfg;
          cfg.feature_mode = feat;
          cfg.agg_mode = agg;
          cfg.neighbor_k = k;
          const auto got = segment_tta(model, set, cfg).labels;
          const auto want = oracle::segment(model, set, cfg);
          for (std::size_t p = 0; p < want.size(); ++p) mismatched_points += got[p] != want[p];
          ++runs;
        }
      }
    }
  }
  return {mismatched_points == 0,
          fmt("%.0f label mismatches over %.0f runs", double(mismatched_points), double(runs))};
}

Outcome identity_invariance() {
  double worst = 0.0;
  std::size_t label_diffs = 0;
  const auto model = MlpPredictor::random(7, 5, {32, 64}, {32});
  for (std::uint64_t c = 0; c < 5; ++c) {
    const auto cloud = oracle::sphere_cloud(256, 300 + c);
    const LogitMatrix base = classify_logits(model, cloud);
    const auto base_labels = row_argmax(model.point_logits(cloud));
    for (std::size_t m : {1, 5, 10}) {
      TtaConfig cfg;
      cfg.method = AugmentationMethod::IdentityCopy;
      cfg.samples_m = m;
      const auto set = make_augmentations(cloud, cfg);
      worst = std::max(worst, (classify_tta(model, set).logits - base).cwiseAbs().maxCoeff());
      for (auto feat : {FeatureMode::XyzOnly, FeatureMode::XyzPlusLogit}) {
        for (auto agg : {AggregationMode::Max, AggregationMode::Avg}) {
          cfg.feature_mode = feat;
          cfg.agg_mode = agg;
          const auto labels = segment_tta(model, set, cfg).labels;
          for (std::size_t p = 0; p < labels.size(); ++p) label_diffs += labels[p] != base_labels[p];
        }
      }
    }
  }
  return {worst <= 1e-6 && label_diffs == 0,
          fmt("max logit deviation %.2e, %.0f label differences", worst, double(label_diffs))};
}

Outcome jitter_statistics() {
  std::mt19937_64 rng(505);
  const auto cloud = oracle::random_cloud(10000, rng);
  double worst_rel = 0.0;
  for (double sigma : {0.05, 0.07, 0.1}) {
    const auto j = jitter(cloud, {sigma, 17});
    const Points d = j.points - cloud.points;
    for (int a = 0; a < 3; ++a) {
      const double mean = d.col(a).mean();
      const double sd =
          std::sqrt((d.col(a).array() - mean).square().sum() / double(d.rows() - 1));
      worst_rel = std::max(worst_rel, std::abs(sd - sigma) / sigma);
    }
  }
  const bool identity = jitter(cloud, {0.0, 17}).points == cloud.points;
  return {worst_rel <= 0.05 && identity,
          fmt("worst relative std error %.4f, sigma=0 identity ", worst_rel) +
              (identity ? "yes" : "no")};
}

Outcome upsampling_contract() {
  const auto sphere = oracle::sphere_cloud(512, 606);
  UpsampleParams p;
  p.scale_r = 4.0;
  const auto up = upsample(sphere, p);
  const Eigen::ArrayXd err = (up.points.rowwise().norm().array() - 1.0).abs();
  const double within = (err <= 0.05).cast<double>().mean();

  std::vector<SeedProjection> proj;
  for (int i = 0; i < 10; ++i) {
    for (int k = 0; k < 10; ++k) {
      SeedProjection s;
      s.projected = s.seed = Vec3(i * 0.1, k * 0.1, 0.0);
      proj.push_back(s);
    }
  }
  SeedProjection far;
  far.projected = far.seed = Vec3(0.45, 0.45, 10.0);
  proj.push_back(far);
  const auto filtered = remove_outliers(proj, UpsampleParams{});
  bool only_outlier = filtered.kept.size() == 100;
  for (const auto& k : filtered.kept) only_outlier = only_outlier && k.projected.z() == 0.0;

  return {up.size() == 2048 && within >= 0.99 && only_outlier,
          fmt("%.0f points, %.2f%% within 0.05, max error %.4f", double(up.size()), 100.0 * within,
              err.maxCoeff()) +
              (only_outlier ? ", planted outlier removed alone" : ", outlier rule wrong")};
}

Outcome metric_fixtures() {
  const auto cm = ConfusionMatrix::from_counts({{3, 1}, {2, 4}});
  const double oacc = overall_accuracy(cm);
  const double macc = mean_class_accuracy(cm);
  const double miou = mean_iou(cm);
  const PartInstance a1{{0, 0}, {0, 1}, 0, {0}};
  const PartInstance a2{{0, 0, 0}, {0, 0, 0}, 0, {0}};
  const PartInstance b1{{2, 2, 2, 2, 2}, {2, 2, 2, 2, 3}, 1, {2}};
  const auto parts = part_iou({a1, a2, b1});
  const bool ok = std::abs(oacc - 0.7) <= 1e-9 && std::abs(macc - 17.0 / 24.0) <= 1e-9 &&
                  std::abs(miou - 15.0 / 28.0) <= 1e-9 &&
                  std::abs(parts.instance_mean - 2.3 / 3.0) <= 1e-9 &&
                  std::abs(parts.category_mean - 0.775) <= 1e-9;
  return {ok, fmt("oAcc %.6f mAcc %.6f mIoU %.6f", oacc, macc, miou) +
                  fmt(" mInsIoU %.6f mCatIoU %.6f", parts.instance_mean, parts.category_mean)};
}

struct DeskData {
  fs::path dir;
  std::string manifest;
  std::string model;
};

DeskData prepare_desk_data() {
  DeskData d;
  d.dir = cli::scratch("acceptance");
  const auto synth = cli::run("synth --classes sphere,cube,cylinder --per-class 60 --points 2048 "
                              "--noise 0.02 --seed 1 -o " + cli::quote(d.dir / "data"));
  if (synth.status != 0) throw std::runtime_error("synth failed: " + synth.output);
  d.manifest = cli::quote(d.dir / "data" / "manifest.json");
  d.model = cli::quote(d.dir / "centroid.json");
  const auto fit = cli::run("fit-centroid --split train --manifest " + d.manifest + " -o " + d.model);
  if (fit.status != 0) throw std::runtime_error("fit-centroid failed: " + fit.output);
  return d;
}

Outcome desk_experiment(const DeskData& d) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path out = d.dir / "sweep.json";
  const auto r = cli::run("eval --tta upsample --samples 10 --seed 0 --density-sweep 128,2048 "
                          "--manifest " + d.manifest + " --model " + d.model + " -o " +
                          cli::quote(out));
  if (r.status != 0) return {false, "eval failed: " + r.output};
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const json rep = json::parse(read_text_file(out));
  std::string detail;
  bool no_regression = true;
  double gain128 = 0.0, gain2048 = 0.0;
  for (const auto& row : rep["results"]) {
    const double base = row["baseline"]["oAcc"].get<double>() * 100.0;
    const double tta = row["tta"]["oAcc"].get<double>() * 100.0;
    no_regression = no_regression && tta >= base - 0.5;
    const auto pts = row["points"].get<std::size_t>();
    (pts == 128 ? gain128 : gain2048) = tta - base;
    detail += fmt("n=%.0f baseline %.2f%% tta %.2f%%; ", double(pts), base, tta);
  }
  const bool trend = gain128 >= gain2048;
  const bool fast = secs < 120.0;
  detail += std::string("(a) ") + (no_regression ? "ok" : "violated") + ", (b) " +
            (trend ? "ok" : "violated") + fmt(", eval %.1fs", secs);
  return {no_regression && trend && fast, detail};
}

Outcome determinism(const DeskData& d) {
  auto eval = [&](const std::string& threads, const std::string& name) {
    const fs::path out = d.dir / name;
    const auto r = cli::run("eval --tta upsample --samples 10 --seed 3 --density-sweep 128 "
                            "--manifest " + d.manifest + " --model " + d.model + " -o " +
                            cli::quote(out), "PCTTA_THREADS=" + threads);
    if (r.status != 0) throw std::runtime_error("eval failed: " + r.output);
    json j = json::parse(read_text_file(out));
    j.erase("timings");
    return j.dump();
  };
  const std::string a = eval("1", "det_1a.json");
  const std::string b = eval("1", "det_1b.json");
  const std::string c = eval("8", "det_8.json");
  const bool same = a == b && a == c;
  return {same, std::string("threads 1 twice and 8: reports ") +
                    (same ? "byte-identical" : "differ") +
                    fmt(" (%.0f bytes)", double(a.size()))};
}

}  // namespace

int main() {
  report(1, fps_oracle);
  report(2, knn_oracle);
  report(3, correspondence_oracle);
  report(4, identity_invariance);
  report(5, jitter_statistics);
  report(6, upsampling_contract);
  report(7, metric_fixtures);
  DeskData desk;
  bool have_desk = false;
  try {
    desk = prepare_desk_data();
    have_desk = true;
  } catch (const std::exception& e) {
    std::printf("desk dataset unavailable: %s\n", e.what());
  }
  report(8, [&] { return have_desk ? desk_experiment(desk) : Outcome{false, "no dataset"}; });
  report(9, [&] { return have_desk ? determinism(desk) : Outcome{false, "no dataset"}; });
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
