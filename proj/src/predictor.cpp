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

#include "pctta/predictor.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string_view>

#include "json.hpp"
#include "pctta/error.hpp"
#include "pctta/geometry.hpp"
#include "pctta/rng.hpp"

namespace pctta {

namespace {

constexpr std::string_view kMagic = "PCTTAW1";

std::string_view role_name(DenseLayer::Role role) {
  switch (role) {
    case DenseLayer::Role::Point: return "point";
    case DenseLayer::Role::ClassHead: return "class head";
    case DenseLayer::Role::SegHead: return "seg head";
  }
  return "unknown";
}

void check_layer(const DenseLayer& layer, std::size_t position, Eigen::Index expected_in) {
  const std::string where =
      "layer " + std::to_string(position) + " (" + std::string(role_name(layer.role)) + ")";
  if (layer.bias.size() != layer.out_dim()) {
    throw Error(ErrorCode::DimensionMismatch, where + " has " +
                                                  std::to_string(layer.bias.size()) +
                                                  " biases for " +
                                                  std::to_string(layer.out_dim()) + " outputs");
  }
  if (layer.in_dim() != expected_in) {
    throw Error(ErrorCode::DimensionMismatch,
                where + " expects " + std::to_string(layer.in_dim()) + " inputs but receives " +
                    std::to_string(expected_in));
  }
  if (layer.out_dim() == 0) {
    throw Error(ErrorCode::DimensionMismatch, where + " has no outputs");
  }
  if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
    throw Error(ErrorCode::ParseError, where + " has non-finite weights");
  }
}

// rows x in -> rows x out
Eigen::MatrixXd affine(const Eigen::MatrixXd& x, const DenseLayer& layer) {
  Eigen::MatrixXd y = x * layer.weight.transpose();
  y.rowwise() += layer.bias.transpose();
  return y;
}

void relu_inplace(Eigen::MatrixXd& x) { x = x.cwiseMax(0.0); }

float uniform_weight(std::uint64_t& state) {
  state = splitmix64(state);
  const double unit = static_cast<double>(state >> 11) * 0x1.0p-53;  // [0, 1)
  return static_cast<float>(-0.1 + 0.2 * unit);
}

DenseLayer random_layer(DenseLayer::Role role, std::size_t out, std::size_t in,
                        std::uint64_t& state) {
  DenseLayer layer;
  layer.role = role;
  layer.weight.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
  layer.bias.resize(static_cast<Eigen::Index>(out));
  for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
      layer.weight(r, c) = uniform_weight(state);
    }
  }
  for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = uniform_weight(state);
  return layer;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, double v) {
  const float f = static_cast<float>(v);
  std::uint32_t bits = 0;
  std::memcpy(&bits, &f, sizeof bits);
  put_u32(out, bits);
}

class ByteReader {
 public:
  explicit ByteReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32(const char* what) {
    const std::uint32_t bits = u32(what);
    float f = 0.0f;
    std::memcpy(&f, &bits, sizeof f);
    return f;
  }
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorCode::ParseError, std::string("truncated weights file at offset ") +
                                             std::to_string(pos_) + " while reading " + what);
    }
  }
  std::size_t pos() const { return pos_; }
  void skip(std::size_t n) { pos_ += n; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

bool operator==(const DenseLayer& a, const DenseLayer& b) {
  return a.role == b.role && a.weight.rows() == b.weight.rows() &&
         a.weight.cols() == b.weight.cols() && a.weight == b.weight && a.bias == b.bias;
}

bool operator==(const MlpPredictor& a, const MlpPredictor& b) {
  return a.layers() == b.layers();
}

MlpPredictor::MlpPredictor(std::vector<DenseLayer> point_layers, DenseLayer class_head,
                           std::vector<DenseLayer> seg_head)
    : point_layers_(std::move(point_layers)),
      class_head_(std::move(class_head)),
      seg_head_(std::move(seg_head)) {
  if (point_layers_.empty()) {
    throw Error(ErrorCode::DimensionMismatch, "model needs at least one point layer");
  }
  std::size_t position = 0;
  Eigen::Index dim = 3;
  for (auto& layer : point_layers_) {
    layer.role = DenseLayer::Role::Point;
    check_layer(layer, position++, dim);
    dim = layer.out_dim();
  }
  class_head_.role = DenseLayer::Role::ClassHead;
  check_layer(class_head_, position++, dim);
  dim = static_cast<Eigen::Index>(local_dim() + feature_dim());
  for (auto& layer : seg_head_) {
    layer.role = DenseLayer::Role::SegHead;
    check_layer(layer, position++, dim);
    dim = layer.out_dim();
  }
  if (!seg_head_.empty() && dim != class_head_.out_dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "layer " + std::to_string(position - 1) + " (seg head) emits " +
                    std::to_string(dim) + " logits but the class head emits " +
                    std::to_string(class_head_.out_dim()));
  }
}

MlpPredictor MlpPredictor::random(std::uint64_t seed, std::size_t class_count,
                                  std::vector<std::size_t> point_dims,
                                  std::vector<std::size_t> seg_hidden) {
  if (point_dims.empty() || class_count == 0) {
    throw Error(ErrorCode::InvalidArgument, "random model needs layers and classes");
  }
  std::uint64_t state = seed;
  std::vector<DenseLayer> points;
  std::size_t in = 3;
  for (std::size_t d : point_dims) {
    points.push_back(random_layer(DenseLayer::Role::Point, d, in, state));
    in = d;
  }
  const std::size_t global = point_dims.back();
  const std::size_t local = point_dims.size() >= 2 ? point_dims[point_dims.size() - 2] : 3;
  DenseLayer head = random_layer(DenseLayer::Role::ClassHead, class_count, global, state);
  std::vector<DenseLayer> seg;
  in = local + global;
  for (std::size_t d : seg_hidden) {
    seg.push_back(random_layer(DenseLayer::Role::SegHead, d, in, state));
    in = d;
  }
  seg.push_back(random_layer(DenseLayer::Role::SegHead, class_count, in, state));
  return MlpPredictor(std::move(points), std::move(head), std::move(seg));
}

std::size_t MlpPredictor::class_count() const {
  return static_cast<std::size_t>(class_head_.out_dim());
}

std::size_t MlpPredictor::feature_dim() const {
  return static_cast<std::size_t>(point_layers_.back().out_dim());
}

std::size_t MlpPredictor::local_dim() const {
  if (point_layers_.size() < 2) return 3;
  return static_cast<std::size_t>(point_layers_[point_layers_.size() - 2].out_dim());
}

std::vector<DenseLayer> MlpPredictor::layers() const {
  std::vector<DenseLayer> all = point_layers_;
  all.push_back(class_head_);
  all.insert(all.end(), seg_head_.begin(), seg_head_.end());
  return all;
}

MlpPredictor::Activations MlpPredictor::run_point_layers(const PointCloud& cloud) const {
  if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "cannot run a model on an empty cloud");
  Activations act;
  Eigen::MatrixXd h = cloud.points;
  if (point_layers_.size() < 2) act.local = h;
  for (std::size_t i = 0; i < point_layers_.size(); ++i) {
    h = affine(h, point_layers_[i]);
    relu_inplace(h);
    if (point_layers_.size() >= 2 && i + 2 == point_layers_.size()) act.local = h;
  }
  act.output = std::move(h);
  return act;
}

Eigen::VectorXd MlpPredictor::global_feature(const PointCloud& cloud) const {
  return run_point_layers(cloud).output.colwise().maxCoeff().transpose();
}

LogitMatrix MlpPredictor::classify(const Eigen::VectorXd& feature) const {
  if (static_cast<std::size_t>(feature.size()) != feature_dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "feature has " + std::to_string(feature.size()) + " entries, head expects " +
                    std::to_string(feature_dim()));
  }
  return affine(feature.transpose(), class_head_);
}

LogitMatrix MlpPredictor::point_logits(const PointCloud& cloud) const {
  if (seg_head_.empty()) {
    throw Error(ErrorCode::DimensionMismatch, "model has no segmentation head");
  }
  Activations act = run_point_layers(cloud);
  const Eigen::RowVectorXd global = act.output.colwise().maxCoeff();
  Eigen::MatrixXd h(act.local.rows(), act.local.cols() + global.size());
  h.leftCols(act.local.cols()) = act.local;
  h.rightCols(global.size()) = global.replicate(act.local.rows(), 1);
  for (std::size_t i = 0; i < seg_head_.size(); ++i) {
    h = affine(h, seg_head_[i]);
    if (i + 1 < seg_head_.size()) relu_inplace(h);
  }
  return h;
}

std::vector<std::uint8_t> serialize_predictor(const MlpPredictor& model) {
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  const auto layers = model.layers();
  put_u32(out, static_cast<std::uint32_t>(layers.size()));
  for (const auto& layer : layers) {
    put_u32(out, static_cast<std::uint32_t>(layer.role));
    put_u32(out, static_cast<std::uint32_t>(layer.out_dim()));
    put_u32(out, static_cast<std::uint32_t>(layer.in_dim()));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) put_f32(out, layer.weight(r, c));
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) put_f32(out, layer.bias(r));
  }
  return out;
}

MlpPredictor parse_predictor(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kMagic.size() ||
      std::string_view(reinterpret_cast<const char*>(bytes.data()), kMagic.size()) != kMagic) {
    throw Error(ErrorCode::ParseError, "bad weights magic (expected PCTTAW1)");
  }
  ByteReader in(bytes);
  in.skip(kMagic.size());
  const std::uint32_t count = in.u32("layer count");
  std::vector<DenseLayer> points;
  std::vector<DenseLayer> seg;
  std::optional<DenseLayer> head;
  for (std::uint32_t l = 0; l < count; ++l) {
    DenseLayer layer;
    const std::uint32_t role = in.u32("layer role");
    if (role > 2) {
      throw Error(ErrorCode::ParseError,
                  "layer " + std::to_string(l) + " has unknown role " + std::to_string(role));
    }
    layer.role = static_cast<DenseLayer::Role>(role);
    const std::uint32_t rows = in.u32("layer rows");
    const std::uint32_t cols = in.u32("layer cols");
    const std::uint64_t values = static_cast<std::uint64_t>(rows) * cols + rows;
    if (values > in.remaining() / 4) {
      throw Error(ErrorCode::ParseError, "truncated weights file in layer " + std::to_string(l));
    }
    layer.weight.resize(rows, cols);
    layer.bias.resize(rows);
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < cols; ++c) layer.weight(r, c) = in.f32("weights");
    }
    for (std::uint32_t r = 0; r < rows; ++r) layer.bias(r) = in.f32("biases");

    switch (layer.role) {
      case DenseLayer::Role::Point:
        if (head || !seg.empty()) {
          throw Error(ErrorCode::ParseError,
                      "layer " + std::to_string(l) + ": point layer after a head");
        }
        points.push_back(std::move(layer));
        break;
      case DenseLayer::Role::ClassHead:
        if (head || !seg.empty()) {
          throw Error(ErrorCode::ParseError,
                      "layer " + std::to_string(l) + ": unexpected class head");
        }
        head = std::move(layer);
        break;
      case DenseLayer::Role::SegHead:
        if (!head) {
          throw Error(ErrorCode::ParseError,
                      "layer " + std::to_string(l) + ": seg head before class head");
        }
        seg.push_back(std::move(layer));
        break;
    }
  }
  if (in.remaining() != 0) {
    throw Error(ErrorCode::ParseError,
                "trailing bytes after layer " + std::to_string(count) + " at offset " +
                    std::to_string(in.pos()));
  }
  if (!head) throw Error(ErrorCode::ParseError, "weights file has no class head");
  return MlpPredictor(std::move(points), std::move(*head), std::move(seg));
}

void save_predictor(const MlpPredictor& model, const std::filesystem::path& path) {
  const auto bytes = serialize_predictor(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

MlpPredictor load_predictor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return parse_predictor(bytes);
}

bool is_weights_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::string head(kMagic.size(), '\0');
  in.read(head.data(), static_cast<std::streamsize>(head.size()));
  return in.gcount() == static_cast<std::streamsize>(kMagic.size()) && head == kMagic;
}

Eigen::VectorXd extract_global_feature(const MlpPredictor& model, const PointCloud& cloud) {
  return model.global_feature(cloud);
}

LogitMatrix classify_logits(const GlobalClassifier& model, const Eigen::VectorXd& feature) {
  return model.classify(feature);
}

LogitMatrix classify_logits(const GlobalClassifier& model, const PointCloud& cloud) {
  return model.classify(model.global_feature(cloud));
}

LogitMatrix per_point_logits(const MlpPredictor& model, const PointCloud& cloud) {
  return model.point_logits(cloud);
}

// --- centroid classifier ---------------------------------------------------

Eigen::VectorXd radial_histogram(const PointCloud& cloud, std::size_t bins) {
  if (bins == 0) throw Error(ErrorCode::InvalidArgument, "histogram needs at least one bin");
  const auto normalized = normalize_unit_sphere(cloud).first;
  Eigen::VectorXd hist = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(bins));
  for (Eigen::Index i = 0; i < normalized.points.rows(); ++i) {
    const double r = normalized.points.row(i).norm();
    auto bin = static_cast<Eigen::Index>(std::floor(r * static_cast<double>(bins)));
    bin = std::clamp<Eigen::Index>(bin, 0, static_cast<Eigen::Index>(bins) - 1);
    hist(bin) += 1.0;
  }
  return hist / static_cast<double>(normalized.points.rows());
}

CentroidClassifier::CentroidClassifier(std::size_t bins, Eigen::MatrixXd centroids)
    : bins_(bins), centroids_(std::move(centroids)) {
  if (bins_ == 0 || static_cast<std::size_t>(centroids_.cols()) != bins_) {
    throw Error(ErrorCode::DimensionMismatch, "centroid width must equal the bin count");
  }
  if (centroids_.rows() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "classifier needs at least one class");
  }
}

Eigen::VectorXd CentroidClassifier::global_feature(const PointCloud& cloud) const {
  return radial_histogram(cloud, bins_);
}

LogitMatrix CentroidClassifier::classify(const Eigen::VectorXd& feature) const {
  if (static_cast<std::size_t>(feature.size()) != bins_) {
    throw Error(ErrorCode::DimensionMismatch,
                "descriptor has " + std::to_string(feature.size()) + " bins, classifier expects " +
                    std::to_string(bins_));
  }
  LogitMatrix logits(1, centroids_.rows());
  for (Eigen::Index c = 0; c < centroids_.rows(); ++c) {
    logits(0, c) = -(centroids_.row(c).transpose() - feature).norm();
  }
  return logits;
}

CentroidClassifier fit_centroid_classifier(
    const std::vector<std::pair<PointCloud, int>>& dataset, std::size_t bins,
    std::size_t class_count) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyInput, "no training examples");
  for (const auto& [cloud, label] : dataset) {
    if (label < 0) throw Error(ErrorCode::InvalidArgument, "negative class label");
    class_count = std::max(class_count, static_cast<std::size_t>(label) + 1);
  }
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(class_count),
                                               static_cast<Eigen::Index>(bins));
  std::vector<std::size_t> counts(class_count, 0);
  for (const auto& [cloud, label] : dataset) {
    sums.row(label) += radial_histogram(cloud, bins).transpose();
    ++counts[static_cast<std::size_t>(label)];
  }
  for (std::size_t c = 0; c < class_count; ++c) {
    if (counts[c] == 0) {
      throw Error(ErrorCode::MissingClass, "class " + std::to_string(c) + " has no examples");
    }
    sums.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(counts[c]);
  }
  return CentroidClassifier(bins, std::move(sums));
}

void save_centroid_classifier(const CentroidClassifier& model,
                              const std::filesystem::path& path) {
  nlohmann::json j;
  j["type"] = "centroid_classifier";
  j["bins"] = model.bins();
  auto& rows = j["centroids"] = nlohmann::json::array();
  for (Eigen::Index c = 0; c < model.centroids().rows(); ++c) {
    std::vector<double> row;
    for (Eigen::Index b = 0; b < model.centroids().cols(); ++b) {
      row.push_back(model.centroids()(c, b));
    }
    rows.push_back(row);
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

CentroidClassifier load_centroid_classifier(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
    if (j.at("type").get<std::string>() != "centroid_classifier") {
      throw Error(ErrorCode::ParseError, path.string() + ": not a centroid classifier");
    }
    const auto bins = j.at("bins").get<std::size_t>();
    const auto& rows = j.at("centroids");
    Eigen::MatrixXd centroids(static_cast<Eigen::Index>(rows.size()),
                              static_cast<Eigen::Index>(bins));
    for (std::size_t c = 0; c < rows.size(); ++c) {
      const auto row = rows[c].get<std::vector<double>>();
      if (row.size() != bins) {
        throw Error(ErrorCode::DimensionMismatch,
                    path.string() + ": centroid " + std::to_string(c) + " has wrong width");
      }
      for (std::size_t b = 0; b < bins; ++b) {
        centroids(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(b)) = row[b];
      }
    }
    return CentroidClassifier(bins, std::move(centroids));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

}  // namespace pctta
