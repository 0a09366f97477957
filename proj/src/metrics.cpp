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

#include "pctta/metrics.hpp"

#include <map>
#include <numeric>
#include <string>

#include "pctta/error.hpp"

namespace pctta {

ConfusionMatrix::ConfusionMatrix(std::size_t classes)
    : n_(classes), counts_(classes * classes, 0) {}

ConfusionMatrix ConfusionMatrix::from_counts(
    const std::vector<std::vector<std::uint64_t>>& counts) {
  ConfusionMatrix cm(counts.size());
  for (std::size_t r = 0; r < counts.size(); ++r) {
    if (counts[r].size() != counts.size()) {
      throw Error(ErrorCode::DimensionMismatch, "confusion matrix must be square");
    }
    for (std::size_t c = 0; c < counts.size(); ++c) cm.counts_[r * cm.n_ + c] = counts[r][c];
  }
  return cm;
}

void ConfusionMatrix::add(int truth, int prediction, std::uint64_t count) {
  if (truth < 0 || prediction < 0 || static_cast<std::size_t>(truth) >= n_ ||
      static_cast<std::size_t>(prediction) >= n_) {
    throw Error(ErrorCode::InvalidArgument,
                "label out of range: truth " + std::to_string(truth) + ", prediction " +
                    std::to_string(prediction) + ", classes " + std::to_string(n_));
  }
  counts_[static_cast<std::size_t>(truth) * n_ + static_cast<std::size_t>(prediction)] += count;
}

void ConfusionMatrix::add(const std::vector<int>& truth, const std::vector<int>& prediction) {
  if (truth.size() != prediction.size()) {
    throw Error(ErrorCode::DimensionMismatch, "truth and prediction lengths differ");
  }
  for (std::size_t i = 0; i < truth.size(); ++i) add(truth[i], prediction[i]);
}

ConfusionMatrix& ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.n_ != n_) throw Error(ErrorCode::DimensionMismatch, "class counts differ");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t c) const {
  std::uint64_t s = 0;
  for (std::size_t j = 0; j < n_; ++j) s += at(c, j);
  return s;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t c) const {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < n_; ++i) s += at(i, c);
  return s;
}

namespace {
void require_samples(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error(ErrorCode::EmptyMatrix, "confusion matrix has no samples");
}
}  // namespace

double overall_accuracy(const ConfusionMatrix& cm) {
  require_samples(cm);
  std::uint64_t trace = 0;
  for (std::size_t c = 0; c < cm.classes(); ++c) trace += cm.at(c, c);
  return static_cast<double>(trace) / static_cast<double>(cm.total());
}

double mean_class_accuracy(const ConfusionMatrix& cm) {
  require_samples(cm);
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    const std::uint64_t row = cm.row_sum(c);
    if (row == 0) continue;
    sum += static_cast<double>(cm.at(c, c)) / static_cast<double>(row);
    ++used;
  }
  return sum / static_cast<double>(used);
}

double mean_iou(const ConfusionMatrix& cm) {
  require_samples(cm);
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    const std::uint64_t tp = cm.at(c, c);
    const std::uint64_t uni = cm.row_sum(c) + cm.col_sum(c) - tp;
    if (uni == 0) continue;
    sum += static_cast<double>(tp) / static_cast<double>(uni);
    ++used;
  }
  return sum / static_cast<double>(used);
}

double instance_iou(const PartInstance& instance) {
  if (instance.truth.size() != instance.prediction.size()) {
    throw Error(ErrorCode::DimensionMismatch, "truth and prediction lengths differ");
  }
  if (instance.parts.empty()) throw Error(ErrorCode::EmptyInput, "instance has no part set");
  double sum = 0.0;
  for (int part : instance.parts) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < instance.truth.size(); ++i) {
      const bool t = instance.truth[i] == part;
      const bool p = instance.prediction[i] == part;
      tp += t && p;
      fp += !t && p;
      fn += t && !p;
    }
    const std::size_t uni = tp + fp + fn;
    sum += uni == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(uni);
  }
  return sum / static_cast<double>(instance.parts.size());
}

PartIouSummary part_iou(const std::vector<PartInstance>& instances) {
  if (instances.empty()) throw Error(ErrorCode::EmptyInput, "no part instances");
  std::map<int, std::pair<double, std::size_t>> per_category;
  double total = 0.0;
  for (const auto& inst : instances) {
    const double iou = instance_iou(inst);
    total += iou;
    auto& [sum, count] = per_category[inst.category];
    sum += iou;
    ++count;
  }
  PartIouSummary out;
  out.instance_mean = total / static_cast<double>(instances.size());
  double cat_sum = 0.0;
  for (const auto& [category, acc] : per_category) {
    cat_sum += acc.first / static_cast<double>(acc.second);
  }
  out.category_mean = cat_sum / static_cast<double>(per_category.size());
  return out;
}

}  // namespace pctta
