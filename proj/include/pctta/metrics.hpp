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

#include <cstddef>
#include <cstdint>
#include <set>
#include <vector>

namespace pctta {

/// Rows are ground truth, columns are predictions.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes = 0);
  /// From explicit counts; every row must have the same length.
  static ConfusionMatrix from_counts(const std::vector<std::vector<std::uint64_t>>& counts);

  void add(int truth, int prediction, std::uint64_t count = 1);
  void add(const std::vector<int>& truth, const std::vector<int>& prediction);
  ConfusionMatrix& merge(const ConfusionMatrix& other);

  std::size_t classes() const { return n_; }
  std::uint64_t at(std::size_t truth, std::size_t prediction) const {
    return counts_[truth * n_ + prediction];
  }
  std::uint64_t total() const;
  std::uint64_t row_sum(std::size_t c) const;
  std::uint64_t col_sum(std::size_t c) const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t n_;
  std::vector<std::uint64_t> counts_;
};

double overall_accuracy(const ConfusionMatrix& cm);
/// Classes without ground-truth samples are left out of the mean.
double mean_class_accuracy(const ConfusionMatrix& cm);
/// Classes absent from both ground truth and predictions are left out.
double mean_iou(const ConfusionMatrix& cm);

struct PartInstance {
  std::vector<int> truth;
  std::vector<int> prediction;
  int category = 0;
  std::set<int> parts;
};

/// Mean over the instance's part set of tp / (tp + fp + fn). A part absent
/// from both truth and prediction scores 1.
double instance_iou(const PartInstance& instance);

struct PartIouSummary {
  double instance_mean = 0.0;  // mInsIoU
  double category_mean = 0.0;  // mCatIoU
};

/// mInsIoU averages all instances; mCatIoU averages per-category means.
PartIouSummary part_iou(const std::vector<PartInstance>& instances);

}  // namespace pctta
