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
#include <optional>
#include <string_view>

#include "pctta/augmentation.hpp"

namespace pctta {

/// Space used to match x_0 points against augmented clouds.
enum class FeatureMode { XyzOnly, XyzPlusLogit };
enum class AggregationMode { Max, Avg };

std::string_view to_string(FeatureMode mode);
std::string_view to_string(AggregationMode mode);
/// "xyz" or "xyz+logit".
FeatureMode parse_feature_mode(std::string_view name);
/// "max" or "avg".
AggregationMode parse_aggregation_mode(std::string_view name);

struct TtaConfig {
  AugmentationMethod method = AugmentationMethod::Upsample;
  std::size_t samples_m = 10;
  FeatureMode feature_mode = FeatureMode::XyzPlusLogit;
  AggregationMode agg_mode = AggregationMode::Avg;
  std::size_t neighbor_k = 1;
  double logit_weight = 1.0;
  /// Aggregate softmax probabilities instead of raw logits.
  bool aggregate_probabilities = false;
  std::uint64_t master_seed = 0;
  JitterParams jitter;
  UpsampleParams upsample;
  /// Point count of each augmented cloud; unset keeps the input count.
  std::optional<std::size_t> target_count;

  void validate() const;
};

}  // namespace pctta
