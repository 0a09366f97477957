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
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <utility>
#include <vector>

#include "pctta/error.hpp"
#include "pctta/point_cloud.hpp"

namespace pctta {

struct Neighbor {
  std::size_t index;
  double distance;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Squared Euclidean distance, accumulated coordinate by coordinate in
/// index order. All searches (and their tests) share this summation order so
/// tree results compare bit-exactly against linear scans.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar squared_distance(const Eigen::MatrixBase<DerivedA>& a,
                                           const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  Scalar sum(0);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const Scalar diff = a(i) - b(i);
    sum += diff * diff;
  }
  return sum;
}

/// Exact k-nearest-neighbor index over the rows of an n x d matrix.
///
/// Immutable after construction; concurrent queries are safe. Results are
/// ordered by (distance, index), so equidistant points resolve toward the
/// lower index, matching a stable linear scan.
template <typename Scalar>
class KdTree {
 public:
  using Matrix = RowMatrix<Scalar>;

  explicit KdTree(Matrix points, std::size_t leaf_size = 8)
      : points_(std::move(points)), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
    if (points_.rows() == 0) {
      throw Error(ErrorCode::EmptyCloud, "cannot index an empty point set");
    }
    order_.resize(static_cast<std::size_t>(points_.rows()));
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    nodes_.reserve(2 * order_.size() / leaf_size_ + 1);
    build(0, order_.size());
  }

  std::size_t size() const { return order_.size(); }
  Eigen::Index dimension() const { return points_.cols(); }
  const Matrix& points() const { return points_; }

  /// The min(k, n) nearest rows to `query`, nondecreasing in distance.
  template <typename Derived>
  std::vector<Neighbor> knn(const Eigen::MatrixBase<Derived>& query,
                            std::size_t k) const {
    if (query.size() != points_.cols()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "query dimension " + std::to_string(query.size()) +
                      " does not match index dimension " +
                      std::to_string(points_.cols()));
    }
    if (k == 0) {
      throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
    }
    k = std::min(k, size());
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> q = query.template cast<Scalar>();
    std::vector<Candidate> best;
    best.reserve(k + 1);
    search(0, q, k, best);
    std::vector<Neighbor> out;
    out.reserve(best.size());
    for (const auto& c : best) {
      out.push_back({c.index, std::sqrt(static_cast<double>(c.d2))});
    }
    return out;
  }

 private:
  struct Node {
    std::size_t begin;
    std::size_t end;
    std::size_t left = 0;  // 0 marks a leaf; node 0 is the root and never a child
    std::size_t right = 0;
    Eigen::Index split_dim = 0;
    Scalar split_value = Scalar(0);
  };

  struct Candidate {
    Scalar d2;
    std::size_t index;
    bool operator<(const Candidate& o) const {
      return d2 < o.d2 || (d2 == o.d2 && index < o.index);
    }
  };

  std::size_t build(std::size_t begin, std::size_t end) {
    const std::size_t id = nodes_.size();
    nodes_.push_back({begin, end});
    if (end - begin <= leaf_size_) return id;

    Eigen::Index dim = 0;
    Scalar widest(-1);
    for (Eigen::Index d = 0; d < points_.cols(); ++d) {
      Scalar lo = points_(static_cast<Eigen::Index>(order_[begin]), d);
      Scalar hi = lo;
      for (std::size_t i = begin + 1; i < end; ++i) {
        const Scalar v = points_(static_cast<Eigen::Index>(order_[i]), d);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi - lo > widest) {
        widest = hi - lo;
        dim = d;
      }
    }
    if (widest <= Scalar(0)) return id;  // all rows identical

    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                     order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) {
                       return points_(static_cast<Eigen::Index>(a), dim) <
                              points_(static_cast<Eigen::Index>(b), dim);
                     });
    const Scalar split = points_(static_cast<Eigen::Index>(order_[mid]), dim);
    const std::size_t left = build(begin, mid);
    const std::size_t right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    nodes_[id].split_dim = dim;
    nodes_[id].split_value = split;
    return id;
  }

  void offer(std::vector<Candidate>& best, std::size_t k, Candidate c) const {
    if (best.size() == k && !(c < best.back())) return;
    auto pos = std::upper_bound(best.begin(), best.end(), c);
    best.insert(pos, c);
    if (best.size() > k) best.pop_back();
  }

  void search(std::size_t id, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& q,
              std::size_t k, std::vector<Candidate>& best) const {
    const Node& node = nodes_[id];
    if (node.left == 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const std::size_t idx = order_[i];
        offer(best, k,
              {squared_distance(q, points_.row(static_cast<Eigen::Index>(idx)).transpose()),
               idx});
      }
      return;
    }
    const Scalar diff = q(node.split_dim) - node.split_value;
    const std::size_t near = diff < Scalar(0) ? node.left : node.right;
    const std::size_t far = diff < Scalar(0) ? node.right : node.left;
    search(near, q, k, best);
    // Points on the far side lie at least |diff| away. Equality must still be
    // visited since a tie with a lower index may live there.
    if (best.size() < k || !(diff * diff > best.back().d2)) {
      search(far, q, k, best);
    }
  }

  Matrix points_;
  std::size_t leaf_size_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

using SpatialIndex = KdTree<double>;

SpatialIndex build_spatial_index(const PointCloud& cloud);

/// Nearest neighbors of a 3D query (or feature row for feature-space indices).
template <typename Derived>
std::vector<Neighbor> knn(const SpatialIndex& index,
                          const Eigen::MatrixBase<Derived>& query, std::size_t k) {
  return index.knn(query, k);
}

}  // namespace pctta
