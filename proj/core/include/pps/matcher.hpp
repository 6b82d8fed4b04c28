// Copyright 2026 The PPS Toolkit Authors.
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

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pps/head.hpp"
#include "pps/model.hpp"

namespace pps {

/// Dense rows x cols cost matrix, lower is better. Entries must be finite;
/// rectangular instances are padded internally with a large finite sentinel.
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct Assignment {
  /// (prediction index, target index), sorted by prediction index.
  /// Exactly min(rows, cols) pairs.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  /// Prediction indices matched to no target, ascending. These receive the
  /// "no object" (or "no part") supervision downstream.
  std::vector<std::size_t> unmatched_predictions;
  double total_cost = 0.0;
};

/// Globally optimal assignment (Kuhn-Munkres / Jonker-Volgenant potentials).
/// Among co-optimal assignments the lexicographically smallest pair list is
/// returned, so repeated runs are bit-identical. An empty matrix yields an
/// empty assignment.
Assignment hungarian(const CostMatrix& cost);

struct MatchCostWeights {
  double w_class = 2.0;
  double w_ce_mask = 5.0;
  double w_dice = 5.0;
  /// Class term is -score by default; switch to -log(score) if preferred.
  bool log_prob_class_cost = false;
};

/// Matching cost between one query prediction and one ground-truth object:
///   w_class * class_term + w_ce_mask * bce(mask prob, gt mask)
///     + w_dice * dice(mask prob, gt mask)
/// Probabilities are clamped to [1e-7, 1 - 1e-7] inside the log terms.
double match_cost(const QueryPrediction& pred, const ObjectSegment& gt,
                  const MatchCostWeights& w);

CostMatrix build_match_cost_matrix(std::span<const QueryPrediction> preds,
                                   const SegmentSet& gts,
                                   const MatchCostWeights& w);

/// Builds the full prediction/ground-truth cost matrix and solves it.
Assignment match_queries(std::span<const QueryPrediction> preds,
                         const SegmentSet& gts, const MatchCostWeights& w);

/// Per-object assignment of dynamic part queries to ground-truth parts, with
/// the same cost structure over part classes and masks. Caller restricts all
/// masks to the parent object. Unmatched queries get "no part" supervision.
Assignment match_parts_per_object(
    std::span<const DynamicPartPrediction> dynamic_preds,
    std::span<const PartSegment> gt_parts, const MatchCostWeights& w);

}  // namespace pps
