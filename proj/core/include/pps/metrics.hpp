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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pps/model.hpp"
#include "pps/taxonomy.hpp"

namespace pps {

/// Plain Intersection-over-Union of two masks; 0 when both are empty.
double iou(const BitMask& a, const BitMask& b);

/// IoU restricted to `valid` pixels (ground-truth void is excluded from both
/// numerator and denominator everywhere in the evaluation).
double iou(const BitMask& a, const BitMask& b, const BitMask& valid);

/// Segmentation agreement inside one matched object pair.
///
/// Classes without parts fall back to the object-level IoU. For part-bearing
/// classes the result is the mean IoU over evaluated categories:
///   - each compatible part class present (inside valid pixels) on either
///     side; classes absent from both sides are skipped, unless `strict` is
///     set, in which case they count as 1.0 (agreement on absence);
///   - the residual part-0 region (object pixels outside every part), as an
///     implicit extra category, only when present on either side.
/// Part pixels are taken only inside the respective object masks.
double iou_p(const ObjectSegment& pred, const ObjectSegment& gt,
             const Taxonomy& t, const BitMask* valid = nullptr,
             bool strict = false);

struct MatchedPair {
  std::size_t pred_index = 0;
  std::size_t gt_index = 0;
  double iou = 0.0;    // object-level IoU, in (0.5, 1]
  double iou_p = 0.0;  // within-pair segmentation agreement, in [0, 1]
};

struct ClassMatches {
  ClassId class_id = 0;
  std::vector<MatchedPair> pairs;
  std::vector<std::size_t> fp_pred_indices;
  std::vector<std::size_t> fn_gt_indices;
};

/// Per-class matching for one image pair: same-class segments with object
/// IoU > 0.5 are true positives (unique because masks are disjoint on both
/// sides), remaining predictions are false positives, remaining ground
/// truths false negatives. Only classes that occur on either side appear.
std::vector<ClassMatches> match_for_metrics(const SegmentSet& pred,
                                            const SegmentSet& gt,
                                            const Taxonomy& t,
                                            bool strict = false);

struct ClassMetrics {
  ClassId class_id = 0;
  std::string name;
  bool has_parts = false;
  bool is_thing = false;
  bool present = false;  // tp + fp + fn > 0 over the dataset
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  double sum_iou_p = 0.0;
  double sum_iou = 0.0;
  double part_pq = 0.0;  // x100
  double part_sq = 0.0;  // x100
  double pq = 0.0;       // x100
};

struct EvalAggregates {
  double part_pq_pt = 0.0;
  double part_pq_nopt = 0.0;
  double part_pq_all = 0.0;
  double part_sq_pt = 0.0;
  double pq_th = 0.0;
  double pq_st = 0.0;
  double pq_all = 0.0;
  double miou_th = 0.0;
  std::uint64_t images = 0;
};

struct EvalReport {
  std::vector<ClassMetrics> per_class;  // one entry per taxonomy class
  EvalAggregates aggregates;
};

struct EvalOptions {
  bool strict_iou_p = false;
  unsigned workers = 1;
};

/// Streaming per-class accumulator. Image contributions merge associatively
/// and commutatively; finalize() sorts recorded values before summation so
/// reports are invariant to image order and worker count.
class Evaluator {
 public:
  Evaluator(const Taxonomy& t, EvalOptions options = {});

  void add_image(const SegmentSet& pred, const SegmentSet& gt);
  void merge(const Evaluator& other);
  EvalReport finalize() const;

 private:
  struct ClassAccum {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::vector<double> iou_p_values;
    std::vector<double> iou_values;
    std::uint64_t semantic_intersection = 0;  // instance-agnostic, things
    std::uint64_t semantic_union = 0;
  };

  const Taxonomy* taxonomy_;
  EvalOptions options_;
  std::vector<ClassAccum> per_class_;
  std::uint64_t images_ = 0;
};

/// Evaluates aligned prediction/ground-truth streams. With options.workers
/// > 1 images are processed in parallel and reduced in image order; the
/// report is identical for every worker count.
EvalReport evaluate(std::span<const SegmentSet> preds,
                    std::span<const SegmentSet> gts, const Taxonomy& t,
                    const EvalOptions& options = {});

/// Instance-agnostic semantic mIoU over thing classes (x100): instances of a
/// class merge into one mask per side, intersections and unions accumulate
/// over the dataset, and the mean runs over thing classes with any pixels.
double miou_things(std::span<const SegmentSet> preds,
                   std::span<const SegmentSet> gts, const Taxonomy& t);

std::string report_to_text(const EvalReport& report, const Taxonomy& t);
std::string report_to_json(const EvalReport& report, const Taxonomy& t);

}  // namespace pps
