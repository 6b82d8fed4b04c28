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

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pps/model.hpp"
#include "pps/taxonomy.hpp"

namespace pps {

/// Dense affine map y = W x + b with W stored row-major (out x in).
struct AffineLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weight;
  std::vector<double> bias;

  static AffineLayer zeros(std::size_t in, std::size_t out);
  static AffineLayer identity(std::size_t n);

  void apply(std::span<const double> x, std::span<double> y) const;
};

/// Parameters of the joint object-and-part prediction head. Per query the
/// head produces class scores (C real classes plus "no object"), an object
/// mask embedding via a 3-layer MLP, and per-part-class mask embeddings via
/// an adaptation MLP followed by one fixed projection per part class.
struct HeadWeights {
  AffineLayer class_head;                     // E -> C+1
  std::array<AffineLayer, 3> mask_mlp;        // E -> E -> E -> E, ReLU between
  std::vector<AffineLayer> adapt_mlp;         // depth 0..3, ReLU between
  std::vector<AffineLayer> part_projections;  // one E -> E map per part class

  /// Zero-initialized weights for the given dimensions (adapt depth 2).
  static HeadWeights zeros(std::size_t embed_dim, std::size_t num_classes,
                           std::size_t num_part_classes,
                           std::size_t adapt_depth = 2);

  /// Throws unless every layer dimension is consistent with embed_dim /
  /// num_classes / num_part_classes and all entries are finite.
  void validate(std::size_t embed_dim, std::size_t num_classes,
                std::size_t num_part_classes) const;
};

/// Decoder outputs the head consumes: N^q query vectors and the shared
/// feature map (channel-major, E x H x W).
struct QueryBundle {
  std::size_t num_queries = 0;
  std::size_t embed_dim = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<double> queries;   // num_queries * embed_dim
  std::vector<double> features;  // embed_dim * height * width

  std::span<const double> query(std::size_t i) const {
    return std::span<const double>(queries).subspan(i * embed_dim, embed_dim);
  }
};

enum class PartFilterMode { kConstrained, kUnconstrained };

struct PartMaskChannel {
  PartId part_class = 0;
  std::vector<double> prob;  // H*W, in (0,1)
};

/// Per-query head output: class probabilities, object mask probabilities and
/// one mask-probability channel per predicted part class. In constrained mode
/// the part channels are exactly the classes compatible with the argmax
/// class; in unconstrained mode all part classes are present.
struct QueryPrediction {
  std::vector<double> class_scores;      // C+1, sums to 1
  std::vector<double> object_mask_prob;  // H*W
  std::vector<PartMaskChannel> part_mask_prob;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  PartFilterMode mode = PartFilterMode::kUnconstrained;

  /// Index of the highest class score, counting "no object" (= C).
  /// Ties break toward the lowest index.
  std::size_t argmax_class() const;

  /// Highest score among real classes (excluding "no object") and its class.
  double top_real_class_score(ClassId* cls = nullptr) const;

  const PartMaskChannel* find_part(PartId id) const;
};

std::vector<QueryPrediction> head_forward(const QueryBundle& bundle,
                                          const HeadWeights& weights,
                                          const Taxonomy& taxonomy,
                                          PartFilterMode mode);

struct AssemblyConfig {
  double class_confidence_threshold = 0.8;
  double mask_overlap_threshold = 0.8;
  PartFilterMode mode = PartFilterMode::kConstrained;
};

/// Object-level segments assembled from query predictions, each paired with
/// the index of the query it came from (for merged stuff queries, the lowest
/// contributing query index).
struct PanopticAssembly {
  SegmentSet objects;
  std::vector<std::size_t> source_query;
};

/// Mask-classification panoptic inference: queries below the class confidence
/// threshold are dropped; each pixel goes to the query maximizing
/// score * mask probability; a query's segment keeps only pixels with mask
/// probability > 0.5 and is discarded when the kept fraction of its
/// probability-over-0.5 area falls below the overlap threshold. Stuff queries
/// of the same class merge into one segment. Ties break toward the lowest
/// query index.
PanopticAssembly assemble_panoptic(std::span<const QueryPrediction> preds,
                                   const AssemblyConfig& cfg,
                                   const Taxonomy& taxonomy);

/// Fills each assembled object with part segments: within the object mask a
/// pixel takes the compatible part class with the highest probability, but
/// only when that winning probability exceeds 0.5; otherwise it stays part 0.
/// The result always satisfies every structural constraint.
SegmentSet assemble_parts(const PanopticAssembly& assembly,
                          std::span<const QueryPrediction> preds,
                          const Taxonomy& taxonomy);

/// Fraction of assembled objects whose unrestricted per-pixel part argmax
/// (over all part classes, with the 0.5 floor) never selects a class that is
/// incompatible with the object class. Requires unconstrained predictions;
/// constrained input is rejected so a structurally vacuous 1.0 cannot be
/// mistaken for a measurement. Defined as 1.0 when there are no objects.
double conflict_stats(std::span<const QueryPrediction> preds,
                      const PanopticAssembly& assembly,
                      const Taxonomy& taxonomy);

/// Fraction of objects in a final segment set whose attached parts are all
/// compatible with the object class. This is the end-to-end conflict
/// measurement for assembled outputs; constrained assembly yields 1.0 by
/// construction.
double output_conflict_free_fraction(const SegmentSet& s,
                                     const Taxonomy& taxonomy);

/// One dynamic per-object part query: scores over the part classes plus a
/// trailing "no part" entry, and a mask probability map.
struct DynamicPartPrediction {
  std::vector<double> class_scores;  // N^pc + 1, last = "no part"
  std::vector<double> mask_prob;     // H*W
};

/// Part assembly for the dynamic-query variant: per object, dynamic queries
/// whose argmax is "no part" or incompatible are dropped; the rest compete
/// per pixel on score * mask probability inside the object mask, with the
/// same 0.5 winner floor as the fixed variant. Winning queries of the same
/// part class merge into one segment.
SegmentSet assemble_dynamic_parts(
    const PanopticAssembly& assembly,
    std::span<const std::vector<DynamicPartPrediction>> dynamic_preds,
    const Taxonomy& taxonomy);

}  // namespace pps
