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
#include <vector>

#include "pps/model.hpp"
#include "pps/taxonomy.hpp"

namespace pps {

/// Object-instance-unaware part labeling: one part-class id per pixel,
/// 0 meaning "no part". This is what a separate part-segmentation branch
/// produces before fusion.
struct PartSemanticMap {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<PartId> pixels;

  static PartSemanticMap filled(std::uint32_t width, std::uint32_t height,
                                PartId value = 0) {
    return PartSemanticMap{
        width, height,
        std::vector<PartId>(static_cast<std::size_t>(width) * height, value)};
  }
};

/// Flattens the part segments of a scene into an instance-unaware map.
/// Pixels covered by no part get 0.
PartSemanticMap part_map_from_segments(const SegmentSet& s);

struct MergeStats {
  std::uint64_t part_bearing_objects = 0;
  std::uint64_t conflicted_objects = 0;  // objects with >= 1 demoted pixel
  std::uint64_t demoted_pixels = 0;

  double conflict_rate() const {
    return part_bearing_objects == 0
               ? 0.0
               : static_cast<double>(conflicted_objects) /
                     static_cast<double>(part_bearing_objects);
  }
};

/// Rule-based fusion of an object-level panoptic result with an
/// instance-unaware part map: each compatible part label is intersected with
/// the object mask to form that object's part segments; incompatible labels
/// are discarded (the pixel keeps part 0); part labels outside every object
/// are ignored. The output always satisfies the structural constraints.
SegmentSet merge(const SegmentSet& objects, const PartSemanticMap& parts,
                 const Taxonomy& t, MergeStats* stats = nullptr);

/// Fraction of part-bearing objects containing at least one demoted pixel.
double merge_conflict_rate(const SegmentSet& objects,
                           const PartSemanticMap& parts, const Taxonomy& t);

}  // namespace pps
