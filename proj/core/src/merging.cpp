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

#include "pps/merging.hpp"

#include <map>

namespace pps {

PartSemanticMap part_map_from_segments(const SegmentSet& s) {
  PartSemanticMap map = PartSemanticMap::filled(s.width, s.height, 0);
  for (const ObjectSegment& seg : s.segments) {
    for (const PartSegment& part : seg.parts) {
      part.mask.for_each_set_bit(
          [&](std::size_t i) { map.pixels[i] = part.part_class; });
    }
  }
  return map;
}

SegmentSet merge(const SegmentSet& objects, const PartSemanticMap& parts,
                 const Taxonomy& t, MergeStats* stats) {
  if (objects.width != parts.width || objects.height != parts.height)
    throw ValidationError("object set and part map canvas mismatch");

  SegmentSet out;
  out.width = objects.width;
  out.height = objects.height;
  out.segments.reserve(objects.segments.size());

  MergeStats local;
  for (const ObjectSegment& src : objects.segments) {
    ObjectSegment seg;
    seg.object_class = src.object_class;
    seg.instance_index = src.instance_index;
    seg.mask = src.mask;

    const auto compat = t.compatible_parts(src.object_class);
    if (!compat.empty()) {
      ++local.part_bearing_objects;
      std::map<PartId, BitMask> part_masks;
      std::uint64_t demoted = 0;
      src.mask.for_each_set_bit([&](std::size_t i) {
        const PartId label = parts.pixels[i];
        if (label == 0) return;
        if (t.is_compatible(src.object_class, label)) {
          auto it = part_masks.find(label);
          if (it == part_masks.end()) {
            it = part_masks.emplace(label, BitMask(out.width, out.height)).first;
          }
          it->second.set_index(i);
        } else {
          ++demoted;  // incompatible label, pixel stays part 0
        }
      });
      for (auto& [id, mask] : part_masks) {
        seg.parts.push_back(PartSegment{id, std::move(mask)});
      }
      if (demoted > 0) {
        ++local.conflicted_objects;
        local.demoted_pixels += demoted;
      }
    }
    out.segments.push_back(std::move(seg));
  }
  if (stats) *stats = local;
  return out;
}

double merge_conflict_rate(const SegmentSet& objects,
                           const PartSemanticMap& parts, const Taxonomy& t) {
  MergeStats stats;
  merge(objects, parts, t, &stats);
  return stats.conflict_rate();
}

}  // namespace pps
