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
#include <string>
#include <vector>

#include "pps/bitmask.hpp"
#include "pps/taxonomy.hpp"

namespace pps {

// Packed per-pixel uid layout:
//   bits 20..31  object class   (< 4096)
//   bits  8..19  instance index (< 4096)
//   bits  0..7   part class     (< 256, 0 = no part)
// 0xFFFFFFFF is the reserved void sentinel; the triple (4095, 4095, 255)
// would collide with it and is rejected by pack_uid.
inline constexpr std::uint32_t kVoidUid = 0xffffffffu;
inline constexpr std::uint32_t kMaxObjectClassExclusive = 4096;
inline constexpr std::uint32_t kMaxInstanceExclusive = 4096;
inline constexpr std::uint32_t kMaxPartExclusive = 256;

struct UidFields {
  ClassId object_class = 0;
  InstanceId instance_index = 0;
  PartId part_class = 0;

  bool operator==(const UidFields&) const = default;
};

std::uint32_t pack_uid(ClassId object_class, InstanceId instance_index,
                       PartId part_class);
UidFields unpack_uid(std::uint32_t uid);

/// One part-level segment: a part class plus its binary mask. The mask is
/// non-empty and a subset of the owning object mask.
struct PartSegment {
  PartId part_class = 0;
  BitMask mask;
};

/// One object-level segment (a thing instance or a stuff region) together
/// with the part-level segments it contains. Stuff segments use instance 0.
struct ObjectSegment {
  ClassId object_class = 0;
  InstanceId instance_index = 0;
  BitMask mask;
  std::vector<PartSegment> parts;
};

/// A full scene: object segments with disjoint masks over a common canvas.
/// Pixels covered by no segment are void.
struct SegmentSet {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<ObjectSegment> segments;
};

/// Canonical pixel encoding of a SegmentSet: one packed uid per pixel in
/// row-major order.
struct LabelMap {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint32_t> pixels;

  static LabelMap filled(std::uint32_t width, std::uint32_t height,
                         std::uint32_t uid) {
    return LabelMap{width, height,
                    std::vector<std::uint32_t>(
                        static_cast<std::size_t>(width) * height, uid)};
  }

  std::uint32_t at(std::uint32_t x, std::uint32_t y) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  std::uint32_t& at(std::uint32_t x, std::uint32_t y) {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
};

enum class ViolationKind {
  kObjectOverlap,
  kDuplicateStuffSegment,
  kNonzeroStuffInstance,
  kDuplicateSegmentId,
  kPartOutsideObject,
  kPartOverlap,
  kDuplicatePartClass,
  kIncompatiblePart,
  kUnknownObjectClass,
  kUnknownPartClass,
  kEmptyPartMask,
  kCanvasMismatch,
};

const char* violation_kind_name(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  int segment = -1;        // index into SegmentSet::segments, -1 if n/a
  int other_segment = -1;  // second index for pairwise violations
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string to_text() const;
};

/// Checks every structural constraint of the task: object-mask disjointness,
/// one segment per stuff class, part masks inside the object mask, pairwise
/// part disjointness, at most one part segment per part class, and
/// object/part class compatibility. Violations are data, not errors.
ValidationReport validate_pps(const SegmentSet& s, const Taxonomy& t);

/// Checks that every non-void uid in the map decodes to a known class and a
/// part that is 0 or compatible with that class.
ValidationReport validate_label_map(const LabelMap& m, const Taxonomy& t);

/// Reconstructs the segment structure from a pixel map: one ObjectSegment per
/// distinct (class, instance) pair with any pixels, one PartSegment per
/// distinct nonzero part id within it. Output segments are sorted by
/// (class, instance) and parts by part id. Throws ValidationError when the
/// map references unknown ids or incompatible (class, part) pairs.
SegmentSet segments_from_label_map(const LabelMap& m, const Taxonomy& t);

/// Rasterizes a valid SegmentSet: part pixels carry their part id, object
/// pixels outside all parts carry part 0, uncovered pixels are void.
/// Throws ValidationError (naming the offending segments) if `s` violates
/// the structural invariants.
LabelMap label_map_from_segments(const SegmentSet& s, const Taxonomy& t);

}  // namespace pps
