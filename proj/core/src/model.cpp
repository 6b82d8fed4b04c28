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

#include "pps/model.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace pps {

std::uint32_t pack_uid(ClassId object_class, InstanceId instance_index,
                       PartId part_class) {
  if (object_class >= kMaxObjectClassExclusive)
    throw ValidationError("object class " + std::to_string(object_class) +
                          " overflows the 12-bit uid field");
  if (instance_index >= kMaxInstanceExclusive)
    throw ValidationError("instance index " + std::to_string(instance_index) +
                          " overflows the 12-bit uid field");
  if (part_class >= kMaxPartExclusive)
    throw ValidationError("part class " + std::to_string(part_class) +
                          " overflows the 8-bit uid field");
  const std::uint32_t uid =
      (object_class << 20) | (instance_index << 8) | part_class;
  if (uid == kVoidUid)
    throw ValidationError(
        "uid (4095, 4095, 255) collides with the void sentinel");
  return uid;
}

UidFields unpack_uid(std::uint32_t uid) {
  if (uid == kVoidUid)
    throw ValidationError("cannot unpack the void sentinel uid");
  return UidFields{uid >> 20, (uid >> 8) & 0xfffu, uid & 0xffu};
}

const char* violation_kind_name(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kObjectOverlap: return "object-overlap";
    case ViolationKind::kDuplicateStuffSegment: return "stuff-duplicate";
    case ViolationKind::kNonzeroStuffInstance: return "stuff-instance";
    case ViolationKind::kDuplicateSegmentId: return "duplicate-segment-id";
    case ViolationKind::kPartOutsideObject: return "part-subset";
    case ViolationKind::kPartOverlap: return "part-overlap";
    case ViolationKind::kDuplicatePartClass: return "duplicate-part-class";
    case ViolationKind::kIncompatiblePart: return "compatibility";
    case ViolationKind::kUnknownObjectClass: return "unknown-object-class";
    case ViolationKind::kUnknownPartClass: return "unknown-part-class";
    case ViolationKind::kEmptyPartMask: return "empty-part-mask";
    case ViolationKind::kCanvasMismatch: return "canvas-mismatch";
  }
  return "unknown";
}

std::string ValidationReport::to_text() const {
  std::ostringstream os;
  if (ok()) {
    os << "valid: no violations\n";
    return os.str();
  }
  os << violations.size() << " violation(s):\n";
  for (const auto& v : violations) {
    os << "  [" << violation_kind_name(v.kind) << "] " << v.message << "\n";
  }
  return os.str();
}

namespace {

void add_violation(ValidationReport& report, ViolationKind kind, int segment,
                   int other, std::string message) {
  report.violations.push_back(
      Violation{kind, segment, other, std::move(message)});
}

std::string seg_label(const SegmentSet& s, std::size_t i) {
  std::ostringstream os;
  os << "segment " << i << " (class " << s.segments[i].object_class
     << ", instance " << s.segments[i].instance_index << ")";
  return os.str();
}

}  // namespace

ValidationReport validate_pps(const SegmentSet& s, const Taxonomy& t) {
  ValidationReport report;
  std::map<std::pair<ClassId, InstanceId>, std::size_t> seen_ids;
  std::map<ClassId, std::size_t> stuff_seen;

  for (std::size_t i = 0; i < s.segments.size(); ++i) {
    const ObjectSegment& seg = s.segments[i];
    if (seg.mask.width() != s.width || seg.mask.height() != s.height) {
      add_violation(report, ViolationKind::kCanvasMismatch,
                    static_cast<int>(i), -1,
                    seg_label(s, i) + " mask does not match the canvas");
      continue;
    }
    if (!t.has_object_class(seg.object_class)) {
      add_violation(report, ViolationKind::kUnknownObjectClass,
                    static_cast<int>(i), -1,
                    seg_label(s, i) + " uses an unknown object class");
      continue;
    }
    const bool is_stuff = !t.is_thing(seg.object_class);
    if (is_stuff) {
      if (seg.instance_index != 0) {
        add_violation(report, ViolationKind::kNonzeroStuffInstance,
                      static_cast<int>(i), -1,
                      seg_label(s, i) + " is stuff but has nonzero instance");
      }
      auto [it, inserted] = stuff_seen.emplace(seg.object_class, i);
      if (!inserted) {
        add_violation(
            report, ViolationKind::kDuplicateStuffSegment, static_cast<int>(i),
            static_cast<int>(it->second),
            seg_label(s, i) + " duplicates stuff class of segment " +
                std::to_string(it->second));
      }
    }
    auto [it, inserted] =
        seen_ids.emplace(std::make_pair(seg.object_class, seg.instance_index), i);
    if (!inserted) {
      add_violation(report, ViolationKind::kDuplicateSegmentId,
                    static_cast<int>(i), static_cast<int>(it->second),
                    seg_label(s, i) + " repeats the (class, instance) of segment " +
                        std::to_string(it->second));
    }

    // Part-level checks within this object.
    std::map<PartId, std::size_t> part_class_seen;
    for (std::size_t j = 0; j < seg.parts.size(); ++j) {
      const PartSegment& part = seg.parts[j];
      std::ostringstream part_label;
      part_label << "part " << j << " (class " << part.part_class << ") of "
                 << seg_label(s, i);
      if (part.mask.width() != s.width || part.mask.height() != s.height) {
        add_violation(report, ViolationKind::kCanvasMismatch,
                      static_cast<int>(i), -1,
                      part_label.str() + " mask does not match the canvas");
        continue;
      }
      if (!part.mask.any()) {
        add_violation(report, ViolationKind::kEmptyPartMask,
                      static_cast<int>(i), -1, part_label.str() + " is empty");
      }
      if (!t.has_part_class(part.part_class)) {
        add_violation(report, ViolationKind::kUnknownPartClass,
                      static_cast<int>(i), -1,
                      part_label.str() + " uses an unknown part class");
      } else if (!t.is_compatible(seg.object_class, part.part_class)) {
        add_violation(report, ViolationKind::kIncompatiblePart,
                      static_cast<int>(i), -1,
                      part_label.str() +
                          " is not compatible with the object class");
      }
      if (!part.mask.is_subset_of(seg.mask)) {
        add_violation(report, ViolationKind::kPartOutsideObject,
                      static_cast<int>(i), -1,
                      part_label.str() + " leaves the object mask");
      }
      auto [pit, pinserted] = part_class_seen.emplace(part.part_class, j);
      if (!pinserted) {
        add_violation(report, ViolationKind::kDuplicatePartClass,
                      static_cast<int>(i), -1,
                      part_label.str() + " repeats part class of part " +
                          std::to_string(pit->second));
      }
      for (std::size_t k = 0; k < j; ++k) {
        if (seg.parts[k].mask.same_shape(part.mask) &&
            part.mask.intersects(seg.parts[k].mask)) {
          add_violation(report, ViolationKind::kPartOverlap,
                        static_cast<int>(i), -1,
                        part_label.str() + " overlaps part " +
                            std::to_string(k));
        }
      }
    }
  }

  // Object-mask disjointness via a running union; pair search only on hit.
  if (s.segments.size() > 1) {
    BitMask occupied(s.width, s.height);
    for (std::size_t i = 0; i < s.segments.size(); ++i) {
      const BitMask& mask = s.segments[i].mask;
      if (!mask.same_shape(occupied)) continue;  // already reported
      if (occupied.intersects(mask)) {
        for (std::size_t k = 0; k < i; ++k) {
          if (s.segments[k].mask.same_shape(mask) &&
              mask.intersects(s.segments[k].mask)) {
            add_violation(report, ViolationKind::kObjectOverlap,
                          static_cast<int>(i), static_cast<int>(k),
                          seg_label(s, i) + " overlaps " + seg_label(s, k));
          }
        }
      }
      occupied |= mask;
    }
  }
  return report;
}

ValidationReport validate_label_map(const LabelMap& m, const Taxonomy& t) {
  ValidationReport report;
  // One representative violation per distinct uid keeps reports readable.
  std::map<std::uint32_t, bool> checked;
  for (std::size_t i = 0; i < m.pixels.size(); ++i) {
    const std::uint32_t uid = m.pixels[i];
    if (uid == kVoidUid) continue;
    auto [it, inserted] = checked.emplace(uid, true);
    if (!inserted) continue;
    const UidFields f = unpack_uid(uid);
    std::ostringstream at;
    at << "uid " << uid << " first seen at pixel (" << (i % m.width) << ", "
       << (i / m.width) << ")";
    if (!t.has_object_class(f.object_class)) {
      add_violation(report, ViolationKind::kUnknownObjectClass, -1, -1,
                    at.str() + ": unknown object class " +
                        std::to_string(f.object_class));
      continue;
    }
    if (f.part_class != 0) {
      if (!t.has_part_class(f.part_class)) {
        add_violation(report, ViolationKind::kUnknownPartClass, -1, -1,
                      at.str() + ": unknown part class " +
                          std::to_string(f.part_class));
      } else if (!t.is_compatible(f.object_class, f.part_class)) {
        add_violation(report, ViolationKind::kIncompatiblePart, -1, -1,
                      at.str() + ": part class " +
                          std::to_string(f.part_class) +
                          " is not compatible with object class " +
                          std::to_string(f.object_class));
      }
    }
  }
  return report;
}

SegmentSet segments_from_label_map(const LabelMap& m, const Taxonomy& t) {
  if (m.pixels.size() != static_cast<std::size_t>(m.width) * m.height)
    throw ValidationError("label map pixel buffer does not match its size");
  ValidationReport check = validate_label_map(m, t);
  if (!check.ok())
    throw ValidationError("label map fails validation: " +
                          check.violations.front().message);

  struct Builder {
    BitMask mask;
    std::map<PartId, BitMask> parts;
  };
  std::map<std::pair<ClassId, InstanceId>, Builder> builders;

  for (std::size_t i = 0; i < m.pixels.size(); ++i) {
    const std::uint32_t uid = m.pixels[i];
    if (uid == kVoidUid) continue;
    const UidFields f = unpack_uid(uid);
    auto key = std::make_pair(f.object_class, f.instance_index);
    auto it = builders.find(key);
    if (it == builders.end()) {
      it = builders.emplace(key, Builder{BitMask(m.width, m.height), {}}).first;
    }
    it->second.mask.set_index(i);
    if (f.part_class != 0) {
      auto pit = it->second.parts.find(f.part_class);
      if (pit == it->second.parts.end()) {
        pit = it->second.parts.emplace(f.part_class, BitMask(m.width, m.height))
                  .first;
      }
      pit->second.set_index(i);
    }
  }

  SegmentSet out;
  out.width = m.width;
  out.height = m.height;
  out.segments.reserve(builders.size());
  for (auto& [key, builder] : builders) {
    ObjectSegment seg;
    seg.object_class = key.first;
    seg.instance_index = key.second;
    seg.mask = std::move(builder.mask);
    for (auto& [part_id, mask] : builder.parts) {
      seg.parts.push_back(PartSegment{part_id, std::move(mask)});
    }
    out.segments.push_back(std::move(seg));
  }
  return out;
}

LabelMap label_map_from_segments(const SegmentSet& s, const Taxonomy& t) {
  ValidationReport report = validate_pps(s, t);
  if (!report.ok()) {
    throw ValidationError("segment set fails validation: " +
                          report.violations.front().message);
  }
  LabelMap map = LabelMap::filled(s.width, s.height, kVoidUid);
  for (const ObjectSegment& seg : s.segments) {
    const std::uint32_t base_uid =
        pack_uid(seg.object_class, seg.instance_index, 0);
    seg.mask.for_each_set_bit([&](std::size_t i) { map.pixels[i] = base_uid; });
    for (const PartSegment& part : seg.parts) {
      const std::uint32_t part_uid =
          pack_uid(seg.object_class, seg.instance_index, part.part_class);
      part.mask.for_each_set_bit(
          [&](std::size_t i) { map.pixels[i] = part_uid; });
    }
  }
  return map;
}

}  // namespace pps
