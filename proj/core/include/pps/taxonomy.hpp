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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pps/common.hpp"

namespace pps {

using ClassId = std::uint32_t;
using PartId = std::uint32_t;
using InstanceId = std::uint32_t;

enum class ClassKind { kThing, kStuff };

struct ObjectClassDef {
  ClassId id = 0;
  std::string name;
  ClassKind kind = ClassKind::kStuff;
  std::vector<PartId> part_class_ids;  // declaration order, no duplicates

  bool has_parts() const { return !part_class_ids.empty(); }
};

struct PartClassDef {
  PartId id = 0;  // 1-based; 0 is reserved for "object pixel without a part"
  std::string name;
};

/// Class hierarchy for one dataset flavor: object-level classes with a
/// thing/stuff split, global part-level classes, and the per-object-class
/// compatibility lists. Immutable after construction; ids are canonical and
/// dense (object classes 0..C-1, part classes 1..P).
class Taxonomy {
 public:
  struct LoadResult;

  Taxonomy() = default;

  /// Validates and canonicalizes raw definitions: object classes are
  /// renumbered 0..C-1 and part classes 1..P, both in ascending order of the
  /// declared ids; compatibility lists are rewritten accordingly.
  /// Warnings (e.g. a stuff class that declares parts) do not fail the load.
  static LoadResult make(std::string name,
                         std::vector<ObjectClassDef> object_classes,
                         std::vector<PartClassDef> part_classes);

  /// Parses the JSON taxonomy document format, then canonicalizes via make().
  static LoadResult load(const std::string& json_text);
  static LoadResult load_file(const std::filesystem::path& path);

  /// Serializes the canonical form; load(to_json()) round-trips exactly.
  std::string to_json() const;

  const std::string& name() const { return name_; }
  std::span<const ObjectClassDef> object_classes() const {
    return object_classes_;
  }
  std::span<const PartClassDef> part_classes() const { return part_classes_; }

  std::size_t num_object_classes() const { return object_classes_.size(); }
  std::size_t num_part_classes() const { return part_classes_.size(); }

  bool has_object_class(ClassId id) const { return id < object_classes_.size(); }
  bool has_part_class(PartId id) const {
    return id >= 1 && id <= part_classes_.size();
  }

  const ObjectClassDef& object_class(ClassId id) const;
  const PartClassDef& part_class(PartId id) const;

  /// Part classes compatible with object class `id`, in declaration order.
  /// Empty for classes without parts.
  std::span<const PartId> compatible_parts(ClassId id) const;

  /// True when `part` (nonzero) is declared for object class `cls`.
  bool is_compatible(ClassId cls, PartId part) const;

  bool is_thing(ClassId id) const { return object_class(id).kind == ClassKind::kThing; }

  std::size_t num_thing_classes() const { return num_things_; }
  std::size_t num_stuff_classes() const {
    return object_classes_.size() - num_things_;
  }

 private:
  std::string name_;
  std::vector<ObjectClassDef> object_classes_;
  std::vector<PartClassDef> part_classes_;
  std::vector<std::vector<bool>> compat_;  // [class][part] incl. index 0
  std::size_t num_things_ = 0;
};

struct Taxonomy::LoadResult {
  Taxonomy taxonomy;
  std::vector<std::string> warnings;
};

}  // namespace pps
