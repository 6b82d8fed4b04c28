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

#include "pps/taxonomy.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace pps {

namespace {

using nlohmann::json;

std::string location(const char* array, std::size_t index) {
  std::ostringstream os;
  os << array << "[" << index << "]";
  return os.str();
}

}  // namespace

Taxonomy::LoadResult Taxonomy::make(std::string name,
                                    std::vector<ObjectClassDef> object_classes,
                                    std::vector<PartClassDef> part_classes) {
  std::vector<std::string> warnings;

  // Uniqueness of declared ids, with declaration locations for diagnostics.
  std::map<ClassId, std::size_t> object_by_id;
  for (std::size_t i = 0; i < object_classes.size(); ++i) {
    if (!object_by_id.emplace(object_classes[i].id, i).second) {
      throw ValidationError("duplicate object class id " +
                            std::to_string(object_classes[i].id) + " at " +
                            location("object_classes", i));
    }
  }
  std::map<PartId, std::size_t> part_by_id;
  for (std::size_t i = 0; i < part_classes.size(); ++i) {
    if (part_classes[i].id == 0) {
      throw ValidationError("part class id 0 is reserved (at " +
                            location("part_classes", i) + ")");
    }
    if (!part_by_id.emplace(part_classes[i].id, i).second) {
      throw ValidationError("duplicate part class id " +
                            std::to_string(part_classes[i].id) + " at " +
                            location("part_classes", i));
    }
  }

  // Canonical dense ids: ascending declared order.
  std::map<ClassId, ClassId> object_remap;
  {
    ClassId next = 0;
    for (const auto& [declared, _] : object_by_id) object_remap[declared] = next++;
  }
  std::map<PartId, PartId> part_remap;
  {
    PartId next = 1;
    for (const auto& [declared, _] : part_by_id) part_remap[declared] = next++;
  }

  std::set<PartId> referenced;
  for (std::size_t i = 0; i < object_classes.size(); ++i) {
    auto& cls = object_classes[i];
    std::set<PartId> seen;
    for (auto& part : cls.part_class_ids) {
      auto it = part_remap.find(part);
      if (it == part_remap.end()) {
        throw ValidationError("object class '" + cls.name +
                              "' references unknown part class id " +
                              std::to_string(part) + " (at " +
                              location("object_classes", i) + ")");
      }
      if (!seen.insert(part).second) {
        throw ValidationError("object class '" + cls.name +
                              "' lists part class id " + std::to_string(part) +
                              " twice (at " + location("object_classes", i) +
                              ")");
      }
      referenced.insert(part);
      part = it->second;
    }
    if (cls.kind == ClassKind::kStuff && !cls.part_class_ids.empty()) {
      warnings.push_back("stuff class '" + cls.name +
                         "' declares part classes; parts on stuff are "
                         "unusual and treated like parts on things");
    }
    cls.id = object_remap.at(cls.id);
  }

  for (std::size_t i = 0; i < part_classes.size(); ++i) {
    if (!referenced.count(part_classes[i].id)) {
      throw ValidationError("orphan part class '" + part_classes[i].name +
                            "' (id " + std::to_string(part_classes[i].id) +
                            ") is referenced by no object class");
    }
    part_classes[i].id = part_remap.at(part_classes[i].id);
  }

  std::sort(object_classes.begin(), object_classes.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  std::sort(part_classes.begin(), part_classes.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });

  Taxonomy t;
  t.name_ = std::move(name);
  t.object_classes_ = std::move(object_classes);
  t.part_classes_ = std::move(part_classes);
  t.compat_.assign(t.object_classes_.size(),
                   std::vector<bool>(t.part_classes_.size() + 1, false));
  for (const auto& cls : t.object_classes_) {
    if (cls.kind == ClassKind::kThing) ++t.num_things_;
    for (PartId p : cls.part_class_ids) t.compat_[cls.id][p] = true;
  }
  return LoadResult{std::move(t), std::move(warnings)};
}

Taxonomy::LoadResult Taxonomy::load(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("taxonomy parse failure: ") + e.what());
  }
  try {
    std::string name = doc.value("name", std::string("unnamed"));
    std::vector<ObjectClassDef> objects;
    for (const auto& item : doc.at("object_classes")) {
      ObjectClassDef def;
      def.id = item.at("id").get<ClassId>();
      def.name = item.at("name").get<std::string>();
      const std::string kind = item.at("kind").get<std::string>();
      if (kind == "thing") {
        def.kind = ClassKind::kThing;
      } else if (kind == "stuff") {
        def.kind = ClassKind::kStuff;
      } else {
        throw ValidationError("object class '" + def.name +
                              "' has unknown kind '" + kind + "'");
      }
      if (item.contains("parts")) {
        for (const auto& p : item.at("parts"))
          def.part_class_ids.push_back(p.get<PartId>());
      }
      objects.push_back(std::move(def));
    }
    std::vector<PartClassDef> parts;
    for (const auto& item : doc.at("part_classes")) {
      parts.push_back(PartClassDef{item.at("id").get<PartId>(),
                                   item.at("name").get<std::string>()});
    }
    return make(std::move(name), std::move(objects), std::move(parts));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("taxonomy schema error: ") + e.what());
  }
}

Taxonomy::LoadResult Taxonomy::load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open taxonomy file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return load(buf.str());
}

std::string Taxonomy::to_json() const {
  json doc;
  doc["name"] = name_;
  doc["object_classes"] = json::array();
  for (const auto& cls : object_classes_) {
    json item;
    item["id"] = cls.id;
    item["name"] = cls.name;
    item["kind"] = cls.kind == ClassKind::kThing ? "thing" : "stuff";
    item["parts"] = cls.part_class_ids;
    doc["object_classes"].push_back(std::move(item));
  }
  doc["part_classes"] = json::array();
  for (const auto& part : part_classes_) {
    doc["part_classes"].push_back({{"id", part.id}, {"name", part.name}});
  }
  return doc.dump(2) + "\n";
}

const ObjectClassDef& Taxonomy::object_class(ClassId id) const {
  if (!has_object_class(id))
    throw ValidationError("unknown object class id " + std::to_string(id));
  return object_classes_[id];
}

const PartClassDef& Taxonomy::part_class(PartId id) const {
  if (!has_part_class(id))
    throw ValidationError("unknown part class id " + std::to_string(id));
  return part_classes_[id - 1];
}

std::span<const PartId> Taxonomy::compatible_parts(ClassId id) const {
  return object_class(id).part_class_ids;
}

bool Taxonomy::is_compatible(ClassId cls, PartId part) const {
  if (!has_object_class(cls) || part == 0 || part > part_classes_.size())
    return false;
  return compat_[cls][part];
}

}  // namespace pps
