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

struct CountRange {
  std::uint32_t lo = 0;
  std::uint32_t hi = 0;
};

enum class ShapeKind { kRectangle, kEllipse };

/// Parameters of the deterministic scene generator. The same
/// (params, taxonomy, seed) triple always produces a bit-identical scene.
struct SceneParams {
  std::uint32_t width = 128;
  std::uint32_t height = 128;
  CountRange object_count{2, 5};  // thing instances
  std::vector<ShapeKind> shapes{ShapeKind::kRectangle, ShapeKind::kEllipse};
  CountRange parts_per_object{1, 3};
  CountRange stuff_count{1, 3};
  std::uint64_t seed = 0;
};

/// Generates a structurally valid scene: non-overlapping thing instances
/// (rectangles/ellipses), horizontal stuff strips behind them, a void band
/// at the bottom, and per-object part segments tiling the object mask in
/// horizontal bands. Throws when the canvas cannot host the requested
/// minimum object count after bounded retries.
SegmentSet generate_scene(const SceneParams& params, const Taxonomy& t);

/// Controlled, seed-deterministic distortions of a valid scene. With every
/// probability and radius at zero the input is returned unchanged. Unless
/// `relabel_incompatible` is set, the output remains structurally valid.
/// Each decision is derived from (seed, operation, segment, part) so raising
/// one knob never reshuffles the decisions of another.
struct PerturbParams {
  std::uint32_t erode_radius = 0;
  std::uint32_t dilate_radius = 0;
  double drop_prob = 0.0;     // thing instances
  double split_prob = 0.0;    // thing instances, split at the bbox midline
  double relabel_prob = 0.0;  // per part segment
  bool relabel_incompatible = false;
  std::uint64_t seed = 0;
};

SegmentSet perturb(const SegmentSet& gt, const PerturbParams& params,
                   const Taxonomy& t);

}  // namespace pps
