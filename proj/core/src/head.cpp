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

#include "pps/head.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "pps/common.hpp"

namespace pps {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v))
      throw ValidationError(std::string("non-finite value in ") + what);
  }
}

void check_layer(const AffineLayer& layer, std::size_t in, std::size_t out,
                 const char* what) {
  if (layer.in != in || layer.out != out ||
      layer.weight.size() != in * out || layer.bias.size() != out) {
    throw ValidationError(std::string("dimension mismatch in ") + what);
  }
  check_finite(layer.weight, what);
  check_finite(layer.bias, what);
}

std::vector<double> softmax(std::span<const double> logits) {
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - max_logit);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

// logits[p] = sum_e embedding[e] * features[e * n_pixels + p], then sigmoid.
std::vector<double> project_embedding(std::span<const double> embedding,
                                      std::span<const double> features,
                                      std::size_t n_pixels) {
  std::vector<double> acc(n_pixels, 0.0);
  for (std::size_t e = 0; e < embedding.size(); ++e) {
    const double w = embedding[e];
    const double* channel = features.data() + e * n_pixels;
    for (std::size_t p = 0; p < n_pixels; ++p) acc[p] += w * channel[p];
  }
  for (double& v : acc) v = sigmoid(v);
  return acc;
}

std::vector<double> run_mlp(std::span<const AffineLayer> layers,
                            std::span<const double> input) {
  std::vector<double> cur(input.begin(), input.end());
  std::vector<double> next;
  for (std::size_t li = 0; li < layers.size(); ++li) {
    next.assign(layers[li].out, 0.0);
    layers[li].apply(cur, next);
    if (li + 1 < layers.size()) {
      for (double& v : next) v = std::max(0.0, v);  // ReLU between layers
    }
    cur.swap(next);
  }
  return cur;
}

}  // namespace

AffineLayer AffineLayer::zeros(std::size_t in, std::size_t out) {
  return AffineLayer{in, out, std::vector<double>(in * out, 0.0),
                     std::vector<double>(out, 0.0)};
}

AffineLayer AffineLayer::identity(std::size_t n) {
  AffineLayer layer = zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) layer.weight[i * n + i] = 1.0;
  return layer;
}

void AffineLayer::apply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != in || y.size() != out)
    throw ValidationError("affine layer applied to mismatched vector");
  for (std::size_t r = 0; r < out; ++r) {
    const double* row = weight.data() + r * in;
    double acc = bias[r];
    for (std::size_t c = 0; c < in; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

HeadWeights HeadWeights::zeros(std::size_t embed_dim, std::size_t num_classes,
                               std::size_t num_part_classes,
                               std::size_t adapt_depth) {
  HeadWeights w;
  w.class_head = AffineLayer::zeros(embed_dim, num_classes + 1);
  for (auto& layer : w.mask_mlp) layer = AffineLayer::zeros(embed_dim, embed_dim);
  w.adapt_mlp.assign(adapt_depth, AffineLayer::zeros(embed_dim, embed_dim));
  w.part_projections.assign(num_part_classes,
                            AffineLayer::zeros(embed_dim, embed_dim));
  return w;
}

void HeadWeights::validate(std::size_t embed_dim, std::size_t num_classes,
                           std::size_t num_part_classes) const {
  check_layer(class_head, embed_dim, num_classes + 1, "class head");
  for (const auto& layer : mask_mlp)
    check_layer(layer, embed_dim, embed_dim, "mask MLP");
  if (adapt_mlp.size() > 3)
    throw ValidationError("adaptation MLP deeper than 3 layers");
  for (const auto& layer : adapt_mlp)
    check_layer(layer, embed_dim, embed_dim, "adaptation MLP");
  if (part_projections.size() != num_part_classes)
    throw ValidationError("one part projection per part class required");
  for (const auto& layer : part_projections)
    check_layer(layer, embed_dim, embed_dim, "part projection");
}

std::size_t QueryPrediction::argmax_class() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < class_scores.size(); ++i) {
    if (class_scores[i] > class_scores[best]) best = i;
  }
  return best;
}

double QueryPrediction::top_real_class_score(ClassId* cls) const {
  double best = -1.0;
  std::size_t best_idx = 0;
  for (std::size_t i = 0; i + 1 < class_scores.size(); ++i) {
    if (class_scores[i] > best) {
      best = class_scores[i];
      best_idx = i;
    }
  }
  if (cls) *cls = static_cast<ClassId>(best_idx);
  return best;
}

const PartMaskChannel* QueryPrediction::find_part(PartId id) const {
  for (const auto& channel : part_mask_prob) {
    if (channel.part_class == id) return &channel;
  }
  return nullptr;
}

std::vector<QueryPrediction> head_forward(const QueryBundle& bundle,
                                          const HeadWeights& weights,
                                          const Taxonomy& taxonomy,
                                          PartFilterMode mode) {
  const std::size_t n_pixels =
      static_cast<std::size_t>(bundle.height) * bundle.width;
  if (bundle.queries.size() != bundle.num_queries * bundle.embed_dim)
    throw ValidationError("query buffer does not match num_queries * E");
  if (bundle.features.size() != bundle.embed_dim * n_pixels)
    throw ValidationError("feature buffer does not match E * H * W");
  check_finite(bundle.queries, "queries");
  check_finite(bundle.features, "features");
  weights.validate(bundle.embed_dim, taxonomy.num_object_classes(),
                   taxonomy.num_part_classes());

  const std::size_t num_classes = taxonomy.num_object_classes();
  std::vector<QueryPrediction> preds(bundle.num_queries);

  for (std::size_t qi = 0; qi < bundle.num_queries; ++qi) {
    const auto query = bundle.query(qi);
    QueryPrediction& pred = preds[qi];
    pred.height = bundle.height;
    pred.width = bundle.width;
    pred.mode = mode;

    std::vector<double> class_logits(num_classes + 1, 0.0);
    weights.class_head.apply(query, class_logits);
    pred.class_scores = softmax(class_logits);

    const std::vector<double> mask_embedding =
        run_mlp(std::span<const AffineLayer>(weights.mask_mlp.data(), 3), query);
    pred.object_mask_prob =
        project_embedding(mask_embedding, bundle.features, n_pixels);

    // Part classes to predict: all of them in unconstrained mode, otherwise
    // the classes compatible with the argmax class ("no object" has none).
    std::vector<PartId> part_ids;
    if (mode == PartFilterMode::kUnconstrained) {
      part_ids.resize(taxonomy.num_part_classes());
      for (std::size_t p = 0; p < part_ids.size(); ++p)
        part_ids[p] = static_cast<PartId>(p + 1);
    } else {
      const std::size_t top = pred.argmax_class();
      if (top < num_classes) {
        const auto compat = taxonomy.compatible_parts(static_cast<ClassId>(top));
        part_ids.assign(compat.begin(), compat.end());
      }
    }

    if (!part_ids.empty()) {
      const std::vector<double> adapted = run_mlp(weights.adapt_mlp, query);
      std::vector<double> part_embedding(bundle.embed_dim, 0.0);
      for (PartId id : part_ids) {
        weights.part_projections[id - 1].apply(adapted, part_embedding);
        pred.part_mask_prob.push_back(PartMaskChannel{
            id, project_embedding(part_embedding, bundle.features, n_pixels)});
      }
    }
  }
  return preds;
}

namespace {

void check_common_canvas(std::span<const QueryPrediction> preds) {
  for (std::size_t i = 1; i < preds.size(); ++i) {
    if (preds[i].height != preds[0].height || preds[i].width != preds[0].width)
      throw ValidationError("query predictions disagree on canvas size");
  }
}

}  // namespace

PanopticAssembly assemble_panoptic(std::span<const QueryPrediction> preds,
                                   const AssemblyConfig& cfg,
                                   const Taxonomy& taxonomy) {
  PanopticAssembly out;
  if (preds.empty()) return out;
  check_common_canvas(preds);
  const std::uint32_t height = preds[0].height;
  const std::uint32_t width = preds[0].width;
  const std::size_t n_pixels = static_cast<std::size_t>(height) * width;
  out.objects.width = width;
  out.objects.height = height;

  struct Survivor {
    std::size_t query;
    ClassId cls;
    double score;
  };
  std::vector<Survivor> survivors;
  for (std::size_t qi = 0; qi < preds.size(); ++qi) {
    ClassId cls = 0;
    const double score = preds[qi].top_real_class_score(&cls);
    if (score >= cfg.class_confidence_threshold) {
      survivors.push_back(Survivor{qi, cls, score});
    }
  }
  if (survivors.empty()) return out;

  // Pixel-wise competition on score * mask probability; ties keep the
  // earliest (lowest-index) query.
  std::vector<std::int32_t> winner(n_pixels, -1);
  std::vector<double> best(n_pixels, 0.0);
  for (std::size_t si = 0; si < survivors.size(); ++si) {
    const auto& prob = preds[survivors[si].query].object_mask_prob;
    const double score = survivors[si].score;
    for (std::size_t p = 0; p < n_pixels; ++p) {
      const double v = score * prob[p];
      if (winner[p] < 0 || v > best[p]) {
        winner[p] = static_cast<std::int32_t>(si);
        best[p] = v;
      }
    }
  }

  struct Kept {
    std::size_t query;
    ClassId cls;
    BitMask mask;
  };
  std::vector<Kept> kept;
  for (std::size_t si = 0; si < survivors.size(); ++si) {
    const auto& prob = preds[survivors[si].query].object_mask_prob;
    BitMask mask(width, height);
    std::uint64_t kept_area = 0;
    std::uint64_t full_area = 0;
    for (std::size_t p = 0; p < n_pixels; ++p) {
      const bool confident = prob[p] > 0.5;
      if (confident) ++full_area;
      if (confident && winner[p] == static_cast<std::int32_t>(si)) {
        mask.set_index(p);
        ++kept_area;
      }
    }
    if (kept_area == 0 || full_area == 0) continue;
    const double ratio =
        static_cast<double>(kept_area) / static_cast<double>(full_area);
    if (ratio < cfg.mask_overlap_threshold) continue;
    kept.push_back(Kept{survivors[si].query, survivors[si].cls, std::move(mask)});
  }

  // Stuff queries of one class collapse into a single segment; things get
  // fresh per-class instance indices in query order.
  std::map<ClassId, std::size_t> stuff_segment;
  std::map<ClassId, InstanceId> next_instance;
  for (auto& item : kept) {
    if (!taxonomy.is_thing(item.cls)) {
      auto it = stuff_segment.find(item.cls);
      if (it != stuff_segment.end()) {
        out.objects.segments[it->second].mask |= item.mask;
        continue;
      }
      stuff_segment.emplace(item.cls, out.objects.segments.size());
      out.objects.segments.push_back(
          ObjectSegment{item.cls, 0, std::move(item.mask), {}});
      out.source_query.push_back(item.query);
    } else {
      const InstanceId instance = next_instance[item.cls]++;
      out.objects.segments.push_back(
          ObjectSegment{item.cls, instance, std::move(item.mask), {}});
      out.source_query.push_back(item.query);
    }
  }
  return out;
}

SegmentSet assemble_parts(const PanopticAssembly& assembly,
                          std::span<const QueryPrediction> preds,
                          const Taxonomy& taxonomy) {
  SegmentSet out;
  out.width = assembly.objects.width;
  out.height = assembly.objects.height;
  out.segments = assembly.objects.segments;

  for (std::size_t oi = 0; oi < out.segments.size(); ++oi) {
    ObjectSegment& seg = out.segments[oi];
    seg.parts.clear();
    const auto compat = taxonomy.compatible_parts(seg.object_class);
    if (compat.empty()) continue;

    const QueryPrediction& pred = preds[assembly.source_query[oi]];
    // Channels sorted by part id so probability ties resolve to the lowest id.
    std::vector<const PartMaskChannel*> channels;
    for (PartId id : compat) {
      const PartMaskChannel* channel = pred.find_part(id);
      if (!channel)
        throw ValidationError(
            "prediction lacks a part mask for compatible part class " +
            std::to_string(id));
      channels.push_back(channel);
    }
    std::sort(channels.begin(), channels.end(),
              [](const auto* a, const auto* b) {
                return a->part_class < b->part_class;
              });

    std::map<PartId, BitMask> part_masks;
    seg.mask.for_each_set_bit([&](std::size_t p) {
      const PartMaskChannel* win = nullptr;
      double best = 0.0;
      for (const PartMaskChannel* channel : channels) {
        if (channel->prob[p] > best) {
          best = channel->prob[p];
          win = channel;
        }
      }
      if (win && best > 0.5) {
        auto it = part_masks.find(win->part_class);
        if (it == part_masks.end()) {
          it = part_masks
                   .emplace(win->part_class, BitMask(out.width, out.height))
                   .first;
        }
        it->second.set_index(p);
      }
    });
    for (auto& [id, mask] : part_masks) {
      seg.parts.push_back(PartSegment{id, std::move(mask)});
    }
  }
  return out;
}

double conflict_stats(std::span<const QueryPrediction> preds,
                      const PanopticAssembly& assembly,
                      const Taxonomy& taxonomy) {
  const auto& segments = assembly.objects.segments;
  if (segments.empty()) return 1.0;

  std::size_t conflict_free = 0;
  for (std::size_t oi = 0; oi < segments.size(); ++oi) {
    const QueryPrediction& pred = preds[assembly.source_query[oi]];
    if (pred.mode == PartFilterMode::kConstrained) {
      throw ValidationError(
          "conflict_stats requires unconstrained predictions; constrained "
          "input cannot conflict by construction");
    }
    std::vector<const PartMaskChannel*> channels;
    channels.reserve(pred.part_mask_prob.size());
    for (const auto& channel : pred.part_mask_prob) channels.push_back(&channel);
    std::sort(channels.begin(), channels.end(),
              [](const auto* a, const auto* b) {
                return a->part_class < b->part_class;
              });

    const ObjectSegment& seg = segments[oi];
    bool conflicted = false;
    seg.mask.for_each_set_bit([&](std::size_t p) {
      if (conflicted) return;
      const PartMaskChannel* win = nullptr;
      double best = 0.0;
      for (const PartMaskChannel* channel : channels) {
        if (channel->prob[p] > best) {
          best = channel->prob[p];
          win = channel;
        }
      }
      if (win && best > 0.5 &&
          !taxonomy.is_compatible(seg.object_class, win->part_class)) {
        conflicted = true;
      }
    });
    if (!conflicted) ++conflict_free;
  }
  return static_cast<double>(conflict_free) /
         static_cast<double>(segments.size());
}

double output_conflict_free_fraction(const SegmentSet& s,
                                     const Taxonomy& taxonomy) {
  if (s.segments.empty()) return 1.0;
  std::size_t conflict_free = 0;
  for (const ObjectSegment& seg : s.segments) {
    bool ok = true;
    for (const PartSegment& part : seg.parts) {
      if (!taxonomy.is_compatible(seg.object_class, part.part_class)) {
        ok = false;
        break;
      }
    }
    if (ok) ++conflict_free;
  }
  return static_cast<double>(conflict_free) /
         static_cast<double>(s.segments.size());
}

SegmentSet assemble_dynamic_parts(
    const PanopticAssembly& assembly,
    std::span<const std::vector<DynamicPartPrediction>> dynamic_preds,
    const Taxonomy& taxonomy) {
  SegmentSet out;
  out.width = assembly.objects.width;
  out.height = assembly.objects.height;
  out.segments = assembly.objects.segments;
  const std::size_t n_pixels =
      static_cast<std::size_t>(out.width) * out.height;
  const std::size_t num_parts = taxonomy.num_part_classes();

  for (std::size_t oi = 0; oi < out.segments.size(); ++oi) {
    ObjectSegment& seg = out.segments[oi];
    seg.parts.clear();
    if (assembly.source_query[oi] >= dynamic_preds.size())
      throw ValidationError("dynamic predictions missing for a source query");
    const auto& queries = dynamic_preds[assembly.source_query[oi]];

    struct Candidate {
      PartId part_class;
      double score;
      const std::vector<double>* prob;
    };
    std::vector<Candidate> candidates;
    for (const DynamicPartPrediction& dq : queries) {
      if (dq.class_scores.size() != num_parts + 1)
        throw ValidationError("dynamic query scores must cover all part "
                              "classes plus the no-part entry");
      if (dq.mask_prob.size() != n_pixels)
        throw ValidationError("dynamic query mask does not match the canvas");
      std::size_t best = 0;
      for (std::size_t i = 1; i < dq.class_scores.size(); ++i) {
        if (dq.class_scores[i] > dq.class_scores[best]) best = i;
      }
      if (best == num_parts) continue;  // "no part"
      const PartId part_class = static_cast<PartId>(best + 1);
      if (!taxonomy.is_compatible(seg.object_class, part_class)) continue;
      candidates.push_back(
          Candidate{part_class, dq.class_scores[best], &dq.mask_prob});
    }
    if (candidates.empty()) continue;

    std::map<PartId, BitMask> part_masks;
    seg.mask.for_each_set_bit([&](std::size_t p) {
      const Candidate* win = nullptr;
      double best = 0.0;
      for (const Candidate& cand : candidates) {
        const double v = cand.score * (*cand.prob)[p];
        if (v > best) {
          best = v;
          win = &cand;
        }
      }
      if (win && (*win->prob)[p] > 0.5) {
        auto it = part_masks.find(win->part_class);
        if (it == part_masks.end()) {
          it = part_masks
                   .emplace(win->part_class, BitMask(out.width, out.height))
                   .first;
        }
        it->second.set_index(p);
      }
    });
    for (auto& [id, mask] : part_masks) {
      seg.parts.push_back(PartSegment{id, std::move(mask)});
    }
  }
  return out;
}

}  // namespace pps
