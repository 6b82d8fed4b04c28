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

#include "pps/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pps/common.hpp"

namespace pps {

double iou(const BitMask& a, const BitMask& b) {
  const std::uint64_t inter = BitMask::intersection_count(a, b);
  const std::uint64_t uni = BitMask::union_count(a, b);
  return uni == 0 ? 0.0
                  : static_cast<double>(inter) / static_cast<double>(uni);
}

double iou(const BitMask& a, const BitMask& b, const BitMask& valid) {
  const std::uint64_t inter = BitMask::intersection_count(a, b, valid);
  const std::uint64_t uni = BitMask::union_count(a, b, valid);
  return uni == 0 ? 0.0
                  : static_cast<double>(inter) / static_cast<double>(uni);
}

double iou_p(const ObjectSegment& pred, const ObjectSegment& gt,
             const Taxonomy& t, const BitMask* valid, bool strict) {
  if (pred.object_class != gt.object_class)
    throw ValidationError("iou_p requires a same-class pair");

  BitMask all_valid;
  if (!valid) {
    all_valid = BitMask(gt.mask.width(), gt.mask.height());
    all_valid |= gt.mask;
    all_valid |= pred.mask;
    valid = &all_valid;
  }

  const auto compat = t.compatible_parts(pred.object_class);
  if (compat.empty()) return iou(pred.mask, gt.mask, *valid);

  // Part masks clipped to the owning object mask and the valid region; the
  // residual is whatever object area the parts leave uncovered.
  const BitMask pred_region = pred.mask & *valid;
  const BitMask gt_region = gt.mask & *valid;
  std::map<PartId, BitMask> pred_parts, gt_parts;
  BitMask pred_residual = pred_region;
  BitMask gt_residual = gt_region;
  for (const PartSegment& part : pred.parts) {
    BitMask clipped = part.mask & pred_region;
    pred_residual.subtract(clipped);
    pred_parts.emplace(part.part_class, std::move(clipped));
  }
  for (const PartSegment& part : gt.parts) {
    BitMask clipped = part.mask & gt_region;
    gt_residual.subtract(clipped);
    gt_parts.emplace(part.part_class, std::move(clipped));
  }

  const BitMask empty(gt.mask.width(), gt.mask.height());
  double sum = 0.0;
  std::size_t categories = 0;
  for (PartId id : compat) {
    const auto pit = pred_parts.find(id);
    const auto git = gt_parts.find(id);
    const BitMask& pm = pit == pred_parts.end() ? empty : pit->second;
    const BitMask& gm = git == gt_parts.end() ? empty : git->second;
    const bool present = pm.any() || gm.any();
    if (present) {
      sum += iou(pm, gm);
      ++categories;
    } else if (strict) {
      sum += 1.0;  // agreement on absence
      ++categories;
    }
  }
  if (pred_residual.any() || gt_residual.any()) {
    sum += iou(pred_residual, gt_residual);
    ++categories;
  }
  if (categories == 0) return iou(pred.mask, gt.mask, *valid);
  return sum / static_cast<double>(categories);
}

std::vector<ClassMatches> match_for_metrics(const SegmentSet& pred,
                                            const SegmentSet& gt,
                                            const Taxonomy& t, bool strict) {
  if (pred.width != gt.width || pred.height != gt.height)
    throw ValidationError("prediction and ground truth canvas mismatch");

  BitMask valid(gt.width, gt.height);
  for (const ObjectSegment& seg : gt.segments) valid |= seg.mask;

  std::map<ClassId, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>>
      by_class;  // class -> (pred indices, gt indices)
  for (std::size_t i = 0; i < pred.segments.size(); ++i)
    by_class[pred.segments[i].object_class].first.push_back(i);
  for (std::size_t i = 0; i < gt.segments.size(); ++i)
    by_class[gt.segments[i].object_class].second.push_back(i);

  std::vector<ClassMatches> out;
  for (const auto& [class_id, indices] : by_class) {
    ClassMatches matches;
    matches.class_id = class_id;
    std::set<std::size_t> matched_preds;
    for (std::size_t gi : indices.second) {
      bool found = false;
      for (std::size_t pi : indices.first) {
        if (matched_preds.count(pi)) continue;
        const double overlap =
            iou(pred.segments[pi].mask, gt.segments[gi].mask, valid);
        if (overlap > 0.5) {
          matches.pairs.push_back(MatchedPair{
              pi, gi, overlap,
              iou_p(pred.segments[pi], gt.segments[gi], t, &valid, strict)});
          matched_preds.insert(pi);
          found = true;
          break;  // unique: disjoint pred masks admit one majority overlap
        }
      }
      if (!found) matches.fn_gt_indices.push_back(gi);
    }
    for (std::size_t pi : indices.first) {
      if (!matched_preds.count(pi)) matches.fp_pred_indices.push_back(pi);
    }
    out.push_back(std::move(matches));
  }
  return out;
}

Evaluator::Evaluator(const Taxonomy& t, EvalOptions options)
    : taxonomy_(&t), options_(options), per_class_(t.num_object_classes()) {}

void Evaluator::add_image(const SegmentSet& pred, const SegmentSet& gt) {
  const std::vector<ClassMatches> matches =
      match_for_metrics(pred, gt, *taxonomy_, options_.strict_iou_p);
  for (const ClassMatches& m : matches) {
    if (!taxonomy_->has_object_class(m.class_id))
      throw ValidationError("segment uses unknown object class " +
                            std::to_string(m.class_id));
    ClassAccum& accum = per_class_[m.class_id];
    accum.tp += m.pairs.size();
    accum.fp += m.fp_pred_indices.size();
    accum.fn += m.fn_gt_indices.size();
    for (const MatchedPair& pair : m.pairs) {
      accum.iou_p_values.push_back(pair.iou_p);
      accum.iou_values.push_back(pair.iou);
    }
  }

  // Instance-agnostic accumulation for thing classes.
  BitMask valid(gt.width, gt.height);
  for (const ObjectSegment& seg : gt.segments) valid |= seg.mask;
  std::map<ClassId, std::pair<BitMask, BitMask>> semantic;
  auto united = [&](std::map<ClassId, std::pair<BitMask, BitMask>>& acc,
                    const SegmentSet& s, bool is_pred) {
    for (const ObjectSegment& seg : s.segments) {
      if (!taxonomy_->is_thing(seg.object_class)) continue;
      auto it = acc.find(seg.object_class);
      if (it == acc.end()) {
        it = acc.emplace(seg.object_class,
                         std::make_pair(BitMask(s.width, s.height),
                                        BitMask(s.width, s.height)))
                 .first;
      }
      (is_pred ? it->second.first : it->second.second) |= seg.mask;
    }
  };
  united(semantic, pred, true);
  united(semantic, gt, false);
  for (auto& [class_id, masks] : semantic) {
    ClassAccum& accum = per_class_[class_id];
    accum.semantic_intersection +=
        BitMask::intersection_count(masks.first, masks.second, valid);
    accum.semantic_union +=
        BitMask::union_count(masks.first, masks.second, valid);
  }
  ++images_;
}

void Evaluator::merge(const Evaluator& other) {
  if (other.per_class_.size() != per_class_.size())
    throw ValidationError("cannot merge evaluators over different taxonomies");
  for (std::size_t c = 0; c < per_class_.size(); ++c) {
    ClassAccum& dst = per_class_[c];
    const ClassAccum& src = other.per_class_[c];
    dst.tp += src.tp;
    dst.fp += src.fp;
    dst.fn += src.fn;
    dst.iou_p_values.insert(dst.iou_p_values.end(), src.iou_p_values.begin(),
                            src.iou_p_values.end());
    dst.iou_values.insert(dst.iou_values.end(), src.iou_values.begin(),
                          src.iou_values.end());
    dst.semantic_intersection += src.semantic_intersection;
    dst.semantic_union += src.semantic_union;
  }
  images_ += other.images_;
}

namespace {

// Order-invariant sum: sorting first makes the result independent of the
// order images were accumulated in.
double sorted_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum;
}

struct MeanAccum {
  double sum = 0.0;
  std::size_t n = 0;
  void add(double v) {
    sum += v;
    ++n;
  }
  double mean() const { return n == 0 ? 0.0 : sum / static_cast<double>(n); }
};

}  // namespace

EvalReport Evaluator::finalize() const {
  EvalReport report;
  report.aggregates.images = images_;
  report.per_class.resize(per_class_.size());

  MeanAccum part_pq_pt, part_pq_nopt, part_pq_all, part_sq_pt;
  MeanAccum pq_th, pq_st, pq_all, miou_th;

  for (std::size_t c = 0; c < per_class_.size(); ++c) {
    const ClassAccum& accum = per_class_[c];
    const ObjectClassDef& def =
        taxonomy_->object_class(static_cast<ClassId>(c));
    ClassMetrics& out = report.per_class[c];
    out.class_id = static_cast<ClassId>(c);
    out.name = def.name;
    out.has_parts = def.has_parts();
    out.is_thing = def.kind == ClassKind::kThing;
    out.tp = accum.tp;
    out.fp = accum.fp;
    out.fn = accum.fn;
    out.sum_iou_p = sorted_sum(accum.iou_p_values);
    out.sum_iou = sorted_sum(accum.iou_values);
    out.present = (accum.tp + accum.fp + accum.fn) > 0;

    if (out.present) {
      const double denom = static_cast<double>(accum.tp) +
                           0.5 * static_cast<double>(accum.fp) +
                           0.5 * static_cast<double>(accum.fn);
      out.part_pq = 100.0 * out.sum_iou_p / denom;
      out.pq = 100.0 * out.sum_iou / denom;
      out.part_sq =
          accum.tp > 0 ? 100.0 * out.sum_iou_p / static_cast<double>(accum.tp)
                       : 0.0;

      part_pq_all.add(out.part_pq);
      pq_all.add(out.pq);
      (out.has_parts ? part_pq_pt : part_pq_nopt).add(out.part_pq);
      if (out.has_parts) part_sq_pt.add(out.part_sq);
      (out.is_thing ? pq_th : pq_st).add(out.pq);
    }
    if (out.is_thing && accum.semantic_union > 0) {
      miou_th.add(100.0 * static_cast<double>(accum.semantic_intersection) /
                  static_cast<double>(accum.semantic_union));
    }
  }

  report.aggregates.part_pq_pt = part_pq_pt.mean();
  report.aggregates.part_pq_nopt = part_pq_nopt.mean();
  report.aggregates.part_pq_all = part_pq_all.mean();
  report.aggregates.part_sq_pt = part_sq_pt.mean();
  report.aggregates.pq_th = pq_th.mean();
  report.aggregates.pq_st = pq_st.mean();
  report.aggregates.pq_all = pq_all.mean();
  report.aggregates.miou_th = miou_th.mean();
  return report;
}

EvalReport evaluate(std::span<const SegmentSet> preds,
                    std::span<const SegmentSet> gts, const Taxonomy& t,
                    const EvalOptions& options) {
  if (preds.size() != gts.size())
    throw ValidationError("prediction and ground-truth streams have "
                          "different lengths");
  if (options.workers <= 1 || preds.size() <= 1) {
    Evaluator evaluator(t, options);
    for (std::size_t i = 0; i < preds.size(); ++i)
      evaluator.add_image(preds[i], gts[i]);
    return evaluator.finalize();
  }

  std::vector<Evaluator> slots(preds.size(), Evaluator(t, options));
  parallel_for(preds.size(), options.workers, [&](std::size_t i) {
    slots[i].add_image(preds[i], gts[i]);
  });
  Evaluator total(t, options);
  for (const Evaluator& slot : slots) total.merge(slot);
  return total.finalize();
}

double miou_things(std::span<const SegmentSet> preds,
                   std::span<const SegmentSet> gts, const Taxonomy& t) {
  return evaluate(preds, gts, t).aggregates.miou_th;
}

namespace {

std::string format_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%9.4f", v);
  return buf;
}

}  // namespace

std::string report_to_text(const EvalReport& report, const Taxonomy& t) {
  std::ostringstream os;
  os << "images evaluated: " << report.aggregates.images << "\n\n";
  os << "  id  name                  kind   parts    tp    fp    fn    "
        "PartPQ    PartSQ        PQ\n";
  for (const ClassMetrics& c : report.per_class) {
    if (!c.present) continue;
    char line[256];
    std::snprintf(line, sizeof(line),
                  "%4u  %-20s  %-5s  %5s  %4llu  %4llu  %4llu %9.4f %9.4f %9.4f\n",
                  c.class_id, c.name.c_str(), c.is_thing ? "thing" : "stuff",
                  c.has_parts ? "yes" : "no",
                  static_cast<unsigned long long>(c.tp),
                  static_cast<unsigned long long>(c.fp),
                  static_cast<unsigned long long>(c.fn), c.part_pq, c.part_sq,
                  c.pq);
    os << line;
  }
  os << "\naggregates (x100):\n";
  os << "  PartPQ  Pt " << format_score(report.aggregates.part_pq_pt)
     << "   NoPt " << format_score(report.aggregates.part_pq_nopt) << "   All "
     << format_score(report.aggregates.part_pq_all) << "\n";
  os << "  PartSQ  Pt " << format_score(report.aggregates.part_sq_pt) << "\n";
  os << "  PQ      Th " << format_score(report.aggregates.pq_th) << "   St   "
     << format_score(report.aggregates.pq_st) << "   All "
     << format_score(report.aggregates.pq_all) << "\n";
  os << "  mIoU    Th " << format_score(report.aggregates.miou_th) << "\n";
  (void)t;
  return os.str();
}

std::string report_to_json(const EvalReport& report, const Taxonomy& t) {
  nlohmann::json doc;
  doc["taxonomy"] = t.name();
  doc["images"] = report.aggregates.images;
  doc["aggregates"] = {
      {"part_pq_pt", report.aggregates.part_pq_pt},
      {"part_pq_nopt", report.aggregates.part_pq_nopt},
      {"part_pq_all", report.aggregates.part_pq_all},
      {"part_sq_pt", report.aggregates.part_sq_pt},
      {"pq_th", report.aggregates.pq_th},
      {"pq_st", report.aggregates.pq_st},
      {"pq_all", report.aggregates.pq_all},
      {"miou_th", report.aggregates.miou_th},
  };
  doc["classes"] = nlohmann::json::array();
  for (const ClassMetrics& c : report.per_class) {
    doc["classes"].push_back({
        {"id", c.class_id},
        {"name", c.name},
        {"kind", c.is_thing ? "thing" : "stuff"},
        {"has_parts", c.has_parts},
        {"present", c.present},
        {"tp", c.tp},
        {"fp", c.fp},
        {"fn", c.fn},
        {"sum_iou_p", c.sum_iou_p},
        {"sum_iou", c.sum_iou},
        {"part_pq", c.part_pq},
        {"part_sq", c.part_sq},
        {"pq", c.pq},
    });
  }
  return doc.dump(2) + "\n";
}

}  // namespace pps
