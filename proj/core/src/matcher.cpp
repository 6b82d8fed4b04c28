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

#include "pps/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pps/losses.hpp"

namespace pps {

namespace {

// Padding cost for rectangular instances. Finite so the potentials stay
// ordinary arithmetic; large enough that padding never displaces a real pair.
constexpr double kPadCost = 1e9;

constexpr double kClampEps = 1e-7;

// Shortest-augmenting-path assignment on a square matrix. Returns the
// column assigned to each row and the dual potentials.
struct SquareSolution {
  std::vector<std::size_t> col_of_row;
  std::vector<double> u;  // row potentials
  std::vector<double> v;  // column potentials
};

SquareSolution solve_square(const std::vector<std::vector<double>>& a) {
  const std::size_t n = a.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      std::size_t j1 = 0;
      double delta = inf;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  SquareSolution sol;
  sol.col_of_row.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) sol.col_of_row[p[j] - 1] = j - 1;
  sol.u.assign(n, 0.0);
  sol.v.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) sol.u[i] = u[i + 1];
  for (std::size_t j = 0; j < n; ++j) sol.v[j] = v[j + 1];
  return sol;
}

// Kuhn augmenting-path matching restricted to tight edges. Used to test
// whether a partially forced assignment extends to a full optimal one.
class TightMatcher {
 public:
  TightMatcher(const std::vector<std::vector<char>>& tight, std::size_t n)
      : tight_(tight), n_(n) {}

  // forced_col[r] == n_ means "row r unrestricted".
  bool feasible(const std::vector<std::size_t>& forced_col) const {
    std::vector<std::size_t> row_of_col(n_, n_);
    std::vector<char> col_taken(n_, 0);
    for (std::size_t r = 0; r < n_; ++r) {
      const std::size_t c = forced_col[r];
      if (c == n_) continue;
      if (!tight_[r][c] || col_taken[c]) return false;
      col_taken[c] = 1;
      row_of_col[c] = r;
    }
    for (std::size_t r = 0; r < n_; ++r) {
      if (forced_col[r] != n_) continue;
      std::vector<char> visited(n_, 0);
      if (!augment(r, forced_col, row_of_col, visited)) return false;
    }
    return true;
  }

 private:
  bool augment(std::size_t r, const std::vector<std::size_t>& forced_col,
               std::vector<std::size_t>& row_of_col,
               std::vector<char>& visited) const {
    for (std::size_t c = 0; c < n_; ++c) {
      if (!tight_[r][c] || visited[c]) continue;
      visited[c] = 1;
      const std::size_t occupant = row_of_col[c];
      if (occupant == n_ ||
          (forced_col[occupant] == n_ &&
           augment(occupant, forced_col, row_of_col, visited))) {
        row_of_col[c] = r;
        return true;
      }
    }
    return false;
  }

  const std::vector<std::vector<char>>& tight_;
  std::size_t n_;
};

double clamp_prob(double p) {
  return std::min(1.0 - kClampEps, std::max(kClampEps, p));
}

double bce_on_probs(std::span<const double> probs,
                    std::span<const double> target) {
  if (probs.size() != target.size())
    throw ValidationError("match cost mask shape mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = clamp_prob(probs[i]);
    sum -= target[i] * std::log(p) + (1.0 - target[i]) * std::log(1.0 - p);
  }
  return sum / static_cast<double>(probs.size());
}

}  // namespace

Assignment hungarian(const CostMatrix& cost) {
  Assignment out;
  const std::size_t rows = cost.rows();
  const std::size_t cols = cost.cols();
  if (rows == 0 || cols == 0) {
    for (std::size_t r = 0; r < rows; ++r) out.unmatched_predictions.push_back(r);
    return out;
  }

  double max_abs = 1.0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = cost.at(r, c);
      if (!std::isfinite(v))
        throw ValidationError("cost matrix entry is not finite");
      max_abs = std::max(max_abs, std::abs(v));
    }
  }

  const std::size_t n = std::max(rows, cols);
  std::vector<std::vector<double>> a(n, std::vector<double>(n, kPadCost));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) a[r][c] = cost.at(r, c);

  const SquareSolution sol = solve_square(a);

  // Every optimal assignment lives inside the tight-edge graph of the dual
  // potentials. The tolerance absorbs rounding from potential updates; it is
  // widened when padding mixes the 1e9 sentinel into the arithmetic.
  const double tau = (rows == cols ? 1e-12 : 1e-6) * max_abs;
  std::vector<std::vector<char>> tight(n, std::vector<char>(n, 0));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      tight[r][c] = (a[r][c] - sol.u[r] - sol.v[c]) <= tau;
    }
  }
  TightMatcher matcher(tight, n);

  // Fix rows in order, trying real columns in ascending order first, so the
  // pair list is the lexicographically smallest optimal one.
  std::vector<std::size_t> forced(n, n);
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<std::size_t> candidates;
    for (std::size_t c = 0; c < cols; ++c) candidates.push_back(c);
    for (std::size_t c = cols; c < n; ++c) candidates.push_back(c);
    bool fixed = false;
    std::vector<char> col_used(n, 0);
    for (std::size_t rr = 0; rr < n; ++rr)
      if (forced[rr] != n) col_used[forced[rr]] = 1;
    for (std::size_t c : candidates) {
      if (col_used[c] || !tight[r][c]) continue;
      forced[r] = c;
      if (matcher.feasible(forced)) {
        fixed = true;
        break;
      }
      forced[r] = n;
    }
    if (!fixed) {
      // Cannot happen for a consistent tight graph; fall back to the solver's
      // own column to stay well-defined.
      forced[r] = sol.col_of_row[r];
    }
  }

  for (std::size_t r = 0; r < rows; ++r) {
    if (forced[r] < cols) {
      out.pairs.emplace_back(r, forced[r]);
      out.total_cost += cost.at(r, forced[r]);
    } else {
      out.unmatched_predictions.push_back(r);
    }
  }
  return out;
}

double match_cost(const QueryPrediction& pred, const ObjectSegment& gt,
                  const MatchCostWeights& w) {
  if (pred.object_mask_prob.size() != gt.mask.size())
    throw ValidationError("prediction and ground truth canvas mismatch");
  if (gt.object_class >= pred.class_scores.size() - 1)
    throw ValidationError("ground-truth class outside prediction score range");

  const double score = pred.class_scores[gt.object_class];
  const double class_term =
      w.log_prob_class_cost ? -std::log(clamp_prob(score)) : -score;

  const std::vector<double> target = mask_to_array(gt.mask);
  const double ce = bce_on_probs(pred.object_mask_prob, target);
  const double dice = dice_loss(pred.object_mask_prob, target).value;

  return w.w_class * class_term + w.w_ce_mask * ce + w.w_dice * dice;
}

CostMatrix build_match_cost_matrix(std::span<const QueryPrediction> preds,
                                   const SegmentSet& gts,
                                   const MatchCostWeights& w) {
  CostMatrix cost(preds.size(), gts.segments.size());
  for (std::size_t r = 0; r < preds.size(); ++r) {
    for (std::size_t c = 0; c < gts.segments.size(); ++c) {
      cost.at(r, c) = match_cost(preds[r], gts.segments[c], w);
    }
  }
  return cost;
}

Assignment match_queries(std::span<const QueryPrediction> preds,
                         const SegmentSet& gts, const MatchCostWeights& w) {
  return hungarian(build_match_cost_matrix(preds, gts, w));
}

Assignment match_parts_per_object(
    std::span<const DynamicPartPrediction> dynamic_preds,
    std::span<const PartSegment> gt_parts, const MatchCostWeights& w) {
  CostMatrix cost(dynamic_preds.size(), gt_parts.size());
  std::vector<std::vector<double>> targets;
  targets.reserve(gt_parts.size());
  for (const PartSegment& part : gt_parts)
    targets.push_back(mask_to_array(part.mask));

  for (std::size_t r = 0; r < dynamic_preds.size(); ++r) {
    const DynamicPartPrediction& dq = dynamic_preds[r];
    for (std::size_t c = 0; c < gt_parts.size(); ++c) {
      const PartId part_class = gt_parts[c].part_class;
      if (part_class == 0 || part_class >= dq.class_scores.size())
        throw ValidationError("ground-truth part class outside dynamic "
                              "query score range");
      if (dq.mask_prob.size() != targets[c].size())
        throw ValidationError("dynamic query mask canvas mismatch");
      const double score = dq.class_scores[part_class - 1];
      const double class_term =
          w.log_prob_class_cost ? -std::log(clamp_prob(score)) : -score;
      const double ce = bce_on_probs(dq.mask_prob, targets[c]);
      const double dice = dice_loss(dq.mask_prob, targets[c]).value;
      cost.at(r, c) = w.w_class * class_term + w.w_ce_mask * ce + w.w_dice * dice;
    }
  }
  return hungarian(cost);
}

}  // namespace pps
