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

#include <span>
#include <vector>

#include "pps/bitmask.hpp"

namespace pps {

/// A scalar loss together with its analytic gradient with respect to the
/// differentiated input (probabilities or logits, per operation). Everything
/// is computed in 64-bit floating point with no hidden state.
struct LossValue {
  double value = 0.0;
  std::vector<double> gradient;
};

enum class DiceVariant {
  kLinear,   // denominator sum(p) + sum(g) + 1
  kSquared,  // denominator sum(p^2) + sum(g^2) + 1
};

/// Smoothed Dice loss over probabilities:
///   1 - (2*sum(p*g) + 1) / (sum(p) + sum(g) + 1)
/// Gradient is taken with respect to `probs`.
LossValue dice_loss(std::span<const double> probs,
                    std::span<const double> target,
                    DiceVariant variant = DiceVariant::kLinear);

/// Mean per-pixel binary cross-entropy on logits, computed in the stable
/// log-sum-exp form. Gradient w.r.t. logits is (sigmoid(x) - g) / n.
LossValue bce_mask_loss(std::span<const double> logits,
                        std::span<const double> target);

/// Multi-class cross-entropy, -log softmax(logits)[target]. Gradient is
/// softmax - one_hot(target).
LossValue class_ce_loss(std::span<const double> logits,
                        std::size_t target_class);

struct LossWeights {
  double lambda_obj = 1.0;
  double lambda_pt = 1.0;
};

double total_loss(double l_obj, double l_pt, const LossWeights& w);

/// Sum of the per-layer totals; throws on an empty sequence.
double deep_supervision_sum(std::span<const double> per_layer_losses);

/// Relative balance of the two mask-loss terms inside one supervision level.
struct MaskLossWeights {
  double ce = 1.0;
  double dice = 1.0;
};

/// ce * bce(logits, target) + dice * dice_loss(sigmoid(logits), target),
/// with the gradient chained through the sigmoid onto the logits.
LossValue combined_mask_loss(std::span<const double> logits,
                             std::span<const double> target,
                             const MaskLossWeights& w,
                             DiceVariant variant = DiceVariant::kLinear);

/// Expands a bit mask into a 0/1 double array (row-major), the target format
/// of the mask losses.
std::vector<double> mask_to_array(const BitMask& mask);

}  // namespace pps
