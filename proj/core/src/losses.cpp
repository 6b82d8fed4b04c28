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

#include "pps/losses.hpp"

#include <algorithm>
#include <cmath>

namespace pps {

namespace {

void require_same_shape(std::size_t a, std::size_t b) {
  if (a != b) throw ValidationError("loss input shape mismatch");
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

LossValue dice_loss(std::span<const double> probs,
                    std::span<const double> target, DiceVariant variant) {
  require_same_shape(probs.size(), target.size());
  double inter = 0.0, sum_p = 0.0, sum_g = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    inter += probs[i] * target[i];
    if (variant == DiceVariant::kLinear) {
      sum_p += probs[i];
      sum_g += target[i];
    } else {
      sum_p += probs[i] * probs[i];
      sum_g += target[i] * target[i];
    }
  }
  const double numer = 2.0 * inter + 1.0;
  const double denom = sum_p + sum_g + 1.0;

  LossValue out;
  out.value = 1.0 - numer / denom;
  out.gradient.resize(probs.size());
  const double inv_d2 = 1.0 / (denom * denom);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double d_numer = 2.0 * target[i];
    const double d_denom =
        variant == DiceVariant::kLinear ? 1.0 : 2.0 * probs[i];
    out.gradient[i] = -(d_numer * denom - numer * d_denom) * inv_d2;
  }
  return out;
}

LossValue bce_mask_loss(std::span<const double> logits,
                        std::span<const double> target) {
  require_same_shape(logits.size(), target.size());
  if (logits.empty()) throw ValidationError("bce_mask_loss on empty input");
  const double inv_n = 1.0 / static_cast<double>(logits.size());
  LossValue out;
  out.gradient.resize(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double x = logits[i];
    const double g = target[i];
    // max(x,0) - x*g + log(1 + exp(-|x|))
    sum += std::max(x, 0.0) - x * g + std::log1p(std::exp(-std::abs(x)));
    out.gradient[i] = (sigmoid(x) - g) * inv_n;
  }
  out.value = sum * inv_n;
  return out;
}

LossValue class_ce_loss(std::span<const double> logits,
                        std::size_t target_class) {
  if (logits.empty()) throw ValidationError("class_ce_loss on empty logits");
  if (target_class >= logits.size())
    throw ValidationError("target class " + std::to_string(target_class) +
                          " out of range for " +
                          std::to_string(logits.size()) + " classes");
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double sum_exp = 0.0;
  for (double x : logits) sum_exp += std::exp(x - max_logit);
  const double log_sum = max_logit + std::log(sum_exp);

  LossValue out;
  out.value = log_sum - logits[target_class];
  out.gradient.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double softmax = std::exp(logits[i] - log_sum);
    out.gradient[i] = softmax - (i == target_class ? 1.0 : 0.0);
  }
  return out;
}

double total_loss(double l_obj, double l_pt, const LossWeights& w) {
  return w.lambda_obj * l_obj + w.lambda_pt * l_pt;
}

double deep_supervision_sum(std::span<const double> per_layer_losses) {
  if (per_layer_losses.empty())
    throw ValidationError("deep_supervision_sum on empty sequence");
  double sum = 0.0;
  for (double v : per_layer_losses) sum += v;
  return sum;
}

LossValue combined_mask_loss(std::span<const double> logits,
                             std::span<const double> target,
                             const MaskLossWeights& w, DiceVariant variant) {
  std::vector<double> probs(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) probs[i] = sigmoid(logits[i]);

  const LossValue ce = bce_mask_loss(logits, target);
  const LossValue dice = dice_loss(probs, target, variant);

  LossValue out;
  out.value = w.ce * ce.value + w.dice * dice.value;
  out.gradient.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double dsig = probs[i] * (1.0 - probs[i]);
    out.gradient[i] = w.ce * ce.gradient[i] + w.dice * dice.gradient[i] * dsig;
  }
  return out;
}

std::vector<double> mask_to_array(const BitMask& mask) {
  std::vector<double> out(mask.size(), 0.0);
  mask.for_each_set_bit([&](std::size_t i) { out[i] = 1.0; });
  return out;
}

}  // namespace pps
