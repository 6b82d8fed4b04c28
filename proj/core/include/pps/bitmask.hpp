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

#include <bit>
#include <cstdint>
#include <span>
#include <vector>

#include "pps/common.hpp"

namespace pps {

/// Binary H x W mask packed into 64-bit words over row-major pixel order.
/// Intersection, union and subset queries run word-parallel via popcounts;
/// these dominate evaluation time, so keep them allocation-free.
///
/// Invariant: bits past width*height in the last word are always zero.
class BitMask {
 public:
  BitMask() = default;
  BitMask(std::uint32_t width, std::uint32_t height)
      : width_(width),
        height_(height),
        words_((static_cast<std::size_t>(width) * height + 63) / 64, 0) {}

  std::uint32_t width() const { return width_; }
  std::uint32_t height() const { return height_; }
  std::size_t size() const {
    return static_cast<std::size_t>(width_) * height_;
  }

  bool same_shape(const BitMask& o) const {
    return width_ == o.width_ && height_ == o.height_;
  }

  bool test(std::uint32_t x, std::uint32_t y) const {
    return test_index(static_cast<std::size_t>(y) * width_ + x);
  }
  bool test_index(std::size_t i) const {
    return (words_[i >> 6] >> (i & 63)) & 1u;
  }

  void set(std::uint32_t x, std::uint32_t y, bool value = true) {
    set_index(static_cast<std::size_t>(y) * width_ + x, value);
  }
  void set_index(std::size_t i, bool value = true) {
    if (value) {
      words_[i >> 6] |= (std::uint64_t{1} << (i & 63));
    } else {
      words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63));
    }
  }

  std::uint64_t count() const {
    std::uint64_t c = 0;
    for (std::uint64_t w : words_) c += std::popcount(w);
    return c;
  }

  bool any() const {
    for (std::uint64_t w : words_)
      if (w) return true;
    return false;
  }

  BitMask& operator&=(const BitMask& o) {
    require_shape(o);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= o.words_[i];
    return *this;
  }

  BitMask& operator|=(const BitMask& o) {
    require_shape(o);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
    return *this;
  }

  /// Removes every pixel of `o` from this mask.
  BitMask& subtract(const BitMask& o) {
    require_shape(o);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= ~o.words_[i];
    return *this;
  }

  friend BitMask operator&(BitMask a, const BitMask& b) { return a &= b; }
  friend BitMask operator|(BitMask a, const BitMask& b) { return a |= b; }

  bool operator==(const BitMask& o) const = default;

  bool intersects(const BitMask& o) const {
    require_shape(o);
    for (std::size_t i = 0; i < words_.size(); ++i)
      if (words_[i] & o.words_[i]) return true;
    return false;
  }

  bool is_subset_of(const BitMask& o) const {
    require_shape(o);
    for (std::size_t i = 0; i < words_.size(); ++i)
      if (words_[i] & ~o.words_[i]) return false;
    return true;
  }

  static std::uint64_t intersection_count(const BitMask& a, const BitMask& b) {
    a.require_shape(b);
    std::uint64_t c = 0;
    for (std::size_t i = 0; i < a.words_.size(); ++i)
      c += std::popcount(a.words_[i] & b.words_[i]);
    return c;
  }

  static std::uint64_t intersection_count(const BitMask& a, const BitMask& b,
                                          const BitMask& valid) {
    a.require_shape(b);
    a.require_shape(valid);
    std::uint64_t c = 0;
    for (std::size_t i = 0; i < a.words_.size(); ++i)
      c += std::popcount(a.words_[i] & b.words_[i] & valid.words_[i]);
    return c;
  }

  static std::uint64_t union_count(const BitMask& a, const BitMask& b) {
    a.require_shape(b);
    std::uint64_t c = 0;
    for (std::size_t i = 0; i < a.words_.size(); ++i)
      c += std::popcount(a.words_[i] | b.words_[i]);
    return c;
  }

  static std::uint64_t union_count(const BitMask& a, const BitMask& b,
                                   const BitMask& valid) {
    a.require_shape(b);
    a.require_shape(valid);
    std::uint64_t c = 0;
    for (std::size_t i = 0; i < a.words_.size(); ++i)
      c += std::popcount((a.words_[i] | b.words_[i]) & valid.words_[i]);
    return c;
  }

  std::span<const std::uint64_t> words() const { return words_; }

  /// Calls fn(pixel_index) for every set bit, in ascending order.
  template <typename Fn>
  void for_each_set_bit(Fn&& fn) const {
    for (std::size_t wi = 0; wi < words_.size(); ++wi) {
      std::uint64_t w = words_[wi];
      while (w) {
        const int bit = std::countr_zero(w);
        fn(wi * 64 + static_cast<std::size_t>(bit));
        w &= w - 1;
      }
    }
  }

 private:
  void require_shape(const BitMask& o) const {
    if (!same_shape(o)) throw ValidationError("mask shape mismatch");
  }

  std::uint32_t width_ = 0;
  std::uint32_t height_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace pps
