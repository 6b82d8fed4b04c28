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

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace pps {

// Base error for everything the toolkit throws. The CLI maps subclasses to
// exit codes (IoError/ValidationError -> 2, everything else -> 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File access, codec and format errors.
class IoError : public Error {
 public:
  using Error::Error;
};

// Violations of data contracts (invalid ids, shape mismatches, broken
// structural invariants in inputs).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Self-contained 64-bit generator (splitmix update). Embedded so that seeded
// outputs are identical across platforms and standard-library versions.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n). n must be positive.
  std::uint64_t next_below(std::uint64_t n) { return next() % n; }

  // Uniform in [lo, hi] (inclusive).
  std::uint64_t next_in(std::uint64_t lo, std::uint64_t hi) {
    return lo + next_below(hi - lo + 1);
  }

 private:
  std::uint64_t state_;
};

// Runs fn(0..count-1) on up to `workers` threads. Work items are claimed from
// a shared counter; callers that need deterministic output write into
// per-index slots and reduce in index order afterwards.
template <typename Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn) {
  if (count == 0) return;
  if (workers <= 1 || count == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const unsigned n_threads =
      static_cast<unsigned>(std::min<std::size_t>(workers, count));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::atomic<bool> error_claimed{false};
  for (unsigned t = 0; t < n_threads; ++t) {
    pool.emplace_back([&]() {
      while (!failed.load(std::memory_order_relaxed)) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) break;
        try {
          fn(i);
        } catch (...) {
          if (!error_claimed.exchange(true)) {
            first_error = std::current_exception();
          }
          failed.store(true, std::memory_order_relaxed);
          break;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace pps
