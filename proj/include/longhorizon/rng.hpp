/*
 * Copyright 2026 The LongHorizon Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef LONGHORIZON_RNG_HPP_
#define LONGHORIZON_RNG_HPP_

#include <cstdint>
#include <random>
#include <string_view>

namespace longhorizon {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to decorrelate derived seeds.
constexpr std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t Fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Seed of child stream `stream` under `parent`. Replicate r of a bootstrap with
// master seed s uses DeriveSeed(s, r); stages use DeriveSeed(s, "stage-name").
constexpr std::uint64_t DeriveSeed(std::uint64_t parent, std::uint64_t stream) {
  return SplitMix64(parent ^ SplitMix64(stream + 0x632BE59BD9B4E019ULL));
}

constexpr std::uint64_t DeriveSeed(std::uint64_t parent, std::string_view label) {
  return DeriveSeed(parent, Fnv1a64(label));
}

}  // namespace longhorizon

#endif  // LONGHORIZON_RNG_HPP_
