/*
 * Copyright 2026 The procf Authors.
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

#ifndef PROCF_RNG_H_
#define PROCF_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace procf {

using RandomEngine = std::mt19937_64;

// Derives an independent engine for a named sub-stream of a master seed, so
// that one seed reproduces every random decision of a run regardless of the
// order in which the sub-streams are consumed.
inline RandomEngine SubStream(std::uint64_t seed, std::string_view name,
                              std::uint64_t index = 0) {
  std::vector<std::uint32_t> material;
  material.reserve(name.size() + 4);
  material.push_back(static_cast<std::uint32_t>(seed));
  material.push_back(static_cast<std::uint32_t>(seed >> 32));
  for (char c : name) material.push_back(static_cast<unsigned char>(c));
  material.push_back(static_cast<std::uint32_t>(index));
  material.push_back(static_cast<std::uint32_t>(index >> 32));
  std::seed_seq seq(material.begin(), material.end());
  return RandomEngine(seq);
}

// Uniform index in [0, n). n must be positive.
inline std::size_t UniformIndex(RandomEngine& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline bool Bernoulli(RandomEngine& rng, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return std::bernoulli_distribution(p)(rng);
}

}  // namespace procf

#endif  // PROCF_RNG_H_
