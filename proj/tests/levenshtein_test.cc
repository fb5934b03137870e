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

#include "procf/levenshtein.h"

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "lev_oracle.h"

namespace procf {
namespace {

using Seq = std::vector<int>;
using ::procf::testing::AllSequences;
using ::procf::testing::RecursiveLev;

std::size_t Lev(const Seq& a, const Seq& b) {
  return Levenshtein(std::span<const int>(a), std::span<const int>(b));
}

TEST(LevenshteinTest, KnownValues) {
  EXPECT_EQ(Lev({0, 1, 2}, {0, 1, 2}), 0u);
  EXPECT_EQ(Lev({0, 1, 2}, {0, 2}), 1u);
  EXPECT_EQ(Lev({}, {0, 1}), 2u);
  EXPECT_EQ(Lev({0, 1}, {}), 2u);
  EXPECT_EQ(Lev({}, {}), 0u);
  // kitten -> sitting
  const std::string kitten = "kitten", sitting = "sitting";
  EXPECT_EQ(Levenshtein(std::span<const char>(kitten.data(), kitten.size()),
                        std::span<const char>(sitting.data(), sitting.size())),
            3u);
}

TEST(LevenshteinTest, MatchesRecursiveOracleOnAllShortPairs) {
  const auto all = AllSequences(4, 3);
  ASSERT_EQ(all.size(), 121u);
  for (const Seq& a : all) {
    for (const Seq& b : all) {
      std::vector<std::vector<int>> memo(a.size(), std::vector<int>(b.size(), -1));
      ASSERT_EQ(Lev(a, b), RecursiveLev(a, b, 0, 0, memo));
    }
  }
}

TEST(LevenshteinTest, MetricPropertiesOnRandomSequences) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> len(0, 9), sym(0, 4);
  auto draw = [&] {
    Seq s(static_cast<std::size_t>(len(rng)));
    for (int& v : s) v = sym(rng);
    return s;
  };
  for (int i = 0; i < 2000; ++i) {
    const Seq a = draw(), b = draw(), c = draw();
    const std::size_t ab = Lev(a, b);
    EXPECT_EQ(ab, Lev(b, a));
    EXPECT_EQ(Lev(a, a), 0u);
    EXPECT_EQ(ab == 0, a == b);
    EXPECT_LE(Lev(a, c), ab + Lev(b, c));
    EXPECT_GE(ab, a.size() > b.size() ? a.size() - b.size() : b.size() - a.size());
    EXPECT_LE(ab, std::max(a.size(), b.size()));
  }
}

}  // namespace
}  // namespace procf
