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

// Reference edit distance for tests.

#ifndef PROCF_TESTS_LEV_ORACLE_H_
#define PROCF_TESTS_LEV_ORACLE_H_

#include <algorithm>
#include <cstddef>
#include <vector>

namespace procf::testing {

// Recursive definition over suffixes, memoized on (i, j).
inline std::size_t RecursiveLev(const std::vector<int>& a, const std::vector<int>& b, std::size_t i, std::size_t j,
                         std::vector<std::vector<int>>& memo) {
  if (i == a.size()) return b.size() - j;
  if (j == b.size()) return a.size() - i;
  int& cell = memo[i][j];
  if (cell >= 0) return static_cast<std::size_t>(cell);
  const std::size_t result =
      std::min({RecursiveLev(a, b, i + 1, j, memo) + 1, RecursiveLev(a, b, i, j + 1, memo) + 1,
                RecursiveLev(a, b, i + 1, j + 1, memo) + (a[i] == b[j] ? 0 : 1)});
  cell = static_cast<int>(result);
  return result;
}

inline std::vector<std::vector<int>> AllSequences(std::size_t max_len, int alphabet) {
  std::vector<std::vector<int>> out = {{}};
  for (std::size_t begin = 0; begin < out.size(); ++begin) {
    if (out[begin].size() == max_len) continue;
    for (int s = 0; s < alphabet; ++s) {
      std::vector<int> next = out[begin];
      next.push_back(s);
      out.push_back(next);
    }
  }
  return out;
}

}  // namespace procf::testing

#endif  // PROCF_TESTS_LEV_ORACLE_H_
