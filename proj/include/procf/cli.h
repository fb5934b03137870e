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

// Command-line front end.
//
//   procf explain    --log L --schema S (--oracle F | --predictor-cmd C)
//                    --case ID --prefix-len K [GA and tree flags] --out DIR
//   procf evaluate   ... --prefix-lens 5,10 [--max-prefixes N] [--jobs J]
//   procf importance ... --prefix-lens 5,10 [--top-k 5]
//   procf generate   --traces N --seed S --out DIR
//
// Exit codes: 0 success, 1 predictor or protocol failure, 2 input error.

#ifndef PROCF_CLI_H_
#define PROCF_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace procf {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPredictorFailure = 1;
inline constexpr int kExitInputError = 2;

// Applies PROCF_LOG_LEVEL (spdlog level syntax, e.g. "debug") to a stderr
// logger. Safe to call repeatedly.
void ConfigureLogging();

// `args` excludes the program name.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace procf

#endif  // PROCF_CLI_H_
