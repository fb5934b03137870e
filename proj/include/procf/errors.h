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

#ifndef PROCF_ERRORS_H_
#define PROCF_ERRORS_H_

#include <stdexcept>
#include <string>

namespace procf {

// Bad user input: malformed log or schema, out-of-range prefix length,
// unknown case. Maps to CLI exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parse failure that knows where it happened.
class ParseError : public InputError {
 public:
  ParseError(const std::string& message, std::size_t line)
      : InputError("line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Black-box failures: crashed child, malformed response, timeout, handshake
// mismatch. Maps to CLI exit code 1.
class PredictorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace procf

#endif  // PROCF_ERRORS_H_
