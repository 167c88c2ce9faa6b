/*
 * Copyright 2026 The fairlm Authors.
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

#ifndef FAIRLM_ERRORS_H_
#define FAIRLM_ERRORS_H_

#include <stdexcept>
#include <string>

namespace fairlm {

// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input, configuration or precondition violation. The CLI maps it
// to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Numerical or runtime failure (non-finite loss, transport failure, I/O).
// The CLI maps it to exit code 2.
class RuntimeFailure : public Error {
 public:
  using Error::Error;
};

// A false-positive-rate ratio whose denominator is zero.
class UndefinedRatioError : public ValidationError {
 public:
  UndefinedRatioError(double fpr_group, double fpr_majority);

  double fpr_group() const { return fpr_group_; }
  double fpr_majority() const { return fpr_majority_; }

 private:
  double fpr_group_;
  double fpr_majority_;
};

}  // namespace fairlm

#endif  // FAIRLM_ERRORS_H_
