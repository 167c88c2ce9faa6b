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

#include "fairlm/errors.h"

namespace fairlm {

namespace {

std::string RatioMessage(double fpr_group, double fpr_majority) {
  return "FPR ratio is undefined: majority FPR is zero (group FPR " +
         std::to_string(fpr_group) + ", majority FPR " +
         std::to_string(fpr_majority) + ")";
}

}  // namespace

UndefinedRatioError::UndefinedRatioError(double fpr_group, double fpr_majority)
    : ValidationError(RatioMessage(fpr_group, fpr_majority)),
      fpr_group_(fpr_group),
      fpr_majority_(fpr_majority) {}

}  // namespace fairlm
