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

// Built-in demo process: a loan application workflow with a rule-based
// black box over its feature columns.

#ifndef PROCF_DEMO_H_
#define PROCF_DEMO_H_

#include "procf/predictor.h"
#include "procf/synthetic_log.h"

namespace procf {

// Activities: A_Create, optional A_Submitted, A_Concept, A_Accepted, a
// W_Complete/W_Call loop (at most three calls), O_Create, O_Sent,
// A_Validating and one of A_Pending, A_Denied, A_Canceled.
// Case attributes LoanGoal, ApplicationType, RequestedAmount; O_Create
// carries CreditScore and OfferedAmount.
ProcessSpec LoanProcess();

// Five ordered rules over normalized columns, default A_Canceled.
RuleOracle LoanOracle();

}  // namespace procf

#endif  // PROCF_DEMO_H_
