// Copyright 2026 The ataflow Authors
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

#ifndef ATAFLOW_SPECIAL_HPP
#define ATAFLOW_SPECIAL_HPP

namespace ataflow::special {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

// log|Gamma(x)| by the Lanczos approximation (g = 7, nine coefficients),
// with the reflection formula below x = 0.5. Non-positive integers give +inf.
double lgamma(double x);

// Exact derivative of the approximation above, i.e. digamma(x) to the same
// accuracy.
double digamma(double x);

}  // namespace ataflow::special

#endif  // ATAFLOW_SPECIAL_HPP
