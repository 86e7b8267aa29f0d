// Copyright 2026 The flsim Authors.
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

#ifndef FLSIM_SPECIAL_FUNCTIONS_HPP_
#define FLSIM_SPECIAL_FUNCTIONS_HPP_

namespace flsim {

// Regularised incomplete beta I_x(a, b), evaluated with the Lentz continued
// fraction. Requires a, b > 0 and x in [0, 1].
double RegularizedIncompleteBeta(double a, double b, double x);

// Pr(T > t) for a Student t variable with `dof` (> 0, possibly fractional)
// degrees of freedom.
double StudentTSurvival(double t, double dof);

// Inverse of the standard normal CDF for p in (0, 1). Rational starting
// approximation followed by a Halley correction step.
double NormalQuantile(double p);

double NormalCdf(double x);

}  // namespace flsim

#endif  // FLSIM_SPECIAL_FUNCTIONS_HPP_
