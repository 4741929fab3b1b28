/*
 * Copyright 2026 The Inferlab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef INFERLAB_DP_HPP
#define INFERLAB_DP_HPP

namespace inferlab::dp {

// Renyi-DP moments accountant for the subsampled Gaussian mechanism at
// integer orders, converted to (epsilon, delta) with
// eps = min_alpha [ steps * rdp(alpha) + log(1/delta) / (alpha - 1) ].
// q is the per-step sampling rate (batch / n), clamped to 1.
double epsilon_for(double sigma, double delta, double q, long steps);

// Smallest noise multiplier whose accounted epsilon stays at or below the
// target, found by bisection. Throws AccountingError when the target is
// unreachable within the search range or the inputs are out of domain.
double noise_multiplier_for(double epsilon, double delta, double q,
                            long steps);

}  // namespace inferlab::dp

#endif  // INFERLAB_DP_HPP
