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

#include "inferlab/dp.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "inferlab/common.hpp"

namespace inferlab::dp {

namespace {

const std::vector<int>& orders() {
  static const std::vector<int> kOrders = [] {
    std::vector<int> o;
    for (int a = 2; a <= 64; ++a) o.push_back(a);
    for (int a : {72, 80, 96, 128, 192, 256, 384, 512}) o.push_back(a);
    return o;
  }();
  return kOrders;
}

double log_comb(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
         std::lgamma(n - k + 1.0);
}

double logsumexp(const std::vector<double>& xs) {
  double m = *std::max_element(xs.begin(), xs.end());
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

// One-step RDP of the subsampled Gaussian at an integer order.
double rdp_step(int alpha, double q, double sigma) {
  if (q >= 1.0) return static_cast<double>(alpha) / (2.0 * sigma * sigma);
  std::vector<double> terms;
  terms.reserve(alpha + 1);
  for (int i = 0; i <= alpha; ++i) {
    terms.push_back(log_comb(alpha, i) + i * std::log(q) +
                    (alpha - i) * std::log1p(-q) +
                    (static_cast<double>(i) * i - i) /
                        (2.0 * sigma * sigma));
  }
  return logsumexp(terms) / (alpha - 1);
}

void check_domain(double delta, double q, long steps) {
  if (!(delta > 0.0 && delta < 1.0))
    throw Error(ErrorCode::AccountingError, "delta must lie in (0, 1)");
  if (!(q > 0.0) || q > 1.0)
    throw Error(ErrorCode::AccountingError,
                "sampling rate must lie in (0, 1]");
  if (steps <= 0)
    throw Error(ErrorCode::AccountingError, "step count must be positive");
}

}  // namespace

double epsilon_for(double sigma, double delta, double q, long steps) {
  check_domain(delta, q, steps);
  if (!(sigma > 0.0))
    throw Error(ErrorCode::AccountingError,
                "noise multiplier must be positive");
  double best = std::numeric_limits<double>::infinity();
  for (int alpha : orders()) {
    double total = static_cast<double>(steps) * rdp_step(alpha, q, sigma);
    double eps = total + std::log(1.0 / delta) / (alpha - 1);
    best = std::min(best, eps);
  }
  return best;
}

double noise_multiplier_for(double epsilon, double delta, double q,
                            long steps) {
  check_domain(delta, q, steps);
  if (!(epsilon > 0.0))
    throw Error(ErrorCode::AccountingError, "epsilon must be positive");

  double lo = 1e-3, hi = 1e4;
  if (epsilon_for(hi, delta, q, steps) > epsilon)
    throw Error(ErrorCode::AccountingError,
                "target epsilon unreachable within the noise search range");
  if (epsilon_for(lo, delta, q, steps) <= epsilon) return lo;
  for (int it = 0; it < 100; ++it) {
    double mid = 0.5 * (lo + hi);
    if (epsilon_for(mid, delta, q, steps) <= epsilon) hi = mid;
    else lo = mid;
  }
  return hi;
}

}  // namespace inferlab::dp
