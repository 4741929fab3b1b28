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

#include "inferlab/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace inferlab {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::DisjointnessViolation: return "DisjointnessViolation";
    case ErrorCode::SerializationError: return "SerializationError";
    case ErrorCode::DivergedTraining: return "DivergedTraining";
    case ErrorCode::AccountingError: return "AccountingError";
    case ErrorCode::CheckpointMissing: return "CheckpointMissing";
    case ErrorCode::InvalidAttackConfig: return "InvalidAttackConfig";
    case ErrorCode::DegenerateLabels: return "DegenerateLabels";
    case ErrorCode::FleetTooSmall: return "FleetTooSmall";
    case ErrorCode::MissingFleet: return "MissingFleet";
    case ErrorCode::IncompatibleUpstream: return "IncompatibleUpstream";
    case ErrorCode::ContractViolation: return "ContractViolation";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::MissingUpstream: return "MissingUpstream";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t fnv1a64(const std::string& s, std::uint64_t seed) {
  return fnv1a64(s.data(), s.size(), seed);
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::uint64_t derive_seed(std::uint64_t root, const std::string& name,
                          std::uint64_t index) {
  std::uint64_t h = fnv1a64(&root, sizeof(root));
  h = fnv1a64(name.data(), name.size(), h);
  h = fnv1a64(&index, sizeof(index), h);
  // mt19937_64 dislikes seed 0; nudge deterministically.
  return h == 0 ? 0x9e3779b97f4a7c15ull : h;
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw Error(ErrorCode::Internal, "Rng::below(0)");
  std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                        std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

int Rng::uniform_int(int lo, int hi) {
  return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1));
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1, u2;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

std::vector<std::size_t> Rng::permutation(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  shuffle(idx);
  return idx;
}

std::vector<std::size_t> largest_remainder_counts(
    const std::vector<double>& weights, std::size_t n) {
  if (weights.empty())
    throw Error(ErrorCode::InvalidSpec, "empty weight vector");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0))
      throw Error(ErrorCode::InvalidSpec, "negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw Error(ErrorCode::InvalidSpec, "weights must sum to 1");

  std::vector<std::size_t> counts(weights.size());
  std::vector<std::pair<double, std::size_t>> remainders(weights.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    double exact = weights[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact + 1e-12));
    remainders[i] = {exact - static_cast<double>(counts[i]), i};
    assigned += counts[i];
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) {
                     if (a.first != b.first) return a.first > b.first;
                     return a.second < b.second;
                   });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned)
    counts[remainders[k % remainders.size()].second] += 1;
  return counts;
}

}  // namespace inferlab
