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

#ifndef INFERLAB_COMMON_HPP
#define INFERLAB_COMMON_HPP

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace inferlab {

enum class ErrorCode {
  InvalidSpec,
  InsufficientSamples,
  DisjointnessViolation,
  SerializationError,
  DivergedTraining,
  AccountingError,
  CheckpointMissing,
  InvalidAttackConfig,
  DegenerateLabels,
  FleetTooSmall,
  MissingFleet,
  IncompatibleUpstream,
  ContractViolation,
  ConfigError,
  MissingUpstream,
  SchemaMismatch,
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

const char* error_code_name(ErrorCode code);

// FNV-1a, used for cache keys and manifest fingerprints. Not security material.
std::uint64_t fnv1a64(const void* data, std::size_t len,
                      std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t fnv1a64(const std::string& s,
                      std::uint64_t seed = 0xcbf29ce484222325ull);
std::string hash_hex(std::uint64_t h);

// Deterministic seed for a named stage (or sub-task) of a run.
std::uint64_t derive_seed(std::uint64_t root, const std::string& name,
                          std::uint64_t index = 0);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t raw() { return engine_(); }

  // Uniform in [0, n). Rejection sampled so the result only depends on the
  // engine stream, not on library internals.
  std::uint64_t below(std::uint64_t n);

  int uniform_int(int lo, int hi);  // inclusive bounds
  double uniform();                 // [0, 1)
  double normal();                  // standard normal, Box-Muller

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::vector<std::size_t> permutation(std::size_t n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Integer apportionment of n slots across weights via largest remainder.
// Ties go to the lower index. Weights must be non-negative and sum to ~1.
std::vector<std::size_t> largest_remainder_counts(
    const std::vector<double>& weights, std::size_t n);

}  // namespace inferlab

#endif  // INFERLAB_COMMON_HPP
