// Copyright 2026 The MMFDL Authors.
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

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmfdl/molgraph.hpp"

namespace mmfdl::ecfp {

/// Folded circular fingerprint. Bit i lives in word i / 64 at position i % 64.
class Fingerprint {
 public:
  Fingerprint() = default;
  Fingerprint(std::size_t nbits, int radius);

  std::size_t nbits() const noexcept { return nbits_; }
  int radius() const noexcept { return radius_; }
  bool test(std::size_t bit) const { return (words_[bit / 64] >> (bit % 64)) & 1u; }
  void set(std::size_t bit, bool value = true);
  std::size_t set_count() const noexcept;
  std::span<const std::uint64_t> words() const noexcept { return words_; }

  /// Bits as 0/1 doubles in index order.
  std::vector<double> to_dense() const;

  /// Lowercase hex, most-significant bit (index nbits-1) first.
  std::string to_hex() const;
  static Fingerprint from_hex(std::string_view hex, int radius = 2);

  static Fingerprint from_bits(std::size_t nbits, std::initializer_list<std::size_t> bits);

  bool operator==(const Fingerprint&) const = default;

 private:
  std::size_t nbits_ = 0;
  int radius_ = 0;
  std::vector<std::uint64_t> words_;
};

inline constexpr std::uint64_t kHashSeed = 0x6d6d66646c2d3031ull;  // "mmfdl-01"

/// Stable 64-bit hash over int64 fields (FNV-1a bytes, murmur3 finalizer).
std::uint64_t stable_hash(std::span<const std::int64_t> fields, std::uint64_t seed = kHashSeed);

/// Unfolded identifiers produced by the Morgan rounds up to `radius`.
std::set<std::uint64_t> morgan_identifiers(const molgraph::Molecule& mol, int radius);

/// Throws Error(kInvalidConfig) for negative radius or non power-of-two nbits.
Fingerprint ecfp(const molgraph::Molecule& mol, int radius = 2, std::size_t nbits = 1024);

/// |a & b| / |a | b|, 1.0 when both are empty. Throws Error(kLengthMismatch).
double tanimoto(const Fingerprint& a, const Fingerprint& b);

/// Number of differing bits. Throws Error(kLengthMismatch).
std::size_t hamming(const Fingerprint& a, const Fingerprint& b);

}  // namespace mmfdl::ecfp
