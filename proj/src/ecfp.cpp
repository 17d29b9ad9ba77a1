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

#include "mmfdl/ecfp.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <tuple>

#include "mmfdl/error.hpp"

namespace mmfdl::ecfp {

namespace {

std::uint64_t fmix64(std::uint64_t k) {
  k ^= k >> 33;
  k *= 0xff51afd7ed558ccdull;
  k ^= k >> 33;
  k *= 0xc4ceb9fe1a85ec53ull;
  k ^= k >> 33;
  return k;
}

// Bond set covered by an environment, one bit per bond index.
using BondSet = std::vector<std::uint64_t>;

void check_same_length(const Fingerprint& a, const Fingerprint& b) {
  if (a.nbits() != b.nbits()) {
    throw Error(Errc::kLengthMismatch,
                std::to_string(a.nbits()) + " vs " + std::to_string(b.nbits()) + " bits");
  }
}

}  // namespace

Fingerprint::Fingerprint(std::size_t nbits, int radius)
    : nbits_(nbits), radius_(radius), words_((nbits + 63) / 64, 0) {}

void Fingerprint::set(std::size_t bit, bool value) {
  const std::uint64_t mask = std::uint64_t{1} << (bit % 64);
  if (value) {
    words_[bit / 64] |= mask;
  } else {
    words_[bit / 64] &= ~mask;
  }
}

std::size_t Fingerprint::set_count() const noexcept {
  std::size_t count = 0;
  for (const auto w : words_) count += static_cast<std::size_t>(std::popcount(w));
  return count;
}

std::vector<double> Fingerprint::to_dense() const {
  std::vector<double> out(nbits_);
  for (std::size_t i = 0; i < nbits_; ++i) out[i] = test(i) ? 1.0 : 0.0;
  return out;
}

std::string Fingerprint::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(nbits_ / 4);
  for (std::size_t nibble = nbits_ / 4; nibble-- > 0;) {
    unsigned value = 0;
    for (int k = 3; k >= 0; --k) value = (value << 1) | (test(nibble * 4 + k) ? 1u : 0u);
    out.push_back(kDigits[value]);
  }
  return out;
}

Fingerprint Fingerprint::from_hex(std::string_view hex, int radius) {
  Fingerprint fp(hex.size() * 4, radius);
  for (std::size_t pos = 0; pos < hex.size(); ++pos) {
    const char c = hex[pos];
    unsigned value = 0;
    if (c >= '0' && c <= '9') {
      value = static_cast<unsigned>(c - '0');
    } else if (c >= 'a' && c <= 'f') {
      value = static_cast<unsigned>(c - 'a' + 10);
    } else {
      throw Error(Errc::kIo, "invalid hex digit in fingerprint");
    }
    const std::size_t nibble = hex.size() - 1 - pos;
    for (int k = 0; k < 4; ++k) {
      if ((value >> k) & 1u) fp.set(nibble * 4 + static_cast<std::size_t>(k));
    }
  }
  return fp;
}

Fingerprint Fingerprint::from_bits(std::size_t nbits, std::initializer_list<std::size_t> bits) {
  Fingerprint fp(nbits, 0);
  for (const auto b : bits) fp.set(b);
  return fp;
}

std::uint64_t stable_hash(std::span<const std::int64_t> fields, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ull ^ seed;
  for (const std::int64_t field : fields) {
    auto v = static_cast<std::uint64_t>(field);
    for (int byte = 0; byte < 8; ++byte) {
      h ^= (v >> (8 * byte)) & 0xffu;
      h *= 0x100000001b3ull;
    }
  }
  return fmix64(h);
}

std::set<std::uint64_t> morgan_identifiers(const molgraph::Molecule& mol, int radius) {
  const std::size_t n = mol.atoms.size();
  const std::size_t words = (mol.bonds.size() + 63) / 64;
  const auto adj = mol.adjacency();

  std::vector<std::uint64_t> ids(n);
  std::vector<BondSet> envs(n, BondSet(words, 0));
  std::set<std::uint64_t> identifiers;
  std::set<BondSet> seen_envs;

  for (std::size_t a = 0; a < n; ++a) {
    const auto& atom = mol.atoms[a];
    const std::int64_t invariant[] = {atom.atomic_number, atom.degree,  atom.total_h,
                                      atom.valence,       atom.charge, atom.aromatic ? 1 : 0};
    ids[a] = stable_hash(invariant);
    identifiers.insert(ids[a]);
  }
  seen_envs.insert(BondSet(words, 0));

  for (int round = 1; round <= radius; ++round) {
    std::vector<std::uint64_t> next_ids(n);
    std::vector<BondSet> next_envs(n);
    for (std::size_t a = 0; a < n; ++a) {
      std::vector<std::pair<std::int64_t, std::uint64_t>> neighbours;
      BondSet env = envs[a];
      for (const auto& [nbr, bond_index] : adj[a]) {
        neighbours.emplace_back(static_cast<std::int64_t>(mol.bonds[bond_index].order), ids[nbr]);
        env[bond_index / 64] |= std::uint64_t{1} << (bond_index % 64);
        for (std::size_t w = 0; w < words; ++w) env[w] |= envs[nbr][w];
      }
      std::sort(neighbours.begin(), neighbours.end());
      std::vector<std::int64_t> fields = {round, static_cast<std::int64_t>(ids[a])};
      for (const auto& [order, id] : neighbours) {
        fields.push_back(order);
        fields.push_back(static_cast<std::int64_t>(id));
      }
      next_ids[a] = stable_hash(fields);
      next_envs[a] = std::move(env);
    }

    // One identifier per newly covered bond set; ties within a round keep the
    // smallest identifier so the choice is independent of atom order.
    std::map<BondSet, std::uint64_t> fresh;
    for (std::size_t a = 0; a < n; ++a) {
      if (seen_envs.contains(next_envs[a])) continue;
      const auto [it, inserted] = fresh.emplace(next_envs[a], next_ids[a]);
      if (!inserted) it->second = std::min(it->second, next_ids[a]);
    }
    for (const auto& [env, id] : fresh) {
      identifiers.insert(id);
      seen_envs.insert(env);
    }
    ids = std::move(next_ids);
    envs = std::move(next_envs);
  }
  return identifiers;
}

Fingerprint ecfp(const molgraph::Molecule& mol, int radius, std::size_t nbits) {
  if (radius < 0) throw Error(Errc::kInvalidConfig, "radius must be >= 0");
  if (nbits == 0 || !std::has_single_bit(nbits)) {
    throw Error(Errc::kInvalidConfig, "nbits must be a power of two");
  }
  Fingerprint fp(nbits, radius);
  for (const auto id : morgan_identifiers(mol, radius)) fp.set(id % nbits);
  return fp;
}

double tanimoto(const Fingerprint& a, const Fingerprint& b) {
  check_same_length(a, b);
  std::size_t both = 0;
  std::size_t either = 0;
  for (std::size_t w = 0; w < a.words().size(); ++w) {
    both += static_cast<std::size_t>(std::popcount(a.words()[w] & b.words()[w]));
    either += static_cast<std::size_t>(std::popcount(a.words()[w] | b.words()[w]));
  }
  if (either == 0) return 1.0;
  return static_cast<double>(both) / static_cast<double>(either);
}

std::size_t hamming(const Fingerprint& a, const Fingerprint& b) {
  check_same_length(a, b);
  std::size_t diff = 0;
  for (std::size_t w = 0; w < a.words().size(); ++w) {
    diff += static_cast<std::size_t>(std::popcount(a.words()[w] ^ b.words()[w]));
  }
  return diff;
}

}  // namespace mmfdl::ecfp
