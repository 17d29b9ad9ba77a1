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

// Molecular graphs parsed from SMILES, per-atom feature rows and the
// symmetric-normalized adjacency used for graph convolution.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace mmfdl::molgraph {

enum class BondOrder : std::uint8_t { kSingle = 1, kDouble = 2, kTriple = 3, kAromatic = 4 };

struct Atom {
  std::string element;        // "C", "Cl", "Se", ...
  int atomic_number = 0;
  bool aromatic = false;
  int charge = 0;
  int explicit_h = 0;         // H count written inside a bracket atom
  bool bracket = false;
  // Derived once bonds are known.
  int implicit_h = 0;
  int degree = 0;             // heavy-atom neighbours
  int total_h = 0;            // implicit + bracket H + explicit [H] neighbours
  int valence = 0;
};

struct Bond {
  std::size_t begin = 0;
  std::size_t end = 0;
  BondOrder order = BondOrder::kSingle;
};

struct Molecule {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;

  std::size_t atom_count() const noexcept { return atoms.size(); }
  /// Neighbour lists, indexed like atoms; each entry is (neighbour, bond index).
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adjacency() const;
};

/// Parses a SMILES string. Stereo markers are accepted and discarded.
/// Throws Error with kUnpairedRingClosure, kUnmatchedParenthesis,
/// kUnknownElement or kMalformedSmiles; lexer errors propagate.
Molecule parse_molecule(std::string_view smiles);

/// Debug dump: "n m" header then one "i j order" line per bond (order 1-4,
/// 4 = aromatic).
void write_edge_list(std::ostream& out, const Molecule& mol);

inline constexpr std::size_t kFeatureWidth = 78;
inline constexpr std::size_t kElementSlots = 44;
inline constexpr std::size_t kDegreeOffset = 44;
inline constexpr std::size_t kHydrogenOffset = 55;
inline constexpr std::size_t kValenceOffset = 66;
inline constexpr std::size_t kAromaticSlot = 77;

/// The 43 named element slots; anything else goes to slot 43.
const std::array<std::string_view, kElementSlots - 1>& element_table();
std::size_t element_slot(std::string_view element);

/// Row-major n x 78 feature matrix.
struct AtomFeatures {
  std::size_t rows = 0;
  std::vector<double> values;

  double at(std::size_t r, std::size_t c) const { return values[r * kFeatureWidth + c]; }
  double& at(std::size_t r, std::size_t c) { return values[r * kFeatureWidth + c]; }
};

AtomFeatures featurize(const Molecule& mol);

/// Row-major n x n matrix D^-1/2 (A + I) D^-1/2 with unweighted edges.
struct NormalizedAdjacency {
  std::size_t n = 0;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

NormalizedAdjacency normalized_adjacency(const Molecule& mol);

/// Atomic number for an element symbol, 0 if the symbol is not an element.
int atomic_number(std::string_view symbol);

}  // namespace mmfdl::molgraph
