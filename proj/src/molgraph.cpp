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

#include "mmfdl/molgraph.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>

#include "mmfdl/chemlex.hpp"
#include "mmfdl/error.hpp"

namespace mmfdl::molgraph {

namespace {

constexpr std::array<std::string_view, 118> kPeriodicTable = {
    "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg", "Al", "Si", "P",
    "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn",
    "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh",
    "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd",
    "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W",  "Re",
    "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th",
    "Pa", "U",  "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db",
    "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og"};

constexpr std::array<std::string_view, kElementSlots - 1> kElementTable = {
    "C",  "N",  "O",  "S",  "F",  "Si", "P",  "Cl", "Br", "Mg", "Na", "Ca", "Fe", "As", "Al",
    "I",  "B",  "V",  "K",  "Tl", "Yb", "Sb", "Sn", "Ag", "Pd", "Co", "Se", "Ti", "Zn", "H",
    "Li", "Ge", "Cu", "Au", "Ni", "Cd", "In", "Mn", "Zr", "Cr", "Pt", "Hg", "Pb"};

// Normal valences of the organic subset.
std::vector<int> default_valences(std::string_view element) {
  if (element == "B") return {3};
  if (element == "C") return {4};
  if (element == "N" || element == "P") return {3, 5};
  if (element == "O") return {2};
  if (element == "S") return {2, 4, 6};
  if (element == "F" || element == "Cl" || element == "Br" || element == "I") return {1};
  return {};
}

// Lowest normal valence shifted by formal charge (N+ behaves like C, C- like N).
std::optional<int> effective_base_valence(std::string_view element, int charge) {
  const auto valences = default_valences(element);
  if (element == "Se" || element == "Te") return 2 + charge;
  if (element == "As") return 3 + charge;
  if (valences.empty()) return std::nullopt;
  if (element == "B" || element == "C") return valences.front() - std::abs(charge);
  return valences.front() + charge;
}

struct BracketContents {
  std::string element;
  bool aromatic = false;
  int hydrogens = 0;
  int charge = 0;
};

int read_int(std::string_view s, std::size_t& pos) {
  int value = 0;
  while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
    value = value * 10 + (s[pos] - '0');
    ++pos;
  }
  return value;
}

BracketContents parse_bracket(std::string_view token) {
  const std::string_view body = token.substr(1, token.size() - 2);
  const auto malformed = [&](const char* why) {
    return Error(Errc::kMalformedSmiles, std::string(why) + " in '" + std::string(token) + "'");
  };
  BracketContents out;
  std::size_t pos = 0;
  read_int(body, pos);  // isotope, ignored
  if (pos >= body.size()) throw malformed("missing element");
  const char first = body[pos];
  if (std::isupper(static_cast<unsigned char>(first))) {
    if (pos + 1 < body.size() && std::islower(static_cast<unsigned char>(body[pos + 1])) &&
        atomic_number(body.substr(pos, 2)) != 0) {
      out.element = std::string(body.substr(pos, 2));
      pos += 2;
    } else {
      out.element = std::string(1, first);
      pos += 1;
    }
  } else if (std::islower(static_cast<unsigned char>(first))) {
    out.aromatic = true;
    const std::string_view two = body.substr(pos, 2);
    if (two == "se" || two == "as" || two == "te") {
      out.element = std::string(1, static_cast<char>(std::toupper(two[0]))) + two[1];
      pos += 2;
    } else if (std::string_view("bcnops").find(first) != std::string_view::npos) {
      out.element = std::string(1, static_cast<char>(std::toupper(first)));
      pos += 1;
    } else {
      throw Error(Errc::kUnknownElement, "'" + std::string(token) + "'");
    }
  } else if (first == '*') {
    throw Error(Errc::kUnknownElement, "wildcard atom '" + std::string(token) + "'");
  } else {
    throw malformed("missing element");
  }
  if (atomic_number(out.element) == 0) {
    throw Error(Errc::kUnknownElement, "'" + out.element + "' in '" + std::string(token) + "'");
  }
  // Chirality: @, @@, @TH1, @AL2, @SP3, @TB12, @OH30.
  while (pos < body.size() && body[pos] == '@') ++pos;
  if (pos + 1 < body.size() && std::isupper(static_cast<unsigned char>(body[pos])) &&
      std::isupper(static_cast<unsigned char>(body[pos + 1]))) {
    pos += 2;
    read_int(body, pos);
  }
  if (pos < body.size() && body[pos] == 'H') {
    ++pos;
    out.hydrogens = 1;
    if (pos < body.size() && std::isdigit(static_cast<unsigned char>(body[pos]))) {
      out.hydrogens = read_int(body, pos);
    }
  }
  if (pos < body.size() && (body[pos] == '+' || body[pos] == '-')) {
    const char sign_char = body[pos];
    const int sign = sign_char == '+' ? 1 : -1;
    ++pos;
    if (pos < body.size() && std::isdigit(static_cast<unsigned char>(body[pos]))) {
      out.charge = sign * read_int(body, pos);
    } else {
      int count = 1;
      while (pos < body.size() && body[pos] == sign_char) {
        ++count;
        ++pos;
      }
      out.charge = sign * count;
    }
  }
  if (pos < body.size() && body[pos] == ':') {
    ++pos;
    read_int(body, pos);  // atom class, ignored
  }
  if (pos != body.size()) throw malformed("unexpected trailing characters");
  return out;
}

std::optional<BondOrder> bond_from_token(std::string_view token) {
  switch (token.front()) {
    case '=': return BondOrder::kDouble;
    case '#': return BondOrder::kTriple;
    case ':': return BondOrder::kAromatic;
    default: return BondOrder::kSingle;  // '-', '/', '\'
  }
}

int ring_label(std::string_view token) {
  if (token.front() == '%') return (token[1] - '0') * 10 + (token[2] - '0');
  return token.front() - '0';
}

class Builder {
 public:
  void add_atom(Atom atom) {
    const std::size_t index = mol_.atoms.size();
    mol_.atoms.push_back(std::move(atom));
    if (prev_) add_bond(*prev_, index, pending_);
    prev_ = index;
    pending_.reset();
  }

  void set_bond(BondOrder order) {
    if (pending_) throw Error(Errc::kMalformedSmiles, "two consecutive bond symbols");
    if (!prev_) throw Error(Errc::kMalformedSmiles, "bond symbol without a preceding atom");
    pending_ = order;
  }

  void open_branch() {
    if (!prev_) throw Error(Errc::kMalformedSmiles, "branch without a preceding atom");
    if (pending_) throw Error(Errc::kMalformedSmiles, "bond symbol before '('");
    branches_.push_back(*prev_);
  }

  void close_branch() {
    if (branches_.empty()) throw Error(Errc::kUnmatchedParenthesis, "')' without '('");
    if (pending_) throw Error(Errc::kMalformedSmiles, "bond symbol before ')'");
    prev_ = branches_.back();
    branches_.pop_back();
  }

  void ring(int label) {
    if (!prev_) throw Error(Errc::kMalformedSmiles, "ring closure without a preceding atom");
    const auto it = rings_.find(label);
    if (it == rings_.end()) {
      rings_.emplace(label, std::make_pair(*prev_, pending_));
    } else {
      const auto [partner, opened_with] = it->second;
      if (opened_with && pending_ && *opened_with != *pending_) {
        throw Error(Errc::kMalformedSmiles, "conflicting ring-closure bond orders");
      }
      add_bond(partner, *prev_, pending_ ? pending_ : opened_with);
      rings_.erase(it);
    }
    pending_.reset();
  }

  void dot() {
    if (pending_) throw Error(Errc::kMalformedSmiles, "bond symbol before '.'");
    prev_.reset();
  }

  Molecule finish() {
    if (!rings_.empty()) {
      throw Error(Errc::kUnpairedRingClosure, "ring label " + std::to_string(rings_.begin()->first) +
                                                  " is never closed");
    }
    if (!branches_.empty()) throw Error(Errc::kUnmatchedParenthesis, "'(' without ')'");
    if (pending_) throw Error(Errc::kMalformedSmiles, "trailing bond symbol");
    if (mol_.atoms.empty()) throw Error(Errc::kMalformedSmiles, "no atoms");
    return std::move(mol_);
  }

 private:
  void add_bond(std::size_t a, std::size_t b, std::optional<BondOrder> order) {
    if (a == b) throw Error(Errc::kMalformedSmiles, "atom bonded to itself");
    for (const auto& bond : mol_.bonds) {
      if ((bond.begin == a && bond.end == b) || (bond.begin == b && bond.end == a)) {
        throw Error(Errc::kMalformedSmiles, "duplicate bond");
      }
    }
    BondOrder resolved = BondOrder::kSingle;
    if (order) {
      resolved = *order;
    } else if (mol_.atoms[a].aromatic && mol_.atoms[b].aromatic) {
      resolved = BondOrder::kAromatic;
    }
    mol_.bonds.push_back({a, b, resolved});
  }

  Molecule mol_;
  std::optional<std::size_t> prev_;
  std::optional<BondOrder> pending_;
  std::vector<std::size_t> branches_;
  std::map<int, std::pair<std::size_t, std::optional<BondOrder>>> rings_;
};

void derive_atom_properties(Molecule& mol) {
  const auto adj = mol.adjacency();
  for (std::size_t i = 0; i < mol.atoms.size(); ++i) {
    Atom& atom = mol.atoms[i];
    int other_orders = 0;
    int aromatic_bonds = 0;
    int h_neighbours = 0;
    int heavy_neighbours = 0;
    for (const auto& [nbr, bond_index] : adj[i]) {
      const BondOrder order = mol.bonds[bond_index].order;
      if (order == BondOrder::kAromatic) {
        ++aromatic_bonds;
      } else {
        other_orders += static_cast<int>(order);
      }
      if (mol.atoms[nbr].element == "H") {
        ++h_neighbours;
      } else {
        ++heavy_neighbours;
      }
    }

    atom.implicit_h = 0;
    if (!atom.bracket) {
      const auto valences = default_valences(atom.element);
      if (atom.aromatic) {
        atom.implicit_h = std::max(0, valences.front() - aromatic_bonds - other_orders - 1);
      } else {
        const auto fit = std::find_if(valences.begin(), valences.end(),
                                      [&](int v) { return v >= other_orders; });
        if (fit != valences.end()) atom.implicit_h = *fit - other_orders;
      }
    }
    const int own_h = atom.implicit_h + atom.explicit_h;

    // An aromatic atom contributes one extra bond unit when its base valence
    // leaves room for a ring double bond; lone-pair donors (pyrrole N-H, furan
    // O, thiophene S) do not.
    int aromatic_units = aromatic_bonds;
    if (aromatic_bonds > 0) {
      const auto base = effective_base_valence(atom.element, atom.charge);
      if (base && *base - (aromatic_bonds + other_orders + own_h) >= 1) ++aromatic_units;
    }

    atom.degree = heavy_neighbours;
    atom.total_h = own_h + h_neighbours;
    atom.valence = other_orders + aromatic_units + own_h;
  }
}

}  // namespace

int atomic_number(std::string_view symbol) {
  const auto it = std::find(kPeriodicTable.begin(), kPeriodicTable.end(), symbol);
  return it == kPeriodicTable.end() ? 0 : static_cast<int>(it - kPeriodicTable.begin()) + 1;
}

const std::array<std::string_view, kElementSlots - 1>& element_table() { return kElementTable; }

std::size_t element_slot(std::string_view element) {
  const auto it = std::find(kElementTable.begin(), kElementTable.end(), element);
  return it == kElementTable.end() ? kElementSlots - 1
                                   : static_cast<std::size_t>(it - kElementTable.begin());
}

std::vector<std::vector<std::pair<std::size_t, std::size_t>>> Molecule::adjacency() const {
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(atoms.size());
  for (std::size_t b = 0; b < bonds.size(); ++b) {
    adj[bonds[b].begin].emplace_back(bonds[b].end, b);
    adj[bonds[b].end].emplace_back(bonds[b].begin, b);
  }
  return adj;
}

Molecule parse_molecule(std::string_view smiles) {
  const chemlex::TokenSeq seq = chemlex::tokenize(smiles);
  Builder builder;
  for (const auto& token : seq.tokens) {
    switch (chemlex::classify(token)) {
      case chemlex::TokenKind::kBracketAtom: {
        const BracketContents contents = parse_bracket(token);
        Atom atom;
        atom.element = contents.element;
        atom.atomic_number = atomic_number(contents.element);
        atom.aromatic = contents.aromatic;
        atom.charge = contents.charge;
        atom.explicit_h = contents.hydrogens;
        atom.bracket = true;
        builder.add_atom(std::move(atom));
        break;
      }
      case chemlex::TokenKind::kOrganicAtom:
      case chemlex::TokenKind::kAromaticAtom: {
        Atom atom;
        const bool aromatic = std::islower(static_cast<unsigned char>(token.front())) != 0;
        atom.element = aromatic ? std::string(1, static_cast<char>(std::toupper(token.front())))
                                : token;
        atom.atomic_number = atomic_number(atom.element);
        atom.aromatic = aromatic;
        builder.add_atom(std::move(atom));
        break;
      }
      case chemlex::TokenKind::kBond:
        builder.set_bond(*bond_from_token(token));
        break;
      case chemlex::TokenKind::kRingClosure:
        builder.ring(ring_label(token));
        break;
      case chemlex::TokenKind::kBranchOpen:
        builder.open_branch();
        break;
      case chemlex::TokenKind::kBranchClose:
        builder.close_branch();
        break;
      case chemlex::TokenKind::kDot:
        builder.dot();
        break;
      case chemlex::TokenKind::kChirality:
        break;  // stereo carries no 2D information
      case chemlex::TokenKind::kCharge:
        throw Error(Errc::kMalformedSmiles, "charge outside a bracket atom");
    }
  }
  Molecule mol = builder.finish();
  derive_atom_properties(mol);
  return mol;
}

void write_edge_list(std::ostream& out, const Molecule& mol) {
  out << mol.atoms.size() << ' ' << mol.bonds.size() << '\n';
  for (const auto& bond : mol.bonds) {
    out << bond.begin << ' ' << bond.end << ' ' << static_cast<int>(bond.order) << '\n';
  }
}

AtomFeatures featurize(const Molecule& mol) {
  AtomFeatures x;
  x.rows = mol.atoms.size();
  x.values.assign(x.rows * kFeatureWidth, 0.0);
  const auto bucket = [](int v) { return static_cast<std::size_t>(std::clamp(v, 0, 10)); };
  for (std::size_t r = 0; r < x.rows; ++r) {
    const Atom& atom = mol.atoms[r];
    x.at(r, element_slot(atom.element)) = 1.0;
    x.at(r, kDegreeOffset + bucket(atom.degree)) = 1.0;
    x.at(r, kHydrogenOffset + bucket(atom.total_h)) = 1.0;
    x.at(r, kValenceOffset + bucket(atom.valence)) = 1.0;
    x.at(r, kAromaticSlot) = atom.aromatic ? 1.0 : 0.0;
  }
  return x;
}

NormalizedAdjacency normalized_adjacency(const Molecule& mol) {
  const std::size_t n = mol.atoms.size();
  std::vector<double> a_tilde(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) a_tilde[i * n + i] = 1.0;
  for (const auto& bond : mol.bonds) {
    a_tilde[bond.begin * n + bond.end] = 1.0;
    a_tilde[bond.end * n + bond.begin] = 1.0;
  }
  std::vector<double> inv_sqrt_degree(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < n; ++j) d += a_tilde[i * n + j];
    inv_sqrt_degree[i] = 1.0 / std::sqrt(d);
  }
  NormalizedAdjacency out;
  out.n = n;
  out.values.resize(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out.values[i * n + j] = inv_sqrt_degree[i] * a_tilde[i * n + j] * inv_sqrt_degree[j];
    }
  }
  return out;
}

}  // namespace mmfdl::molgraph
