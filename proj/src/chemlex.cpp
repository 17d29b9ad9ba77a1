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

#include "mmfdl/chemlex.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "mmfdl/error.hpp"

namespace mmfdl::chemlex {

namespace {

bool is_organic_letter(char c) {
  switch (c) {
    case 'B': case 'C': case 'N': case 'O': case 'P': case 'S': case 'F': case 'I':
      return true;
    default:
      return false;
  }
}

bool is_aromatic_letter(char c) {
  switch (c) {
    case 'b': case 'c': case 'n': case 'o': case 's': case 'p':
      return true;
    default:
      return false;
  }
}

bool is_bond_char(char c) {
  switch (c) {
    case '-': case '=': case '#': case ':': case '/': case '\\':
      return true;
    default:
      return false;
  }
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Length of the token starting at smiles[pos]; 0 when no rule matches.
std::size_t match_length(std::string_view smiles, std::size_t pos) {
  const char c = smiles[pos];
  const auto next = [&](std::size_t k) -> char {
    return pos + k < smiles.size() ? smiles[pos + k] : '\0';
  };
  if (c == '[') {
    const std::size_t close = smiles.find(']', pos + 1);
    if (close == std::string_view::npos) {
      throw Error(Errc::kUnterminatedBracket,
                  "'[' at position " + std::to_string(pos) + " has no matching ']'");
    }
    return close - pos + 1;
  }
  if ((c == 'C' && next(1) == 'l') || (c == 'B' && next(1) == 'r')) return 2;
  if (is_organic_letter(c) || is_aromatic_letter(c)) return 1;
  if (is_bond_char(c) || is_digit(c)) return 1;
  if (c == '%') return (is_digit(next(1)) && is_digit(next(2))) ? 3 : 0;
  if (c == '(' || c == ')' || c == '.' || c == '+') return 1;
  if (c == '@') return next(1) == '@' ? 2 : 1;
  return 0;
}

}  // namespace

std::string TokenSeq::joined() const {
  std::string out;
  for (const auto& t : tokens) out += t;
  return out;
}

TokenKind classify(std::string_view token) {
  if (token.empty()) throw Error(Errc::kUnlexableCharacter, "empty token");
  const char c = token.front();
  if (c == '[') return TokenKind::kBracketAtom;
  if (token == "Cl" || token == "Br" || (token.size() == 1 && is_organic_letter(c))) {
    return TokenKind::kOrganicAtom;
  }
  if (token.size() == 1 && is_aromatic_letter(c)) return TokenKind::kAromaticAtom;
  if (token.size() == 1 && is_bond_char(c)) return TokenKind::kBond;
  if (is_digit(c) || c == '%') return TokenKind::kRingClosure;
  if (c == '(') return TokenKind::kBranchOpen;
  if (c == ')') return TokenKind::kBranchClose;
  if (c == '.') return TokenKind::kDot;
  if (c == '+') return TokenKind::kCharge;
  if (c == '@') return TokenKind::kChirality;
  throw Error(Errc::kUnlexableCharacter, "token '" + std::string(token) + "'");
}

bool is_atom_token(std::string_view token) {
  const TokenKind kind = classify(token);
  return kind == TokenKind::kBracketAtom || kind == TokenKind::kOrganicAtom ||
         kind == TokenKind::kAromaticAtom;
}

TokenSeq tokenize(std::string_view smiles) {
  TokenSeq seq;
  std::size_t pos = 0;
  while (pos < smiles.size()) {
    const std::size_t len = match_length(smiles, pos);
    if (len == 0) {
      throw Error(Errc::kUnlexableCharacter,
                  "character '" + std::string(1, smiles[pos]) + "' at position " +
                      std::to_string(pos));
    }
    seq.tokens.emplace_back(smiles.substr(pos, len));
    pos += len;
  }
  return seq;
}

Vocabulary Vocabulary::build(std::span<const TokenSeq> corpus) {
  if (corpus.empty()) throw Error(Errc::kEmptyCorpus, "cannot build a vocabulary");
  Vocabulary vocab;
  for (const auto& seq : corpus) {
    for (const auto& token : seq.tokens) {
      if (vocab.index_.contains(token)) continue;
      vocab.tokens_.push_back(token);
      vocab.index_.emplace(token, static_cast<std::int32_t>(vocab.tokens_.size()));
    }
  }
  return vocab;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out << tokens_[i] << '\t' << (i + 1) << '\n';
  }
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot read " + path.string());
  Vocabulary vocab;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw Error(Errc::kIo, "bad vocabulary line: " + line);
    const std::string token = line.substr(0, tab);
    const long index = std::stol(line.substr(tab + 1));
    if (index != static_cast<long>(vocab.tokens_.size()) + 1 || vocab.index_.contains(token)) {
      throw Error(Errc::kIo, "vocabulary indices must be unique and consecutive from 1");
    }
    vocab.tokens_.push_back(token);
    vocab.index_.emplace(token, static_cast<std::int32_t>(index));
  }
  return vocab;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.contains(std::string(token));
}

std::int32_t Vocabulary::index_of(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) throw Error(Errc::kUnknownToken, "'" + std::string(token) + "'");
  return it->second;
}

const std::string& Vocabulary::token_at(std::int32_t index) const {
  if (index < 1 || static_cast<std::size_t>(index) > tokens_.size()) {
    throw Error(Errc::kUnknownToken, "index " + std::to_string(index));
  }
  return tokens_[static_cast<std::size_t>(index) - 1];
}

EncodedSeq encode(const TokenSeq& seq, const Vocabulary& vocab, std::size_t max_len) {
  if (seq.size() > max_len) {
    throw Error(Errc::kSequenceTooLong, std::to_string(seq.size()) + " tokens > max_len " +
                                            std::to_string(max_len));
  }
  EncodedSeq out;
  out.ids.assign(max_len, 0);
  out.true_len = seq.size();
  for (std::size_t k = 0; k < seq.size(); ++k) out.ids[k] = vocab.index_of(seq.tokens[k]);
  return out;
}

TokenSeq decode(const EncodedSeq& seq, const Vocabulary& vocab) {
  TokenSeq out;
  for (std::size_t k = 0; k < seq.true_len; ++k) out.tokens.push_back(vocab.token_at(seq.ids[k]));
  return out;
}

std::size_t max_token_length(std::span<const TokenSeq> corpus) {
  std::size_t longest = 0;
  for (const auto& seq : corpus) longest = std::max(longest, seq.size());
  return longest;
}

}  // namespace mmfdl::chemlex
