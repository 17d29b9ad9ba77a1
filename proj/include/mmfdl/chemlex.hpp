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

// SMILES lexing, corpus vocabularies and fixed-length integer encodings.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mmfdl::chemlex {

/// Ordered SMILES tokens. Joining the tokens reproduces the source string.
struct TokenSeq {
  std::vector<std::string> tokens;

  std::size_t size() const noexcept { return tokens.size(); }
  std::string joined() const;
  bool operator==(const TokenSeq&) const = default;
};

/// Lexical class of a token; used by molgraph and by tests of the rule table.
enum class TokenKind {
  kBracketAtom,   // [...]
  kOrganicAtom,   // B C N O P S F I Cl Br
  kAromaticAtom,  // b c n o s p
  kBond,          // - = # : / backslash
  kRingClosure,   // 0-9 and %nn
  kBranchOpen,
  kBranchClose,
  kDot,
  kCharge,        // bare '+'
  kChirality,     // bare '@' or '@@'
};

TokenKind classify(std::string_view token);
bool is_atom_token(std::string_view token);

/// Longest-match lexing over the fixed rule table. Bracket atoms are single
/// tokens. Throws Error(kUnlexableCharacter) with the byte offset or
/// Error(kUnterminatedBracket).
TokenSeq tokenize(std::string_view smiles);

/// Token -> index map. Indices run 1..size() in first-appearance order; index
/// 0 is padding and never maps to a token. Immutable after construction.
class Vocabulary {
 public:
  Vocabulary() = default;

  /// Throws Error(kEmptyCorpus) for an empty corpus.
  static Vocabulary build(std::span<const TokenSeq> corpus);

  /// One "token<TAB>index" line per entry, sorted by index.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  std::size_t size() const noexcept { return tokens_.size(); }
  bool contains(std::string_view token) const;
  /// Throws Error(kUnknownToken).
  std::int32_t index_of(std::string_view token) const;
  /// Inverse lookup for 1 <= index <= size().
  const std::string& token_at(std::int32_t index) const;

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;  // tokens_[i] has index i + 1
  std::unordered_map<std::string, std::int32_t> index_;
};

/// Zero-padded fixed-length encoding of a TokenSeq.
struct EncodedSeq {
  std::vector<std::int32_t> ids;
  std::size_t true_len = 0;

  std::size_t max_len() const noexcept { return ids.size(); }
  bool operator==(const EncodedSeq&) const = default;
};

/// Throws Error(kSequenceTooLong) when seq is longer than max_len and
/// Error(kUnknownToken) when a token is absent from vocab.
EncodedSeq encode(const TokenSeq& seq, const Vocabulary& vocab, std::size_t max_len);

/// Strips padding and maps ids back to tokens.
TokenSeq decode(const EncodedSeq& seq, const Vocabulary& vocab);

/// Longest tokenized length over a corpus (the per-dataset max_len).
std::size_t max_token_length(std::span<const TokenSeq> corpus);

}  // namespace mmfdl::chemlex
