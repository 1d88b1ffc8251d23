#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "csner/corpus.hpp"

namespace csner {

/// Token -> row index. Index 0 is PAD and 1 is UNK; unknown lookups give UNK.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr std::string_view kPadToken = "<PAD>";
  static constexpr std::string_view kUnkToken = "<UNK>";

  Vocabulary();

  /// Returns the existing index when the token is already present.
  int add(std::string_view token);
  int lookup(std::string_view token) const;
  /// True for every entry except the PAD/UNK placeholders.
  bool contains(std::string_view token) const;
  const std::string& token(int index) const { return tokens_.at(static_cast<std::size_t>(index)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

inline constexpr std::string_view kUserToken = "USR";
inline constexpr std::string_view kUrlToken = "URL";

/// Row-major |V| x dim matrix of word vectors. The first `special_rows` rows
/// (PAD, UNK and, after merging, USR and URL) are trainable; the rest stay
/// fixed.
struct EmbeddingTable {
  Vocabulary vocab;
  std::size_t dim = 0;
  std::vector<float> vectors;
  std::size_t special_rows = 2;
  /// Mean of every vector read from the source file(s), including rows
  /// dropped by pruning. Seeds the UNK/USR/URL rows.
  std::vector<double> source_mean;
  std::size_t source_rows = 0;

  std::size_t rows() const { return vocab.size(); }
  std::span<const float> row(std::size_t i) const {
    return {vectors.data() + i * dim, dim};
  }
};

/// Parses the fastText/word2vec text format ("count dim" header, then
/// "word v1 ... v_dim"). When `keep` is non-null only listed words are
/// retained. Throws LoadError with a line number on malformed rows.
EmbeddingTable load_vec_text(std::string_view text,
                             const std::unordered_set<std::string>* keep = nullptr);
EmbeddingTable load_vec(const std::string& path,
                        const std::unordered_set<std::string>* keep = nullptr);

/// English rows first, then Spanish rows for words not already present.
/// PAD, UNK, USR and URL are prepended.
EmbeddingTable merge_tables(const EmbeddingTable& eng, const EmbeddingTable& spa);

/// Characters by code point; 0 = PAD, 1 = UNK, then sorted code points.
class CharVocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  CharVocabulary() = default;
  explicit CharVocabulary(std::vector<char32_t> chars);

  int lookup(char32_t c) const;
  std::vector<int> encode(std::string_view word) const;
  std::size_t size() const { return chars_.size() + 2; }
  const std::vector<char32_t>& chars() const { return chars_; }

  friend bool operator==(const CharVocabulary&, const CharVocabulary&) = default;

 private:
  std::vector<char32_t> chars_;  // sorted, unique
};

/// ASCII printable characters plus Spanish letters and punctuation.
std::string default_char_inventory();

CharVocabulary build_char_vocab(const Dataset& d, std::string_view extra = default_char_inventory());

}  // namespace csner
