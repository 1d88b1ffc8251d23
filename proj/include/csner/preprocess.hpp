#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "csner/corpus.hpp"
#include "csner/embeddings.hpp"

namespace csner {

/// "#x"/"@x" -> "USR"; http://, https://, www. prefixes (any case) -> "URL".
std::string replace_token(std::string_view token);

/// Repeat-collapsing policy used by normalization heuristics (c) and (d).
struct RepeatPolicy {
  std::size_t min_run = 3;            // runs of at least this many identical chars -> one
  std::size_t min_unit = 2;           // shortest repeated unit collapsed
  std::size_t max_unit = 3;           // longest repeated unit collapsed
};

/// Collapses character runs, then adjacent repeats of short units, until
/// nothing changes. Works on code points.
std::string strip_repeats(std::string_view token, const RepeatPolicy& policy = {});

enum class NormalizationRule {
  kNone,
  kReplacementUser,
  kReplacementUrl,
  kHeuristicA,  // capitalized
  kHeuristicB,  // lowercased
  kHeuristicC,  // lowercased + repeats stripped
  kHeuristicD,  // lowercased + repeats stripped + capitalized
  kUnresolved,
};

std::string_view rule_name(NormalizationRule r);

struct NormalizedToken {
  std::string original;
  std::string result;
  NormalizationRule rule = NormalizationRule::kNone;
};

/// Candidate rewrites of an OOV token in the order they are tried.
std::vector<std::pair<NormalizationRule, std::string>> normalization_candidates(
    std::string_view token, const RepeatPolicy& policy = {});

NormalizedToken normalize_token(std::string_view token, const Vocabulary& vocab,
                                const RepeatPolicy& policy = {});

/// Replacement followed by normalization, token by token. The result has the
/// same sentence boundaries and tags.
Dataset preprocess_dataset(const Dataset& d, const Vocabulary& vocab);

/// Replacement only.
Dataset replace_dataset(const Dataset& d);

/// Every string the normalizer could look up for tokens of `d`. Used to
/// restrict vector loading to rows that can ever be read.
std::unordered_set<std::string> lookup_candidates(const Dataset& d);

struct OovRate {
  std::size_t tokens = 0;
  std::size_t oov = 0;
  std::size_t entity_tokens = 0;
  std::size_t entity_oov = 0;
  bool has_entity = false;  // false for unlabeled data

  double all() const { return tokens == 0 ? 0.0 : static_cast<double>(oov) / tokens; }
  double entity() const {
    return entity_tokens == 0 ? 0.0 : static_cast<double>(entity_oov) / entity_tokens;
  }
};

/// Token-occurrence OOV rates; entity tokens are those tagged B-/I-.
OovRate oov_report(const Dataset& d, const Vocabulary& vocab);

}  // namespace csner
