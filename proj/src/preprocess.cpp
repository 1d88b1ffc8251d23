#include "csner/preprocess.hpp"

#include <algorithm>

#include "csner/utf8.hpp"

namespace csner {

namespace {

bool starts_with_icase(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    char c = s[i];
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (c != prefix[i]) return false;
  }
  return true;
}

bool collapse_runs(std::u32string& s, std::size_t min_run) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t j = i;
    while (j < s.size() && s[j] == s[i]) ++j;
    const std::size_t run = j - i;
    out.append(run >= min_run ? 1 : run, s[i]);
    i = j;
  }
  const bool changed = out.size() != s.size();
  s = std::move(out);
  return changed;
}

// Removes one copy of the leftmost, shortest adjacent repeat.
bool collapse_one_square(std::u32string& s, std::size_t min_unit, std::size_t max_unit) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t len = min_unit; len <= max_unit; ++len) {
      if (i + 2 * len > s.size()) break;
      if (s.compare(i, len, s, i + len, len) == 0) {
        s.erase(i + len, len);
        return true;
      }
    }
  }
  return false;
}

}  // namespace

std::string replace_token(std::string_view token) {
  if (token.size() >= 2 && (token[0] == '#' || token[0] == '@')) return std::string(kUserToken);
  if (starts_with_icase(token, "http://") || starts_with_icase(token, "https://") ||
      starts_with_icase(token, "www.")) {
    return std::string(kUrlToken);
  }
  return std::string(token);
}

std::string strip_repeats(std::string_view token, const RepeatPolicy& policy) {
  auto s = utf8::decode(token);
  bool changed = true;
  while (changed) {
    changed = collapse_runs(s, policy.min_run);
    while (collapse_one_square(s, policy.min_unit, policy.max_unit)) changed = true;
  }
  return utf8::encode(s);
}

std::string_view rule_name(NormalizationRule r) {
  switch (r) {
    case NormalizationRule::kNone:
      return "none";
    case NormalizationRule::kReplacementUser:
      return "replacement_usr";
    case NormalizationRule::kReplacementUrl:
      return "replacement_url";
    case NormalizationRule::kHeuristicA:
      return "heuristic_a";
    case NormalizationRule::kHeuristicB:
      return "heuristic_b";
    case NormalizationRule::kHeuristicC:
      return "heuristic_c";
    case NormalizationRule::kHeuristicD:
      return "heuristic_d";
    case NormalizationRule::kUnresolved:
      return "unresolved";
  }
  return "?";
}

std::vector<std::pair<NormalizationRule, std::string>> normalization_candidates(
    std::string_view token, const RepeatPolicy& policy) {
  const std::string lower = utf8::lowercase(token);
  const std::string stripped = strip_repeats(lower, policy);
  return {
      {NormalizationRule::kHeuristicA, utf8::capitalize_first(token)},
      {NormalizationRule::kHeuristicB, lower},
      {NormalizationRule::kHeuristicC, stripped},
      {NormalizationRule::kHeuristicD, utf8::capitalize_first(stripped)},
  };
}

NormalizedToken normalize_token(std::string_view token, const Vocabulary& vocab,
                                const RepeatPolicy& policy) {
  NormalizedToken out{std::string(token), std::string(token), NormalizationRule::kNone};
  if (vocab.contains(token)) return out;
  for (auto& [rule, candidate] : normalization_candidates(token, policy)) {
    if (vocab.contains(candidate)) {
      out.result = std::move(candidate);
      out.rule = rule;
      return out;
    }
  }
  out.rule = NormalizationRule::kUnresolved;
  return out;
}

Dataset replace_dataset(const Dataset& d) {
  Dataset out = d;
  for (auto& s : out.sentences) {
    for (auto& t : s.tokens) t = replace_token(t);
  }
  return out;
}

Dataset preprocess_dataset(const Dataset& d, const Vocabulary& vocab) {
  Dataset out = d;
  for (auto& s : out.sentences) {
    for (auto& t : s.tokens) t = normalize_token(replace_token(t), vocab).result;
  }
  return out;
}

std::unordered_set<std::string> lookup_candidates(const Dataset& d) {
  std::unordered_set<std::string> out;
  for (const auto& s : d.sentences) {
    for (const auto& raw : s.tokens) {
      out.insert(raw);
      std::string t = replace_token(raw);
      for (auto& [rule, c] : normalization_candidates(t)) out.insert(std::move(c));
      out.insert(std::move(t));
    }
  }
  return out;
}

OovRate oov_report(const Dataset& d, const Vocabulary& vocab) {
  OovRate r;
  r.has_entity = d.labeled();
  for (const auto& s : d.sentences) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      const bool oov = !vocab.contains(s.tokens[i]);
      ++r.tokens;
      if (oov) ++r.oov;
      if (s.tags && !(*s.tags)[i].is_outside()) {
        ++r.entity_tokens;
        if (oov) ++r.entity_oov;
      }
    }
  }
  return r;
}

}  // namespace csner
