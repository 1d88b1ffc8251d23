#pragma once

// Brute-force reference for replacement, normalization and OOV counting.
// Works on ASCII fixtures and checks membership by scanning a word list.

#include <algorithm>
#include <cctype>
#include <random>
#include <string>
#include <vector>

#include "csner/corpus.hpp"

namespace csner::testing {

inline bool scan_contains(const std::vector<std::string>& words, const std::string& w) {
  for (const auto& v : words) {
    if (v == w) return true;
  }
  return false;
}

inline std::string oracle_replace(const std::string& t) {
  if (t.size() >= 2 && (t[0] == '#' || t[0] == '@')) return "USR";
  std::string low = t;
  for (auto& c : low) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (const char* p : {"http://", "https://", "www."}) {
    if (low.rfind(p, 0) == 0) return "URL";
  }
  return t;
}

inline std::string oracle_strip(std::string s) {
  for (;;) {
    std::string prev = s;
    std::string runs;
    for (std::size_t i = 0; i < s.size();) {
      std::size_t j = i;
      while (j < s.size() && s[j] == s[i]) ++j;
      runs.append(j - i >= 3 ? 1 : j - i, s[i]);
      i = j;
    }
    s = runs;
    bool found = true;
    while (found) {
      found = false;
      for (std::size_t i = 0; i < s.size() && !found; ++i) {
        for (std::size_t len = 2; len <= 3 && !found; ++len) {
          if (i + 2 * len <= s.size() && s.substr(i, len) == s.substr(i + len, len)) {
            s.erase(i + len, len);
            found = true;
          }
        }
      }
    }
    if (s == prev) return s;
  }
}

inline std::string oracle_lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline std::string oracle_capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

/// Replacement then heuristics (a)-(d), each checked by a linear scan.
inline std::string oracle_normalize(const std::string& raw, const std::vector<std::string>& words) {
  const std::string t = oracle_replace(raw);
  if (scan_contains(words, t)) return t;
  const std::string low = oracle_lower(t);
  const std::string stripped = oracle_strip(low);
  for (const std::string& c :
       {oracle_capitalize(t), low, stripped, oracle_capitalize(stripped)}) {
    if (scan_contains(words, c)) return c;
  }
  return t;
}

struct OovOracle {
  std::size_t tokens = 0;
  std::size_t before = 0;  // after replacement only
  std::size_t after = 0;   // after replacement and normalization
};

inline OovOracle oov_oracle(const Dataset& d, const std::vector<std::string>& words) {
  OovOracle o;
  for (const auto& s : d.sentences) {
    for (const auto& t : s.tokens) {
      ++o.tokens;
      if (!scan_contains(words, oracle_replace(t))) ++o.before;
      if (!scan_contains(words, oracle_normalize(t, words))) ++o.after;
    }
  }
  return o;
}

/// Random ASCII vocabulary of `size` distinct words, some capitalized.
inline std::vector<std::string> random_vocabulary(std::size_t size, std::mt19937_64& rng) {
  std::vector<std::string> words;
  while (words.size() < size) {
    std::string w;
    const std::size_t len = 2 + rng() % 6;
    for (std::size_t i = 0; i < len; ++i) w.push_back(static_cast<char>('a' + rng() % 12));
    if (rng() % 4 == 0) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
    if (rng() % 10 == 0) w = oracle_strip(w) + w.back() + w.back() + w.back();
    if (!scan_contains(words, w)) words.push_back(w);
  }
  return words;
}

/// Corpus of `tokens` tokens mixing vocabulary words with case changes,
/// elongations, repeated syllables, mentions, URLs and noise.
inline Dataset random_token_corpus(std::size_t tokens, const std::vector<std::string>& words,
                                   std::mt19937_64& rng) {
  Dataset d;
  TaggedSentence sent;
  sent.tags.emplace();
  for (std::size_t n = 0; n < tokens; ++n) {
    std::string w = words[rng() % words.size()];
    switch (rng() % 9) {
      case 0:
        break;
      case 1:
        for (auto& c : w) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        break;
      case 2:
        w = oracle_lower(w);
        break;
      case 3:
        w.append(2 + rng() % 4, w.back());
        break;
      case 4:
        if (w.size() >= 2) w += w.substr(w.size() - 2) + w.substr(w.size() - 2);
        break;
      case 5:
        w = (rng() % 2 ? "@" : "#") + w;
        break;
      case 6:
        w = (rng() % 2 ? "https://" : "WWW.") + w + ".com";
        break;
      case 7:
        w = oracle_capitalize(oracle_lower(w)) + "zz";
        break;
      default:
        w = std::string(1, static_cast<char>('m' + rng() % 10)) + w;
        break;
    }
    sent.tokens.push_back(w);
    sent.tags->push_back(Tag::from_index(static_cast<int>(rng() % 3)));
    if (sent.tokens.size() == 1 + rng() % 15 || n + 1 == tokens) {
      d.sentences.push_back(std::move(sent));
      sent = TaggedSentence{};
      sent.tags.emplace();
    }
  }
  return d;
}

}  // namespace csner::testing
