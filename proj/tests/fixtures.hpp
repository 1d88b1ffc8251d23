#pragma once

// Deterministic synthetic corpora and vector tables shared by the tests.

#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "csner/corpus.hpp"
#include "csner/embeddings.hpp"
#include "csner/model.hpp"
#include "csner/nn.hpp"

namespace csner::testing {

struct Lexicon {
  std::vector<std::string> english;
  std::vector<std::string> spanish;
};

inline const Lexicon& filler_words() {
  static const Lexicon lex{
      {"the", "is", "going", "to", "see", "with", "my", "friends", "today", "love", "this",
       "game", "at", "night", "really", "good", "we", "are", "in", "and"},
      {"el", "la", "voy", "a", "ver", "con", "mis", "amigos", "hoy", "me", "gusta", "en",
       "noche", "muy", "bueno", "vamos", "para", "todos", "los", "domingos"}};
  return lex;
}

struct EntityName {
  Category category;
  std::vector<std::string> tokens;
};

inline const std::vector<EntityName>& entity_names() {
  static const std::vector<EntityName> names{
      {Category::kPerson, {"Kendrick", "Lamar"}},
      {Category::kPerson, {"Shakira"}},
      {Category::kPerson, {"Juan", "Gabriel"}},
      {Category::kLocation, {"Westland", "Mall"}},
      {Category::kLocation, {"Barcelona"}},
      {Category::kLocation, {"Miami"}},
      {Category::kOrganization, {"Real", "Madrid"}},
      {Category::kOrganization, {"NASA"}},
      {Category::kProduct, {"iPhone"}},
      {Category::kProduct, {"Coca", "Cola"}},
  };
  return names;
}

/// `count` sentences of 4-9 filler words with one or two entities, drawn
/// with a fixed seed.
inline Dataset synthetic_corpus(std::size_t count, std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  const auto& lex = filler_words();
  const auto& names = entity_names();
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  Dataset d;
  for (std::size_t s = 0; s < count; ++s) {
    TaggedSentence sent;
    sent.tags.emplace();
    const auto& words = pick(2) == 0 ? lex.english : lex.spanish;
    const std::size_t len = 4 + pick(6);
    const std::size_t entities = 1 + pick(2);
    std::vector<std::size_t> slots;
    for (std::size_t e = 0; e < entities; ++e) slots.push_back(pick(len));
    for (std::size_t i = 0; i < len; ++i) {
      for (std::size_t slot : slots) {
        if (slot != i) continue;
        const auto& name = names[pick(names.size())];
        for (std::size_t k = 0; k < name.tokens.size(); ++k) {
          sent.tokens.push_back(name.tokens[k]);
          sent.tags->push_back(k == 0 ? Tag::begin(name.category) : Tag::inside(name.category));
        }
      }
      sent.tokens.push_back(words[pick(words.size())]);
      sent.tags->push_back(Tag::outside());
    }
    d.sentences.push_back(std::move(sent));
  }
  return d;
}

/// ".vec" text with one random vector per word.
inline std::string vec_text(const std::vector<std::string>& words, std::size_t dim,
                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  std::string out = std::to_string(words.size()) + " " + std::to_string(dim) + "\n";
  char buf[32];
  for (const auto& w : words) {
    out += w;
    for (std::size_t k = 0; k < dim; ++k) {
      std::snprintf(buf, sizeof buf, " %.4f", dist(rng));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

/// English and Spanish vector files covering the filler lexicons and some
/// entity tokens; "Lamar", "Gabriel" and "NASA" are left out so they are OOV.
inline std::pair<std::string, std::string> synthetic_vec_files(std::size_t dim) {
  std::vector<std::string> eng = filler_words().english;
  std::vector<std::string> spa = filler_words().spanish;
  for (const char* w : {"Kendrick", "Mall", "Westland", "Miami", "iPhone", "Real", "hello"}) {
    eng.emplace_back(w);
  }
  for (const char* w : {"Shakira", "Juan", "Barcelona", "Madrid", "Coca", "Cola", "Real"}) {
    spa.emplace_back(w);
  }
  return {vec_text(eng, dim, 11), vec_text(spa, dim, 12)};
}

inline std::shared_ptr<const EmbeddingTable> synthetic_table(std::size_t dim) {
  auto [eng, spa] = synthetic_vec_files(dim);
  return std::make_shared<const EmbeddingTable>(
      merge_tables(load_vec_text(eng), load_vec_text(spa)));
}

/// Reduced model used by gradient checks: char dim 4, char hidden 6,
/// word dim 8, word hidden 10, 5 tags.
inline ModelDims reduced_dims() { return {4, 6, 8, 10, 5}; }

/// Two short sentences whose tags fit in 5 classes (O, B/I-PER, B/I-LOC).
inline Dataset micro_corpus() {
  return parse_conll(
      "Kendrick\tB-PER\nLamar\tI-PER\nen\tO\nBarcelona\tB-LOC\n\n"
      "hola\tO\n@ana\tO\nMiami\tB-LOC\n\n");
}

}  // namespace csner::testing
