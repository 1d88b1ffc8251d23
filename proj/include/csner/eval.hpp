#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "csner/corpus.hpp"

namespace csner {

struct EntitySpan {
  Category category;
  std::size_t start;
  std::size_t end;  // inclusive

  friend auto operator<=>(const EntitySpan&, const EntitySpan&) = default;
};

/// Maximal spans. An I-X that does not continue an open X span opens a new one.
std::vector<EntitySpan> extract_entities(const std::vector<Tag>& tags);

struct ClassScore {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool evaluated = false;  // occurs in gold or prediction
};

struct EvalReport {
  std::array<ClassScore, kNumCategories> classes{};
  double harmonic_f1 = 0.0;
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double micro_f1 = 0.0;
  std::size_t sentences = 0;
  std::size_t tokens = 0;
  std::size_t correct_tokens = 0;

  const ClassScore& of(Category c) const {
    return classes[static_cast<std::size_t>(c)];
  }
  double token_accuracy() const {
    return tokens == 0 ? 0.0 : static_cast<double>(correct_tokens) / tokens;
  }
};

/// n / sum(1/v); zero if any value is zero. Throws on empty input.
double harmonic_mean(std::span<const double> values);

/// Exact-match span scoring. Both datasets need tags and identical sentence
/// lengths; throws std::invalid_argument naming the first misaligned sentence.
EvalReport score(const Dataset& gold, const Dataset& pred);

std::string format_report(const EvalReport& r);

}  // namespace csner
