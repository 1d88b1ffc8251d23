#include "csner/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "csner/error.hpp"

namespace csner {

std::vector<EntitySpan> extract_entities(const std::vector<Tag>& tags) {
  std::vector<EntitySpan> spans;
  bool open = false;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const Tag& t = tags[i];
    if (t.is_outside()) {
      open = false;
    } else if (t.is_inside() && open && spans.back().category == t.category) {
      spans.back().end = i;
    } else {
      spans.push_back({t.category, i, i});
      open = true;
    }
  }
  return spans;
}

double harmonic_mean(std::span<const double> values) {
  require(!values.empty(), "harmonic_mean of empty sequence");
  double inv = 0.0;
  for (double v : values) {
    require(v >= 0.0, "harmonic_mean needs non-negative values");
    if (v == 0.0) return 0.0;
    inv += 1.0 / v;
  }
  return static_cast<double>(values.size()) / inv;
}

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double f1_of(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

}  // namespace

EvalReport score(const Dataset& gold, const Dataset& pred) {
  if (gold.sentences.size() != pred.sentences.size()) {
    throw std::invalid_argument("sentence count mismatch: gold has " +
                                std::to_string(gold.sentences.size()) + ", prediction has " +
                                std::to_string(pred.sentences.size()));
  }
  EvalReport r;
  r.sentences = gold.sentences.size();
  for (std::size_t s = 0; s < gold.sentences.size(); ++s) {
    const auto& g = gold.sentences[s];
    const auto& p = pred.sentences[s];
    if (!g.tags || !p.tags) {
      throw std::invalid_argument("sentence " + std::to_string(s + 1) + " has no tags");
    }
    if (g.size() != p.size()) {
      throw std::invalid_argument("sentence " + std::to_string(s + 1) +
                                  " length mismatch: gold " + std::to_string(g.size()) +
                                  ", prediction " + std::to_string(p.size()));
    }
    r.tokens += g.size();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if ((*g.tags)[i] == (*p.tags)[i]) ++r.correct_tokens;
    }
    auto gs = extract_entities(*g.tags);
    auto ps = extract_entities(*p.tags);
    std::sort(gs.begin(), gs.end());
    std::sort(ps.begin(), ps.end());
    for (const auto& e : gs) {
      auto& cls = r.classes[static_cast<std::size_t>(e.category)];
      cls.evaluated = true;
      if (std::binary_search(ps.begin(), ps.end(), e)) {
        ++cls.tp;
      } else {
        ++cls.fn;
      }
    }
    for (const auto& e : ps) {
      auto& cls = r.classes[static_cast<std::size_t>(e.category)];
      cls.evaluated = true;
      if (!std::binary_search(gs.begin(), gs.end(), e)) ++cls.fp;
    }
  }

  std::size_t tp = 0, fp = 0, fn = 0;
  std::vector<double> f1s;
  for (auto& cls : r.classes) {
    cls.precision = ratio(cls.tp, cls.tp + cls.fp);
    cls.recall = ratio(cls.tp, cls.tp + cls.fn);
    cls.f1 = f1_of(cls.precision, cls.recall);
    tp += cls.tp;
    fp += cls.fp;
    fn += cls.fn;
    if (cls.evaluated) f1s.push_back(cls.f1);
  }
  if (f1s.empty()) {
    // nothing to find and nothing predicted
    r.harmonic_f1 = 1.0;
    r.micro_precision = r.micro_recall = r.micro_f1 = 1.0;
    return r;
  }
  r.harmonic_f1 = harmonic_mean(f1s);
  r.micro_precision = ratio(tp, tp + fp);
  r.micro_recall = ratio(tp, tp + fn);
  r.micro_f1 = f1_of(r.micro_precision, r.micro_recall);
  return r;
}

std::string format_report(const EvalReport& r) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-14s %6s %6s %6s %10s %10s %10s\n", "class", "TP", "FP",
                "FN", "precision", "recall", "F1");
  out += buf;
  for (int c = 0; c < kNumCategories; ++c) {
    const auto& cls = r.classes[c];
    std::snprintf(buf, sizeof buf, "%-14s %6zu %6zu %6zu %9.4f%% %9.4f%% %9.4f%%%s\n",
                  std::string(category_name(static_cast<Category>(c))).c_str(), cls.tp, cls.fp,
                  cls.fn, 100.0 * cls.precision, 100.0 * cls.recall, 100.0 * cls.f1,
                  cls.evaluated ? "" : "  (absent)");
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "harmonic-mean F1: %.4f%%\n", 100.0 * r.harmonic_f1);
  out += buf;
  std::snprintf(buf, sizeof buf, "micro F1: %.4f%% (P %.4f%%, R %.4f%%)\n", 100.0 * r.micro_f1,
                100.0 * r.micro_precision, 100.0 * r.micro_recall);
  out += buf;
  std::snprintf(buf, sizeof buf, "token accuracy: %.4f%% (%zu/%zu tokens, %zu sentences)\n",
                100.0 * r.token_accuracy(), r.correct_tokens, r.tokens, r.sentences);
  out += buf;
  return out;
}

}  // namespace csner
