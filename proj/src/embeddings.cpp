#include "csner/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "csner/error.hpp"
#include "csner/utf8.hpp"

namespace csner {

Vocabulary::Vocabulary() {
  add(kPadToken);
  add(kUnkToken);
}

int Vocabulary::add(std::string_view token) {
  auto it = index_.find(std::string(token));
  if (it != index_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.emplace_back(token);
  index_.emplace(tokens_.back(), id);
  return id;
}

int Vocabulary::lookup(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it != index_.end() && it->second > kUnk;
}

namespace {

std::string_view next_field(std::string_view line, std::size_t& pos) {
  while (pos < line.size() && line[pos] == ' ') ++pos;
  const std::size_t start = pos;
  while (pos < line.size() && line[pos] != ' ') ++pos;
  return line.substr(start, pos - start);
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end;
}

}  // namespace

EmbeddingTable load_vec_text(std::string_view text, const std::unordered_set<std::string>* keep) {
  EmbeddingTable table;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= text.size()) return false;
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return true;
  };

  std::string_view line;
  if (!next_line(line)) throw LoadError("empty vector file");
  {
    std::size_t p = 0;
    std::size_t count = 0;
    auto f1 = next_field(line, p);
    auto f2 = next_field(line, p);
    auto rest = next_field(line, p);
    if (!parse_number(f1, count) || !parse_number(f2, table.dim) || !rest.empty() ||
        table.dim == 0) {
      throw LoadError("line 1: expected header 'count dim'");
    }
  }
  const std::size_t dim = table.dim;
  table.source_mean.assign(dim, 0.0);
  table.vectors.assign(2 * dim, 0.0f);  // PAD, UNK

  std::vector<float> row(dim);
  while (next_line(line)) {
    if (line.empty()) continue;
    std::size_t p = 0;
    const std::string_view word = next_field(line, p);
    std::size_t n = 0;
    for (;;) {
      auto f = next_field(line, p);
      if (f.empty()) break;
      if (n == dim) {
        throw LoadError("line " + std::to_string(line_no) + ": more than " +
                        std::to_string(dim) + " components");
      }
      if (!parse_number(f, row[n])) {
        throw LoadError("line " + std::to_string(line_no) + ": non-numeric component '" +
                        std::string(f) + "'");
      }
      ++n;
    }
    if (n != dim) {
      throw LoadError("line " + std::to_string(line_no) + ": expected " + std::to_string(dim) +
                      " components, found " + std::to_string(n));
    }
    for (std::size_t k = 0; k < dim; ++k) table.source_mean[k] += row[k];
    ++table.source_rows;
    if (keep && !keep->contains(std::string(word))) continue;
    if (table.vocab.lookup(word) != Vocabulary::kUnk) continue;  // first occurrence wins
    table.vocab.add(word);
    table.vectors.insert(table.vectors.end(), row.begin(), row.end());
  }
  if (table.source_rows > 0) {
    for (auto& m : table.source_mean) m /= static_cast<double>(table.source_rows);
  }
  for (std::size_t k = 0; k < dim; ++k) {
    table.vectors[dim + k] = static_cast<float>(table.source_mean[k]);
  }
  return table;
}

EmbeddingTable load_vec(const std::string& path, const std::unordered_set<std::string>* keep) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open vector file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return load_vec_text(ss.str(), keep);
  } catch (const LoadError& e) {
    throw LoadError(path + ": " + e.what());
  }
}

EmbeddingTable merge_tables(const EmbeddingTable& eng, const EmbeddingTable& spa) {
  if (eng.dim != spa.dim) {
    throw ContractViolation("cannot merge vector tables of dimension " +
                            std::to_string(eng.dim) + " and " + std::to_string(spa.dim));
  }
  const std::size_t dim = eng.dim;
  EmbeddingTable out;
  out.dim = dim;
  out.special_rows = 4;
  out.source_rows = eng.source_rows + spa.source_rows;
  out.source_mean.assign(dim, 0.0);
  if (out.source_rows > 0) {
    for (std::size_t k = 0; k < dim; ++k) {
      out.source_mean[k] = (eng.source_mean[k] * static_cast<double>(eng.source_rows) +
                            spa.source_mean[k] * static_cast<double>(spa.source_rows)) /
                           static_cast<double>(out.source_rows);
    }
  }
  out.vocab.add(kUserToken);
  out.vocab.add(kUrlToken);
  out.vectors.assign(4 * dim, 0.0f);
  for (std::size_t r = 1; r < 4; ++r) {
    for (std::size_t k = 0; k < dim; ++k) {
      out.vectors[r * dim + k] = static_cast<float>(out.source_mean[k]);
    }
  }
  for (const EmbeddingTable* src : {&eng, &spa}) {
    for (std::size_t r = src->special_rows; r < src->rows(); ++r) {
      const auto& word = src->vocab.token(static_cast<int>(r));
      if (out.vocab.lookup(word) != Vocabulary::kUnk) continue;
      out.vocab.add(word);
      auto v = src->row(r);
      out.vectors.insert(out.vectors.end(), v.begin(), v.end());
    }
  }
  return out;
}

CharVocabulary::CharVocabulary(std::vector<char32_t> chars) : chars_(std::move(chars)) {
  std::sort(chars_.begin(), chars_.end());
  chars_.erase(std::unique(chars_.begin(), chars_.end()), chars_.end());
}

int CharVocabulary::lookup(char32_t c) const {
  auto it = std::lower_bound(chars_.begin(), chars_.end(), c);
  if (it == chars_.end() || *it != c) return kUnk;
  return static_cast<int>(it - chars_.begin()) + 2;
}

std::vector<int> CharVocabulary::encode(std::string_view word) const {
  std::vector<int> ids;
  for (char32_t c : utf8::decode(word)) ids.push_back(lookup(c));
  return ids;
}

std::string default_char_inventory() {
  std::string s;
  for (char c = 0x21; c < 0x7F; ++c) s.push_back(c);
  s += "ñáéíóúüÑÁÉÍÓÚÜ¿¡";
  return s;
}

CharVocabulary build_char_vocab(const Dataset& d, std::string_view extra) {
  std::vector<char32_t> chars;
  for (char32_t c : utf8::decode(extra)) chars.push_back(c);
  for (const auto& s : d.sentences) {
    for (const auto& tok : s.tokens) {
      for (char32_t c : utf8::decode(tok)) chars.push_back(c);
    }
  }
  return CharVocabulary(std::move(chars));
}

}  // namespace csner
