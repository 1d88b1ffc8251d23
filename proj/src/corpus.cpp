#include "csner/corpus.hpp"

#include <fstream>
#include <sstream>

#include "csner/error.hpp"
#include "csner/eval.hpp"

namespace csner {

namespace {

constexpr std::array<std::string_view, kNumCategories> kCodes = {
    "PER", "LOC", "PROD", "TITLE", "ORG", "GROUP", "TIME", "EVENT", "OTHER"};
constexpr std::array<std::string_view, kNumCategories> kNames = {
    "person", "location",  "product", "title", "organization",
    "group",  "time",      "event",   "other"};

}  // namespace

std::string_view category_code(Category c) {
  return kCodes[static_cast<std::size_t>(c)];
}

std::string_view category_name(Category c) {
  return kNames[static_cast<std::size_t>(c)];
}

std::optional<Category> category_from_code(std::string_view code) {
  for (int i = 0; i < kNumCategories; ++i) {
    if (kCodes[i] == code) return static_cast<Category>(i);
  }
  return std::nullopt;
}

Tag Tag::from_index(int index) {
  require(index >= 0 && index < kNumTags, "tag index out of range");
  if (index == 0) return outside();
  const auto cat = static_cast<Category>((index - 1) / 2);
  return (index - 1) % 2 == 0 ? begin(cat) : inside(cat);
}

std::optional<Tag> Tag::parse(std::string_view s) {
  if (s == "O") return outside();
  if (s.size() < 3 || s[1] != '-') return std::nullopt;
  auto cat = category_from_code(s.substr(2));
  if (!cat) return std::nullopt;
  if (s[0] == 'B') return begin(*cat);
  if (s[0] == 'I') return inside(*cat);
  return std::nullopt;
}

int Tag::index() const {
  const int c = static_cast<int>(category);
  switch (kind) {
    case Kind::kOutside:
      return 0;
    case Kind::kBegin:
      return 1 + 2 * c;
    case Kind::kInside:
      return 2 + 2 * c;
  }
  return 0;
}

std::string Tag::str() const {
  if (is_outside()) return "O";
  std::string out = is_begin() ? "B-" : "I-";
  out += category_code(category);
  return out;
}

std::size_t Dataset::token_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

bool Dataset::labeled() const {
  return !sentences.empty() && sentences.front().labeled();
}

Dataset parse_conll(std::string_view text, Split split) {
  Dataset d;
  d.split = split;

  TaggedSentence current;
  std::optional<bool> file_labeled;
  std::optional<bool> sentence_labeled;
  std::size_t line_no = 0;

  auto flush = [&] {
    if (!current.tokens.empty()) d.sentences.push_back(std::move(current));
    current = TaggedSentence{};
    sentence_labeled.reset();
  };

  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (line.empty()) {
      flush();
      continue;
    }

    const std::size_t tab = line.find('\t');
    const bool has_tag = tab != std::string_view::npos;
    if (sentence_labeled && *sentence_labeled != has_tag) {
      throw ParseError("tag column present on some lines of a sentence but not others",
                       line_no);
    }
    if (file_labeled && *file_labeled != has_tag) {
      throw ParseError("file mixes labeled and unlabeled sentences", line_no);
    }
    sentence_labeled = has_tag;
    file_labeled = has_tag;

    if (!has_tag) {
      current.tokens.emplace_back(line);
      continue;
    }
    std::string_view token = line.substr(0, tab);
    std::string_view tag_str = line.substr(tab + 1);
    if (token.empty()) throw ParseError("empty token", line_no);
    auto tag = Tag::parse(tag_str);
    if (!tag) {
      throw ParseError("malformed tag '" + std::string(tag_str) + "'", line_no);
    }
    current.tokens.emplace_back(token);
    if (!current.tags) current.tags.emplace();
    current.tags->push_back(*tag);
  }
  flush();
  return d;
}

Dataset read_conll_file(const std::string& path, Split split) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open corpus file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_conll(ss.str(), split);
}

std::string write_conll(const Dataset& d) {
  std::string out;
  for (const auto& s : d.sentences) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      out += s.tokens[i];
      if (s.tags) {
        out += '\t';
        out += (*s.tags)[i].str();
      }
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

void write_conll_file(const std::string& path, const Dataset& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write corpus file: " + path);
  out << write_conll(d);
}

std::vector<IobViolation> validate_iob(const std::vector<Tag>& tags) {
  std::vector<IobViolation> out;
  const std::size_t n = tags.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Tag& t = tags[i];
    if (t.is_outside()) {
      // nearest non-O on each side
      std::size_t l = i;
      while (l > 0 && tags[l - 1].is_outside()) --l;
      std::size_t r = i + 1;
      while (r < n && tags[r].is_outside()) ++r;
      if (l > 0 && r < n && tags[r].is_inside() &&
          tags[l - 1].category == tags[r].category) {
        out.push_back({IobViolation::Kind::kGapO, i});
      }
      continue;
    }
    if (!t.is_inside()) continue;
    if (i == 0 || tags[i - 1].is_outside()) {
      // an I closing an O gap is already reported through the gap
      std::size_t l = i;
      while (l > 0 && tags[l - 1].is_outside()) --l;
      if (l == 0 || tags[l - 1].category != t.category) {
        out.push_back({IobViolation::Kind::kOrphanInside, i});
      }
    } else if (tags[i - 1].is_begin() && tags[i - 1].category != t.category) {
      out.push_back({IobViolation::Kind::kCategoryMismatch, i});
    }
  }
  return out;
}

DatasetStats dataset_stats(const Dataset& d) {
  DatasetStats s;
  s.sentences = d.sentences.size();
  for (const auto& sent : d.sentences) {
    s.words += sent.size();
    if (!sent.tags) continue;
    for (const auto& span : extract_entities(*sent.tags)) {
      ++s.entities[static_cast<std::size_t>(span.category)];
    }
  }
  return s;
}

std::string format_stats(const DatasetStats& s) {
  std::ostringstream out;
  out << "# Sentences\t" << s.sentences << '\n';
  out << "# Words\t" << s.words << '\n';
  for (int c = 0; c < kNumCategories; ++c) {
    std::string name(category_name(static_cast<Category>(c)));
    name[0] = static_cast<char>(name[0] - 'a' + 'A');
    out << "# " << name << '\t' << s.entities[c] << '\n';
  }
  return out.str();
}

}  // namespace csner
