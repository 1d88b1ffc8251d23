#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace csner {

/// The nine entity categories, in frequency order of the shared-task release.
enum class Category : int {
  kPerson = 0,
  kLocation,
  kProduct,
  kTitle,
  kOrganization,
  kGroup,
  kTime,
  kEvent,
  kOther,
};

inline constexpr int kNumCategories = 9;
inline constexpr int kNumTags = 2 * kNumCategories + 1;

/// File codes ("PER", "LOC", ...).
std::string_view category_code(Category c);
/// Long names used in reports ("person", ...).
std::string_view category_name(Category c);
std::optional<Category> category_from_code(std::string_view code);

/// An IOB tag. Index layout: O = 0, B-c = 1 + 2c, I-c = 2 + 2c.
struct Tag {
  enum class Kind : unsigned char { kOutside, kBegin, kInside };

  Kind kind = Kind::kOutside;
  Category category = Category::kPerson;  // ignored when kind == kOutside

  static Tag outside() { return {}; }
  static Tag begin(Category c) { return {Kind::kBegin, c}; }
  static Tag inside(Category c) { return {Kind::kInside, c}; }
  static Tag from_index(int index);
  static std::optional<Tag> parse(std::string_view s);

  bool is_outside() const { return kind == Kind::kOutside; }
  bool is_begin() const { return kind == Kind::kBegin; }
  bool is_inside() const { return kind == Kind::kInside; }

  int index() const;
  std::string str() const;

  friend bool operator==(const Tag& a, const Tag& b) {
    if (a.kind != b.kind) return false;
    return a.kind == Kind::kOutside || a.category == b.category;
  }
};

struct TaggedSentence {
  std::vector<std::string> tokens;
  std::optional<std::vector<Tag>> tags;  // absent for unlabeled data

  std::size_t size() const { return tokens.size(); }
  bool labeled() const { return tags.has_value(); }
  friend bool operator==(const TaggedSentence&, const TaggedSentence&) = default;
};

enum class Split { kTrain, kDev, kTest };

struct Dataset {
  std::vector<TaggedSentence> sentences;
  Split split = Split::kTrain;

  bool empty() const { return sentences.empty(); }
  std::size_t token_count() const;
  bool labeled() const;
  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.sentences == b.sentences;
  }
};

/// Two-column "token<TAB>tag" (or bare "token") lines; blank lines separate
/// sentences. Throws ParseError with the offending line number.
Dataset parse_conll(std::string_view text, Split split = Split::kTrain);
Dataset read_conll_file(const std::string& path, Split split = Split::kTrain);

std::string write_conll(const Dataset& d);
void write_conll_file(const std::string& path, const Dataset& d);

struct IobViolation {
  enum class Kind {
    kGapO = 1,             // O between B-X/I-X and I-X
    kCategoryMismatch = 2, // I-Y right after B-X
    kOrphanInside = 3,     // I-X after O or at sentence start, not closing a gap
  };
  Kind kind;
  std::size_t index;
  friend bool operator==(const IobViolation&, const IobViolation&) = default;
};

std::vector<IobViolation> validate_iob(const std::vector<Tag>& tags);

struct DatasetStats {
  std::size_t sentences = 0;
  std::size_t words = 0;
  std::array<std::size_t, kNumCategories> entities{};

  std::size_t count(Category c) const {
    return entities[static_cast<std::size_t>(c)];
  }
};

DatasetStats dataset_stats(const Dataset& d);
std::string format_stats(const DatasetStats& s);

}  // namespace csner
