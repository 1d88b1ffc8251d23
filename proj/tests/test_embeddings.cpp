#include <doctest.h>

#include <cstring>

#include "csner/embeddings.hpp"
#include "csner/error.hpp"
#include "csner/preprocess.hpp"
#include "fixtures.hpp"
#include "preprocess_oracle.hpp"

using namespace csner;

namespace {

std::string load_error(std::string_view text) {
  try {
    load_vec_text(text);
  } catch (const LoadError& e) {
    return e.what();
  }
  return {};
}

std::vector<float> row_of(const EmbeddingTable& t, std::string_view word) {
  auto r = t.row(static_cast<std::size_t>(t.vocab.lookup(word)));
  return {r.begin(), r.end()};
}

}  // namespace

TEST_CASE("Vocabulary") {
  Vocabulary v;
  CHECK(v.size() == 2);
  CHECK(v.lookup("<PAD>") == Vocabulary::kPad);
  CHECK(v.lookup("anything") == Vocabulary::kUnk);
  const int a = v.add("a");
  CHECK(a == 2);
  CHECK(v.add("a") == a);
  CHECK(v.lookup("a") == a);
  CHECK(v.contains("a"));
  CHECK_FALSE(v.contains("<PAD>"));
  CHECK_FALSE(v.contains("<UNK>"));
}

TEST_CASE("load_vec_text") {
  const EmbeddingTable t = load_vec_text("2 3\na 1 0 0\nb 0 1 0\n");
  CHECK(t.dim == 3);
  CHECK(t.rows() == 4);
  CHECK(t.special_rows == 2);
  CHECK(row_of(t, "a") == std::vector<float>{1, 0, 0});
  CHECK(row_of(t, "b") == std::vector<float>{0, 1, 0});
  CHECK(row_of(t, "<PAD>") == std::vector<float>{0, 0, 0});
  CHECK(row_of(t, "<UNK>") == std::vector<float>{0.5f, 0.5f, 0});

  SUBCASE("first occurrence wins") {
    const EmbeddingTable d = load_vec_text("2 2\nx 1 2\nx 3 4\n");
    CHECK(d.rows() == 3);
    CHECK(row_of(d, "x") == std::vector<float>{1, 2});
  }
  SUBCASE("trailing spaces and CRLF") {
    const EmbeddingTable d = load_vec_text("1 2\r\nx 1 2 \r\n");
    CHECK(row_of(d, "x") == std::vector<float>{1, 2});
  }
  SUBCASE("pruning keeps the mean of every row") {
    const std::unordered_set<std::string> keep{"b"};
    const EmbeddingTable p = load_vec_text("2 3\na 1 0 0\nb 0 1 0\n", &keep);
    CHECK(p.rows() == 3);
    CHECK_FALSE(p.vocab.contains("a"));
    CHECK(p.source_rows == 2);
    CHECK(row_of(p, "<UNK>") == std::vector<float>{0.5f, 0.5f, 0});
  }
  SUBCASE("errors carry the line number") {
    CHECK(load_error("2 3\na 1 0 0\nb 0 1\n").find("line 3") != std::string::npos);
    CHECK(load_error("1 2\na 1 x\n").find("line 2") != std::string::npos);
    CHECK(load_error("1 2\na 1 2 3\n").find("line 2") != std::string::npos);
    CHECK(load_error("garbage\n").find("line 1") != std::string::npos);
    CHECK_FALSE(load_error("").empty());
  }
  SUBCASE("missing file names the path") {
    try {
      load_vec("/nonexistent/wiki.en.vec");
      FAIL("expected LoadError");
    } catch (const LoadError& e) {
      CHECK(std::string(e.what()).find("/nonexistent/wiki.en.vec") != std::string::npos);
    }
  }
}

TEST_CASE("merge_tables") {
  const EmbeddingTable eng = load_vec_text("2 2\na 1 1\nb 2 2\n");
  const EmbeddingTable spa = load_vec_text("2 2\nb 9 9\nc 3 3\n");
  const EmbeddingTable m = merge_tables(eng, spa);
  CHECK(m.vocab.tokens() ==
        std::vector<std::string>{"<PAD>", "<UNK>", "USR", "URL", "a", "b", "c"});
  CHECK(m.special_rows == 4);
  CHECK(row_of(m, "b") == std::vector<float>{2, 2});
  CHECK(row_of(m, "c") == std::vector<float>{3, 3});
  CHECK(row_of(m, "<PAD>") == std::vector<float>{0, 0});
  const float mean = (1 + 2 + 9 + 3) / 4.0f;
  CHECK(row_of(m, "USR") == std::vector<float>{mean, mean});
  CHECK(row_of(m, "URL") == std::vector<float>{mean, mean});
  CHECK(row_of(m, "<UNK>") == std::vector<float>{mean, mean});

  SUBCASE("merging with an empty table") {
    const EmbeddingTable empty = load_vec_text("0 2\n");
    const EmbeddingTable x = merge_tables(eng, empty);
    CHECK(x.rows() == 6);
    CHECK(row_of(x, "a") == std::vector<float>{1, 1});
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(merge_tables(eng, load_vec_text("1 3\nz 1 2 3\n")), ContractViolation);
  }
  SUBCASE("English rows are copied bit for bit") {
    auto [e_text, s_text] = testing::synthetic_vec_files(16);
    const EmbeddingTable e = load_vec_text(e_text);
    const EmbeddingTable merged = merge_tables(e, load_vec_text(s_text));
    for (std::size_t r = e.special_rows; r < e.rows(); ++r) {
      const auto& w = e.vocab.token(static_cast<int>(r));
      const auto src = e.row(r);
      const auto dst = merged.row(static_cast<std::size_t>(merged.vocab.lookup(w)));
      CHECK(std::memcmp(src.data(), dst.data(), src.size_bytes()) == 0);
    }
  }
  SUBCASE("merged vocabulary never raises the OOV rate") {
    std::mt19937_64 rng(8);
    const auto words = testing::random_vocabulary(120, rng);
    const std::vector<std::string> half_a(words.begin(), words.begin() + 70);
    const std::vector<std::string> half_b(words.begin() + 50, words.end());
    auto table = [](const std::vector<std::string>& ws) {
      return load_vec_text(testing::vec_text(ws, 2, 1));
    };
    const EmbeddingTable ta = table(half_a);
    const EmbeddingTable tb = table(half_b);
    const EmbeddingTable both = merge_tables(ta, tb);
    const Dataset d = testing::random_token_corpus(400, words, rng);
    const auto oov = [&](const Vocabulary& v) { return oov_report(d, v).oov; };
    CHECK(oov(both.vocab) <= oov(ta.vocab));
    CHECK(oov(both.vocab) <= oov(tb.vocab));
    std::vector<std::string> all = half_a;
    all.insert(all.end(), half_b.begin(), half_b.end());
    std::size_t scan = 0;
    for (const auto& s : d.sentences) {
      for (const auto& t : s.tokens) scan += testing::scan_contains(all, t) ? 0 : 1;
    }
    CHECK(oov(both.vocab) == scan);
  }
}

TEST_CASE("character vocabulary") {
  const Dataset d = parse_conll("hola\tO\n");
  const CharVocabulary cv = build_char_vocab(d);
  for (char32_t c : {U'h', U'o', U'l', U'a', U'ñ', U'¿', U'Ü', U'7', U'#'}) {
    CHECK(cv.lookup(c) >= 2);
  }
  CHECK(cv.lookup(U'中') == CharVocabulary::kUnk);
  CHECK(cv.encode("a中") == std::vector<int>{cv.lookup(U'a'), CharVocabulary::kUnk});
  CHECK(cv.lookup(U'A') != cv.lookup(U'a'));
  CHECK(build_char_vocab(d) == cv);
  CHECK(std::is_sorted(cv.chars().begin(), cv.chars().end()));

  const CharVocabulary plain = build_char_vocab(parse_conll("zé\tO\n"), "");
  CHECK(plain.size() == 4);
  CHECK(plain.lookup(U'z') == 2);
  CHECK(plain.lookup(U'é') == 3);
}
