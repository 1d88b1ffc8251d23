#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "csner/error.hpp"
#include "csner/model.hpp"
#include "fixtures.hpp"
#include "model_checks.hpp"

using namespace csner;

namespace {

struct Setup {
  std::shared_ptr<const EmbeddingTable> table;
  Dataset data;
  TaggerModel model;
};

Setup reduced_setup(std::uint64_t seed = 1, double init = 0.5) {
  auto table = testing::synthetic_table(8);
  Dataset d = testing::synthetic_corpus(6, seed);
  Rng rng(seed);
  TaggerModel m(testing::reduced_dims(), table, build_char_vocab(d), rng, init);
  return {table, std::move(d), std::move(m)};
}

Example example_of(const std::vector<std::string>& tokens, const Vocabulary& v) {
  Dataset d;
  d.sentences.push_back({tokens, std::nullopt});
  return make_examples(d, v).front();
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.same_shape(b));
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("default dimensions") {
  const ModelDims d;
  CHECK(d.char_dim == 150);
  CHECK(d.char_repr() == 300);
  CHECK(d.word_input() == 600);
  CHECK(d.encoding() == 400);
  CHECK(d.num_tags == 19);
}

TEST_CASE("full-size parameter shapes") {
  auto table = testing::synthetic_table(300);
  Rng rng(1);
  TaggerModel m(ModelDims{}, table, build_char_vocab(Dataset{}), rng);
  CHECK(m.char_embedding.value.cols() == 150);
  CHECK(m.char_fwd.w_input.value.rows() == 150);
  CHECK(m.char_fwd.w_hidden.value.cols() == 600);
  CHECK(m.word_fwd.w_input.value.rows() == 600);
  CHECK(m.word_bwd.w_hidden.value.rows() == 200);
  CHECK(m.out_weight.value.rows() == 400);
  CHECK(m.out_weight.value.cols() == 19);
  CHECK(m.word_special.value.rows() == 4);
  for (const Parameter* p : m.parameters()) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const bool forget_bias = p->name.ends_with(".bias") && i >= p->value.size() / 4 &&
                               i < p->value.size() / 2;
      if (forget_bias) {
        CHECK(p->value[i] == 1.0);
      } else if (p->name != "word_special") {
        CHECK(std::abs(p->value[i]) <= 0.1);
      }
    }
  }
  const Example ex = example_of({"hola"}, table->vocab);
  CHECK(m.char_encode("x").cols() == 300);
  const Tensor enc = m.encode_sentence(ex);
  CHECK(enc.rows() == 1);
  CHECK(enc.cols() == 400);
}

TEST_CASE("char_encode") {
  Setup s = reduced_setup();
  TaggerModel& m = s.model;
  const Tensor a = m.char_encode("abc");
  CHECK(a.rows() == 1);
  CHECK(a.cols() == 12);
  CHECK(max_abs_diff(a, m.char_encode("abd")) > 1e-9);
  CHECK(m.char_encode("abc") == a);
  CHECK_THROWS_AS(m.char_encode(""), ContractViolation);

  for (Parameter* p : m.parameters()) p->value.fill(0.0);
  CHECK(m.char_encode("abc") == Tensor(1, 12));
}

TEST_CASE("encode and logits") {
  Setup s = reduced_setup();
  TaggerModel& m = s.model;
  const Vocabulary& v = s.table->vocab;

  SUBCASE("one-token sentence") {
    const Tensor enc = m.encode_sentence(example_of({"Miami"}, v));
    CHECK(enc.rows() == 1);
    CHECK(enc.cols() == 20);
  }
  SUBCASE("logits shape and determinism") {
    const Example ex = example_of({"voy", "a", "Miami", "hoy"}, v);
    const Tensor z = m.tag_logits(ex);
    CHECK(z.rows() == 4);
    CHECK(z.cols() == 5);
    CHECK(m.tag_logits(ex) == z);
    CHECK(m.predict(ex) == m.predict(ex));
    CHECK(m.predict(ex).size() == 4);
  }
  SUBCASE("zero projection gives uniform probabilities and the lowest tag") {
    m.out_weight.value.fill(0.0);
    m.out_bias.value.fill(0.0);
    const Example ex = example_of({"the", "game"}, v);
    Tape t;
    const Tensor p = ad::softmax(t.constant(m.tag_logits(ex))).value();
    for (double x : p.values()) CHECK(x == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(m.predict(ex) == std::vector<int>{0, 0});
  }
  SUBCASE("argmax ignores a constant shift of the logits") {
    const Example ex = example_of({"Shakira", "en", "Barcelona"}, v);
    const auto before = m.predict(ex);
    for (std::size_t k = 0; k < m.out_bias.value.size(); ++k) m.out_bias.value[k] += 7.25;
    CHECK(m.predict(ex) == before);
  }
}

TEST_CASE("reversing a sentence swaps the directions") {
  Setup s = reduced_setup(4);
  TaggerModel a = s.model;
  TaggerModel b = s.model;
  auto swap_values = [](LstmParams& x, LstmParams& y) {
    std::swap(x.w_input.value, y.w_input.value);
    std::swap(x.w_hidden.value, y.w_hidden.value);
    std::swap(x.bias.value, y.bias.value);
  };
  swap_values(b.word_fwd, b.word_bwd);

  std::vector<std::string> tokens = {"Kendrick", "Lamar", "is", "in", "Miami"};
  const Tensor ca = a.encode_sentence(example_of(tokens, s.table->vocab));
  std::reverse(tokens.begin(), tokens.end());
  const Tensor cb = b.encode_sentence(example_of(tokens, s.table->vocab));
  const std::size_t n = tokens.size();
  const std::size_t h = 10;
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t k = 0; k < h; ++k) {
      CHECK(std::abs(ca(t, k) - cb(n - 1 - t, h + k)) < 1e-12);
      CHECK(std::abs(ca(t, h + k) - cb(n - 1 - t, k)) < 1e-12);
    }
  }
}

TEST_CASE("batched encoding matches sentence-by-sentence encoding") {
  Setup s = reduced_setup(2);
  TaggerModel& m = s.model;
  const auto ex = make_examples(s.data, s.table->vocab);
  const std::vector<std::size_t> order = {3, 0, 5, 1, 4, 2};
  std::vector<const Example*> ptrs;
  for (std::size_t i : order) ptrs.push_back(&ex[i]);
  const Batch b = build_batch(ptrs, order, s.table->vocab, m.char_vocab());
  Tape t;
  Rng rng(0);
  const Tensor z = m.logits(t, m.encode(t, b, false, 0.0, rng)).value();
  for (std::size_t r = 0; r < b.batch; ++r) {
    const Tensor single = m.tag_logits(ex[order[r]]);
    for (std::size_t step = 0; step < single.rows(); ++step) {
      for (std::size_t c = 0; c < single.cols(); ++c) {
        CHECK(std::abs(z(step * b.batch + r, c) - single(step, c)) < 1e-12);
      }
    }
  }
  CHECK(b.token_count() == s.data.token_count());
}

TEST_CASE("shuffling a batch permutes outputs identically") {
  Setup s = reduced_setup(5);
  TaggerModel& m = s.model;
  const auto ex = make_examples(s.data, s.table->vocab);
  std::vector<const Example*> fwd, rev;
  std::vector<std::size_t> keys_f, keys_r;
  for (std::size_t i = 0; i < ex.size(); ++i) {
    fwd.push_back(&ex[i]);
    keys_f.push_back(i);
    rev.push_back(&ex[ex.size() - 1 - i]);
    keys_r.push_back(ex.size() - 1 - i);
  }
  const Batch bf = build_batch(fwd, keys_f, s.table->vocab, m.char_vocab());
  const Batch br = build_batch(rev, keys_r, s.table->vocab, m.char_vocab());
  const auto pf = m.predict(bf);
  const auto pr = m.predict(br);
  for (std::size_t i = 0; i < ex.size(); ++i) CHECK(pf[i] == pr[ex.size() - 1 - i]);

  Tape t1, t2;
  Rng r1(0), r2(0);
  const Tensor zf = m.logits(t1, m.encode(t1, bf, false, 0.0, r1)).value();
  const Tensor zr = m.logits(t2, m.encode(t2, br, false, 0.0, r2)).value();
  const std::size_t B = ex.size();
  for (std::size_t step = 0; step < bf.steps; ++step) {
    for (std::size_t i = 0; i < B; ++i) {
      if (bf.mask[bf.at(i, step)] == 0.0) continue;
      for (std::size_t c = 0; c < zf.cols(); ++c) {
        CHECK(std::abs(zf(step * B + i, c) - zr(step * B + (B - 1 - i), c)) < 1e-12);
      }
    }
  }
}

TEST_CASE("padding content does not affect loss or gradients") {
  auto table = testing::synthetic_table(8);
  const Dataset d = testing::synthetic_corpus(6, 6);
  ModelDims dims = testing::reduced_dims();
  dims.num_tags = kNumTags;
  Rng rng(6);
  TaggerModel m(dims, table, build_char_vocab(d), rng, 0.5);
  const auto ex = make_examples(d, table->vocab);
  const auto batches = make_batches(ex, 6, table->vocab, m.char_vocab());
  const Batch& b = batches.front();
  REQUIRE(b.token_count() < b.batch * b.steps);
  SUBCASE("same shape, with dropout") {
    const auto clean = testing::loss_and_grads(m, b, true, 9);
    const auto noisy = testing::loss_and_grads(
        m, testing::with_noisy_padding(b, table->rows(), kNumTags, 77), true, 9);
    CHECK(testing::max_difference(clean, noisy) < 1e-12);
  }
  SUBCASE("extra all-padding step") {
    const auto clean = testing::loss_and_grads(m, b, false, 9);
    const auto wider = testing::loss_and_grads(m, testing::with_padding_column(b), false, 9);
    CHECK(testing::max_difference(clean, wider) < 1e-12);
  }
}

TEST_CASE("end-to-end gradient check on the reduced model") {
  const GradCheckResult r = testing::end_to_end_grad_check(1e-4);
  INFO("worst " << r.worst_param << "[" << r.worst_index << "] analytic " << r.analytic
                << " numeric " << r.numeric);
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("word vectors are not trainable") {
  Setup s = reduced_setup();
  for (const Parameter* p : s.model.parameters()) {
    CHECK(p->value.rows() != s.table->rows());
  }
  CHECK(s.model.word_special.value.rows() == 4);
}

TEST_CASE("build_batch") {
  auto table = testing::synthetic_table(8);
  const Dataset d = parse_conll("a\tO\nb\tO\nc\tO\n\nb\tB-PER\n\n");
  const auto ex = make_examples(d, table->vocab);
  const CharVocabulary cv = build_char_vocab(d);
  const Example* ptrs[] = {&ex[0], &ex[1]};
  const std::size_t keys[] = {7, 9};
  const Batch b = build_batch(ptrs, keys, table->vocab, cv);
  CHECK(b.batch == 2);
  CHECK(b.steps == 3);
  CHECK(b.mask == std::vector<double>{1, 1, 1, 1, 0, 0});
  CHECK(b.word_ids[b.at(1, 1)] == Vocabulary::kPad);
  CHECK(b.word_ref[b.at(1, 2)] == -1);
  CHECK(b.word_chars.size() == 3);
  CHECK(b.word_ref[b.at(1, 0)] == b.word_ref[b.at(0, 1)]);
  CHECK(b.gold[b.at(1, 0)] == 1);
  CHECK(b.keys == std::vector<std::size_t>{7, 9});
  CHECK(b.length(0) == 3);
  CHECK(b.length(1) == 1);
}
